#pragma once

// Umbrella header for the half-bridge inverter simulation toolkit.

#include "hbsim/analysis.hpp"
#include "hbsim/config.hpp"
#include "hbsim/controller.hpp"
#include "hbsim/core2.hpp"
#include "hbsim/droop.hpp"
#include "hbsim/engine.hpp"
#include "hbsim/expm.hpp"
#include "hbsim/lyapunov.hpp"
#include "hbsim/params.hpp"
#include "hbsim/plant.hpp"
#include "hbsim/reference.hpp"
#include "hbsim/svg.hpp"
#include "hbsim/trace_io.hpp"
