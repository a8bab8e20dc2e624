#pragma once

#include "radius/agent.hpp"
#include "radius/coordinator.hpp"
#include "radius/error.hpp"
#include "radius/experiment.hpp"
#include "radius/simnet.hpp"
#include "radius/stats.hpp"
#include "radius/thresholds.hpp"
#include "radius/traceio.hpp"
#include "radius/types.hpp"
