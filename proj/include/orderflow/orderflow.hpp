#pragma once

// Umbrella header for the order-flow persistence toolkit.

#include "orderflow/brokerage.hpp"
#include "orderflow/decomposition.hpp"
#include "orderflow/error.hpp"
#include "orderflow/event_log.hpp"
#include "orderflow/io.hpp"
#include "orderflow/parallel.hpp"
#include "orderflow/rng.hpp"
#include "orderflow/simulators.hpp"
#include "orderflow/stats.hpp"
