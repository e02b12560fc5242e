// Umbrella header.
#pragma once

#include "matchq/chain.hpp"
#include "matchq/core.hpp"
#include "matchq/metrics.hpp"
#include "matchq/montecarlo.hpp"
#include "matchq/policy.hpp"
#include "matchq/solve.hpp"
