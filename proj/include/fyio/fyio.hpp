#pragma once

// Umbrella header. The YAML configuration loader lives in fyio/config.hpp and
// additionally needs yaml-cpp.

#include "fyio/error.hpp"
#include "fyio/experiment.hpp"
#include "fyio/graph.hpp"
#include "fyio/losses.hpp"
#include "fyio/metrics.hpp"
#include "fyio/model.hpp"
#include "fyio/rng.hpp"
#include "fyio/sampling.hpp"
#include "fyio/solvers.hpp"
#include "fyio/spath.hpp"
#include "fyio/synth.hpp"
#include "fyio/train.hpp"
