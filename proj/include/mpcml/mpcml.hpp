#pragma once

// Umbrella header.
#include "channel_synth.hpp"
#include "clustering.hpp"
#include "core_metric.hpp"
#include "evaluation.hpp"
#include "experiment.hpp"
#include "io.hpp"
#include "metric_learning.hpp"
#include "rng.hpp"
