#pragma once

#include "metricseg/core.hpp"
#include "metricseg/eval.hpp"
#include "metricseg/loss.hpp"
#include "metricseg/metricfit.hpp"
#include "metricseg/npy.hpp"
#include "metricseg/optimize.hpp"
#include "metricseg/report.hpp"
#include "metricseg/rng.hpp"
#include "metricseg/segment.hpp"
#include "metricseg/synth.hpp"
#include "metricseg/viz.hpp"
