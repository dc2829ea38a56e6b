#pragma once

// JSON forms of the reports and logs, and the fixed-format score table.

#include <cstdio>
#include <string>

#include "json.hpp"

#include "metricseg/eval.hpp"
#include "metricseg/loss.hpp"
#include "metricseg/metricfit.hpp"
#include "metricseg/optimize.hpp"

namespace metricseg {

inline nlohmann::json to_json(const LossReport& r) {
  nlohmann::json objects = nlohmann::json::array();
  for (std::size_t c = 0; c < r.num_objects; ++c) {
    objects.push_back({{"label", r.object_labels[c]}, {"pixels", r.counts[c]}, {"mean", r.means[c]}});
  }
  return {{"l_int", r.l_int}, {"l_ext", r.l_ext},           {"l_norm", r.l_norm},
          {"total", r.total}, {"num_objects", r.num_objects}, {"objects", objects}};
}

inline nlohmann::json to_json(const EvalReport& r) {
  return {{"rand_f", r.rand_f},
          {"rand_merge", r.rand_merge},
          {"rand_split", r.rand_split},
          {"vi_total", r.vi_total},
          {"vi_merge", r.vi_merge},
          {"vi_split", r.vi_split},
          {"evaluated_pixels", r.evaluated_pixels},
          {"excluded_pixels", r.excluded_pixels}};
}

inline nlohmann::json to_json(const FitResult& r) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : r.log) {
    log.push_back({{"iteration", e.iteration}, {"l_int", e.l_int}, {"l_ext", e.l_ext},
                   {"l_norm", e.l_norm}, {"total", e.total}});
  }
  return {{"converged", r.converged}, {"iterations", r.iterations}, {"final", to_json(r.report)}, {"log", log}};
}

inline nlohmann::json to_json(const ProjectionResult& r) {
  return {{"objective", r.objective}, {"num_edges", r.num_edges}, {"log", r.log}};
}

inline std::string score_table(const EvalReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric        total     merge     split\n"
                "rand_f     %8.6f  %8.6f  %8.6f\n"
                "vi         %8.6f  %8.6f  %8.6f\n"
                "evaluated pixels: %zu  excluded: %zu\n",
                r.rand_f, r.rand_merge, r.rand_split, r.vi_total, r.vi_merge, r.vi_split, r.evaluated_pixels,
                r.excluded_pixels);
  return buf;
}

}  // namespace metricseg
