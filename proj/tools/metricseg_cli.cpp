// metricseg: command-line front end for the metric-graph segmentation tools.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>

#include "metricseg/metricseg.hpp"
#include "metricseg/png.hpp"

namespace fs = std::filesystem;
using namespace metricseg;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kMissingInput = 3,
  kShapeOrDtype = 4,
  kInvalidValue = 5,
  kWriteFailed = 6,
};

constexpr const char* kExitCodeHelp =
    "Exit codes:\n"
    "  0  success, all outputs written and finite\n"
    "  1  internal error\n"
    "  2  usage error (unknown flag, bad flag value)\n"
    "  3  missing or unreadable input file\n"
    "  4  input shape or dtype mismatch\n"
    "  5  invalid value (non-finite data, empty segmentation, bad parameters)\n"
    "  6  cannot write an output file\n";

struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WriteFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_input(const std::string& path) {
  if (!fs::is_regular_file(path)) throw MissingInput("input file not found: " + path);
}

// Runs `fn` and converts library exceptions into write failures; used around
// every output so unwritable destinations map to their own exit code.
template <typename Fn>
void write_output(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const IoError& e) {
    throw WriteFailed(e.what());
  }
  if (!fs::is_regular_file(path)) throw WriteFailed("output was not written: " + path);
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_output(path, [&] {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
  });
}

void add_segmentation_flags(CLI::App* app, SegmentationConfig& cfg) {
  app->add_option("--theta", cfg.cc_threshold, "Distance threshold for joining pixels on a metric graph")
      ->capture_default_str();
  app->add_option("--affinity-threshold", cfg.affinity_threshold,
                  "Affinity threshold for joining pixels on an affinity graph")
      ->capture_default_str();
  app->add_option("--min-size", cfg.min_size, "Segments of this size or smaller become background")
      ->capture_default_str();
  app->add_option("--max-dilation", cfg.max_dilation, "Rounds of background dilation")->capture_default_str();
  app->add_option("--connectivity", cfg.connectivity, "Nearest-neighbor connectivity")
      ->check(CLI::IsMember({4, 8}))
      ->capture_default_str();
}

void add_fit_flags(CLI::App* app, FitConfig& cfg) {
  app->add_option("--dim", cfg.loss.dim, "Embedding dimension")->capture_default_str();
  app->add_option("--iters", cfg.max_iters, "Maximum Adam iterations")->capture_default_str();
  app->add_option("--lr", cfg.adam.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--delta-d", cfg.loss.delta_d, "External margin delta_d")->capture_default_str();
  app->add_option("--gamma", cfg.loss.gamma, "Weight of the mean-norm term")->capture_default_str();
  app->add_option("--init-scale", cfg.init_scale, "Std. dev. of the Gaussian initialization")
      ->capture_default_str();
  app->add_option("--tolerance", cfg.tolerance, "Stop when the loss moves less than this over the window")
      ->capture_default_str();
}

void print_components(const char* what, const LabelMap& labels) {
  std::printf("%s: %u\n", what, static_cast<unsigned>(labels.objects().size()));
}

void print_fit_summary(const FitResult& r) {
  std::printf("iterations: %d%s\n", r.iterations, r.converged ? "" : " (not converged, best-so-far returned)");
  std::printf("l_int %.9g  l_ext %.9g  l_norm %.9g  total %.9g\n", r.report.l_int, r.report.l_ext,
              r.report.l_norm, r.report.total);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Metric-graph instance segmentation: embedding fits, graph segmentation, metric projection, "
               "and evaluation."};
  app.footer(kExitCodeHelp);
  app.require_subcommand(1);

  std::function<void()> run;

  // synth
  auto* synth = app.add_subcommand("synth", "Write a seeded Voronoi label map");
  int synth_h = 64, synth_w = 64, synth_objects = 8;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--height", synth_h)->capture_default_str();
  synth->add_option("--width", synth_w)->capture_default_str();
  synth->add_option("--objects", synth_objects)->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output label map (.npy)")->required();
  synth->callback([&] {
    run = [&] {
      const auto labels = voronoi_labels(synth_h, synth_w, synth_objects, synth_seed);
      write_output(synth_out, [&] { write_labels(synth_out, labels); });
    };
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Optimize per-pixel embeddings for a label map");
  FitConfig fit_cfg;
  std::string fit_labels, fit_out, fit_log;
  fit->add_option("--labels", fit_labels, "Ground-truth label map (.npy, uint32)")->required();
  fit->add_option("--out", fit_out, "Output vector field (.npy, float32)")->required();
  fit->add_option("--log", fit_log, "Training log (.json)");
  fit->add_option("--seed", fit_cfg.seed)->capture_default_str();
  add_fit_flags(fit, fit_cfg);
  fit->callback([&] {
    run = [&] {
      require_input(fit_labels);
      const auto result = fit_embeddings(read_labels(fit_labels), fit_cfg);
      write_output(fit_out, [&] { write_field(fit_out, result.field); });
      if (!fit_log.empty()) write_json(fit_log, to_json(result));
      print_fit_summary(result);
    };
  });

  // segment-cc
  auto* cc = app.add_subcommand("segment-cc", "Connected components of a thresholded nearest-neighbor graph");
  SegmentationConfig cc_cfg;
  std::string cc_field, cc_graph, cc_out;
  auto* cc_field_opt = cc->add_option("--field", cc_field, "Vector field (.npy); distances are L1");
  auto* cc_graph_opt = cc->add_option("--graph", cc_graph, "Metric or affinity graph (.npy + .json sidecar)");
  cc_field_opt->excludes(cc_graph_opt);
  cc->add_option("--out", cc_out, "Output label map (.npy)")->required();
  add_segmentation_flags(cc, cc_cfg);
  cc->callback([&] {
    run = [&] {
      LabelMap raw;
      if (!cc_field.empty()) {
        require_input(cc_field);
        const auto field = read_field(cc_field);
        raw = connected_components(build_metric_graph(field, nearest_neighbor_offsets(cc_cfg.connectivity)), cc_cfg);
      } else if (!cc_graph.empty()) {
        require_input(cc_graph);
        require_input(graph_sidecar(cc_graph).string());
        std::ifstream side(graph_sidecar(cc_graph));
        const auto kind = nlohmann::json::parse(side).value("kind", "");
        if (kind == "metric") {
          raw = connected_components(read_graph<DistanceTag>(cc_graph), cc_cfg);
        } else if (kind == "affinity") {
          raw = connected_components(read_graph<AffinityTag>(cc_graph), cc_cfg);
        } else {
          throw DtypeError(cc_graph + ": sidecar kind must be 'metric' or 'affinity'");
        }
      } else {
        throw CLI::RequiredError("--field or --graph");
      }
      const auto labels = postprocess(raw, cc_cfg);
      write_output(cc_out, [&] { write_labels(cc_out, labels); });
      print_components("components", raw);
      print_components("segments after postprocess", labels);
    };
  });

  // segment-seed
  auto* seed = app.add_subcommand("segment-seed", "Nearest ground-truth mean vector per pixel");
  SegmentationConfig seed_cfg;
  std::string seed_field, seed_gt, seed_out;
  seed->add_option("--field", seed_field, "Vector field (.npy)")->required();
  seed->add_option("--gt", seed_gt, "Ground-truth label map providing the seeds (.npy)")->required();
  seed->add_option("--out", seed_out, "Output label map (.npy)")->required();
  seed->add_option("--min-size", seed_cfg.min_size)->capture_default_str();
  seed->add_option("--max-dilation", seed_cfg.max_dilation)->capture_default_str();
  seed->callback([&] {
    run = [&] {
      require_input(seed_field);
      require_input(seed_gt);
      const auto labels = postprocess(seed_segment(read_field(seed_field), read_labels(seed_gt)), seed_cfg);
      write_output(seed_out, [&] { write_labels(seed_out, labels); });
      print_components("segments", labels);
    };
  });

  // project
  auto* project = app.add_subcommand("project", "Fit embeddings whose exp(-L1) affinities match a target graph");
  ProjectionConfig proj_cfg;
  std::string proj_graph, proj_field, proj_metric, proj_affinity, proj_log;
  project->add_option("--graph", proj_graph, "Target affinity graph (.npy + .json sidecar)")->required();
  project->add_option("--out-field", proj_field, "Fitted vector field (.npy)")->required();
  project->add_option("--out-metric", proj_metric, "Fitted metric graph (.npy + sidecar)");
  project->add_option("--out-affinity", proj_affinity, "Fitted affinity graph (.npy + sidecar)");
  project->add_option("--log", proj_log, "Residual log (.json)");
  project->add_option("--dim", proj_cfg.embed_dim, "Embedding dimension")->capture_default_str();
  project->add_option("--radius", proj_cfg.max_radius, "Largest allowed edge length")->capture_default_str();
  project->add_option("--lr", proj_cfg.adam.lr)->capture_default_str();
  project->add_option("--iters", proj_cfg.max_iters)->capture_default_str();
  project->add_option("--init-scale", proj_cfg.init_scale)->capture_default_str();
  project->add_option("--seed", proj_cfg.seed)->capture_default_str();
  project->callback([&] {
    run = [&] {
      require_input(proj_graph);
      require_input(graph_sidecar(proj_graph).string());
      const auto result = project_to_metric(read_graph<AffinityTag>(proj_graph), proj_cfg);
      write_output(proj_field, [&] { write_field(proj_field, result.field); });
      if (!proj_metric.empty()) write_output(proj_metric, [&] { write_graph(proj_metric, result.metric); });
      if (!proj_affinity.empty()) {
        write_output(proj_affinity, [&] { write_graph(proj_affinity, result.affinity); });
      }
      if (!proj_log.empty()) write_json(proj_log, to_json(result));
      std::printf("objective: %.9g over %zu edges\n", result.objective, result.num_edges);
    };
  });

  // fixture
  auto* fixture = app.add_subcommand("fixture", "Write the two-object inconsistent affinity graph");
  FixtureParams fix;
  bool fix_consistent = false;
  std::string fix_out, fix_gt;
  fixture->add_option("--height", fix.height)->capture_default_str();
  fixture->add_option("--width", fix.width)->capture_default_str();
  fixture->add_flag("--consistent", fix_consistent, "Write the repair-free variant instead");
  fixture->add_option("--out", fix_out, "Output affinity graph (.npy + sidecar)")->required();
  fixture->add_option("--gt", fix_gt, "Also write the two-object label map (.npy)");
  fixture->callback([&] {
    run = [&] {
      FixtureParams p = fix_consistent ? consistent_fixture_params() : fix;
      p.height = fix.height;
      p.width = fix.width;
      const auto g = make_inconsistent_fixture(p);
      write_output(fix_out, [&] { write_graph(fix_out, g); });
      if (!fix_gt.empty()) write_output(fix_gt, [&] { write_labels(fix_gt, fixture_objects(p)); });
    };
  });

  // evaluate
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Rand F-score and VI of a prediction against ground truth");
  std::string ev_pred, ev_gt, ev_out;
  int ev_radius = 2;
  evaluate_cmd->add_option("--pred", ev_pred, "Predicted label map (.npy)")->required();
  evaluate_cmd->add_option("--gt", ev_gt, "Ground-truth label map (.npy)")->required();
  evaluate_cmd->add_option("--out", ev_out, "Report (.json)");
  evaluate_cmd->add_option("--boundary-radius", ev_radius, "Exclude pixels this close to a gt boundary")
      ->capture_default_str();
  evaluate_cmd->callback([&] {
    run = [&] {
      require_input(ev_pred);
      require_input(ev_gt);
      const auto pred = read_labels(ev_pred);
      const auto gt = read_labels(ev_gt);
      const auto report = evaluate(pred, gt, boundary_exclusion_mask(gt, ev_radius));
      if (!ev_out.empty()) write_json(ev_out, to_json(report));
      std::fputs(score_table(report).c_str(), stdout);
    };
  });

  // visualize
  auto* viz = app.add_subcommand("visualize", "Render the top three principal components as RGB");
  std::string viz_field, viz_out;
  viz->add_option("--field", viz_field, "Vector field (.npy)")->required();
  viz->add_option("--out", viz_out, "Output image (.png)")->required();
  viz->callback([&] {
    run = [&] {
      require_input(viz_field);
      const auto field = read_field(viz_field);
      const auto model = fit_pca(field);
      write_output(viz_out, [&] { write_png(viz_out, render_rgb(field, model)); });
      if (model.padded) std::printf("note: dim %d < 3, missing channels rendered flat\n", field.dim());
    };
  });

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "synth -> fit -> segment-cc -> evaluate in one run");
  FitConfig pipe_fit;
  pipe_fit.loss.dim = 8;
  SegmentationConfig pipe_seg;
  int pipe_size = 64, pipe_objects = 8, pipe_radius = 2;
  std::uint64_t pipe_seed = 0;
  std::string pipe_dir;
  pipe->add_option("--seed", pipe_seed, "Seeds both the label map and the initialization")->capture_default_str();
  pipe->add_option("--size", pipe_size, "Height and width of the synthetic map")->capture_default_str();
  pipe->add_option("--objects", pipe_objects)->capture_default_str();
  pipe->add_option("--out-dir", pipe_dir, "Directory for all outputs")->required();
  pipe->add_option("--boundary-radius", pipe_radius)->capture_default_str();
  add_fit_flags(pipe, pipe_fit);
  add_segmentation_flags(pipe, pipe_seg);
  pipe->callback([&] {
    run = [&] {
      std::error_code ec;
      fs::create_directories(pipe_dir, ec);
      if (ec) throw WriteFailed("cannot create " + pipe_dir + ": " + ec.message());
      const fs::path dir(pipe_dir);
      pipe_fit.seed = pipe_seed;
      const auto gt = voronoi_labels(pipe_size, pipe_size, pipe_objects, pipe_seed);
      const auto fit_result = fit_embeddings(gt, pipe_fit);
      const auto raw = connected_components(
          build_metric_graph(fit_result.field, nearest_neighbor_offsets(pipe_seg.connectivity)), pipe_seg);
      const auto pred = postprocess(raw, pipe_seg);
      const auto report = evaluate(pred, gt, boundary_exclusion_mask(gt, pipe_radius));

      const auto p = [&](const char* name) { return (dir / name).string(); };
      write_output(p("gt.npy"), [&] { write_labels(p("gt.npy"), gt); });
      write_output(p("field.npy"), [&] { write_field(p("field.npy"), fit_result.field); });
      write_json(p("train_log.json"), to_json(fit_result));
      write_output(p("pred.npy"), [&] { write_labels(p("pred.npy"), pred); });
      write_json(p("report.json"), to_json(report));

      print_fit_summary(fit_result);
      print_components("components", raw);
      std::fputs(score_table(report).c_str(), stdout);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    run();
    return kOk;
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const WriteFailed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kWriteFailed;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kMissingInput;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kShapeOrDtype;
  } catch (const DtypeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kShapeOrDtype;
  } catch (const ValueError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalidValue;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kShapeOrDtype;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
