#include "lsepose/bench.hpp"
#include "lsepose/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace lsepose;
using nlohmann::json;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = 0;  // 0 = all cores
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "pipeline configuration file");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "override the config seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads (0 = all cores)");
}

PipelineConfig load_cfg(const CommonArgs& args) {
  PipelineConfig cfg = load_config(args.config_path);
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.ransac.seed = args.seed;
  }
  return cfg;
}

std::vector<LoadedModel> load_models(const PipelineConfig& cfg, bool with_index, int threads) {
  if (cfg.models.empty()) throw ConfigError("config lists no models");
  std::vector<LoadedModel> models;
  for (const auto& mc : cfg.models) {
    LoadedModel m;
    m.id = mc.id;
    m.symmetric = mc.symmetric;
    m.mesh = load_mesh(mc.mesh_path);
    if (with_index) {
      m.index = load_index(cfg.index_path(mc.id));
      if (!(m.index.params() == cfg.lse))
        throw ConfigError("index for '" + mc.id + "' was built with different lse parameters; "
                          "re-run embed");
      m.diameter = model_diameter(m.index.samples());
    }
    models.push_back(std::move(m));
  }
  return models;
}

int cmd_embed(const CommonArgs& args) {
  const PipelineConfig cfg = load_cfg(args);
  const int threads = effective_threads(args.threads);
  std::filesystem::create_directories(cfg.index_dir);
  for (const auto& mc : cfg.models) {
    const SurfaceMesh mesh = load_mesh(mc.mesh_path);
    const auto samples = sample_surface(mesh, cfg.sample_count, cfg.seed);
    const LseIndex index = build_index(samples, cfg.lse, mc.id, threads);
    save_index(index, cfg.index_path(mc.id));
    const double degenerate =
        static_cast<double>(index.degenerate_skipped()) / static_cast<double>(cfg.sample_count);
    std::cout << mc.id << ": " << index.size() << " entries, "
              << index.degenerate_skipped() << " degenerate frames ("
              << 100.0 * degenerate << "%) -> " << cfg.index_path(mc.id).string() << "\n";
  }
  return 0;
}

int cmd_synth(const CommonArgs& args, const std::string& scenes_path, std::string out_dir) {
  const PipelineConfig cfg = load_cfg(args);
  const auto specs = load_scene_specs(scenes_path);
  auto models = load_models(cfg, true, effective_threads(args.threads));
  if (out_dir.empty()) out_dir = cfg.output_dir;

  std::map<std::string, const SurfaceMesh*> meshes;
  std::map<std::string, const LseIndex*> indices;
  for (const auto& m : models) {
    meshes[m.id] = &m.mesh;
    indices[m.id] = &m.index;
  }
  for (const auto& spec : specs) {
    const SceneBundle bundle = render_scene(spec, meshes, indices, {});
    const auto dir = std::filesystem::path(out_dir) / spec.name;
    write_scene(dir, bundle);
    std::cout << spec.name << ": " << bundle.ground_truth.size() << " objects -> "
              << dir.string() << "\n";
  }
  return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& scene_dir, std::string out_path) {
  const PipelineConfig cfg = load_cfg(args);
  const int threads = effective_threads(args.threads);
  const SceneBundle scene = read_scene(scene_dir);
  const auto models = load_models(cfg, true, threads);
  const auto hyps = estimate_scene(scene, models, cfg, threads);
  if (out_path.empty())
    out_path = (std::filesystem::path(scene_dir) / "hypotheses.json").string();
  write_hypotheses(out_path, hyps);
  std::cout << hyps.size() << " hypotheses -> " << out_path << "\n";
  return hyps.empty() ? 4 : 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& scene_dir,
                 const std::string& hypotheses_path, std::string out_json, std::string out_csv) {
  const PipelineConfig cfg = load_cfg(args);
  const SceneBundle scene = read_scene(scene_dir);
  const auto models = load_models(cfg, true, effective_threads(args.threads));
  const auto hyps = read_hypotheses(
      hypotheses_path.empty()
          ? (std::filesystem::path(scene_dir) / "hypotheses.json").string()
          : hypotheses_path);

  const std::string scene_id = std::filesystem::path(scene_dir).filename().string();
  auto records = evaluate_scene(scene_id, scene, models, hyps, cfg);
  const MetricReport report = aggregate(std::move(records), cfg.vsd);

  if (out_json.empty()) out_json = (std::filesystem::path(scene_dir) / "report.json").string();
  if (out_csv.empty()) out_csv = (std::filesystem::path(scene_dir) / "report.csv").string();
  write_report_json(out_json, report);
  write_report_csv(out_csv, report);
  std::cout << "add(-i) recall " << report.add_recall << ", vsd recall " << report.vsd_recall
            << " over " << report.evaluated << " objects -> " << out_json << "\n";
  return 0;
}

int cmd_bench(const CommonArgs& args, int scenes, int trials) {
  const int threads = effective_threads(args.threads);
  PipelineConfig cfg = bench::benchmark_config();
  if (!args.config_path.empty()) {
    const PipelineConfig user = load_config(args.config_path);
    cfg.ransac = user.ransac;
    cfg.sample_count = user.sample_count;
  }
  if (args.seed_set) cfg.seed = args.seed;

  bool all_pass = true;
  auto line = [&](bool pass, const std::string& what) {
    all_pass = all_pass && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << what << "\n";
  };

  std::cout << "building benchmark models (" << cfg.sample_count << " samples each)...\n";
  const auto models = bench::build_benchmark_models(cfg, threads);

  const auto clean = bench::run_end_to_end(models, cfg, scenes, {}, cfg.seed, threads);
  line(clean.report.add_recall >= 0.90 && clean.report.vsd_recall >= 0.90,
       "zero-noise scenes: add recall " + std::to_string(clean.report.add_recall) +
           ", vsd recall " + std::to_string(clean.report.vsd_recall) + " (" +
           std::to_string(clean.seconds) + " s)");

  SceneNoise noise;
  noise.lse_sd = 0.25;
  noise.dropout = 0.20;
  const auto noisy = bench::run_end_to_end(models, cfg, scenes, noise, cfg.seed + 1, threads);
  line(noisy.report.add_recall >= 0.70 && noisy.report.vsd_recall >= 0.70,
       "noisy scenes: add recall " + std::to_string(noisy.report.add_recall) + ", vsd recall " +
           std::to_string(noisy.report.vsd_recall) + " (" + std::to_string(noisy.seconds) +
           " s)");

  const auto robust = bench::run_outlier_robustness(trials, 0.4, cfg.seed, threads);
  line(robust.success_rate() >= 0.95,
       "40% outliers: " + std::to_string(robust.successes) + "/" + std::to_string(robust.trials) +
           " poses within 2% diameter (" + std::to_string(robust.seconds) + " s)");

  const auto perf = bench::run_performance_floor(cfg.seed, threads);
  line(perf.index_build_seconds < 30.0,
       "20000-sample index build: " + std::to_string(perf.index_build_seconds) + " s");
  line(perf.estimate_seconds < 10.0,
       "five-instance scene estimate: " + std::to_string(perf.estimate_seconds) + " s (" +
           std::to_string(perf.hypotheses) + " hypotheses)");

  return all_pass ? 0 : 1;
}

void emit_error(const std::string& type, const std::string& message) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local-surface-embedding 6D pose pipeline"};
  app.require_subcommand(1);

  CommonArgs common;

  auto* init = app.add_subcommand("init-config", "print a config file with all defaults");
  std::string init_out;
  init->add_option("--output", init_out, "write to a file instead of stdout");

  auto* embed = app.add_subcommand("embed", "build and store the model embedding indices");
  add_common(embed, common, true);

  auto* synth = app.add_subcommand("synth", "generate labeled synthetic scene directories");
  std::string scenes_path, synth_out;
  add_common(synth, common, true);
  synth->add_option("--scenes", scenes_path, "scene spec json")->required();
  synth->add_option("--output", synth_out, "output directory (default: config output_dir)");

  auto* estimate = app.add_subcommand("estimate", "detect objects and estimate their poses");
  std::string scene_dir, hyp_out;
  add_common(estimate, common, true);
  estimate->add_option("--scene", scene_dir, "scene directory")->required();
  estimate->add_option("--output", hyp_out, "hypotheses json path");

  auto* evaluate = app.add_subcommand("evaluate", "score hypotheses against the ground truth");
  std::string eval_scene, hyp_path, report_json, report_csv;
  add_common(evaluate, common, true);
  evaluate->add_option("--scene", eval_scene, "scene directory")->required();
  evaluate->add_option("--hypotheses", hyp_path, "hypotheses json (default: <scene>/hypotheses.json)");
  evaluate->add_option("--output", report_json, "report json path");
  evaluate->add_option("--csv", report_csv, "report csv path");

  auto* benchcmd = app.add_subcommand("bench", "run the seeded synthetic benchmark suite");
  int bench_scenes = 20, bench_trials = 50;
  add_common(benchcmd, common, false);
  benchcmd->add_option("--scenes", bench_scenes, "scene count per noise setting");
  benchcmd->add_option("--trials", bench_trials, "outlier robustness trials");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (init->parsed()) {
      const std::string text = config_to_json(default_config());
      if (init_out.empty())
        std::cout << text;
      else
        std::ofstream(init_out) << text;
      return 0;
    }
    if (embed->parsed()) return cmd_embed(common);
    if (synth->parsed()) return cmd_synth(common, scenes_path, synth_out);
    if (estimate->parsed()) return cmd_estimate(common, scene_dir, hyp_out);
    if (evaluate->parsed())
      return cmd_evaluate(common, eval_scene, hyp_path, report_json, report_csv);
    if (benchcmd->parsed()) return cmd_bench(common, bench_scenes, bench_trials);
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("data", e.what());
    return 3;
  }
  return 0;
}
