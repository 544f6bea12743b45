// ctgraph: command-line driver for data generation, training, evaluation,
// gradient checks, the z-shift robustness sweep, and the ablation grid.
//
//   ctgraph gen-data      --out DIR [--config FILE] [--seed S]
//   ctgraph train         --out DIR [--config FILE] [--data DIR] [--variant V] [--q Q] [--weight-fn F] [--seed S]
//   ctgraph eval          --checkpoint FILE [--config FILE] [--data DIR] [--q Q] [--weight-fn F] [--out DIR]
//   ctgraph gradcheck     [--variant V] [--seed S] [--out DIR]
//   ctgraph robustness    [--config FILE] [--shifts 0,2,4] [--q Q] [--weight-fn F] [--seed S] [--out DIR]
//   ctgraph ablate        [--config FILE] [--seed S] [--out DIR]
//   ctgraph inspect-graph [--n N] [--q Q] [--spacing-mm MM] [--weight-fn F]
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 I/O error.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "ctgraph/ctgraph.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ctgraph;

namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::string> variant;
  std::optional<std::size_t> q;
  std::optional<std::string> weight_fn;
  std::string shifts;
  std::string data;
  std::string checkpoint;
  std::size_t n_nodes = 80;
  double spacing_mm = 1.5;
};

ExperimentConfig effective_config(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) {
    cfg.data.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.variant) cfg.model.variant = parse_variant(*o.variant);
  if (o.q) cfg.graph.q = *o.q;
  if (o.weight_fn) cfg.graph.weight_fn = parse_weight_fn(*o.weight_fn);
  if (!o.shifts.empty()) {
    cfg.shifts.clear();
    std::stringstream ss(o.shifts);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        cfg.shifts.push_back(std::stol(item));
      } catch (const std::exception&) {
        throw ConfigError("--shifts: '" + item + "' is not an integer");
      }
    }
  }
  cfg.validate();
  return cfg;
}

// Writes `j` to DIR/name, or to stdout when no directory was given.
void emit_json(const std::string& out_dir, const std::string& name, const json& j) {
  if (out_dir.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / name;
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw FormatError(FormatErrc::kOpenFailed, path.string());
  f << j.dump(2) << '\n';
  if (!f) throw FormatError(FormatErrc::kWriteFailed, path.string());
  std::cout << "wrote " << path.string() << '\n';
}

// Synthetic task from the config, or DIR/{train,val,test} feature files.
SynthTask load_task(const CommonOptions& o, ExperimentConfig& cfg) {
  if (o.data.empty()) return generate_task(cfg.data);
  SynthTask task;
  task.train = read_dataset(fs::path(o.data) / "train");
  task.val = read_dataset(fs::path(o.data) / "val");
  task.test = read_dataset(fs::path(o.data) / "test");
  require(!task.train.empty() && !task.val.empty() && !task.test.empty(), "--data: every split needs samples");
  const Sample& first = task.train.front();
  for (const Dataset* split : {&task.train, &task.val, &task.test})
    for (const Sample& s : *split)
      require(s.features.rows() == first.features.rows() && s.features.cols() == first.features.cols() &&
                  s.labels.size() == first.labels.size(),
              "--data: samples disagree on shape");
  cfg.data.n_nodes = first.features.rows();
  cfg.data.feature_dim = first.features.cols();
  cfg.data.n_labels = first.labels.size();
  cfg.sync_model_shape();
  return task;
}

json config_json(const ExperimentConfig& cfg) {
  return {{"data",
           {{"n_nodes", cfg.data.n_nodes},
            {"feature_dim", cfg.data.feature_dim},
            {"n_labels", cfg.data.n_labels},
            {"n_train", cfg.data.n_train},
            {"n_val", cfg.data.n_val},
            {"n_test", cfg.data.n_test},
            {"local_labels", cfg.data.local_labels},
            {"diffuse_labels", cfg.data.diffuse_labels},
            {"noise_std", cfg.data.noise_std},
            {"signal_scale", cfg.data.signal_scale},
            {"positive_rate", cfg.data.positive_rate},
            {"spacing_z_mm", cfg.data.spacing_z_mm},
            {"seed", cfg.data.seed}}},
          {"model",
           {{"variant", to_string(cfg.model.variant)},
            {"cheb_order", cfg.model.cheb_order},
            {"n_layers", cfg.model.n_layers},
            {"head_hidden", cfg.model.head_hidden}}},
          {"train",
           {{"batch_size", cfg.train.batch_size},
            {"max_lr", cfg.train.max_lr},
            {"warmup_steps", cfg.train.warmup_steps},
            {"total_steps", cfg.train.total_steps},
            {"weight_decay", cfg.train.weight_decay},
            {"beta1", cfg.train.beta1},
            {"beta2", cfg.train.beta2},
            {"adam_eps", cfg.train.adam_eps},
            {"seed", cfg.train.seed},
            {"log_every", cfg.train.log_every}}},
          {"graph", {{"q", cfg.graph.q}, {"weight_fn", to_string(cfg.graph.weight_fn)}}}};
}

int cmd_gen_data(const CommonOptions& o) {
  ExperimentConfig cfg = effective_config(o);
  const SynthTask task = generate_task(cfg.data);
  write_dataset(fs::path(o.out) / "train", task.train);
  write_dataset(fs::path(o.out) / "val", task.val);
  write_dataset(fs::path(o.out) / "test", task.test);
  emit_json(o.out, "config.json", config_json(cfg));
  return 0;
}

int cmd_train(const CommonOptions& o) {
  ExperimentConfig cfg = effective_config(o);
  const SynthTask task = load_task(o, cfg);
  const RunOutcome run = train_and_evaluate(task, cfg.model, cfg.train, cfg.graph, TrainOutputs{o.out});
  json report = {{"variant", to_string(cfg.model.variant)},
                 {"q", resolve_q(cfg.graph.q, cfg.data.n_nodes)},
                 {"weight_fn", to_string(cfg.graph.weight_fn)},
                 {"initial_loss", run.training.initial_loss},
                 {"final_loss", run.training.curve.empty() ? 0.0 : run.training.curve.back().loss},
                 {"thresholds", run.thresholds},
                 {"test", to_json(run.test_report)}};
  emit_json(o.out, "report.json", report);
  return 0;
}

int cmd_eval(const CommonOptions& o) {
  ExperimentConfig cfg = effective_config(o);
  const ModelParams params = read_checkpoint(o.checkpoint);
  cfg.data.feature_dim = params.feature_dim();
  cfg.data.n_labels = params.n_labels();
  const SynthTask task = load_task(o, cfg);
  require(task.test.front().features.cols() == params.feature_dim(), "eval: data and checkpoint disagree on d");
  const GraphConfig g = resolved_graph(cfg.graph, task.test.front().features.rows());
  const auto thresholds = select_thresholds(predict(params, task.val, prepare_operators(task.val, g)));
  const MetricsReport report = evaluate(predict(params, task.test, prepare_operators(task.test, g)), thresholds);
  emit_json(o.out, "eval.json",
            {{"variant", to_string(params.variant)},
             {"q", g.q},
             {"weight_fn", to_string(g.weight_fn)},
             {"thresholds", thresholds},
             {"test", to_json(report)}});
  return 0;
}

int cmd_gradcheck(const CommonOptions& o) {
  const std::uint64_t seed = o.seed.value_or(0);
  const Variant variant = parse_variant(o.variant.value_or("cheb"));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  const GraphSpec spec{6, 2, 0.015, WeightFn::kInverseDm};
  const GraphOperators graph = build_operators(spec);
  Matrix h(6, 4);
  for (double& v : h.flat()) v = normal(rng);
  LabelVector labels{1, 0, 1};
  ModelConfig mc;
  mc.variant = variant;
  mc.feature_dim = 4;
  mc.n_labels = 3;
  ModelParams params = init_params(mc, seed);
  visit_tensors(params, [&](std::span<double> d, const Shape&) {
    for (double& v : d) v += 0.1 * normal(rng);
  });

  const LossAndGrad exact = backward(graph, h, labels, params);
  const GradientSet numeric = finite_diff_grad(graph, h, labels, params, 1e-5);
  const GradientCheck check = compare_gradients(exact.grads, numeric);
  json j = {{"variant", to_string(variant)},
            {"seed", seed},
            {"loss", exact.loss},
            {"n_parameters", parameter_count(params)},
            {"max_relative_error", check.max_relative_error},
            {"tolerance", kGradientTolerance},
            {"pass", check.max_relative_error <= kGradientTolerance}};
  emit_json(o.out, "gradcheck.json", j);
  return check.max_relative_error <= kGradientTolerance ? 0 : static_cast<int>(ExitCode::kNumeric);
}

int cmd_robustness(const CommonOptions& o) {
  const ExperimentConfig cfg = effective_config(o);
  const auto curves = run_robustness(cfg);
  emit_json(o.out, "robustness.json", {{"shifts", cfg.shifts}, {"curves", to_json(curves)}});
  return 0;
}

int cmd_ablate(const CommonOptions& o) {
  const ExperimentConfig cfg = effective_config(o);
  const auto cells = run_ablation(cfg);
  const std::string table = ablation_table(cells);
  emit_json(o.out, "ablation.json", {{"seeds", cfg.ablation.seeds}, {"cells", to_json(cells)}});
  if (o.out.empty()) {
    std::cout << table;
  } else {
    const fs::path path = fs::path(o.out) / "ablation.txt";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw FormatError(FormatErrc::kOpenFailed, path.string());
    f << table;
    std::cout << table;
  }
  return 0;
}

int cmd_inspect_graph(const CommonOptions& o) {
  GraphSpec spec;
  spec.n_nodes = o.n_nodes;
  spec.q = o.q.value_or(16);
  spec.spacing_z = mm_to_dm(o.spacing_mm);
  spec.weight_fn = parse_weight_fn(o.weight_fn.value_or("inverse-dm"));
  spec.validate();
  const Matrix a = build_adjacency(spec);
  const Laplacian l = laplacian(a);
  const double lmax = lambda_max(l);
  const SymEigen scaled = jacobi_eigen(scale_laplacian(l, lmax).values);
  json adjacency = json::array();
  for (std::size_t i = 0; i < a.rows(); ++i) adjacency.push_back(std::vector<double>(a.row(i).begin(), a.row(i).end()));
  emit_json(o.out, "graph.json",
            {{"n_nodes", spec.n_nodes},
             {"q", spec.q},
             {"spacing_z_dm", spec.spacing_z},
             {"weight_fn", to_string(spec.weight_fn)},
             {"n_edges", build_edge_set(spec).size()},
             {"degrees", degree_vector(a)},
             {"lambda_max", lmax},
             {"scaled_spectrum", {{"min", scaled.values.front()}, {"max", scaled.values.back()}}},
             {"adjacency", adjacency}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slice-triplet spectral graph classifier: experiments and tooling"};
  app.require_subcommand(1);
  CommonOptions o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--seed", o.seed, "Seed for data generation and training");
  };
  auto add_graph = [&](CLI::App* sub) {
    sub->add_option("--q", o.q, "Neighbourhood size; 0 = fully connected");
    sub->add_option("--weight-fn", o.weight_fn, "inverse-dm | exp | const");
  };

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic task as feature files");
  add_config(gen);
  gen->add_option("--out", o.out, "Output directory")->required();

  auto* tr = app.add_subcommand("train", "Train one model and report test metrics");
  add_config(tr);
  add_graph(tr);
  tr->add_option("--variant", o.variant, "cheb | graphconv");
  tr->add_option("--data", o.data, "Directory with train/ val/ test/ feature files");
  tr->add_option("--out", o.out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  add_config(ev);
  add_graph(ev);
  ev->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  ev->add_option("--data", o.data, "Directory with train/ val/ test/ feature files");
  ev->add_option("--out", o.out, "Output directory (default: stdout)");

  auto* gc = app.add_subcommand("gradcheck", "Compare exact gradients with finite differences");
  gc->add_option("--seed", o.seed, "Seed");
  gc->add_option("--variant", o.variant, "cheb | graphconv");
  gc->add_option("--out", o.out, "Output directory (default: stdout)");

  auto* rb = app.add_subcommand("robustness", "F1 versus z-shift for both variants");
  add_config(rb);
  add_graph(rb);
  rb->add_option("--shifts", o.shifts, "Comma-separated shifts, e.g. 0,2,4,8,16");
  rb->add_option("--out", o.out, "Output directory (default: stdout)");

  auto* ab = app.add_subcommand("ablate", "Variant x neighbourhood x weight-function grid");
  add_config(ab);
  ab->add_option("--out", o.out, "Output directory (default: stdout)");

  auto* ig = app.add_subcommand("inspect-graph", "Print adjacency, degrees and spectrum bounds");
  ig->add_option("--n", o.n_nodes, "Node count");
  add_graph(ig);
  ig->add_option("--spacing-mm", o.spacing_mm, "Slice spacing in millimetres");
  ig->add_option("--out", o.out, "Output directory (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*gen) return cmd_gen_data(o);
    if (*tr) return cmd_train(o);
    if (*ev) return cmd_eval(o);
    if (*gc) return cmd_gradcheck(o);
    if (*rb) return cmd_robustness(o);
    if (*ab) return cmd_ablate(o);
    if (*ig) return cmd_inspect_graph(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kIo);
  }
  return 0;
}
