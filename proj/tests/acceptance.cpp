// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ctgraph/ctgraph.hpp"
#include "support.hpp"

#ifndef CTGRAPH_CLI_PATH
#error "CTGRAPH_CLI_PATH must name the ctgraph executable"
#endif

namespace fs = std::filesystem;
using namespace ctgraph;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "ctgraph_acceptance";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + CTGRAPH_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Names of files under `a` whose bytes differ from the same name under `b`.
std::vector<std::string> differing_files(const fs::path& a, const fs::path& b, std::size_t& compared) {
  std::vector<std::string> diff;
  compared = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    ++compared;
    const fs::path other = b / e.path().filename();
    if (!fs::exists(other) || slurp(e.path()) != slurp(other)) diff.push_back(e.path().filename().string());
  }
  return diff;
}

// 1. Chebyshev recurrence against the eigendecomposition oracle.
Verdict spectral_oracle() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = testing::uniform_index(rng, 2, 16);
    const Matrix a = testing::random_banded_adjacency(n, rng);
    const std::size_t d_in = testing::uniform_index(rng, 1, 6), d_out = testing::uniform_index(rng, 1, 6);
    const Matrix x = testing::random_matrix(n, d_in, rng);
    const ChebWeights w = testing::random_cheb(3, d_in, d_out, rng);
    const Matrix fast = cheb_apply(scaled_laplacian(a), x, w);
    const Matrix oracle = spectral_filter_oracle(laplacian(a), x, w);
    worst = std::max(worst, testing::relative_frobenius(fast, oracle));
  }
  return {worst <= 1e-10, fmt("200 graphs, max relative Frobenius error %.3g (tol 1e-10)", worst)};
}

// 2. Laplacian and scaled-Laplacian spectral invariants.
Verdict laplacian_invariants() {
  std::mt19937_64 rng(102);
  bool symmetric = true;
  double worst_row = 0.0, min_eig = 1e300, lhat_lo = 1e300, lhat_hi = -1e300;
  for (int trial = 0; trial < 100; ++trial) {
    const GraphSpec spec = testing::random_spec(rng, 60);
    const Laplacian l = laplacian(build_adjacency(spec));
    const std::size_t n = l.values.rows();
    const double scale = max_abs(l.values);
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row += l.values(i, j);
        if (l.values(i, j) != l.values(j, i)) symmetric = false;
      }
      worst_row = std::max(worst_row, std::abs(row) / scale);
    }
    const SymEigen eig = jacobi_eigen(l.values);
    min_eig = std::min(min_eig, eig.values.front());
    const SymEigen scaled = jacobi_eigen(scale_laplacian(l, eig.values.back()).values);
    lhat_lo = std::min(lhat_lo, scaled.values.front());
    lhat_hi = std::max(lhat_hi, scaled.values.back());
  }
  const bool ok = symmetric && worst_row <= 1e-12 && min_eig >= -1e-9 && lhat_lo >= -1.0 - 1e-9 &&
                  lhat_hi <= 1.0 + 1e-9;
  return {ok, fmt("100 specs, symmetric=%s, max |row sum|/max|L| %.3g, min eig %.3g, scaled spectrum [%.12f, %.12f]",
                  symmetric ? "yes" : "no", worst_row, min_eig, lhat_lo, lhat_hi)};
}

// 3. Exact gradients against central differences.
Verdict gradient_correctness() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ModelConfig cfg;
    cfg.variant = trial % 2 ? Variant::kGraphConv : Variant::kCheb;
    cfg.feature_dim = testing::uniform_index(rng, 2, 6);
    cfg.n_labels = testing::uniform_index(rng, 1, 4);
    const std::size_t n = testing::uniform_index(rng, 2, 8);
    GraphSpec spec{n, testing::uniform_index(rng, 1, n), mm_to_dm(0.5 + 0.25 * trial),
                   static_cast<WeightFn>(trial % 3)};
    const GraphOperators g = build_operators(spec);
    ModelParams p = init_params(cfg, 1000 + trial);
    testing::jitter(p, rng, 0.1);
    const Matrix h = testing::random_matrix(n, cfg.feature_dim, rng);
    const LabelVector y = testing::random_labels(cfg.n_labels, rng);
    const GradientCheck c = compare_gradients(backward(g, h, y, p).grads, finite_diff_grad(g, h, y, p, 1e-5));
    worst = std::max(worst, c.max_relative_error);
  }
  return {worst <= kGradientTolerance, fmt("20 configurations, max relative error %.3g (tol 1e-5)", worst)};
}

// 4. Node relabelling leaves the logits unchanged.
Verdict permutation_invariance() {
  std::mt19937_64 rng(104);
  double worst = 0.0;
  for (Variant v : {Variant::kCheb, Variant::kGraphConv}) {
    for (int trial = 0; trial < 50; ++trial) {
      ModelConfig cfg;
      cfg.variant = v;
      cfg.feature_dim = 6;
      cfg.n_labels = 4;
      const GraphOperators g = build_operators(testing::random_spec(rng, 24));
      ModelParams p = init_params(cfg, trial);
      testing::jitter(p, rng, 0.1);
      const Matrix h = testing::random_matrix(g.n_nodes(), 6, rng);
      const auto perm = testing::random_permutation(g.n_nodes(), rng);
      const Vector a = model_forward(g, h, p);
      const Vector b = model_forward(permute_operators(g, perm), permute_rows(h, perm), p);
      for (std::size_t l = 0; l < a.size(); ++l) worst = std::max(worst, std::abs(a[l] - b[l]));
    }
  }
  return {worst <= 1e-9, fmt("50 permutations per variant, max |logit difference| %.3g (tol 1e-9)", worst)};
}

// 5. Edge weights against the closed form.
Verdict edge_weight_formula() {
  std::mt19937_64 rng(105);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t gap = testing::uniform_index(rng, 1, 79);
    const double s_z = std::uniform_real_distribution<double>(0.001, 0.1)(rng);
    const GraphSpec spec{80, 79, s_z, WeightFn::kInverseDm};
    const double direct = 1.0 + 1.0 / (1.0 + 3.0 * static_cast<double>(gap) * s_z);
    worst = std::max(worst, std::abs(edge_weight(0, gap, spec) - direct));
    worst = std::max(worst, std::abs(edge_weight(gap, 0, spec) - direct));
  }
  const double worked = edge_weight(0, 1, GraphSpec{80, 16, 0.015, WeightFn::kInverseDm});
  const bool ok = worst <= 1e-12 && std::abs(worked - 1.956938) <= 5e-7;
  return {ok, fmt("1000 pairs, max |error| %.3g (tol 1e-12); |i-j|=1, s_z=0.015 dm gives %.6f", worst, worked)};
}

// 6. Desk-scale end-to-end run of the Chebyshev variant.
Verdict end_to_end(const std::string& tag) {
  const fs::path out = work_dir() / tag;
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_cli("train --variant cheb --seed 0 --out \"" + out.string() + "\"", work_dir() / (tag + ".log"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rc != 0) return {false, fmt("ctgraph train exited with %d", rc)};
  const json report = read_json(out / "report.json");
  const double auroc = report["test"]["macro"]["auroc"].get<double>();
  const bool ok = auroc >= 0.95 && secs <= 300.0;
  return {ok, fmt("test macro AUROC %.4f (need >= 0.95), macro F1 %.4f, %.1f s (limit 300 s)", auroc,
                  report["test"]["macro"]["f1"].get<double>(), secs)};
}

// 7. Candidate-based threshold selection is never beaten by a dense grid.
Verdict threshold_optimality() {
  std::mt19937_64 rng(107);
  std::size_t beaten = 0, columns = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = testing::uniform_index(rng, 1, 200);
    const std::size_t labels = testing::uniform_index(rng, 1, 4);
    PredictionSet val;
    val.scores = testing::random_matrix(m, labels, rng, 0.0, 1.0);
    if (trial % 4 == 0)
      for (double& v : val.scores.flat()) v = std::round(v * 20.0) / 20.0;
    for (std::size_t i = 0; i < m; ++i) val.labels.push_back(testing::random_labels(labels, rng));
    const auto chosen = select_thresholds(val);
    for (std::size_t l = 0; l < labels; ++l) {
      ++columns;
      const auto s = val.score_column(l);
      const auto y = val.label_column(l);
      const double f1 = f1_recall_precision_accuracy(binary_counts(s, y, chosen[l])).f1;
      for (int g = 0; g <= 1000; ++g)
        if (f1_recall_precision_accuracy(binary_counts(s, y, g / 1000.0)).f1 > f1) {
          ++beaten;
          break;
        }
    }
  }
  return {beaten == 0, fmt("100 prediction sets, %zu label columns, %zu beaten by the 1001-point grid", columns, beaten)};
}

// 8. Rank AUROC against pair counting, and the chance level of random scores.
Verdict auroc_oracle() {
  std::mt19937_64 rng(108);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t m = testing::uniform_index(rng, 2, 200);
    std::vector<double> s(m);
    LabelVector y = testing::random_labels(m, rng);
    y[0] = 1;
    y[1] = 0;
    for (double& v : s) v = static_cast<double>(testing::uniform_index(rng, 0, 30)) / 30.0;
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (y[i] && !y[j]) {
          ++pairs;
          wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    if (*auroc(s, y) != wins / static_cast<double>(pairs)) ++mismatches;
  }
  PredictionSet random;
  random.scores = testing::random_matrix(10000, 18, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < 10000; ++i) random.labels.push_back(testing::random_labels(18, rng));
  const double chance = *evaluate(random, std::vector<double>(18, 0.5)).macro_auroc;
  const bool ok = mismatches == 0 && chance >= 0.47 && chance <= 0.53;
  return {ok, fmt("%zu of 100 columns differ from pair counting; random macro AUROC %.4f (need [0.47, 0.53])",
                  mismatches, chance)};
}

// 9. Robustness sweep through the CLI.
Verdict robustness() {
  const fs::path out = work_dir() / "robustness";
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_cli("robustness --seed 0 --out \"" + out.string() + "\"", work_dir() / "robustness.log");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rc != 0) return {false, fmt("ctgraph robustness exited with %d", rc)};
  const json r = read_json(out / "robustness.json");
  const std::vector<long> expected{0, 2, 4, 8, 16};
  std::set<std::string> padded_variants;
  bool shapes_ok = true, shift0_exact = true, control_stable = true;
  for (const auto& c : r["curves"]) {
    std::vector<long> shifts;
    for (const auto& pt : c["curve"]) shifts.push_back(pt["shift"].get<long>());
    if (shifts != expected) shapes_ok = false;
    if (c["curve"][0]["macro_f1"].get<double>() != c["unshifted"]["macro"]["f1"].get<double>()) shift0_exact = false;
    if (c["setting"] == "padded") padded_variants.insert(c["variant"].get<std::string>());
    if (c["setting"] == "wrap-control")
      for (const auto& pt : c["curve"])
        if (pt["label_f1"] != c["curve"][0]["label_f1"]) control_stable = false;
  }
  shapes_ok = shapes_ok && padded_variants == std::set<std::string>{"cheb", "graphconv"} && r["curves"].size() == 4;
  std::string padded;
  for (const auto& c : r["curves"])
    if (c["setting"] == "padded") {
      padded += c["variant"].get<std::string>() + " [";
      for (const auto& pt : c["curve"]) padded += fmt(" %.3f", pt["macro_f1"].get<double>());
      padded += " ] ";
    }
  const bool ok = shapes_ok && shift0_exact && control_stable && secs <= 600.0;
  return {ok, fmt("curves ok=%s, shift-0 exact=%s, wrap control bit-stable=%s, F1 by shift: %s%.1f s (limit 600 s)",
                  shapes_ok ? "yes" : "no", shift0_exact ? "yes" : "no", control_stable ? "yes" : "no",
                  padded.c_str(), secs)};
}

// 10. Ablation grid through the CLI.
Verdict ablation(const std::string& tag) {
  const fs::path out = work_dir() / tag;
  const auto start = std::chrono::steady_clock::now();
  const int rc = run_cli("ablate --seed 0 --out \"" + out.string() + "\"", work_dir() / (tag + ".log"));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (rc != 0) return {false, fmt("ctgraph ablate exited with %d", rc)};
  const json r = read_json(out / "ablation.json");
  std::set<std::tuple<std::string, std::size_t, std::string>> cells;
  bool complete = true;
  for (const auto& c : r["cells"]) {
    cells.emplace(c["variant"].get<std::string>(), c["q"].get<std::size_t>(), c["weight_fn"].get<std::string>());
    if (c.contains("error") || c["n_runs"].get<std::size_t>() != 3 || !c["f1"].contains("std")) complete = false;
  }
  const std::string table = slurp(out / "ablation.txt");
  const bool tables = table.find("Connectivity x module") != std::string::npos &&
                      table.find("Neighbourhood size") != std::string::npos &&
                      table.find("Edge weighting") != std::string::npos && table.find("+-") != std::string::npos;
  const bool ok = cells.size() == 18 && complete && tables && secs <= 2700.0;
  return {ok, fmt("%zu distinct cells (need 18), 3 seeds each with mean/std=%s, tables=%s, %.1f s (limit 2700 s)",
                  cells.size(), complete ? "yes" : "no", tables ? "yes" : "no", secs)};
}

// 11. Reruns of 6 and 10 are byte-identical.
Verdict determinism(bool have_first_runs) {
  if (!have_first_runs) {
    end_to_end("train_a");
    ablation("ablate_a");
  }
  end_to_end("train_b");
  ablation("ablate_b");
  std::size_t n_train = 0, n_ablate = 0;
  const auto d1 = differing_files(work_dir() / "train_a", work_dir() / "train_b", n_train);
  const auto d2 = differing_files(work_dir() / "ablate_a", work_dir() / "ablate_b", n_ablate);
  std::string names;
  for (const auto& d : d1) names += " train/" + d;
  for (const auto& d : d2) names += " ablate/" + d;
  const bool ok = d1.empty() && d2.empty() && n_train >= 7 && n_ablate == 2;
  return {ok, fmt("compared %zu training files (checkpoints, metrics, report) and %zu ablation files; differing:%s",
                  n_train, n_ablate, names.empty() ? " none" : names.c_str())};
}

// 12. Binary formats round-trip and reject corruption with distinct codes.
Verdict serialization() {
  std::mt19937_64 rng(112);
  const fs::path dir = work_dir() / "serialization";
  fs::create_directories(dir);
  std::size_t failures = 0;
  SynthTaskConfig data;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Sample s = generate_sample(data, i);
    s.spacing_z_mm = std::uniform_real_distribution<double>(0.5, 5.0)(rng);
    write_features((dir / "s.ctgf").string(), s);
    if (!(read_features((dir / "s.ctgf").string()) == s)) ++failures;
  }
  for (Variant v : {Variant::kCheb, Variant::kGraphConv}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      ModelConfig cfg;
      cfg.variant = v;
      cfg.feature_dim = 8;
      cfg.n_labels = 5;
      ModelParams p = init_params(cfg, seed);
      testing::jitter(p, rng, 1.0);
      write_checkpoint((dir / "p.ctgc").string(), p);
      if (!(read_checkpoint((dir / "p.ctgc").string()) == p)) ++failures;
    }
  }

  auto errc_of = [&](const std::vector<char>& bytes, bool checkpoint) {
    const fs::path p = dir / "corrupt.bin";
    std::ofstream(p, std::ios::binary | std::ios::trunc).write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    try {
      checkpoint ? (void)read_checkpoint(p.string()) : (void)read_features(p.string());
    } catch (const FormatError& e) {
      return static_cast<int>(e.errc());
    }
    return -1;
  };
  std::set<int> feature_codes, checkpoint_codes;
  const std::vector<char> fgood = encode_features(generate_sample(data, 0)).bytes();
  ModelConfig mc;
  mc.feature_dim = 4;
  mc.n_labels = 2;
  const std::vector<char> cgood = encode_checkpoint(init_params(mc, 0)).bytes();
  for (bool ckpt : {false, true}) {
    const std::vector<char>& good = ckpt ? cgood : fgood;
    std::set<int>& codes = ckpt ? checkpoint_codes : feature_codes;
    std::vector<char> b = good;
    b[0] = 'X';
    codes.insert(errc_of(b, ckpt));  // bad magic
    b = good;
    b[4] = 7;
    codes.insert(errc_of(b, ckpt));  // version mismatch
    b = good;
    b.resize(good.size() - 1);
    codes.insert(errc_of(b, ckpt));  // truncated payload
  }
  const std::set<int> expected{static_cast<int>(FormatErrc::kBadMagic), static_cast<int>(FormatErrc::kVersionMismatch),
                               static_cast<int>(FormatErrc::kTruncatedPayload)};
  const bool distinct = feature_codes == expected && checkpoint_codes == expected;
  return {failures == 0 && distinct,
          fmt("%zu round-trip mismatches over 100 feature files and 20 checkpoints; corruption codes distinct=%s",
              failures, distinct ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  auto wanted = [&](int n) { return selected.empty() || selected.count(n) > 0; };

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"spectral oracle equivalence", spectral_oracle},
      {"laplacian invariants", laplacian_invariants},
      {"gradient correctness", gradient_correctness},
      {"permutation invariance", permutation_invariance},
      {"edge-weight formula", edge_weight_formula},
      {"end-to-end synthetic learning", [] { return end_to_end("train_a"); }},
      {"threshold selection optimality", threshold_optimality},
      {"auroc oracle", auroc_oracle},
      {"robustness experiment structure", robustness},
      {"ablation structure", [] { return ablation("ablate_a"); }},
      {"determinism", [&] { return determinism(wanted(6) && wanted(10)); }},
      {"serialization", serialization},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!wanted(number)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << number << ". " << criteria[i].first << ": " << v.detail
              << fmt(" [%.2f s]", secs) << std::endl;
  }
  std::cout << (failed == 0 ? "all selected criteria passed" : fmt("%d criteria failed", failed)) << std::endl;
  return failed == 0 ? 0 : 1;
}
