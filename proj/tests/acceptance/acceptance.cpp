// Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/nn.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/runner.hpp"
#include "mixlab/stats.hpp"
#include "mixlab/strategies.hpp"
#include "mixlab/theory.hpp"

namespace fs = std::filesystem;
using namespace mixlab;

namespace {

fs::path g_source_dir = ".";

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  double budget_s;
  std::function<Outcome()> check;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Vector gaussian(Rng& rng, Eigen::Index dim) {
  std::normal_distribution<double> n;
  Vector v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

runner::RunOptions in_memory() {
  runner::RunOptions o;
  o.write_files = false;
  return o;
}

runner::RunConfig desk(const std::string& file) {
  return runner::load_config(g_source_dir / "configs" / "desk" / file);
}

// ---------------------------------------------------------------------------

Outcome a1_gradient_exactness() {
  Rng rng(101);
  std::uniform_int_distribution<int> depth(0, 3);
  std::uniform_int_distribution<int> width(1, 8);
  std::uniform_int_distribution<int> act(0, 2);
  std::uniform_int_distribution<int> classes(2, 4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const nn::Activation acts[] = {nn::Activation::kSigmoid, nn::Activation::kRelu, nn::Activation::kIdentity};
  double worst = 0.0;
  for (int draw = 0; draw < 50; ++draw) {
    const std::size_t in = static_cast<std::size_t>(width(rng));
    std::vector<std::size_t> hidden(static_cast<std::size_t>(depth(rng)));
    for (auto& h : hidden) h = static_cast<std::size_t>(width(rng));
    const std::size_t k = static_cast<std::size_t>(classes(rng));
    const auto p = nn::init_params(nn::Architecture::mlp(in, hidden, acts[act(rng)], k), rng);
    const Vector x = gaussian(rng, static_cast<Eigen::Index>(in));
    Vector y(k == 2 ? 1 : static_cast<Eigen::Index>(k));
    for (auto& v : y) v = u(rng);
    if (k > 2) y /= y.sum();
    const Vector g = nn::backward(nn::forward(p, x), y, p).flat;
    const Vector fd = nn::finite_diff_grad(p, x, y, 1e-5).flat;
    const double err = (g - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff());
    worst = std::max(worst, err);
  }
  return {worst < 1e-6, "max relative error " + fmt("%.3g", worst) + " over 50 draws"};
}

Outcome a2_early_phase() {
  const Vector t = theory::total_grad_early({Vector::Unit(2, 0), Vector::Unit(2, 1)});
  const bool exact = t(0) == -1.25 && t(1) == 0.75;

  Rng rng(202);
  double sum_err = 0.0;
  for (int k = 0; k < 100; ++k) {
    const theory::EarlyPhasePair p{gaussian(rng, 32), gaussian(rng, 32)};
    const Vector sum = theory::vanilla_grad_early(p) + theory::mix_grad_early(p);
    sum_err = std::max(sum_err, (theory::total_grad_early(p) - sum).cwiseAbs().maxCoeff());
  }

  double cos_err = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const Vector a = gaussian(rng, 32);
    Vector b = gaussian(rng, 32);
    b -= (b.dot(a) / a.squaredNorm()) * a;
    b *= a.norm() / b.norm();
    const theory::EarlyPhasePair p{a, b};
    cos_err = std::max(cos_err, std::abs(theory::cosine(theory::mix_grad_early(p), theory::vanilla_grad_early(p))));
  }
  return {exact && sum_err <= 1e-12 && cos_err <= 1e-12,
          std::string("total(e1,e2)=(") + fmt("%g", t(0)) + "," + fmt("%g", t(1)) + "), sum identity err " +
              fmt("%.2g", sum_err) + ", max |cos| " + fmt("%.2g", cos_err)};
}

Outcome a3_epsilon_scaling() {
  std::vector<std::size_t> ns;
  for (int e = 6; e <= 14; ++e) ns.push_back(std::size_t{1} << e);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const auto sep = theory::interference_sweep(theory::two_gaussian_pairs(64, 2.0, 1.0, 0), ns, seeds);
  const auto ctl = theory::interference_sweep(theory::two_gaussian_pairs(64, 0.0, 1.0, 0), ns, seeds);
  const bool ok = std::abs(sep.fitted_slope + 0.5) <= 0.1 && std::abs(ctl.fitted_slope) <= 0.15;
  return {ok, "slope " + fmt("%.4f", sep.fitted_slope) + " (separation 2), control slope " +
                  fmt("%.4f", ctl.fitted_slope) + " (separation 0)"};
}

Outcome a4_fluctuation() {
  const double gbar = 0.37;
  const double sigma = 1.3;
  bool halves = true;
  for (double d : {4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0}) {
    const double r1 = theory::relative_fluctuation(sigma, std::sqrt(d) * gbar);
    const double r4 = theory::relative_fluctuation(sigma, std::sqrt(4.0 * d) * gbar);
    halves = halves && r4 == 0.5 * r1;
  }

  Rng rng(404);
  const Eigen::Index dim = 64;
  const Vector g = gaussian(rng, dim);
  std::normal_distribution<double> noise(0.0, sigma);
  const int draws = 100000;
  std::vector<double> proj(draws);
  for (auto& v : proj) {
    Vector delta(dim);
    for (auto& x : delta) x = noise(rng);
    v = g.dot(delta);
  }
  const double var = *stats::sample_variance(proj);
  const double predicted = sigma * sigma * g.squaredNorm();
  const double rel = std::abs(var / predicted - 1.0);
  return {halves && rel < 0.05,
          std::string("halving ") + (halves ? "exact" : "broken") + ", MC variance off by " + fmt("%.3f", 100 * rel) + "%"};
}

Outcome a5_equivalence() {
  Rng rng(505);
  std::uniform_real_distribution<double> logm(3.0, 6.0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const double m = std::pow(10.0, logm(rng));
    const double f = m * unit(rng);
    const auto sol = theory::equivalence_lambda(f, m, -m);
    worst = std::max(worst, std::abs(theory::mixed_score(sol.lambda_star, m, -m) - f));
  }

  double ln2_err = 0.0;
  for (double m : {1.0, 1e3, 1e6}) {
    for (int y : {0, 1}) ln2_err = std::max(ln2_err, std::abs(theory::loss_at_lambda(0.5, m, y) - std::log(2.0)));
  }

  bool monotone = true;
  for (double m : {1.0, 10.0, 30.0}) {
    double prev = theory::loss_at_lambda(0.5, m, 1);
    for (int k = 1; k <= 100; ++k) {
      const double l = theory::loss_at_lambda(0.5 + 0.5 * k / 100.0, m, 1);
      monotone = monotone && l < prev;
      prev = l;
    }
  }
  return {worst <= 1e-9 && ln2_err <= 1e-12 && monotone,
          "score reconstruction err " + fmt("%.2g", worst) + ", |L(0.5)-ln2| " + fmt("%.2g", ln2_err) +
              ", strictly decreasing " + (monotone ? "yes" : "no")};
}

Outcome a6_benr3() {
  const auto o = theory::benr_theoretical(Vector::Unit(3, 0), Vector::Unit(3, 1), Vector::Unit(3, 2));
  // Hand-derived: three orthogonal unit steps for vanilla; for Mixup the
  // batch norms 3 / sqrt 2, sqrt 34 / 4, sqrt 34 / 4 over an epoch norm of sqrt 278 / 4.
  const double hand_vanilla = std::sqrt(3.0);
  const double hand_mix = (1.5 * std::sqrt(2.0) + std::sqrt(34.0) / 2.0) / (std::sqrt(278.0) / 4.0);
  const bool hand = std::abs(o.vanilla - hand_vanilla) <= 1e-9 && std::abs(o.mix - hand_mix) <= 1e-9;

  Rng rng(606);
  int wins = 0;
  for (int t = 0; t < 1000; ++t) {
    const Vector a = gaussian(rng, 1024).normalized();
    const Vector b = gaussian(rng, 1024).normalized();
    const Vector c = gaussian(rng, 1024).normalized();
    const auto r = theory::benr_theoretical(a, b, c);
    wins += r.vanilla > r.mix ? 1 : 0;
  }
  return {hand && wins >= 990, "orthonormal (" + fmt("%.10f", o.vanilla) + ", " + fmt("%.10f", o.mix) +
                                   "), vanilla > mix in " + std::to_string(wins) + "/1000"};
}

Outcome a7_cosine_protocol() {
  auto c = desk("cos_probe.json");
  double first_cos = 0.0, last_cos = 0.0, first_neg = 0.0, last_neg = 0.0;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    c.seed = static_cast<std::uint64_t>(s);
    const auto r = runner::run(c, in_memory());
    first_cos += r.rows.front().cos->avg_cos / seeds;
    last_cos += r.rows.back().cos->avg_cos / seeds;
    first_neg += r.rows.front().cos->prop_lt_zero / seeds;
    last_neg += r.rows.back().cos->prop_lt_zero / seeds;
  }
  return {last_cos - first_cos > 0.2 && last_neg < first_neg,
          "avg_cos " + fmt("%.4f", first_cos) + " -> " + fmt("%.4f", last_cos) + ", prop_lt_zero " +
              fmt("%.4f", first_neg) + " -> " + fmt("%.4f", last_neg)};
}

std::pair<bool, std::string> sweep_axis(const runner::RunConfig& base, const std::string& grid_file, bool by_n) {
  std::ifstream in(g_source_dir / "configs" / "desk" / grid_file);
  runner::Json j;
  in >> j;
  const auto grid = runner::SweepGrid::from_json(j);
  const auto rows = runner::sweep_grad_rate(grid, base);
  std::map<std::size_t, std::vector<double>> cells;
  for (const auto& r : rows) cells[by_n ? r.n_samples : r.hidden_width].push_back(r.grad_rate);
  std::vector<double> xs, means;
  std::string trace;
  for (const auto& [x, v] : cells) {
    xs.push_back(static_cast<double>(x));
    means.push_back(stats::mean(v));
    trace += (trace.empty() ? "" : " ") + fmt("%.3f", means.back());
  }
  const double rho = stats::spearman(xs, means);
  const bool ok = means.front() > means.back() && rho <= -0.8;
  return {ok, (by_n ? "N axis [" : "width axis [") + trace + "] rho " + fmt("%.3f", rho)};
}

Outcome a8_grad_rate_sweep() {
  const auto base = desk("grad_rate_base.json");
  const auto [n_ok, n_text] = sweep_axis(base, "grid_n.json", true);
  const auto [w_ok, w_text] = sweep_axis(base, "grid_width.json", false);
  return {n_ok && w_ok, n_text + "; " + w_text};
}

Outcome a9_zero_activations() {
  auto vanilla = desk("relu_vanilla.json");
  auto mix = desk("relu_mixup.json");
  const int seeds = 6;
  std::vector<double> a, b;
  for (int s = 0; s < seeds; ++s) {
    for (auto* c : {&vanilla, &mix}) {
      c->seed = static_cast<std::uint64_t>(s);
      const auto r = runner::run(*c, in_memory());
      double total = 0.0;
      const std::size_t n = std::min<std::size_t>(5, r.rows.size());
      for (std::size_t e = 0; e < n; ++e) total += *r.rows[e].zero_act_avg;
      (c == &vanilla ? a : b).push_back(total / static_cast<double>(n));
    }
  }
  const auto w = stats::welch_t_one_tailed(a, b);
  return {stats::mean(b) < stats::mean(a) && w.p < 0.05,
          "zero activations vanilla " + fmt("%.2f", stats::mean(a)) + " vs alpha 2 " + fmt("%.2f", stats::mean(b)) +
              ", Welch p " + fmt("%.3g", w.p) + " over " + std::to_string(seeds) + " seeds"};
}

Outcome a10_strategy_plumbing() {
  auto baseline = desk("baseline_mixup.json");
  auto pause = desk("pause.json");
  pause.strategy.window = strategies::EnpWindow::fixed(0);
  pause.name = baseline.name;
  const bool pause_same = runner::metrics_csv(runner::run(pause, in_memory())) ==
                          runner::metrics_csv(runner::run(baseline, in_memory()));

  auto vanilla = desk("vanilla.json");
  auto hlr = desk("high_loss_removal.json");
  hlr.strategy.k_percent = 1.0;
  hlr.name = vanilla.name;
  const auto h = runner::run(hlr, in_memory());
  const auto v = runner::run(vanilla, in_memory());
  const bool hlr_same = runner::metrics_csv(h) == runner::metrics_csv(v) && h.final_params == v.final_params;

  // Reference selection: sort (loss, id) and keep the first ceil(k n).
  Rng rng(1010);
  std::uniform_int_distribution<int> loss(0, 20);
  bool subset_ok = true;
  for (int t = 0; t < 200; ++t) {
    strategies::LossMap l;
    const int n = 1 + t * 7 % 301;
    for (int k = 0; k < n; ++k) l[static_cast<std::int64_t>(k * 13 % 1009)] = loss(rng) * 0.25;
    const double kp = 0.05 + 0.95 * (t % 20) / 19.0;
    std::vector<std::pair<double, std::int64_t>> sorted;
    for (const auto& [id, v2] : l) sorted.push_back({v2, id});
    std::sort(sorted.begin(), sorted.end());
    const auto keep = static_cast<std::size_t>(std::ceil(kp * n - 1e-12));
    std::set<std::int64_t> expect;
    for (std::size_t k = 0; k < keep; ++k) expect.insert(sorted[k].second);
    subset_ok = subset_ok && strategies::select_easy_subset(l, kp).kept_ids == expect;
  }
  return {pause_same && hlr_same && subset_ok, std::string("pause(end 0) == baseline: ") + (pause_same ? "yes" : "no") +
                                                   ", HLR(k 1) == vanilla: " + (hlr_same ? "yes" : "no") +
                                                   ", easy subset matches reference: " + (subset_ok ? "yes" : "no")};
}

Outcome a11_statistics() {
  // Reference p-values from scipy.stats.ttest_ind(equal_var=False, alternative="greater").
  struct Case {
    std::vector<double> a, b;
    double p;
  };
  const std::vector<Case> cases{
      {{81.5, 81.7, 81.6}, {81.2, 81.3, 81.25}, 0.0064763549545018145},
      {{80.04, 80.17, 79.9, 80.3, 80.1}, {79.87, 79.95, 79.8, 80.0}, 0.022488090340636476},
      {{1.0, 2.0, 3.0, 4.0}, {2.5, 2.0, 3.5, 1.9, 2.6, 2.2}, 0.4728469987020354},
  };
  double worst = 0.0;
  for (const auto& c : cases) worst = std::max(worst, std::abs(stats::welch_t_one_tailed(c.a, c.b).p - c.p));

  Rng rng(1111);
  std::normal_distribution<double> n(0.0, 1.0);
  int hits = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    std::vector<double> a(10), b(10);
    for (auto& x : a) x = n(rng);
    for (auto& x : b) x = n(rng);
    hits += stats::welch_t_one_tailed(a, b).p < 0.05 ? 1 : 0;
  }
  const double rate = static_cast<double>(hits) / trials;
  return {worst <= 1e-6 && rate >= 0.04 && rate <= 0.06,
          "max |p - reference| " + fmt("%.2g", worst) + ", null rejection rate " + fmt("%.4f", rate)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab acceptance suite"};
  std::string source_dir = ".";
  std::vector<std::string> only;
  app.add_option("--source-dir", source_dir, "repository root holding configs/");
  app.add_option("--only", only, "criteria to run, e.g. A3 A7");
  CLI11_PARSE(app, argc, argv);
  g_source_dir = source_dir;

  const std::vector<Criterion> criteria{
      {"A1", 10, a1_gradient_exactness}, {"A2", 5, a2_early_phase},        {"A3", 60, a3_epsilon_scaling},
      {"A4", 30, a4_fluctuation},        {"A5", 5, a5_equivalence},        {"A6", 10, a6_benr3},
      {"A7", 300, a7_cosine_protocol},   {"A8", 600, a8_grad_rate_sweep},  {"A9", 600, a9_zero_activations},
      {"A10", 600, a10_strategy_plumbing}, {"A11", 600, a11_statistics},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failures += pass ? 0 : 1;
    std::cout << c.id << ' ' << (pass ? "PASS" : "FAIL") << "  " << o.detail << "  [" << fmt("%.2f", secs) << " s / "
              << fmt("%.0f", c.budget_s) << " s" << (in_time ? "" : ", over budget") << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
