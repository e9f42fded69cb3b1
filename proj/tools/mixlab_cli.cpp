// mixlab command-line driver.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/rng.hpp"
#include "mixlab/runner.hpp"
#include "mixlab/stats.hpp"
#include "mixlab/theory.hpp"

namespace fs = std::filesystem;
using mixlab::runner::Json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kInvalid = 3,
  kFormat = 4,
  kDegenerate = 5,
  kRunFailed = 6,
};

int report(const std::string& type, const std::string& message, int code, Json extra = Json::object()) {
  Json err = {{"type", type}, {"message", message}, {"exit_code", code}};
  err.update(extra);
  std::cerr << Json{{"error", err}}.dump() << '\n';
  return code;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw mixlab::Error("cannot write '" + path.string() + "'");
  out << text;
}

std::string num(double v) { return mixlab::runner::format_number(v); }

// ---- train / sweep ---------------------------------------------------------

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::optional<std::string>& out) {
  auto config = mixlab::runner::load_config(config_path);
  if (seed) config.seed = *seed;
  if (out) config.out_dir = *out;
  if (config.out_dir.empty()) config.out_dir = "runs/" + config.name + "-s" + std::to_string(config.seed);
  if (!config.desk_scale) {
    throw mixlab::InvalidArgument("config '" + config_path +
                                  "' is a reference recipe (desk_scale: false) and is not executable here");
  }
  const auto record = mixlab::runner::run(config);
  std::cout << Json{{"run_id", record.run_id},
                    {"config_hash", record.config_hash},
                    {"epochs", record.rows.size()},
                    {"final_train_acc", record.final_train_acc},
                    {"final_val_acc", record.final_val_acc},
                    {"wall_time_s", record.wall_time_s},
                    {"out_dir", config.out_dir}}
                   .dump()
            << '\n';
  return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path,
              const std::optional<std::string>& out) {
  const auto config = mixlab::runner::load_config(config_path);
  std::ifstream in(grid_path);
  if (!in) throw mixlab::InvalidArgument("cannot open grid file '" + grid_path + "'");
  Json gj;
  try {
    in >> gj;
  } catch (const Json::parse_error& e) {
    throw mixlab::FormatError("grid file is not valid JSON: " + std::string(e.what()));
  }
  auto grid = mixlab::runner::SweepGrid::from_json(gj);
  if (grid.seeds.empty()) grid.seeds.push_back(config.seed);
  const auto rows = mixlab::runner::sweep_grad_rate(grid, config);
  const std::string csv = mixlab::runner::sweep_csv(rows);
  const std::string dir = out.value_or(config.out_dir);
  if (dir.empty()) {
    std::cout << csv;
  } else {
    write_text(fs::path(dir) / "sweep.csv", csv);
    std::cout << Json{{"rows", rows.size()}, {"path", (fs::path(dir) / "sweep.csv").string()}}.dump() << '\n';
  }
  return kOk;
}

// ---- theory ------------------------------------------------------------------

struct TheoryOptions {
  std::size_t dim = 64;
  double separation = 2.0;
  double sigma = 1.0;
  std::size_t seeds = 20;
  int log2_min = 6;
  int log2_max = 14;
  std::uint64_t seed = 0;
};

void theory_epsilon(const fs::path& dir, const TheoryOptions& o) {
  if (o.log2_min < 0 || o.log2_max <= o.log2_min || o.log2_max > 24) {
    throw mixlab::InvalidArgument("need 0 <= log2-min < log2-max <= 24");
  }
  std::vector<std::size_t> n_values;
  for (int k = o.log2_min; k <= o.log2_max; ++k) n_values.push_back(std::size_t{1} << k);
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < o.seeds; ++s) seeds.push_back(o.seed + s);
  const auto source = mixlab::theory::two_gaussian_pairs(o.dim, o.separation, o.sigma, o.seed);
  const auto est = mixlab::theory::interference_sweep(source, n_values, seeds);

  std::string csv = "n,seed,epsilon_n\n";
  for (const auto& p : est.points) csv += std::to_string(p.n) + ',' + std::to_string(p.seed) + ',' + num(p.epsilon) + '\n';
  write_text(dir / "epsilon_n.csv", csv);
  Json summary = {{"fitted_slope", est.fitted_slope},
                  {"n_values", est.n_values},
                  {"mean_epsilon", est.mean_epsilon},
                  {"dim", o.dim},
                  {"separation", o.separation},
                  {"sigma", o.sigma},
                  {"seeds", o.seeds}};
  write_text(dir / "epsilon_n_summary.json", summary.dump(2) + '\n');
  std::cout << Json{{"mode", "epsilon_n"}, {"fitted_slope", est.fitted_slope}}.dump() << '\n';
}

void theory_fluctuation(const fs::path& dir, const TheoryOptions& o) {
  // Per-coordinate descent of 1 gives |g| = sqrt(D); the Monte-Carlo column
  // checks Var(g . delta) against sigma^2 |g|^2 for isotropic delta.
  constexpr std::size_t kDraws = 20000;
  mixlab::SeedTree tree(o.seed);
  std::string csv = "dim,sigma,grad_norm,relative_fluctuation,mc_variance,predicted_variance\n";
  for (std::size_t d : {16u, 64u, 256u, 1024u, 4096u}) {
    mixlab::Rng rng = tree.stream("fluctuation", d);
    std::normal_distribution<double> noise(0.0, o.sigma);
    const mixlab::Vector g = mixlab::Vector::Ones(static_cast<Eigen::Index>(d));
    std::vector<double> proj(kDraws);
    for (auto& v : proj) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += noise(rng);  // g is all ones
      v = s;
    }
    const double var = *mixlab::stats::sample_variance(proj);
    csv += std::to_string(d) + ',' + num(o.sigma) + ',' + num(g.norm()) + ',' +
           num(mixlab::theory::relative_fluctuation(o.sigma, g.norm())) + ',' + num(var) + ',' +
           num(o.sigma * o.sigma * g.squaredNorm()) + '\n';
  }
  write_text(dir / "fluctuation.csv", csv);
  std::cout << Json{{"mode", "fluctuation"}, {"rows", 5}}.dump() << '\n';
}

void theory_equivalence(const fs::path& dir) {
  std::string csv = "M,f_loss,lambda_star,delta,loss_y1,loss_y0\n";
  std::size_t rows = 0;
  for (double m : {10.0, 1e3, 1e6}) {
    for (int k = -10; k <= 10; ++k) {
      const double f = m * k / 10.0;
      const auto sol = mixlab::theory::equivalence_lambda(f, m, -m);
      csv += num(m) + ',' + num(f) + ',' + num(sol.lambda_star) + ',' + num(sol.delta) + ',' +
             num(mixlab::theory::loss_at_lambda(sol.lambda_star, m, 1)) + ',' +
             num(mixlab::theory::loss_at_lambda(sol.lambda_star, m, 0)) + '\n';
      ++rows;
    }
  }
  write_text(dir / "equivalence.csv", csv);
  std::cout << Json{{"mode", "equivalence"}, {"rows", rows}}.dump() << '\n';
}

void theory_benr3(const fs::path& dir, const TheoryOptions& o) {
  constexpr std::size_t kTrials = 1000;
  constexpr std::size_t kDim = 1024;
  std::string csv = "trial,dim,benr_vanilla,benr_mix\n";
  const auto ortho = mixlab::theory::benr_theoretical(mixlab::Vector::Unit(3, 0), mixlab::Vector::Unit(3, 1),
                                                      mixlab::Vector::Unit(3, 2));
  csv += "orthonormal,3," + num(ortho.vanilla) + ',' + num(ortho.mix) + '\n';
  mixlab::Rng rng = mixlab::SeedTree(o.seed).stream("benr3");
  std::normal_distribution<double> normal;
  const auto draw = [&] {
    mixlab::Vector v(static_cast<Eigen::Index>(kDim));
    for (auto& x : v) x = normal(rng);
    return mixlab::Vector(v.normalized());
  };
  std::size_t wins = 0;
  for (std::size_t t = 0; t < kTrials; ++t) {
    const auto b = mixlab::theory::benr_theoretical(draw(), draw(), draw());
    wins += b.vanilla > b.mix ? 1 : 0;
    csv += std::to_string(t) + ',' + std::to_string(kDim) + ',' + num(b.vanilla) + ',' + num(b.mix) + '\n';
  }
  write_text(dir / "benr3.csv", csv);
  std::cout << Json{{"mode", "benr3"},
                    {"orthonormal", {ortho.vanilla, ortho.mix}},
                    {"vanilla_greater_fraction", static_cast<double>(wins) / kTrials}}
                   .dump()
            << '\n';
}

int cmd_theory(const std::string& mode, const std::string& out, const TheoryOptions& o) {
  const fs::path dir(out);
  if (mode == "epsilon_n") {
    theory_epsilon(dir, o);
  } else if (mode == "fluctuation") {
    theory_fluctuation(dir, o);
  } else if (mode == "equivalence") {
    theory_equivalence(dir);
  } else if (mode == "benr3") {
    theory_benr3(dir, o);
  } else {
    throw mixlab::InvalidArgument("unknown theory mode '" + mode + "'");
  }
  return kOk;
}

// ---- ttest / aggregate -------------------------------------------------------

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// "path.csv:column"; the split is at the last ':' so Windows-style paths work.
std::vector<double> read_column(const std::string& spec) {
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == spec.size()) {
    throw mixlab::InvalidArgument("expected <csv>:<column>, got '" + spec + "'");
  }
  const std::string path = spec.substr(0, colon);
  const std::string column = spec.substr(colon + 1);
  std::ifstream in(path);
  if (!in) throw mixlab::InvalidArgument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw mixlab::FormatError("'" + path + "' is empty");
  const auto header = split(line, ',');
  std::size_t idx = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == column) idx = k;
  }
  if (idx == header.size()) throw mixlab::FormatError("'" + path + "' has no column '" + column + "'");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (idx >= cells.size() || cells[idx].empty()) continue;
    try {
      values.push_back(std::stod(cells[idx]));
    } catch (const std::exception&) {
      throw mixlab::FormatError("'" + path + "' line " + std::to_string(line_no) + ": '" + cells[idx] +
                                "' is not a number");
    }
  }
  return values;
}

int cmd_ttest(const std::string& a_spec, const std::string& b_spec) {
  const auto a = read_column(a_spec);
  const auto b = read_column(b_spec);
  const auto r = mixlab::stats::welch_t_one_tailed(a, b);
  std::cout << Json{{"t", r.t},
                    {"p", r.p},
                    {"dof", r.dof},
                    {"n_a", a.size()},
                    {"n_b", b.size()},
                    {"mean_a", mixlab::stats::mean(a)},
                    {"mean_b", mixlab::stats::mean(b)},
                    {"alternative", "mean(a) > mean(b)"}}
                   .dump()
            << '\n';
  return kOk;
}

int cmd_aggregate(const std::string& dir, const std::optional<std::string>& baseline) {
  if (!fs::is_directory(dir)) throw mixlab::InvalidArgument("'" + dir + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "record.json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw mixlab::InvalidArgument("no record.json files under '" + dir + "'");
  std::vector<mixlab::runner::RunRecord> records;
  for (const auto& f : files) records.push_back(mixlab::runner::load_record(f));
  const auto summary = mixlab::runner::aggregate_groups(records, baseline);
  const std::string csv = mixlab::runner::summary_csv(summary);
  write_text(fs::path(dir) / "summary.csv", csv);
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixlab: Mixup early-phase laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string grid_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string mode;
  std::string theory_out;
  TheoryOptions topt;
  std::string a_spec;
  std::string b_spec;
  std::string agg_dir;
  std::optional<std::string> baseline;

  auto* train = app.add_subcommand("train", "run one configured training job");
  train->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--seed", seed, "override the config seed");
  train->add_option("--out", out, "output directory");

  auto* sweep = app.add_subcommand("sweep", "initial grad-rate sweep over (N, width, seed)");
  sweep->add_option("--config", config_path, "base config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid_path, "grid file (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out, "output directory (default: config out_dir, else stdout)");

  auto* theory = app.add_subcommand("theory", "closed-form and Monte-Carlo theory tables");
  theory->add_option("--mode", mode, "table to produce")
      ->required()
      ->check(CLI::IsMember({"epsilon_n", "fluctuation", "equivalence", "benr3"}));
  theory->add_option("--out", theory_out, "output directory")->required();
  theory->add_option("--dim", topt.dim, "input dimension (epsilon_n)");
  theory->add_option("--separation", topt.separation, "class separation (epsilon_n)");
  theory->add_option("--sigma", topt.sigma, "noise scale");
  theory->add_option("--seeds", topt.seeds, "seed count (epsilon_n)");
  theory->add_option("--log2-min", topt.log2_min, "smallest log2 N (epsilon_n)");
  theory->add_option("--log2-max", topt.log2_max, "largest log2 N (epsilon_n)");
  theory->add_option("--seed", topt.seed, "base seed");

  auto* ttest = app.add_subcommand("ttest", "one-tailed Welch t-test, alternative mean(a) > mean(b)");
  ttest->add_option("--a", a_spec, "<csv>:<column>")->required();
  ttest->add_option("--b", b_spec, "<csv>:<column>")->required();

  auto* agg = app.add_subcommand("aggregate", "summarize record.json files under a directory");
  agg->add_option("--dir", agg_dir, "directory to scan")->required();
  agg->add_option("--baseline", baseline, "name of the baseline group");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), kUsage);
  }

  try {
    if (*train) return cmd_train(config_path, seed, out);
    if (*sweep) return cmd_sweep(config_path, grid_path, out);
    if (*theory) return cmd_theory(mode, theory_out, topt);
    if (*ttest) return cmd_ttest(a_spec, b_spec);
    if (*agg) return cmd_aggregate(agg_dir, baseline);
  } catch (const mixlab::runner::RunError& e) {
    return report("run_error", e.what(), kRunFailed, {{"epoch", e.epoch()}, {"batch", e.batch()}});
  } catch (const mixlab::FormatError& e) {
    return report("format_error", e.what(), kFormat);
  } catch (const mixlab::DegenerateInput& e) {
    return report("degenerate_input", e.what(), kDegenerate);
  } catch (const mixlab::InvalidArgument& e) {
    return report("invalid_argument", e.what(), kInvalid);
  } catch (const std::exception& e) {
    return report("error", e.what(), kFailure);
  }
  return kUsage;
}
