#include <gtest/gtest.h>

#include <cmath>

#include "mixlab/errors.hpp"
#include "mixlab/runner.hpp"

using namespace mixlab;
using namespace mixlab::runner;

namespace {

RunConfig small(int epochs = 3) {
  RunConfig c;
  c.name = "small";
  c.dataset.n_per_class = 60;
  c.dataset.n_val_per_class = 30;
  c.dataset.dim = 8;
  c.model.hidden = {16};
  c.optimizer.batch_size = 16;
  c.optimizer.epochs = epochs;
  c.mixup.alpha = 1.0;
  c.metrics.probe_size = 32;
  return c;
}

RunRecord fake(const std::string& name, const std::string& hash, double acc, std::uint64_t seed) {
  RunRecord r;
  r.name = name;
  r.config_hash = hash;
  r.seed = seed;
  r.run_id = name + "-s" + std::to_string(seed);
  r.final_val_acc = acc;
  return r;
}

RunOptions no_files() {
  RunOptions o;
  o.write_files = false;
  return o;
}

}  // namespace

TEST(Run, FullBatchBenrIsOne) {
  auto c = small(1);
  c.optimizer.batch_size = 1000;
  c.mixup.alpha.reset();
  const auto r = run(c, no_files());
  ASSERT_EQ(r.rows.size(), 1u);
  ASSERT_TRUE(r.rows[0].benr.has_value());
  EXPECT_NEAR(*r.rows[0].benr, 1.0, 1e-9);
}

TEST(Run, RowsAreWellFormed) {
  auto c = small(4);
  c.metrics.cos_probe = true;
  c.metrics.grad_rate = true;
  const auto r = run(c, no_files());
  ASSERT_EQ(r.rows.size(), 4u);
  for (std::size_t e = 0; e < r.rows.size(); ++e) {
    const auto& row = r.rows[e];
    EXPECT_EQ(row.epoch, static_cast<int>(e));
    EXPECT_GE(row.val_acc, 0.0);
    EXPECT_LE(row.val_acc, 1.0);
    EXPECT_GE(*row.benr, 1.0 - 1e-9);
    EXPECT_GE(*row.atd, 0.0);
    ASSERT_TRUE(row.cos.has_value());
    EXPECT_LE(row.cos->prop_lt_zero, row.cos->prop_lt_half);
  }
  EXPECT_TRUE(r.rows[0].grad_rate.has_value());
  EXPECT_FALSE(r.rows[1].grad_rate.has_value());
  EXPECT_EQ(r.final_val_acc, r.rows.back().val_acc);
}

TEST(Run, SameSeedIsByteIdentical) {
  const auto a = run(small(), no_files());
  const auto b = run(small(), no_files());
  EXPECT_EQ(metrics_csv(a), metrics_csv(b));
  EXPECT_EQ(a.final_params, b.final_params);
  auto other = small();
  other.seed = 1;
  EXPECT_NE(metrics_csv(run(other, no_files())), metrics_csv(a));
}

TEST(Run, PauseWithEmptyWindowMatchesBaseline) {
  auto pause = small();
  pause.strategy.kind = StrategyKind::kPause;
  pause.strategy.window = strategies::EnpWindow::fixed(0);
  const auto a = run(pause, no_files());
  const auto b = run(small(), no_files());
  EXPECT_EQ(a.final_params, b.final_params);
  EXPECT_EQ(metrics_csv(a), metrics_csv(b));
}

TEST(Run, BoostWithEqualAlphasMatchesBaseline) {
  auto boost = small();
  boost.strategy.kind = StrategyKind::kBoost;
  boost.strategy.enp_alpha = 1.0;
  boost.strategy.window = strategies::EnpWindow::fixed(2);
  EXPECT_EQ(run(boost, no_files()).final_params, run(small(), no_files()).final_params);
}

TEST(Run, HighLossRemovalKeepingEverythingMatchesVanilla) {
  auto vanilla = small();
  vanilla.mixup.alpha.reset();
  auto hlr = vanilla;
  hlr.strategy.kind = StrategyKind::kHighLossRemoval;
  hlr.strategy.k_percent = 1.0;
  hlr.strategy.teacher_epochs = 2;
  hlr.strategy.window = strategies::EnpWindow::fixed(2);
  const auto a = run(hlr, no_files());
  const auto b = run(vanilla, no_files());
  EXPECT_EQ(a.final_params, b.final_params);
  EXPECT_EQ(*a.easy_subset_size, 120u);
}

TEST(Run, HighLossRemovalShrinksEnpEpochs) {
  auto hlr = small();
  hlr.strategy.kind = StrategyKind::kHighLossRemoval;
  hlr.strategy.k_percent = 0.5;
  hlr.strategy.teacher_epochs = 1;
  hlr.strategy.window = strategies::EnpWindow::fixed(1);
  const auto r = run(hlr, no_files());
  EXPECT_EQ(*r.easy_subset_size, 60u);
}

TEST(Run, FailingConfigIsRejectedBeforeTraining) {
  auto c = small();
  c.mixup.alpha = 0.0;
  EXPECT_THROW(run(c, no_files()), InvalidArgument);
}

TEST(Csv, RoundTripThroughText) {
  auto c = small();
  c.metrics.cos_probe = true;
  const auto r = run(c, no_files());
  const auto text = metrics_csv(r);
  EXPECT_EQ(text.substr(0, text.find('\n')), kMetricsHeader);
  const auto rows = parse_metrics_csv(text);
  ASSERT_EQ(rows.size(), r.rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    EXPECT_EQ(rows[k].epoch, r.rows[k].epoch);
    EXPECT_EQ(rows[k].val_acc, r.rows[k].val_acc);
    EXPECT_EQ(rows[k].train_loss, r.rows[k].train_loss);
    EXPECT_EQ(*rows[k].benr, *r.rows[k].benr);
    EXPECT_EQ(rows[k].cos->avg_cos, r.rows[k].cos->avg_cos);
  }
  EXPECT_THROW(parse_metrics_csv("bad,header\n"), FormatError);
}

TEST(Csv, RecordJsonRoundTrip) {
  const auto r = run(small(), no_files());
  const auto back = record_from_json(record_to_json(r));
  EXPECT_EQ(back.run_id, r.run_id);
  EXPECT_EQ(back.config_hash, r.config_hash);
  EXPECT_EQ(back.final_val_acc, r.final_val_acc);
  EXPECT_EQ(metrics_csv(back), metrics_csv(r));
}

TEST(Aggregate, Examples) {
  const std::vector<RunRecord> three{fake("a", "h", 0.5, 0), fake("a", "h", 0.6, 1), fake("a", "h", 0.7, 2)};
  const auto s = aggregate(three);
  EXPECT_NEAR(s.mean, 0.6, 1e-15);
  EXPECT_NEAR(*s.variance, 0.01, 1e-15);
  EXPECT_EQ(s.runs, 3u);

  const std::vector<RunRecord> one{fake("a", "h", 0.4, 0)};
  EXPECT_FALSE(aggregate(one).variance.has_value());

  const auto same = aggregate(three, three);
  EXPECT_EQ(*same.delta, 0.0);
  EXPECT_EQ(*same.p_value, 0.5);

  const std::vector<RunRecord> mixed{fake("a", "h", 0.5, 0), fake("a", "g", 0.6, 1)};
  EXPECT_THROW(aggregate(mixed), InvalidArgument);
}

TEST(Aggregate, GroupsAgainstBaseline) {
  const std::vector<RunRecord> all{fake("mix", "h1", 0.8, 0), fake("mix", "h1", 0.82, 1),
                                   fake("van", "h2", 0.7, 0), fake("van", "h2", 0.71, 1)};
  const auto rows = aggregate_groups(all, std::string("van"));
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].name, "mix");
  EXPECT_NEAR(*rows[0].delta, 0.105, 1e-12);
  EXPECT_LT(*rows[0].p_value, 0.05);
  EXPECT_THROW(aggregate_groups(all, std::string("missing")), InvalidArgument);
  const auto csv = summary_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "name,config_hash,runs,mean_val_acc,variance,delta,p_value");
}

TEST(Sweep, CellsAndDuplicateSeeds) {
  auto base = small();
  base.dataset.dim = 16;
  SweepGrid g;
  g.n_samples = {64};
  g.hidden_width = {8};
  g.seeds = {3, 3, 4};
  const auto rows = sweep_grad_rate(g, base);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].grad_rate, rows[1].grad_rate);
  EXPECT_NE(rows[0].grad_rate, rows[2].grad_rate);
  EXPECT_GT(rows[0].grad_rate, 0.0);
  const auto csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kSweepHeader);
}

TEST(Sweep, GridParsing) {
  const auto g = SweepGrid::from_json(Json::parse(R"({"n_samples": [8, 16], "hidden_width": [4], "seeds": [0]})"));
  EXPECT_EQ(g.n_samples.size(), 2u);
  EXPECT_THROW(SweepGrid::from_json(Json::parse(R"({"n_samples": [], "hidden_width": [4]})")), InvalidArgument);
}
