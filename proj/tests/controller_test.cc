// Copyright 2026 The srnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "srnas/controller.h"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.h"

namespace srnas {
namespace {

ControllerShape SmallShape() { return ControllerShape{3, 8, 8, 16}; }

double LogProbOfChoices(const ControllerParams& params, const Trajectory& traj) {
  const ControllerOutput out = Forward(params, traj.cells);
  double total = 0.0;
  for (std::size_t t = 0; t < traj.cells.size(); ++t) {
    total += std::log(out.cell_probs[t][static_cast<Eigen::Index>(traj.cells[t])]);
  }
  for (std::size_t k = 0; k < traj.bits.size(); ++k) {
    const double o = out.macro_probs[static_cast<Eigen::Index>(k)];
    total += std::log(traj.bits[k] ? o : 1.0 - o);
  }
  return total;
}

TEST(ForwardTest, ZeroParamsAreUniform) {
  const ControllerParams p = ControllerParams::Zeros(ControllerShape{});
  const std::vector<std::size_t> cells{0, 5, 17, 191, 3, 2, 1};
  const ControllerOutput out = Forward(p, cells);
  ASSERT_EQ(out.cell_probs.size(), 7u);
  ASSERT_EQ(out.macro_probs.size(), 28);
  for (const auto& row : out.cell_probs) {
    ASSERT_EQ(row.size(), 192);
    for (Eigen::Index k = 0; k < row.size(); ++k) EXPECT_NEAR(row[k], 1.0 / 192.0, 1e-15);
  }
  for (Eigen::Index k = 0; k < out.macro_probs.size(); ++k) EXPECT_EQ(out.macro_probs[k], 0.5);
}

TEST(ForwardTest, RowsAreDistributions) {
  Rng rng(1);
  const ControllerParams p = ControllerParams::Random(ControllerShape{}, rng);
  const Trajectory t = Sample(p, rng);
  for (const auto& row : t.cell_probs) EXPECT_NEAR(row.sum(), 1.0, 1e-9);
  EXPECT_EQ(t.bits.size(), 28u);
  EXPECT_EQ(t.rewards.size(), 7u + 28u);
  EXPECT_TRUE(IsValid(t.chromosome));
}

TEST(SampleTest, DominantLogitIsAlwaysChosen) {
  ControllerParams p = ControllerParams::Zeros(SmallShape());
  p.out_b[42] = 60.0;
  Rng rng(2);
  int hits = 0;
  for (int k = 0; k < 10000; ++k) hits += Sample(p, rng).cells[0] == 42;
  EXPECT_EQ(hits, 10000);
}

TEST(SampleTest, DeterministicPerSeed) {
  Rng init(3);
  const ControllerParams p = ControllerParams::Random(ControllerShape{}, init);
  Rng a(77);
  Rng b(77);
  const Trajectory ta = Sample(p, a);
  const Trajectory tb = Sample(p, b);
  EXPECT_EQ(ta.cells, tb.cells);
  EXPECT_EQ(ta.bits, tb.bits);
  EXPECT_EQ(ta.chromosome, tb.chromosome);
}

TEST(ReturnsTest, SuffixSums) {
  const std::vector<double> r{1.0, 2.0, 3.0};
  EXPECT_EQ(Returns(r), (std::vector<double>{6.0, 5.0, 3.0}));
  EXPECT_EQ(Returns(r, 0.5), (std::vector<double>{1.0 + 0.5 * (2.0 + 0.5 * 3.0), 3.5, 3.0}));
}

TEST(GradientTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EXPECT_LE(oracle::PolicyGradientRelError(seed, SmallShape()), 1e-4) << seed;
  }
}

TEST(GradientTest, ZeroRewardsGiveZeroGradient) {
  Rng rng(4);
  const ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  const Trajectory t = Sample(p, rng);
  for (double g : PolicyGradient(p, t).Flatten()) EXPECT_EQ(g, 0.0);
}

TEST(GradientTest, UnusedEmbeddingRowsAreZero) {
  Rng rng(5);
  const ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  Trajectory t = Sample(p, rng);
  AssignTerminalReward(t, 1.5);
  const ControllerParams g = PolicyGradient(p, t);
  std::set<std::size_t> used(t.cells.begin(), t.cells.end());
  used.insert(kStartToken);
  for (Eigen::Index row = 0; row < g.embed.rows(); ++row) {
    if (used.count(static_cast<std::size_t>(row))) continue;
    EXPECT_EQ(g.embed.row(row).norm(), 0.0) << row;
  }
}

TEST(GradientTest, LinearInRewards) {
  Rng rng(6);
  const ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  Trajectory t = Sample(p, rng);
  for (double& r : t.rewards) r = Uniform01(rng);
  const auto g1 = PolicyGradient(p, t).Flatten();
  for (double& r : t.rewards) r *= -3.0;
  const auto g3 = PolicyGradient(p, t).Flatten();
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g3[k], -3.0 * g1[k], 1e-12);
}

TEST(UpdateTest, ZeroRewardBatchLeavesParams) {
  Rng rng(7);
  ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  const auto before = p.Flatten();
  std::vector<Trajectory> batch{Sample(p, rng), Sample(p, rng)};
  const UpdateResult r = ReinforceUpdate(p, batch, 0.1);
  EXPECT_TRUE(r.applied);
  EXPECT_EQ(p.Flatten(), before);
}

TEST(UpdateTest, PositiveRewardRaisesLogProbability) {
  Rng rng(8);
  ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  Trajectory t = Sample(p, rng);
  AssignTerminalReward(t, 1.0);
  const double before = LogProbOfChoices(p, t);
  const ControllerOutput out_before = Forward(p, t.cells);
  std::vector<Trajectory> batch{t};
  ASSERT_TRUE(ReinforceUpdate(p, batch, 1e-3).applied);
  EXPECT_GT(LogProbOfChoices(p, t), before);
  const ControllerOutput out_after = Forward(p, t.cells);
  for (std::size_t s = 0; s < t.cells.size(); ++s) {
    const auto c = static_cast<Eigen::Index>(t.cells[s]);
    EXPECT_GT(out_after.cell_probs[s][c], out_before.cell_probs[s][c]);
  }
  for (std::size_t k = 0; k < t.bits.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    if (t.bits[k]) EXPECT_GT(out_after.macro_probs[i], out_before.macro_probs[i]);
    else EXPECT_LT(out_after.macro_probs[i], out_before.macro_probs[i]);
  }
}

TEST(UpdateTest, NonFiniteGradientIsRejected) {
  Rng rng(9);
  ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  Trajectory t = Sample(p, rng);
  AssignTerminalReward(t, std::numeric_limits<double>::infinity());
  const auto before = p.Flatten();
  std::vector<Trajectory> batch{t};
  const UpdateResult r = ReinforceUpdate(p, batch, 0.1);
  EXPECT_FALSE(r.applied);
  EXPECT_FALSE(r.message.empty());
  EXPECT_EQ(p.Flatten(), before);
}

TEST(ControllerTest, BaselineConvergesToConstantReward) {
  Rng rng(10);
  ControllerConfig cfg;
  cfg.shape = SmallShape();
  Controller ctl(cfg, rng);
  ctl.Update({ctl.Sample(rng)}, std::vector<double>{3.0});
  EXPECT_DOUBLE_EQ(ctl.baseline(), 3.0);
  for (int k = 0; k < 400; ++k) {
    std::vector<Trajectory> batch{ctl.Sample(rng), ctl.Sample(rng)};
    ctl.Update(batch, std::vector<double>{1.0, 1.0});
  }
  EXPECT_NEAR(ctl.baseline(), 1.0, 1e-8);
  const double b = ctl.baseline();
  ctl.Update({ctl.Sample(rng)}, std::vector<double>{5.0});
  EXPECT_DOUBLE_EQ(ctl.baseline(), 0.95 * b + 0.05 * 5.0);
}

TEST(ControllerTest, JsonRoundTripIsExact) {
  Rng rng(11);
  ControllerConfig cfg;
  cfg.shape = SmallShape();
  Controller ctl(cfg, rng);
  ctl.Update({ctl.Sample(rng)}, std::vector<double>{0.1234567890123});
  const Controller back = Controller::FromJson(nlohmann::json::parse(ctl.ToJson().dump()));
  EXPECT_EQ(back.params().Flatten(), ctl.params().Flatten());
  EXPECT_EQ(back.baseline(), ctl.baseline());
  EXPECT_EQ(back.has_baseline(), ctl.has_baseline());
  EXPECT_EQ(back.config().shape, cfg.shape);
}

TEST(ParamsTest, FlattenRoundTripAndSize) {
  Rng rng(12);
  ControllerParams p = ControllerParams::Random(SmallShape(), rng);
  const auto flat = p.Flatten();
  EXPECT_EQ(flat.size(), p.Size());
  const std::size_t h = 8, e = 8, fc = 16;
  EXPECT_EQ(p.Size(), 193 * e + 4 * h * e + 4 * h * h + 4 * h + 192 * h + 192 + fc * 3 * e +
                          fc + fc * fc + fc + 6 * fc + 6);
  ControllerParams q = ControllerParams::Zeros(SmallShape());
  q.Unflatten(flat);
  EXPECT_EQ(q.Flatten(), flat);
  EXPECT_TRUE(q.AllFinite());
}

}  // namespace
}  // namespace srnas
