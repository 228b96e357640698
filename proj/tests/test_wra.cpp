#include <gtest/gtest.h>

#include <cmath>

#include "wracma/rankstats.hpp"
#include "wracma/wra.hpp"

using namespace wracma;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::vector<Vector> uniform_candidates(const Box& box, int count, Rng& rng) {
  std::vector<Vector> xs;
  for (int i = 0; i < count; ++i) xs.push_back(box.sample_uniform(rng));
  return xs;
}

ScenarioSearch fresh_search(const Problem& p, const Vector& x, const Matrix& cov, Rng& rng) {
  const Box& Y = p.scenario_box();
  const Vector mean = Y.sample_uniform(rng);
  return ScenarioSearch{Cmaes(mean, cov, "test"), mean, p.value(x, mean), 0, false, -1};
}

class NanProblem final : public Problem {
 public:
  NanProblem() : inner_(make_problem("f2", 2, 2)) {}
  std::string id() const override { return "nan"; }
  double interaction() const override { return 1.0; }
  const Box& design_box() const override { return inner_->design_box(); }
  const Box& scenario_box() const override { return inner_->scenario_box(); }
  double value(const Vector&, const Vector&) const override { return std::nan(""); }
  Vector worst_scenario(const Vector& x) const override { return inner_->worst_scenario(x); }
  double worst_case_value(const Vector& x) const override { return inner_->worst_case_value(x); }
  Vector optimum() const override { return inner_->optimum(); }
  double optimal_value() const override { return 0.0; }
  double scenario_lipschitz(const Vector& x, const Box& r) const override {
    return inner_->scenario_lipschitz(x, r);
  }

 private:
  std::unique_ptr<BenchmarkProblem> inner_;
};

}  // namespace

TEST(WraParams, DefaultsAndValidation) {
  const WraParams p;
  EXPECT_EQ(p.tau_threshold, 0.7);
  EXPECT_EQ(p.c_max, 2);
  EXPECT_EQ(p.v_min, 1e-4);
  EXPECT_EQ(p.t_min, 10);
  EXPECT_EQ(p.max_rounds, 100);
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.tau_threshold = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.tau_threshold = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.c_max = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.v_min = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.t_min = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = p;
  bad.max_rounds = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(WraState, InitialArchive) {
  const Box Y = Box::cube(3, -3, 3);
  WraState state(Y, 6, WraParams{}, 1);
  ASSERT_EQ(state.size(), 6);
  const Matrix init = Matrix::Identity(3, 3) * 2.25;
  for (const auto& a : state.archive()) {
    EXPECT_TRUE(Y.contains(a.mean));
    EXPECT_TRUE(Y.contains(a.scenario));
    EXPECT_TRUE(a.covariance.isApprox(init));
  }
  EXPECT_THROW(WraState(Y, 0, WraParams{}, 1), std::invalid_argument);
}

TEST(WarmStart, SelectsTheWorstArchivedScenario) {
  const auto f1 = make_problem("f1", 2, 2);
  WraState state(f1->scenario_box(), 2, WraParams{}, 3);
  state.archive()[0].scenario = vec({3, 3});
  state.archive()[1].scenario = vec({-3, -3});
  const std::vector<Vector> xs{vec({1, 1}), vec({-1, -0.5})};
  EvalBudget budget(100);
  const auto searches = warm_start(state, xs, *f1, budget);
  ASSERT_EQ(searches.size(), 2u);
  EXPECT_EQ(searches[0].source, 0);
  EXPECT_DOUBLE_EQ(searches[0].estimate, 6.0);
  EXPECT_EQ(searches[0].worst, vec({3, 3}));
  EXPECT_EQ(searches[1].source, 1);
  EXPECT_DOUBLE_EQ(searches[1].estimate, 4.5);
  EXPECT_EQ(budget.used(), 4);
}

TEST(WarmStart, ChargesLambdaSquaredAndStartsFresh) {
  const auto p = make_problem("f5", 4, 4);
  Rng rng(2);
  WraState state(p->scenario_box(), 7, WraParams{}, 4);
  const auto xs = uniform_candidates(p->design_box(), 7, rng);
  EvalBudget budget(1000);
  const auto searches = warm_start(state, xs, *p, budget);
  EXPECT_EQ(budget.used(), 49);
  for (const auto& s : searches) {
    const auto& src = state.archive()[s.source];
    EXPECT_EQ(s.es.mean(), src.mean);
    EXPECT_TRUE(s.es.covariance().isApprox(src.covariance, 1e-14));
    EXPECT_EQ(s.es.iteration(), 0);
    EXPECT_EQ(s.es.path_sigma(), Vector::Zero(4));
    EXPECT_EQ(s.es.path_c(), Vector::Zero(4));
    EXPECT_EQ(s.iterations, 0);
    EXPECT_FALSE(s.contracted);
  }
}

TEST(WarmStart, ClonesEvolveIndependently) {
  const auto f1 = make_problem("f1", 2, 2);
  WraState state(f1->scenario_box(), 2, WraParams{}, 3);
  state.archive()[0].scenario = vec({3, 3});
  state.archive()[1].scenario = vec({-3, -3});
  const std::vector<Vector> xs{vec({1, 1}), vec({2, 0.5})};
  EvalBudget budget(10000);
  auto searches = warm_start(state, xs, *f1, budget);
  ASSERT_EQ(searches[0].source, 0);
  ASSERT_EQ(searches[1].source, 0);
  EXPECT_EQ(searches[0].es.mean(), searches[1].es.mean());
  const Cmaes before = searches[1].es;
  advance_instance(xs[0], searches[0], *f1, state.scenario_box(), state.params(), state.rng(),
                   budget);
  EXPECT_GT(searches[0].es.iteration(), 0);
  EXPECT_TRUE(searches[1].es.same_state(before));
}

TEST(WarmStart, TruncatedByBudget) {
  const auto p = make_problem("f2", 3, 3);
  Rng rng(5);
  WraState state(p->scenario_box(), 4, WraParams{}, 6);
  const auto xs = uniform_candidates(p->design_box(), 4, rng);
  EvalBudget budget(10);
  try {
    warm_start(state, xs, *p, budget);
    FAIL();
  } catch (const WarmStartTruncated& e) {
    EXPECT_EQ(e.evaluated_pairs, 10);
  }
}

TEST(AdvanceInstance, ConvergedInstanceReturnsImmediately) {
  const auto p = make_problem("f5", 3, 3);
  Rng rng(1);
  const Vector x = vec({0.5, 0.1, -0.2});
  for (auto rule : {RoundStopRule::min_iterations_then_either, RoundStopRule::either_condition}) {
    WraParams params;
    params.stop_rule = rule;
    auto s = fresh_search(*p, x, Matrix::Identity(3, 3) * 1e-10, rng);
    s.iterations = params.t_min;
    EvalBudget budget(1000);
    const auto r = advance_instance(x, s, *p, p->scenario_box(), params, rng, budget);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(budget.used(), 0);
    EXPECT_TRUE(s.contracted);
  }
}

TEST(AdvanceInstance, RoundEndsAtTheSecondImprovement) {
  const auto p = make_problem("f5", 3, 3);
  const Vector x = vec({1.0, -1.0, 0.5});
  for (auto rule : {RoundStopRule::min_iterations_then_either, RoundStopRule::either_condition}) {
    WraParams params;
    params.stop_rule = rule;
    params.t_min = 0;
    Rng rng(21);
    auto s = fresh_search(*p, x, Matrix::Identity(3, 3) * 2.25, rng);
    // replay on copies: the run must stop right after the 2nd strict improvement
    Cmaes replay = s.es;
    Rng replay_rng = rng;
    double best = s.estimate;
    int improvements = 0, iterations = 0;
    while (improvements < 2) {
      const auto ys = replay.ask(p->scenario_box(), replay_rng);
      std::vector<double> neg;
      double top = -INFINITY;
      for (const auto& y : ys) {
        neg.push_back(-p->value(x, y));
        top = std::max(top, -neg.back());
      }
      replay.tell(ranking_of(neg), p->scenario_box());
      ++iterations;
      if (top > best) {
        best = top;
        ++improvements;
      }
    }
    EvalBudget budget(100000);
    const auto r = advance_instance(x, s, *p, p->scenario_box(), params, rng, budget);
    EXPECT_EQ(r.improvements, 2);
    EXPECT_EQ(r.iterations, iterations);
    EXPECT_EQ(s.estimate, best);
    EXPECT_TRUE(s.es.same_state(replay));
    EXPECT_EQ(budget.used(), static_cast<std::int64_t>(iterations) * s.es.pop_size());
  }
}

TEST(AdvanceInstance, DefaultRuleRunsAtLeastTMinIterations) {
  const auto p = make_problem("f1", 2, 2);
  const Vector x = vec({1.0, 1.0});
  Rng rng(3);
  auto s = fresh_search(*p, x, Matrix::Identity(2, 2) * 2.25, rng);
  EvalBudget budget(100000);
  const WraParams params;
  const auto r = advance_instance(x, s, *p, p->scenario_box(), params, rng, budget);
  EXPECT_GE(r.iterations, params.t_min);
  EXPECT_EQ(s.iterations, r.iterations);
}

TEST(AdvanceInstance, EstimateTracksTheBestScenario) {
  const auto p = make_problem("f6", 3, 3, 2.0);
  Rng rng(4);
  const Vector x = vec({0.7, -1.2, 0.1});
  auto s = fresh_search(*p, x, Matrix::Identity(3, 3) * 2.25, rng);
  EvalBudget budget(1000000);
  double last = s.estimate;
  for (int round = 0; round < 20; ++round) {
    advance_instance(x, s, *p, p->scenario_box(), WraParams{}, rng, budget);
    EXPECT_GE(s.estimate, last);
    EXPECT_DOUBLE_EQ(s.estimate, p->value(x, s.worst));
    EXPECT_LE(s.estimate, p->worst_case_value(x) + 1e-12);
    last = s.estimate;
  }
  EXPECT_NEAR(s.estimate, p->worst_case_value(x), 1e-3);
}

TEST(AdvanceInstance, StopsWhenTheBudgetRunsOut) {
  const auto p = make_problem("f5", 3, 3);
  Rng rng(4);
  const Vector x = vec({0.7, -1.2, 0.1});
  auto s = fresh_search(*p, x, Matrix::Identity(3, 3) * 2.25, rng);
  WraParams params;
  params.stop_rule = RoundStopRule::both_conditions;
  params.v_min = 0.0;  // never contracts
  EvalBudget budget(50);
  const auto r = advance_instance(x, s, *p, p->scenario_box(), params, rng, budget);
  EXPECT_TRUE(r.budget_exhausted);
  EXPECT_EQ(budget.used(), 50);
  EXPECT_EQ(r.iterations, 50 / s.es.pop_size());
}

TEST(ApproximateRanking, OneRoundWhenTheRankingIsStable) {
  const auto p = make_problem("f5", 3, 3);
  Rng rng(8);
  WraParams params;
  params.tau_threshold = 0.01;
  WraState state(p->scenario_box(), 7, params, 9);
  // widely separated candidates whose order no inner search can change
  std::vector<Vector> xs;
  for (int i = 0; i < 7; ++i) xs.push_back(Vector::Constant(3, 0.4 * i - 1.3));
  EvalBudget budget(1000000);
  auto searches = warm_start(state, xs, *p, budget);
  const auto out = approximate_ranking(state, searches, xs, *p, budget);
  EXPECT_EQ(out.rounds, 1);
  EXPECT_GT(out.tau, 0.01);
  EXPECT_EQ(out.round_estimates.size(), 2u);
}

TEST(ApproximateRanking, EstimatesAreMonotoneAcrossRounds) {
  const auto p = make_problem("f8", 4, 4, 3.0);
  Rng rng(10);
  WraParams params;
  params.tau_threshold = 1.0;
  params.max_rounds = 6;
  WraState state(p->scenario_box(), 7, params, 11);
  const auto xs = uniform_candidates(p->design_box(), 7, rng);
  EvalBudget budget(10000000);
  auto searches = warm_start(state, xs, *p, budget);
  const auto out = approximate_ranking(state, searches, xs, *p, budget);
  EXPECT_EQ(out.rounds, 6);
  ASSERT_EQ(out.round_estimates.size(), 7u);
  for (std::size_t j = 1; j < out.round_estimates.size(); ++j) {
    for (int i = 0; i < 7; ++i) EXPECT_GE(out.round_estimates[j][i], out.round_estimates[j - 1][i]);
  }
  EXPECT_EQ(out.estimates, out.round_estimates.back());
  EXPECT_EQ(out.ranking, ranking_of(out.estimates));
}

TEST(ApproximateRanking, SingleCandidateRunsOneRound) {
  const auto p = make_problem("f2", 2, 2);
  WraState state(p->scenario_box(), 1, WraParams{}, 1);
  const std::vector<Vector> xs{vec({0.5, 0.5})};
  EvalBudget budget(100000);
  const auto out = rank_candidates(state, xs, *p, budget);
  EXPECT_EQ(out.rounds, 1);
  EXPECT_EQ(out.ranking, (RankVector{1}));
  EXPECT_EQ(out.tau, 1.0);
}

TEST(ApproximateRanking, TruncatedWhenTheBudgetRunsOut) {
  const auto p = make_problem("f5", 3, 3);
  Rng rng(3);
  WraState state(p->scenario_box(), 7, WraParams{}, 3);
  const auto xs = uniform_candidates(p->design_box(), 7, rng);
  EvalBudget budget(49 + 30);
  const auto out = rank_candidates(state, xs, *p, budget);
  EXPECT_TRUE(out.truncated);
  EXPECT_EQ(budget.used(), budget.limit());
  EXPECT_TRUE(is_permutation_of_ranks(out.ranking));
}

TEST(ApproximateRanking, RanksF5CandidatesCorrectly) {
  const auto p = make_problem("f5", 5, 5, 1.0);
  Rng rng(77);
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    WraState state(p->scenario_box(), 8, WraParams{}, 1000 + trial);
    const auto xs = uniform_candidates(p->design_box(), 8, rng);
    EvalBudget budget(10000000);
    const auto out = rank_candidates(state, xs, *p, budget);
    std::vector<double> truth;
    for (const auto& x : xs) truth.push_back(p->worst_case_value(x));
    if (kendall_tau(out.estimates, truth) >= 0.7) ++good;
  }
  EXPECT_GE(good, 90);
}

TEST(PostProcess, InflatesSmallStandardDeviations) {
  const auto p = make_problem("f5", 3, 3);
  WraState state(p->scenario_box(), 2, WraParams{}, 5);
  Rng rng(6);
  std::vector<ScenarioSearch> searches;
  searches.push_back(ScenarioSearch{Cmaes(Vector::Zero(3), Matrix::Identity(3, 3) * 1e-10),
                                    vec({1, 1, 1}), 0.0, 0, false, 0});
  Matrix wide = Matrix::Identity(3, 3);
  wide(0, 0) = 1e-12;
  searches.push_back(ScenarioSearch{Cmaes(Vector::Ones(3), wide), vec({-1, -1, -1}), 0.0, 0,
                                    false, 1});
  post_process(state, searches);
  const auto& a = state.archive();
  for (int l = 0; l < 3; ++l) EXPECT_NEAR(std::sqrt(a[0].covariance(l, l)), 1e-4, 1e-16);
  EXPECT_NEAR(std::sqrt(a[1].covariance(0, 0)), 1e-4, 1e-16);
  EXPECT_NEAR(a[1].covariance(1, 1), 1.0, 1e-12);
  EXPECT_EQ(a[0].scenario, vec({1, 1, 1}));
  EXPECT_EQ(a[1].mean, Vector::Ones(3));
}

TEST(PostProcess, ResetsTheLaterOfTwoCloseInstances) {
  const auto p = make_problem("f5", 2, 2);
  WraState state(p->scenario_box(), 3, WraParams{}, 5);
  const Matrix cov = Matrix::Identity(2, 2) * 0.01;
  std::vector<ScenarioSearch> searches;
  for (const Vector& y : {vec({1, 1}), vec({-2, 0}), vec({1, 1})}) {
    searches.push_back(ScenarioSearch{Cmaes(y, cov), y, 0.0, 0, false, 0});
  }
  post_process(state, searches);
  const auto& a = state.archive();
  EXPECT_EQ(a[0].scenario, vec({1, 1}));
  EXPECT_EQ(a[1].scenario, vec({-2, 0}));
  EXPECT_NE(a[2].scenario, vec({1, 1}));
  EXPECT_TRUE(a[2].covariance.isApprox(Matrix::Identity(2, 2) * 2.25));
  EXPECT_TRUE(p->scenario_box().contains(a[2].scenario));
  EXPECT_TRUE(a[0].covariance.isApprox(cov));
}

TEST(PostProcess, FixedPoint) {
  const auto p = make_problem("f5", 2, 2);
  WraState state(p->scenario_box(), 2, WraParams{}, 5);
  const Matrix cov = Matrix::Identity(2, 2) * 0.5;
  std::vector<ScenarioSearch> searches{
      ScenarioSearch{Cmaes(vec({0, 0}), cov), vec({0.1, 0}), 0.0, 0, false, 0},
      ScenarioSearch{Cmaes(vec({1, 1}), cov), vec({0.1, 0.001}), 0.0, 0, false, 1}};
  post_process(state, searches);
  const auto& a = state.archive();
  EXPECT_EQ(a[0].scenario, vec({0.1, 0}));
  EXPECT_EQ(a[1].scenario, vec({0.1, 0.001}));
  EXPECT_TRUE(a[1].covariance.isApprox(cov, 1e-14));
  EXPECT_EQ(a[1].mean, vec({1, 1}));
}

TEST(PostProcess, RejectsCountMismatch) {
  const auto p = make_problem("f5", 2, 2);
  WraState state(p->scenario_box(), 2, WraParams{}, 5);
  EXPECT_THROW(post_process(state, {}), std::invalid_argument);
}

TEST(RankCandidates, InvariantsAfterEachCall) {
  const auto p = make_problem("f8", 5, 5);
  Rng rng(12);
  const WraParams params;
  WraState state(p->scenario_box(), 8, params, 13);
  EvalBudget budget(100000000);
  for (int call = 0; call < 20; ++call) {
    const auto xs = uniform_candidates(p->design_box(), 8, rng);
    const auto before = budget.used();
    const auto out = rank_candidates(state, xs, *p, budget);
    EXPECT_EQ(out.fcalls_used, budget.used() - before);
    EXPECT_EQ(out.warm_start_fcalls, 64);
    EXPECT_GE(out.fcalls_used, 64);
    EXPECT_TRUE(is_permutation_of_ranks(out.ranking));
    for (const auto& a : state.archive()) {
      EXPECT_GE(a.covariance.diagonal().cwiseSqrt().minCoeff(), params.v_min * (1 - 1e-12));
      EXPECT_TRUE(p->scenario_box().contains(a.scenario));
    }
  }
  EXPECT_THROW(rank_candidates(state, uniform_candidates(p->design_box(), 3, rng), *p, budget),
               std::invalid_argument);
}

TEST(RankCandidates, DeterministicUnderAFixedSeed) {
  const auto p = make_problem("f1", 3, 3);
  Rng ra(1), rb(1);
  WraState a(p->scenario_box(), 7, WraParams{}, 99);
  WraState b(p->scenario_box(), 7, WraParams{}, 99);
  EvalBudget ba(10000000), bb(10000000);
  for (int call = 0; call < 10; ++call) {
    const auto xa = uniform_candidates(p->design_box(), 7, ra);
    const auto xb = uniform_candidates(p->design_box(), 7, rb);
    const auto oa = rank_candidates(a, xa, *p, ba);
    const auto ob = rank_candidates(b, xb, *p, bb);
    EXPECT_EQ(oa.estimates, ob.estimates);
    EXPECT_EQ(oa.ranking, ob.ranking);
  }
  EXPECT_EQ(ba.used(), bb.used());
  for (int k = 0; k < 7; ++k) {
    EXPECT_EQ(a.archive()[k].mean, b.archive()[k].mean);
    EXPECT_EQ(a.archive()[k].covariance, b.archive()[k].covariance);
    EXPECT_EQ(a.archive()[k].scenario, b.archive()[k].scenario);
  }
}

TEST(RankCandidates, NonFiniteValuesAreReported) {
  const NanProblem p;
  WraState state(p.scenario_box(), 2, WraParams{}, 1);
  const std::vector<Vector> xs{vec({0, 0}), vec({1, 1})};
  EvalBudget budget(1000);
  EXPECT_THROW(rank_candidates(state, xs, p, budget), NonFiniteValue);
}
