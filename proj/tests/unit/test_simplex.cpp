#include <gtest/gtest.h>

#include <random>

#include "relubound/relubound.hpp"
#include "support/dense_lp.hpp"
#include "support/helpers.hpp"

using namespace relubound;
using testsupport::dense_lp;
using testsupport::DenseStatus;

namespace {

SolveResult solve(const MilpModel& m, const ToleranceConfig& tol = {}) { return solve_lp(LpProblem::from_model(m), tol); }

MilpModel weak_gap_model(Sense s = Sense::maximize) {
    const Network net = testsupport::gap_net();
    FormulationOptions relax;
    relax.relax = true;
    return build_obbt(net, interval_bounds(net), 2, 0, s, relax);
}

} // namespace

TEST(Simplex, FacetOptimum) {
    MilpModel m;
    const int x = m.add_variable("x", 0.0, 1.0);
    const int y = m.add_variable("y", 0.0, 1.0);
    m.add_constraint({{x, 1.0}, {y, 1.0}}, RowSense::le, 1.0);
    m.objective = {{x, 1.0}, {y, 1.0}};
    const SolveResult r = solve(m);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 1.0, 1e-12);
    EXPECT_NEAR(r.x[0] + r.x[1], 1.0, 1e-12);
}

TEST(Simplex, FixedVariableNoRows) {
    MilpModel m;
    const int x = m.add_variable("x", 0.0, 0.0);
    m.objective = {{x, 1.0}};
    const SolveResult r = solve(m);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_EQ(r.objective, 0.0);
}

TEST(Simplex, InfeasibleAndUnbounded) {
    MilpModel inf;
    const int x = inf.add_variable("x", 0.0, 1.0);
    inf.add_constraint({{x, 1.0}}, RowSense::ge, 2.0);
    inf.objective = {{x, 1.0}};
    EXPECT_EQ(solve(inf).status, LpStatus::infeasible);

    MilpModel unb;
    const int u = unb.add_variable("u", 0.0, kInf);
    const int v = unb.add_variable("v", -kInf, kInf);
    unb.add_constraint({{u, 1.0}, {v, -1.0}}, RowSense::le, 1.0);
    unb.objective = {{u, 1.0}};
    EXPECT_EQ(solve(unb).status, LpStatus::unbounded);
}

TEST(Simplex, GapNetWeakModel) {
    const SolveResult up = solve(weak_gap_model());
    ASSERT_EQ(up.status, LpStatus::optimal);
    EXPECT_NEAR(up.objective, 3.0, 1e-9);
    const SolveResult down = solve(weak_gap_model(Sense::minimize));
    ASSERT_EQ(down.status, LpStatus::optimal);
    EXPECT_NEAR(down.objective, 0.0, 1e-9);
}

TEST(Simplex, FixAndResolve) {
    const MilpModel m = weak_gap_model();
    const LpProblem p = LpProblem::from_model(m);
    const std::pair<int, double> both_on[] = {{m.index("z_1_0"), 1.0}, {m.index("z_1_1"), 1.0}};
    const SolveResult r = fix_and_resolve(p, both_on);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 2.0, 1e-9);

    const std::pair<int, double> outside[] = {{m.index("z_1_0"), 2.0}};
    EXPECT_THROW(fix_and_resolve(p, outside), InputError);
    const std::pair<int, double> bad_index[] = {{999, 0.0}};
    EXPECT_THROW(fix_and_resolve(p, bad_index), InputError);
}

TEST(Simplex, ForwardPatternFixingBoundsTheWitness) {
    const Network net = testsupport::gap_net();
    const MilpModel m = weak_gap_model();
    const LpProblem p = LpProblem::from_model(m);
    for (const auto& x : testsupport::sample_inputs(net, 100, 5)) {
        const Activations act = forward(net, x);
        std::vector<std::pair<int, double>> fix;
        for (std::size_t j = 0; j < 2; ++j) fix.emplace_back(m.neuron(1, j).z, act.pre[0][j] >= 0.0 ? 1.0 : 0.0);
        const SolveResult r = fix_and_resolve(p, fix);
        ASSERT_EQ(r.status, LpStatus::optimal);
        EXPECT_GE(r.objective, act.pre[1][0] - 1e-6);
    }
}

TEST(Simplex, DeterministicBasesAndValues) {
    const Network net = generate_random({4, 6, 6, 2}, 9, 1.0);
    FormulationOptions relax;
    relax.relax = true;
    const MilpModel m = build_obbt(net, interval_bounds(net), 3, 1, Sense::maximize, relax);
    const SolveResult a = solve(m);
    const SolveResult b = solve(m);
    EXPECT_EQ(a.basis, b.basis);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.objective, b.objective);
    EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Simplex, BlandAfterImmediateDegenerateStreakStillSolves) {
    ToleranceConfig tol;
    tol.bland_after = 0;
    tol.refactor_every = 3;
    const SolveResult r = solve(weak_gap_model(), tol);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, 3.0, 1e-9);
}

TEST(Simplex, IterationLimitIsReported) {
    ToleranceConfig tol;
    tol.iteration_limit = 1;
    const Network net = generate_random({4, 6, 6, 2}, 9, 1.0);
    FormulationOptions relax;
    relax.relax = true;
    const SolveResult r = solve(build_obbt(net, interval_bounds(net), 3, 0, Sense::maximize, relax), tol);
    EXPECT_EQ(r.status, LpStatus::iteration_limit);
}

class RandomLp : public ::testing::TestWithParam<std::uint64_t> {};

// Random boxed LPs with mixed row senses, compared with the reference tableau solver.
TEST_P(RandomLp, MatchesReferenceSolver) {
    std::mt19937_64 gen(GetParam());
    std::uniform_real_distribution<double> coef(-3.0, 3.0);
    std::uniform_int_distribution<int> size(2, 8);
    for (int rep = 0; rep < 20; ++rep) {
        MilpModel m;
        m.sense = rep % 2 ? Sense::minimize : Sense::maximize;
        const int n = size(gen), rows = size(gen);
        for (int j = 0; j < n; ++j) {
            const int kind = static_cast<int>(gen() % 4);
            const double lo = std::round(coef(gen)), hi = lo + std::abs(std::round(coef(gen)));
            if (kind == 0) m.add_variable("v" + std::to_string(j), lo, hi);
            else if (kind == 1) m.add_variable("v" + std::to_string(j), lo, kInf);
            else if (kind == 2) m.add_variable("v" + std::to_string(j), -kInf, hi);
            else m.add_variable("v" + std::to_string(j), lo, hi);
        }
        for (int i = 0; i < rows; ++i) {
            std::vector<Term> t;
            for (int j = 0; j < n; ++j)
                if (gen() % 3) t.push_back({j, std::round(coef(gen) * 2.0) / 2.0});
            const auto s = static_cast<RowSense>(gen() % 3);
            m.add_constraint(std::move(t), s, std::round(coef(gen) * 2.0));
        }
        for (int j = 0; j < n; ++j) m.objective.push_back({j, coef(gen)});

        const auto ref = dense_lp(m);
        const SolveResult r = solve(m);
        if (ref.status == DenseStatus::optimal) {
            ASSERT_EQ(r.status, LpStatus::optimal) << "seed " << GetParam() << " rep " << rep;
            EXPECT_NEAR(r.objective, ref.objective, 1e-6 * (1.0 + std::abs(ref.objective)));
            EXPECT_LE(m.max_violation(r.x), 1e-6);
        } else if (ref.status == DenseStatus::infeasible) {
            EXPECT_EQ(r.status, LpStatus::infeasible) << "seed " << GetParam() << " rep " << rep;
        } else {
            EXPECT_EQ(r.status, LpStatus::unbounded) << "seed " << GetParam() << " rep " << rep;
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Seeds, RandomLp, ::testing::Range<std::uint64_t>(0, 15));

class ObbtLp : public ::testing::TestWithParam<std::uint64_t> {};

// Weak OBBT models of random networks against the reference solver, plus weak duality
// against forward-pass witnesses.
TEST_P(ObbtLp, MatchesReferenceAndBoundsWitnesses) {
    std::mt19937_64 gen(GetParam());
    const auto arch = testsupport::random_arch(gen, 2, 5, 1, 4, 2, 6, 2);
    const Network net = generate_random(arch, GetParam(), 1.0);
    BounderConfig cfg;
    cfg.method = BoundMethod::weak;
    FormulationOptions relax;
    relax.relax = true;
    const auto samples = testsupport::sample_inputs(net, 300, GetParam());
    // Interval bounds give loose big-M constants, bounder output gives solve-produced ones.
    for (const BoundsSet& b : {interval_bounds(net), run_bounder(net, cfg)})
        for (std::size_t m = 1; m <= net.depth(); ++m)
            for (std::size_t n = 0; n < net.width(m); ++n)
                for (Sense s : {Sense::maximize, Sense::minimize}) {
                    const MilpModel model = build_obbt(net, b, m, n, s, relax);
                    const SolveResult r = solve(model);
                    ASSERT_EQ(r.status, LpStatus::optimal) << net.name << " " << m << " " << n;
                    EXPECT_NEAR(r.objective, dense_lp(model).objective, 1e-6) << net.name << " " << m << " " << n;
                    const double sgn = s == Sense::maximize ? 1.0 : -1.0;
                    for (const auto& x : samples)
                        ASSERT_GE(sgn * r.objective, sgn * forward(net, x).pre[m - 1][n] - 1e-6);
                }
}

INSTANTIATE_TEST_SUITE_P(Seeds, ObbtLp, ::testing::Range<std::uint64_t>(0, 40));

// Phase one can end with basic artificials slightly outside their [0, 0] box; the ratio
// test must still bound the step.
TEST(Simplex, RoundOffAfterPhaseOneDoesNotBreakRatioTest) {
    const Network net = generate_random({4, 2, 5, 4, 3}, 209, 1.0);
    BounderConfig cfg;
    cfg.method = BoundMethod::weak;
    const BoundsSet b = run_bounder(net, cfg);
    FormulationOptions relax;
    relax.relax = true;
    const MilpModel model = build_obbt(net, b, 3, 1, Sense::minimize, relax);
    const SolveResult r = solve(model);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.objective, dense_lp(model).objective, 1e-6);
    EXPECT_LE(model.max_violation(r.x), 1e-6);
    for (std::size_t l = 1; l <= net.depth(); ++l)
        for (std::size_t j = 0; j < net.width(l); ++j) EXPECT_NE(b.layer(l).status(j), BoundStatus::fallback);
}
