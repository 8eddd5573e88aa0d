#include "fixtures.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/solver.hpp"

#include <doctest.h>

using namespace cnopt;

namespace {

// [x^2 : x - 1] over w = (x, y)
CnForm square_with_target()
{
    CnForm F;
    F.name = "sq";
    F.n = 1;
    F.m = 1;
    F.objective = fields::polynomial(2, {{1.0, {{0, 2}}}});
    F.constraints = {fields::linear(2, {{0, 1.0}}, -1.0)};
    F.domain = Box::unbounded(1);
    F.sample_box = Box::cube(1, -2.0, 2.0);
    F.lift = [](const Vec&) { return Vec::Zero(1).eval(); };
    return F;
}

// (x1 - 1)^2 + (x2 + 2)^2 + y1^2 + y2^2 with y_i = x_i, one block per index
Problem separable()
{
    Problem P;
    CnForm& F = P.form;
    F.name = "separable";
    F.n = 2;
    F.m = 2;
    F.objective = fields::sum({fields::affine_square(4, {{0, 1.0}}, -1.0), fields::affine_square(4, {{1, 1.0}}, 2.0),
                               fields::polynomial(4, {{1.0, {{2, 2}}}, {1.0, {{3, 2}}}})});
    F.constraints = {fields::linear(4, {{2, 1.0}, {0, -1.0}}), fields::linear(4, {{3, 1.0}, {1, -1.0}})};
    F.domain = Box::unbounded(2);
    F.sample_box = Box::cube(2, -3.0, 3.0);
    F.grade = grade::WeakUniform{[](const Vec&) { return Mat::Zero(4, 4).eval(); }};
    F.exact = true;
    F.lift = [](const Vec& x) { return x; };
    F.f_direct = [](const Vec& x) { return std::pow(x[0] - 1, 2) + std::pow(x[1] + 2, 2) + x.squaredNorm(); };
    P.partition.p = 2;
    P.partition.x_blocks = {{0}, {1}};
    P.partition.y_blocks = {{0}, {1}};
    P.partition.constraint_owner = {0, 1};
    return P;
}

Vec block_values(const Vec& w, const std::vector<Index>& vars)
{
    Vec z(static_cast<Index>(vars.size()));
    for (std::size_t a = 0; a < vars.size(); ++a) z[static_cast<Index>(a)] = w[vars[a]];
    return z;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("augmented lagrangian by hand")
{
    const CnForm F = square_with_target();
    const Partition Q = Partition::monolithic(F);
    const ScalarField A = augmented_lagrangian(F, Q, 0, Vec::Zero(2), Vec::Constant(1, 2.0), 4.0);
    REQUIRE(A.dim() == 2);
    CHECK(A(Vec::Zero(2)) == doctest::Approx(0.0));
    CHECK(A(Vec::Constant(2, 1.0)) == doctest::Approx(1.0));
    Rng rng(1);
    for (int t = 0; t < 10; ++t) {
        const Vec z = uniform_vector(rng, Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
        CHECK((A.gradient(z) - fd_gradient(A, z)).norm() < 1e-6);
    }
}

TEST_CASE("augmented lagrangian without owned constraints is g")
{
    const Vec w = (Vec(4) << 0.3, -0.7, 0.2, 0.1).finished();
    // constraint 1 reads block 1, so build a partition where block 1 owns nothing readable
    Problem S = separable();
    S.form.constraints = {S.form.constraints[0]};
    S.partition.constraint_owner = {0};
    const ScalarField A = augmented_lagrangian(S.form, S.partition, 1, w, Vec(), 7.0);
    const auto vars = block_coordinates(S.partition, 1, 2);
    Rng rng(2);
    for (int t = 0; t < 10; ++t) {
        const Vec z = uniform_vector(rng, Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
        Vec full = w;
        for (std::size_t a = 0; a < vars.size(); ++a) full[vars[a]] = z[static_cast<Index>(a)];
        CHECK(A(z) == doctest::Approx(S.form.objective(full)));
    }
}

TEST_CASE("ex43 block lagrangian against its written-out form")
{
    const double lam = 3.0, sigma = 5.0;
    const Index n = 5;
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, n, 1, lam));
    Rng rng(3);
    const Vec w = uniform_vector(rng, Vec::Constant(3 * n, -1.0), Vec::Constant(3 * n, 1.0));
    const Index j = 2;
    const Vec alpha = (Vec(3) << 0.5, -1.0, 2.0).finished();
    const ScalarField A = augmented_lagrangian(P.form, P.partition, j, w, alpha, sigma);
    const auto vars = block_coordinates(P.partition, j, n);
    REQUIRE(vars == std::vector<Index>{j, n + j, 2 * n + j});
    const Vec z = (Vec(3) << 0.4, 0.9, 0.3).finished();

    Vec full = w;
    full[j] = z[0];
    full[n + j] = z[1];
    full[2 * n + j] = z[2];
    double lin = -2.0 * n, reg = 0.0;
    for (Index i = 0; i < n; ++i) {
        lin += (i + 1) * full[i];
        reg += full[n + i] * full[n + i];
    }
    const double x = z[0], y = z[1], u = z[2];
    const double g1 = (x + y - 1) * (x + y - 1) - u, g2 = x * x - u + (y - 1) * (y - 1), g3 = y * y - y;
    const double want = lin * lin + lam * reg + alpha[0] * g1 + alpha[1] * g2 + alpha[2] * g3 +
                        0.5 * sigma * (g1 * g1 + g2 * g2 + g3 * g3);
    CHECK(A(z) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("overlap anchors add a consensus term")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex45, 10, 5));
    REQUIRE(!P.partition.overlap_links.empty());
    const OverlapLink link = P.partition.overlap_links[0];
    const Index j = link.later;
    Rng rng(4);
    const Vec w = uniform_vector(rng, Vec::Constant(P.form.dim(), -1.0), Vec::Constant(P.form.dim(), 1.0));
    const Vec alpha = Vec::Zero(static_cast<Index>(P.partition.constraints_of(j).size()));
    const double sigma = 7.0, xs = 0.25;
    const ScalarField A0 = augmented_lagrangian(P.form, P.partition, j, w, alpha, sigma);
    const ScalarField A1 = augmented_lagrangian(P.form, P.partition, j, w, alpha, sigma, {{link.coordinate, xs}});
    const auto vars = block_coordinates(P.partition, j, P.form.n);
    const Vec z = block_values(w, vars);
    CHECK(A1(z) - A0(z) == doctest::Approx(sigma * std::pow(xs - w[link.coordinate], 2)));
}

TEST_CASE("block index out of range")
{
    const Problem P = separable();
    try {
        augmented_lagrangian(P.form, P.partition, 2, Vec::Zero(4), Vec::Zero(1), 1.0);
        FAIL("expected BlockIndexOutOfRange");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BlockIndexOutOfRange);
    }
}

TEST_CASE("config validation")
{
    SolverConfig c;
    c.N = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.N = 10.0;
    c.eps = 0.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c.eps = 1e-4;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("multiplier update by hand")
{
    const CnForm F = square_with_target();
    const Partition Q = Partition::monolithic(F);
    SolverConfig cfg;
    cfg.w0 = (Vec(2) << 1.2, 0.0).finished();
    const SolverState s = initial_state(F, Q, cfg);
    REQUIRE(s.g_blocks[0][0] == doctest::Approx(0.2));
    REQUIRE(s.sigma == 5.0);
    const SolverState t = multiplier_update(s, F, Q, cfg);
    CHECK(t.alpha[0][0] == doctest::Approx(1.0));
    CHECK(t.sigma == 50.0);
    CHECK(t.k == 2);

    SolverConfig c0;
    c0.w0 = (Vec(2) << 1.0, 0.0).finished();
    c0.alpha0 = Vec::Constant(1, 3.0);
    const SolverState u = multiplier_update(initial_state(F, Q, c0), F, Q, c0);
    CHECK(u.alpha[0][0] == 3.0);
}

TEST_CASE("multiplier recurrence is exact and sigma grows by N until the cap")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, 10, 5, 10.0));
    SolverConfig cfg = config_for(P);
    cfg.sigma_cap = 2000.0;
    SolverState s = initial_state(P.form, P.partition, cfg);
    for (int k = 0; k < 4; ++k) {
        s = block_sweep(P.form, P.partition, s, cfg);
        const SolverState t = multiplier_update(s, P.form, P.partition, cfg);
        for (std::size_t j = 0; j < s.alpha.size(); ++j) {
            const Vec want = s.alpha[j] + s.sigma * s.g_blocks[j];
            CHECK((t.alpha[j].array() == want.array()).all());
        }
        CHECK(t.sigma == std::min(s.sigma * cfg.N, cfg.sigma_cap));
        s = t;
    }
    CHECK(s.sigma == 2000.0);
}

TEST_CASE("Gauss-Seidel sweep descends block by block")
{
    for (Index n : {5, 10}) {
        const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, n, 5, 10.0));
        const CnForm& F = P.form;
        SolverConfig cfg = config_for(P);
        Rng rng(static_cast<std::uint64_t>(n));
        Vec w = uniform_vector(rng, Vec::Constant(F.dim(), -1.0), Vec::Constant(F.dim(), 1.0));
        std::vector<Vec> alpha;
        for (Index j = 0; j < P.partition.p; ++j)
            alpha.push_back(Vec::Random(static_cast<Index>(P.partition.constraints_of(j).size())));
        for (double sigma : {5.0, 50.0}) {
            double prev = full_augmented_lagrangian(F, P.partition, w, alpha, sigma);
            for (Index j = 0; j < P.partition.p; ++j) {
                const auto vars = block_coordinates(P.partition, j, F.n);
                const ScalarField A = augmented_lagrangian(F, P.partition, j, w, alpha[static_cast<std::size_t>(j)], sigma);
                const InnerResult r = minimize_smooth(A, block_values(w, vars), cfg.inner);
                for (std::size_t a = 0; a < vars.size(); ++a) w[vars[a]] = r.x[static_cast<Index>(a)];
                const double now = full_augmented_lagrangian(F, P.partition, w, alpha, sigma);
                CHECK(now <= prev + 1e-12 * std::max(1.0, std::abs(prev)));
                prev = now;
            }
        }
    }
}

TEST_CASE("separable sweep is stationary per block")
{
    const Problem P = separable();
    SolverConfig cfg;
    cfg.w0 = Vec::Constant(4, 3.0);
    const SolverState s = block_sweep(P.form, P.partition, initial_state(P.form, P.partition, cfg), cfg);
    const Vec w = P.form.join(s.x, s.y);
    for (Index j = 0; j < 2; ++j) {
        CHECK(s.block_grad_norms[static_cast<std::size_t>(j)] <= 1e-8);
        const ScalarField A = augmented_lagrangian(P.form, P.partition, j, w, Vec::Zero(1), cfg.sigma1);
        CHECK(A.gradient(block_values(w, block_coordinates(P.partition, j, 2))).norm() <= 1e-8);
    }
}

TEST_CASE("monolithic sweep is one inner solve")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, 5, 5, 10.0));
    const Partition Q = Partition::monolithic(P.form);
    SolverConfig cfg;
    cfg.w0 = Vec::Constant(P.form.dim(), 0.5);
    const SolverState s0 = initial_state(P.form, Q, cfg);
    const SolverState s = block_sweep(P.form, Q, s0, cfg);
    const ScalarField A = augmented_lagrangian(P.form, Q, 0, cfg.w0, Vec::Zero(P.form.r()), cfg.sigma1);
    const InnerResult r = minimize_smooth(A, cfg.w0, cfg.inner);
    CHECK((P.form.join(s.x, s.y) - r.x).norm() == 0.0);
}

TEST_CASE("ex42 first sweep is stationary" * doctest::test_suite("solver_floor"))
{
    const Problem P = make_problem(fx::ex42(20000.0));
    const SolverConfig cfg = config_for(P);
    CHECK(cfg.sigma1 == 1000.0);
    const SolverState s = block_sweep(P.form, P.partition, initial_state(P.form, P.partition, cfg), cfg);
    for (double g : s.block_grad_norms) CHECK(g <= 1e-6);
}

TEST_CASE("ex42 solve")
{
    const Problem P = make_problem(fx::ex42(20000.0));
    const SolveReport r = solve(P.form, P.partition, config_for(P));
    CHECK(r.status == SolveStatus::Approximate);
    CHECK(r.iterations() <= 4);
    CHECK(r.final_state.x.norm() <= 5e-3);
    CHECK(r.final_state.residual < 1e-4);
    CHECK(std::isfinite(r.max_hk));
    CHECK(r.trace.back().residual == r.final_state.residual);
    const Verdict c = certify_solution(P.form, P.partition, r);
    CHECK(c.value <= 1e-2);
}

TEST_CASE("certificate residual is large away from stationarity")
{
    const Problem P = make_problem(fx::ex42(20000.0));
    const SolverConfig cfg = config_for(P);
    SolveReport r;
    r.final_state = initial_state(P.form, P.partition, cfg);
    CHECK(certify_solution(P.form, P.partition, r).value > 0.1);
}

TEST_CASE("Step 3 fires at an exact fixed point")
{
    const Problem P = separable();
    SolverConfig cfg;
    // stationary for A_j with alpha = (-1, 2) and any sigma
    cfg.w0 = (Vec(4) << 0.5, -1.0, 0.5, -1.0).finished();
    cfg.alpha0 = (Vec(2) << -1.0, 2.0).finished();
    const SolveReport r = solve(P.form, P.partition, cfg);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.iterations() == 1);
    const Verdict c = certify_solution(P.form, P.partition, r);
    CHECK(c.value <= 1e-6);
}

TEST_CASE("ex43 n = 5, lambda = 100 ends at zero")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, 5, 5, 100.0));
    const SolveReport r = solve(P.form, P.partition, config_for(P));
    CHECK(r.status == SolveStatus::Approximate);
    CHECK(count_nonzero(r.final_state.x) == 0);
}

TEST_CASE("ex44 n = 5 has equal coordinates")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex44, 5, 5));
    const SolveReport r = solve(P.form, P.partition, config_for(P));
    CHECK(r.status == SolveStatus::Approximate);
    const Vec& x = r.final_state.x;
    CHECK(x.maxCoeff() - x.minCoeff() <= 1e-3);
    CHECK(std::abs(*r.final_state.f_value) <= 1e-2);
}

TEST_CASE("iteration cap and sigma cap")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex43, 5, 5, 10.0));
    SolverConfig cfg = config_for(P);
    cfg.eps = 1e-300;
    cfg.max_outer = 2;
    const SolveReport a = solve(P.form, P.partition, cfg);
    CHECK(a.status == SolveStatus::MaxOuterIters);
    CHECK(a.iterations() == 2);
    cfg.max_outer = 30;
    cfg.sigma_cap = 50.0;
    const SolveReport b = solve(P.form, P.partition, cfg);
    CHECK(b.status == SolveStatus::Diverged);
}

TEST_CASE("solve is deterministic")
{
    const Problem P = make_problem(fx::block_problem(ProblemName::Ex45, 10, 5));
    const SolveReport a = solve(P.form, P.partition, config_for(P));
    const SolveReport b = solve(P.form, P.partition, config_for(P));
    CHECK((a.final_state.x.array() == b.final_state.x.array()).all());
    CHECK(a.iterations() == b.iterations());
}

}
