#include "fixtures.hpp"

#include "cnopt/convex_inner.hpp"
#include "cnopt/errors.hpp"

#include <doctest.h>

using namespace cnopt;

namespace {

ScalarField rosenbrock()
{
    return fields::sum({fields::affine_square(2, {{0, -1.0}}, 1.0),
                        fields::polynomial(2, {{100.0, {{1, 2}}}, {-200.0, {{0, 2}, {1, 1}}}, {100.0, {{0, 4}}}})});
}

Mat row(std::initializer_list<double> v)
{
    Mat A(1, static_cast<Index>(v.size()));
    Index k = 0;
    for (double a : v) A(0, k++) = a;
    return A;
}

}  // namespace

TEST_SUITE("convex_inner") {

TEST_CASE("minimize_smooth on a round bowl")
{
    const ScalarField f = fields::polynomial(2, {{1.0, {{0, 2}}}, {1.0, {{1, 2}}}});
    const InnerResult r = minimize_smooth(f, (Vec(2) << 3, 4).finished());
    CHECK(r.value <= 1e-12);
    CHECK(r.x.norm() < 1e-6);
    CHECK(r.grad_norm <= 1e-8);
}

TEST_CASE("minimize_smooth on a flat valley")
{
    const ScalarField f = fields::affine_square(2, {{0, 1.0}, {1, 1.0}}, -1.0);
    const InnerResult r = minimize_smooth(f, Vec::Zero(2));
    CHECK(r.value <= 1e-12);
    CHECK(std::abs(r.x.sum() - 1.0) < 1e-6);
}

TEST_CASE("minimize_smooth on rosenbrock")
{
    const ScalarField f = rosenbrock();
    const Vec x0 = (Vec(2) << -1.2, 1).finished();
    const InnerResult r = minimize_smooth(f, x0);
    CHECK((r.x - Vec::Ones(2)).norm() < 1e-4);
    CHECK(r.value <= f(x0));
    CHECK(fd_gradient(f, r.x).norm() < 1e-5);
}

TEST_CASE("minimize_smooth never increases the value")
{
    Rng rng(1);
    const ScalarField f = fields::polynomial(3, {{1.0, {{0, 4}}}, {1.0, {{1, 4}}}, {1.0, {{0, 1}, {2, 1}}}, {1.0, {{2, 2}}}, {-3.0, {{1, 1}}}});
    for (int t = 0; t < 20; ++t) {
        const Vec x0 = uniform_vector(rng, Vec::Constant(3, -3.0), Vec::Constant(3, 3.0));
        for (int iters : {1, 2, 5, 50}) {
            InnerConfig cfg;
            cfg.max_iters = iters;
            cfg.newton_polish_iters = 0;
            CHECK(minimize_smooth(f, x0, cfg).value <= f(x0));
        }
    }
}

TEST_CASE("minimize_smooth reports a field unbounded below")
{
    const ScalarField f = fields::linear(1, {{0, -1.0}});
    CHECK_THROWS_AS(minimize_smooth(f, Vec::Zero(1)), Error);
}

TEST_CASE("cone qp with zero linear term")
{
    Rng rng(2);
    const Mat A = Mat::Random(3, 4);
    const Mat L = Mat::Random(4, 4);
    const ConeQpResult r = solve_cone_qp(Vec::Zero(4), L * L.transpose(), A);
    CHECK(r.status == ConeQpStatus::Optimal);
    CHECK(r.d_star.norm() < 1e-8);
    CHECK(std::abs(r.value) < 1e-12);
}

TEST_CASE("cone qp in one dimension")
{
    const ConeQpResult r = solve_cone_qp(Vec::Constant(1, -1.0), Mat::Ones(1, 1), row({-1.0}));
    REQUIRE(r.status == ConeQpStatus::Optimal);
    CHECK(r.d_star[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.value == doctest::Approx(-0.5).epsilon(1e-8));
}

TEST_CASE("cone qp detects a recession ray")
{
    const ConeQpResult r = solve_cone_qp(Vec::Constant(1, -1.0), Mat::Zero(1, 1), row({-1.0}));
    REQUIRE(r.status == ConeQpStatus::Unbounded);
    REQUIRE(r.direction);
    CHECK((*r.direction)[0] > 0.0);
}

TEST_CASE("cone qp kkt and complementarity on random instances")
{
    for (int t = 0; t < 20; ++t) {
        std::srand(static_cast<unsigned>(100 + t));
        const Mat A = Mat::Random(3, 4);
        const Mat L = Mat::Random(4, 4);
        const Mat B = L * L.transpose() + 0.1 * Mat::Identity(4, 4);
        const Vec q = Vec::Random(4);
        const ConeQpResult r = solve_cone_qp(q, B, A);
        REQUIRE(r.status == ConeQpStatus::Optimal);
        const Vec Ad = A * r.d_star;
        CHECK(Ad.maxCoeff() <= 1e-8);
        CHECK(r.multipliers.minCoeff() >= -1e-12);
        CHECK((B * r.d_star + q + A.transpose() * r.multipliers).norm() <= 1e-6);
        CHECK(r.multipliers.cwiseProduct(Ad).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(r.value == doctest::Approx(q.dot(r.d_star) + 0.5 * r.d_star.dot(B * r.d_star)));
    }
}

TEST_CASE("cone qp refuses an indefinite curvature matrix")
{
    Mat B = Mat::Identity(2, 2);
    B(1, 1) = -1.0;
    try {
        solve_cone_qp(Vec::Ones(2), B, row({1.0, 0.0}));
        FAIL("expected NotPsd");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotPsd);
    }
}

TEST_CASE("cone lp certificate")
{
    CHECK(cone_lp_certificate(Vec::Constant(1, 1.0), row({-1.0})).certified());
    const Verdict v = cone_lp_certificate(Vec::Constant(1, -1.0), row({-1.0}));
    REQUIRE(v.refuted());
    CHECK((*v.witness)[0] > 0.0);
}

TEST_CASE("cone lp verdict is scale invariant and never certifies a negative value")
{
    for (int t = 0; t < 50; ++t) {
        std::srand(static_cast<unsigned>(7 + t));
        const Mat A = Mat::Random(2, 3);
        const Vec q = Vec::Random(3);
        const Verdict a = cone_lp_certificate(q, A);
        const Verdict b = cone_lp_certificate(2.0 * q, A);
        CHECK(a.kind == b.kind);
        if (a.certified()) {
            CHECK(a.value >= tol::kVerdictZero);
        } else {
            REQUIRE(a.witness);
            CHECK(q.dot(*a.witness) < 0.0);
            CHECK((A * *a.witness).maxCoeff() <= 1e-9);
        }
    }
}

TEST_CASE("solve_qp box constrained")
{
    // min 0.5|x|^2 - x1 - x2  s.t. x1 + x2 <= 1
    const QpResult r = solve_qp(Mat::Identity(2, 2), -Vec::Ones(2), Mat::Ones(1, 2), Vec::Constant(1, -1e20),
                                Vec::Constant(1, 1.0));
    CHECK(r.status == QpStatus::Solved);
    CHECK(r.x[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.x[1] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(r.y[0] == doctest::Approx(0.5).epsilon(1e-6));
}

}
