#pragma once

#include "cnopt/cn_form.hpp"
#include "cnopt/combinators.hpp"
#include "cnopt/problems.hpp"
#include "cnopt/random.hpp"

#include <cmath>

namespace fx {

using namespace cnopt;

// 2 x1 x2 = (x1 + x2)^2 - y1 - y2 with y1 = x1^2, y2 = x2^2
inline CnForm two_x1x2()
{
    CnForm F;
    F.name = "2x1x2";
    F.n = 2;
    F.m = 2;
    F.objective = fields::sum({fields::affine_square(4, {{0, 1.0}, {1, 1.0}}, 0.0), fields::linear(4, {{2, -1.0}, {3, -1.0}})});
    F.constraints = {fields::polynomial(4, {{1.0, {{0, 2}}}, {-1.0, {{2, 1}}}}),
                     fields::polynomial(4, {{1.0, {{1, 2}}}, {-1.0, {{3, 1}}}})};
    F.domain = Box::unbounded(2);
    F.sample_box = Box::cube(2, -3.0, 3.0);
    F.grade = grade::WeakUniform{[](const Vec&) {
        Mat B = Mat::Zero(4, 4);
        B.topLeftCorner(2, 2).setConstant(2.0);
        return B;
    }};
    F.exact = true;
    F.lift = [](const Vec& x) { return Vec(x.cwiseAbs2()); };
    F.f_direct = [](const Vec& x) { return 2.0 * x[0] * x[1]; };
    F.y_names = {"y1", "y2"};
    return F;
}

// f(x) = x + c as [x + c : 0 * y]
inline CnForm affine1(double c)
{
    return trivial_form(fields::linear(1, {{0, 1.0}}, c), "affine");
}

inline ProblemSpec ex42(double lambda)
{
    ProblemSpec s;
    s.name = ProblemName::Ex42;
    s.lambda = lambda;
    return s;
}

// zero-norm least squares with A = (1 1), b = 1
inline ProblemSpec ex9(double lambda)
{
    ProblemSpec s;
    s.name = ProblemName::ZeroNormLs;
    s.n = 2;
    s.e = 1;
    s.lambda = lambda;
    s.A = Mat::Ones(1, 2);
    s.b = Vec::Ones(1);
    return s;
}

inline ProblemSpec block_problem(ProblemName name, Index n, Index e, double lambda = 1.0)
{
    ProblemSpec s;
    s.name = name;
    s.n = n;
    s.e = e;
    s.lambda = lambda;
    return s;
}

inline Vec random_in(Rng& rng, const Box& box)
{
    return uniform_vector(rng, box.lower, box.upper);
}

inline double rel_err(double a, double b)
{
    return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace fx
