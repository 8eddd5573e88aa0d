#pragma once

#include "cnopt/scalar_field.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace cnopt {

namespace tol {
/// Membership in X(g): every constraint residual at most this.
inline constexpr double kMembership = 1e-8;
/// Value identities such as f(x) == g(x, lift(x)).
inline constexpr double kValue = 1e-6;
/// A lift whose residual exceeds this signals a broken problem definition.
inline constexpr double kLiftError = 1e-6;
/// Numerical zero for ">= 0" certificate tests.
inline constexpr double kVerdictZero = -1e-9;
/// Strict negativity for K-set witnesses.
inline constexpr double kWitness = -1e-10;
}  // namespace tol

/// Axis-aligned box; infinite bounds allowed.
struct Box {
    Vec lower;
    Vec upper;

    static Box cube(Index dim, double lo, double hi);
    static Box unbounded(Index dim);

    Index dim() const { return lower.size(); }
    bool contains(const Vec& x, double slack = 0.0) const;
    bool finite() const;
    Box intersect(const Box& other) const;
};

/// Returns the lower-curvature matrix B(x, y) used in the weak uniform inequality.
using BProvider = std::function<Mat(const Vec& w)>;

namespace grade {
struct Plain {};
struct WeakUniform {
    BProvider B;
};
struct StrongUniform {
    BProvider B;
};
struct Uniform {
    double rho_bar = 0.0;
};
}  // namespace grade

using ConvexityGrade = std::variant<grade::Plain, grade::WeakUniform, grade::StrongUniform, grade::Uniform>;

/// 0 = Plain, 1 = WeakUniform, 2 = StrongUniform, 3 = Uniform.
int grade_rank(const ConvexityGrade& g);
std::string grade_name(const ConvexityGrade& g);

/// B(w) for weak/strong grades, rho_bar * I for Uniform, nullopt for Plain.
std::optional<Mat> curvature_matrix(const ConvexityGrade& g, const Vec& w, Index dim);

using LiftFn = std::function<Vec(const Vec& x)>;
/// All lift branches of x whose non-minimizing choices are restricted to the
/// x-coordinates listed in `focus`; other coordinates use the minimizing branch.
using BranchFn = std::function<std::vector<Vec>(const Vec& x, std::span<const Index> focus)>;
using DirectFn = std::function<double(const Vec& x)>;

/// A lifted convex representation [g : g_1, ..., g_r] of a nonconvex f over
/// w = (x, y) in R^{n+m}.
struct CnForm {
    std::string name;
    Index n = 0;
    Index m = 0;
    ScalarField objective;
    std::vector<ScalarField> constraints;
    /// Each required <= 0; encodes the set S beyond plain coordinate bounds.
    std::vector<ScalarField> ineq_constraints;
    /// Bounds on x (the x-part of S).
    Box domain;
    /// Finite x-region used by sampling checks and searches.
    Box sample_box;
    ConvexityGrade grade = grade::Plain{};
    bool exact = false;
    LiftFn lift;
    BranchFn lift_branches;
    DirectFn f_direct;
    std::vector<std::string> y_names;

    Index dim() const { return n + m; }
    Index r() const { return static_cast<Index>(constraints.size()); }
    Vec join(const Vec& x, const Vec& y) const;
    Vec x_part(const Vec& w) const { return w.head(n); }
    Vec y_part(const Vec& w) const { return w.tail(m); }

    /// lift_branches when provided, otherwise {lift(x)}.
    std::vector<Vec> branches(const Vec& x, std::span<const Index> focus) const;
    std::vector<Vec> all_branches(const Vec& x) const;

    /// Structural checks: dimensions, r >= 1, lift present.
    void validate() const;
};

enum class VerdictKind { Certified, Inconclusive, Refuted };

std::string to_string(VerdictKind k);

struct Verdict {
    VerdictKind kind = VerdictKind::Inconclusive;
    /// Counterexample point (x, y) or direction, when Refuted / descent found.
    std::optional<Vec> witness;
    double value = std::numeric_limits<double>::quiet_NaN();
    std::string detail;

    bool certified() const { return kind == VerdictKind::Certified; }
    bool refuted() const { return kind == VerdictKind::Refuted; }
};

struct Residual {
    /// Equality residuals g_i(x, y) followed by hinge values max{h_j, 0}.
    Vec values;
    double norm = 0.0;
};

Residual constraint_residual(const CnForm& form, const Vec& x, const Vec& y);

/// Equality residuals only.
Vec equality_residuals(const CnForm& form, const Vec& w);

/// y in Y_g(x) minimizing g(x, .); throws LiftInfeasible when the supplied
/// lift misses X(g) by more than the lift tolerance.
Vec lift(const CnForm& form, const Vec& x);

/// f(x) = g(x, lift(x)).
double eval_f_via_form(const CnForm& form, const Vec& x);

/// Sampling test of d' Hess g d >= d' B d at random (x, y, d). Refuted when the
/// inequality (or PSD-ness of B) fails at a sample; Inconclusive otherwise.
Verdict check_weak_uniform(const CnForm& form, int samples, std::uint64_t seed);

}  // namespace cnopt
