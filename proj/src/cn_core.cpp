#include "cnopt/cn_form.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/random.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cnopt {

Box Box::cube(Index dim, double lo, double hi)
{
    return Box{Vec::Constant(dim, lo), Vec::Constant(dim, hi)};
}

Box Box::unbounded(Index dim)
{
    const double inf = std::numeric_limits<double>::infinity();
    return Box{Vec::Constant(dim, -inf), Vec::Constant(dim, inf)};
}

bool Box::contains(const Vec& x, double slack) const
{
    if (x.size() != dim()) return false;
    for (Index i = 0; i < x.size(); ++i)
        if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
    return true;
}

bool Box::finite() const
{
    return lower.allFinite() && upper.allFinite();
}

Box Box::intersect(const Box& other) const
{
    if (other.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "box dimensions differ");
    return Box{lower.cwiseMax(other.lower), upper.cwiseMin(other.upper)};
}

int grade_rank(const ConvexityGrade& g)
{
    return static_cast<int>(g.index());
}

std::string grade_name(const ConvexityGrade& g)
{
    switch (g.index()) {
    case 0: return "Plain";
    case 1: return "WeakUniform";
    case 2: return "StrongUniform";
    default: return "Uniform";
    }
}

std::optional<Mat> curvature_matrix(const ConvexityGrade& g, const Vec& w, Index dim)
{
    if (const auto* wu = std::get_if<grade::WeakUniform>(&g)) return wu->B(w);
    if (const auto* su = std::get_if<grade::StrongUniform>(&g)) return su->B(w);
    if (const auto* u = std::get_if<grade::Uniform>(&g)) return Mat(u->rho_bar * Mat::Identity(dim, dim));
    return std::nullopt;
}

Vec CnForm::join(const Vec& x, const Vec& y) const
{
    if (x.size() != n || y.size() != m) throw Error(ErrorCode::DimensionMismatch, "join: bad x/y sizes");
    Vec w(n + m);
    w << x, y;
    return w;
}

std::vector<Vec> CnForm::branches(const Vec& x, std::span<const Index> focus) const
{
    if (lift_branches) return lift_branches(x, focus);
    if (!lift) throw Error(ErrorCode::NoLift, "form '" + name + "' has no lift");
    return {lift(x)};
}

std::vector<Vec> CnForm::all_branches(const Vec& x) const
{
    std::vector<Index> all(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    return branches(x, all);
}

void CnForm::validate() const
{
    if (n <= 0 || m < 0) throw Error(ErrorCode::BadSpec, "form dimensions must satisfy n >= 1, m >= 0");
    if (constraints.empty()) throw Error(ErrorCode::BadSpec, "a CN form needs at least one constraint");
    if (!objective.valid() || objective.dim() != dim())
        throw Error(ErrorCode::DimensionMismatch, "objective dimension differs from n + m");
    for (const auto& c : constraints)
        if (!c.valid() || c.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "constraint dimension differs from n + m");
    for (const auto& c : ineq_constraints)
        if (!c.valid() || c.dim() != dim()) throw Error(ErrorCode::DimensionMismatch, "inequality dimension differs from n + m");
    if (domain.dim() != n || sample_box.dim() != n) throw Error(ErrorCode::DimensionMismatch, "box dimension differs from n");
    if (!lift) throw Error(ErrorCode::NoLift, "form '" + name + "' has no lift");
    if (const auto* u = std::get_if<grade::Uniform>(&grade); u && !(u->rho_bar > 0.0))
        throw Error(ErrorCode::BadSpec, "uniform grade needs rho_bar > 0");
}

std::string to_string(VerdictKind k)
{
    switch (k) {
    case VerdictKind::Certified: return "Certified";
    case VerdictKind::Inconclusive: return "Inconclusive";
    case VerdictKind::Refuted: return "Refuted";
    }
    return "Unknown";
}

Vec equality_residuals(const CnForm& form, const Vec& w)
{
    Vec r(form.r());
    for (Index i = 0; i < form.r(); ++i) r[i] = form.constraints[static_cast<std::size_t>(i)](w);
    return r;
}

Residual constraint_residual(const CnForm& form, const Vec& x, const Vec& y)
{
    const Vec w = form.join(x, y);
    const auto r = form.r();
    const auto q = static_cast<Index>(form.ineq_constraints.size());
    Residual out;
    out.values.resize(r + q);
    out.values.head(r) = equality_residuals(form, w);
    for (Index j = 0; j < q; ++j) out.values[r + j] = std::max(form.ineq_constraints[static_cast<std::size_t>(j)](w), 0.0);
    out.norm = out.values.norm();
    return out;
}

Vec lift(const CnForm& form, const Vec& x)
{
    if (!form.lift) throw Error(ErrorCode::NoLift, "form '" + form.name + "' has no lift");
    if (x.size() != form.n) throw Error(ErrorCode::DimensionMismatch, "lift: x has wrong size");
    Vec y = form.lift(x);
    if (y.size() != form.m) throw Error(ErrorCode::DimensionMismatch, "lift returned wrong size");
    const auto res = constraint_residual(form, x, y);
    const double worst = res.values.size() ? res.values.cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(worst) || worst > tol::kLiftError) {
        std::ostringstream os;
        os << "lift of form '" << form.name << "' misses X(g) by " << worst;
        throw Error(ErrorCode::LiftInfeasible, os.str());
    }
    return y;
}

double eval_f_via_form(const CnForm& form, const Vec& x)
{
    return form.objective(form.join(x, lift(form, x)));
}

namespace {

Box finite_sample_box(const CnForm& form)
{
    Box b = form.sample_box;
    for (Index i = 0; i < b.dim(); ++i) {
        if (!std::isfinite(b.lower[i])) b.lower[i] = -1.0;
        if (!std::isfinite(b.upper[i])) b.upper[i] = 1.0;
    }
    return b;
}

}  // namespace

Verdict check_weak_uniform(const CnForm& form, int samples, std::uint64_t seed)
{
    if (grade_rank(form.grade) == 0) throw Error(ErrorCode::GradeMismatch, "form has no curvature bound to check");
    if (!form.objective.has_hess_vec()) throw Error(ErrorCode::MissingHessian, "objective has no Hessian-vector product");
    const Index d = form.dim();
    const Box box = finite_sample_box(form);

    for (int s = 0; s < samples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        const Vec x = uniform_vector(rng, box.lower, box.upper);
        Vec y = form.lift ? form.lift(x) : Vec::Zero(form.m);
        const Vec noise = uniform_vector(rng, Vec::Constant(form.m, -1.0), Vec::Constant(form.m, 1.0));
        y += noise.cwiseProduct(y.cwiseAbs().cwiseMax(1.0));
        const Vec w = form.join(x, y);
        const Mat B = *curvature_matrix(form.grade, w, d);

        // The worst eigen-direction of H - B, then a random one.
        const Vec rnd = unit_sphere_vector(rng, d);
        const Mat H = dense_hessian(form.objective, w);
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * ((H - B) + (H - B).transpose()));
        const std::vector<Vec> dirs{es.eigenvectors().col(0), rnd};
        Eigen::SelfAdjointEigenSolver<Mat> eb(0.5 * (B + B.transpose()));

        if (eb.eigenvalues()[0] < -1e-10) {
            Verdict v;
            v.kind = VerdictKind::Refuted;
            v.witness = w;
            v.value = eb.eigenvalues()[0];
            v.detail = "curvature matrix B is not positive semidefinite";
            return v;
        }
        for (const Vec& dir : dirs) {
            const double lhs = dir.dot(form.objective.hess_vec(w, dir));
            const double rhs = dir.dot(B * dir);
            if (lhs < rhs - 1e-8) {
                Verdict v;
                v.kind = VerdictKind::Refuted;
                Vec wit(2 * d);
                wit << w, dir;
                v.witness = wit;
                v.value = lhs - rhs;
                v.detail = "d'Hd < d'Bd at the witness (first half: point, second half: direction)";
                return v;
            }
        }
    }
    Verdict v;
    v.kind = VerdictKind::Inconclusive;
    v.value = 0.0;
    v.detail = "no sample violated the curvature bound";
    return v;
}

}  // namespace cnopt
