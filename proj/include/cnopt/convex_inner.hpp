#pragma once

#include "cnopt/cn_form.hpp"

#include <optional>

namespace cnopt {

struct InnerConfig {
    double tol_grad = 1e-8;
    int max_iters = 5000;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    int memory = 10;
    /// Damped Newton steps tried after L-BFGS stops short of tol_grad
    /// (only when the field has a Hessian-vector product and dim <= newton_max_dim).
    int newton_polish_iters = 50;
    Index newton_max_dim = 400;
};

enum class InnerStatus { Converged, MaxIters, Stalled };

std::string to_string(InnerStatus s);

struct InnerResult {
    Vec x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    InnerStatus status = InnerStatus::Converged;
};

/// L-BFGS with Armijo backtracking. Stalled means no representable decrease
/// remains although grad_norm > tol_grad. Throws LineSearchFailed on a
/// non-descent direction that survives a steepest-descent reset, or when the
/// field runs off to -infinity.
InnerResult minimize_smooth(const ScalarField& field, const Vec& x0, const InnerConfig& cfg = {});

/// Dense convex QP: min 0.5 x'Px + q'x  s.t.  l <= Cx <= u  (l_i = u_i for equalities).
struct QpSettings {
    double eps_abs = 1e-10;
    double eps_rel = 1e-10;
    int max_iters = 20000;
    double rho = 0.1;
    double sigma = 1e-6;
    double relax = 1.6;
    bool polish = true;
};

enum class QpStatus { Solved, MaxIters };

struct QpResult {
    Vec x;
    /// Constraint multipliers: positive on active upper bounds, negative on lower.
    Vec y;
    double value = 0.0;
    QpStatus status = QpStatus::Solved;
    int iterations = 0;
    bool polished = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

QpResult solve_qp(const Mat& P, const Vec& q, const Mat& C, const Vec& l, const Vec& u, const QpSettings& s = {});

enum class ConeQpStatus { Optimal, Unbounded, MaxIters };

std::string to_string(ConeQpStatus s);

struct ConeQpResult {
    Vec d_star;
    double value = 0.0;
    Vec multipliers;
    ConeQpStatus status = ConeQpStatus::Optimal;
    /// Recession direction with Ad <= 0, Bd = 0, q'd < 0 when Unbounded.
    std::optional<Vec> direction;
};

/// min q'd + 0.5 d'Bd over {Ad <= 0, |d|_inf <= trust_radius}, after a
/// recession test on {Ad <= 0, Bd = 0, |d|_inf <= 1}.
ConeQpResult solve_cone_qp(const Vec& q, const Mat& B, const Mat& A, double trust_radius = 1e3);

/// Optimal value of min q'd over {Ad <= 0, Ed = 0, |d|_inf <= 1}, with q
/// normalized to unit length; returns (value, argmin).
std::pair<double, Vec> cone_lp(const Vec& q, const Mat& A, const Mat& E);

/// Certified when the unit-normalized cone LP value is >= -1e-9; Refuted with a
/// descent ray otherwise.
Verdict cone_lp_certificate(const Vec& q, const Mat& A);

/// Smallest eigenvalue check; throws NotPsd when below -tol * max(1, |B|).
void require_psd(const Mat& B, double tol = 1e-10);

}  // namespace cnopt
