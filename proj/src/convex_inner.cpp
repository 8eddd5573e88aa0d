#include "cnopt/convex_inner.hpp"

#include "cnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace cnopt {

std::string to_string(InnerStatus s)
{
    switch (s) {
    case InnerStatus::Converged: return "Converged";
    case InnerStatus::MaxIters: return "MaxIters";
    case InnerStatus::Stalled: return "Stalled";
    }
    return "Unknown";
}

std::string to_string(ConeQpStatus s)
{
    switch (s) {
    case ConeQpStatus::Optimal: return "Optimal";
    case ConeQpStatus::Unbounded: return "Unbounded";
    case ConeQpStatus::MaxIters: return "MaxIters";
    }
    return "Unknown";
}

namespace {

constexpr double kUnboundedValue = -1e100;

struct Pair {
    Vec s;
    Vec y;
    double rho;
};

Vec two_loop(const std::deque<Pair>& mem, const Vec& g)
{
    Vec q = -g;
    std::vector<double> a(mem.size());
    for (std::size_t i = mem.size(); i-- > 0;) {
        a[i] = mem[i].rho * mem[i].s.dot(q);
        q -= a[i] * mem[i].y;
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double b = mem[i].rho * mem[i].y.dot(q);
        q += (a[i] - b) * mem[i].s;
    }
    return q;
}

void check_unbounded(double f, const Vec& x)
{
    if (f < kUnboundedValue || !x.allFinite() || x.cwiseAbs().maxCoeff() > 1e150)
        throw Error(ErrorCode::LineSearchFailed, "objective appears unbounded below");
}

// Linear decrease that persists out to huge step lengths along -g.
void check_descent_ray(const ScalarField& field, const Vec& x, double f, const Vec& g)
{
    const double gn = g.norm();
    if (!(gn > 0.0)) return;
    const Vec u = -g / gn;
    for (double t : {1e3, 1e6, 1e9}) {
        const double ft = field(x + t * u);
        if (std::isfinite(ft) && ft <= f - 0.5 * t * gn) continue;
        return;
    }
    throw Error(ErrorCode::LineSearchFailed, "objective decreases without bound along the steepest-descent ray");
}

/// Damped Newton from x; accepts steps that do not increase f beyond rounding
/// and reduce the gradient.
void newton_polish(const ScalarField& field, const InnerConfig& cfg, InnerResult& r)
{
    const Index d = r.x.size();
    Vec g = field.gradient(r.x);
    double f = r.value;
    double mu = 0.0;
    for (int it = 0; it < cfg.newton_polish_iters && g.norm() > cfg.tol_grad; ++it) {
        const Mat H = dense_hessian(field, r.x);
        const double hscale = std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        bool moved = false;
        for (int attempt = 0; attempt < 12 && !moved; ++attempt) {
            Eigen::LDLT<Mat> ldlt(H + mu * hscale * Mat::Identity(d, d));
            Vec p = ldlt.solve(-g);
            if (ldlt.info() != Eigen::Success || !p.allFinite() || g.dot(p) >= 0.0) {
                mu = std::max(1e-12, mu * 100.0);
                continue;
            }
            double t = 1.0;
            for (int ls = 0; ls < 40; ++ls, t *= cfg.backtrack) {
                const Vec xn = r.x + t * p;
                const double fn = field(xn);
                if (!std::isfinite(fn)) continue;
                const bool armijo = fn <= f + cfg.armijo_c * t * g.dot(p);
                const bool flat = fn <= f + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f);
                if (armijo || flat) {
                    const Vec gn = field.gradient(xn);
                    if (armijo || gn.norm() < g.norm()) {
                        r.x = xn;
                        f = fn;
                        g = gn;
                        moved = true;
                        break;
                    }
                }
            }
            if (!moved) mu = std::max(1e-12, mu * 100.0);
            else mu *= 0.1;
        }
        ++r.iterations;
        if (!moved) break;
    }
    r.value = f;
    r.grad_norm = g.norm();
    if (r.grad_norm <= cfg.tol_grad) r.status = InnerStatus::Converged;
}

}  // namespace

InnerResult minimize_smooth(const ScalarField& field, const Vec& x0, const InnerConfig& cfg)
{
    if (x0.size() != field.dim()) throw Error(ErrorCode::DimensionMismatch, "minimize_smooth: x0 has wrong size");
    InnerResult r;
    r.x = x0;
    r.value = field(x0);
    if (!std::isfinite(r.value)) throw Error(ErrorCode::LineSearchFailed, "objective is not finite at the start point");
    Vec g = field.gradient(r.x);
    std::deque<Pair> mem;
    r.status = InnerStatus::MaxIters;

    for (r.iterations = 0; r.iterations < cfg.max_iters; ++r.iterations) {
        const double gn = g.norm();
        if (!std::isfinite(gn)) throw Error(ErrorCode::LineSearchFailed, "gradient is not finite");
        if (gn <= cfg.tol_grad) {
            r.status = InnerStatus::Converged;
            break;
        }
        Vec d = two_loop(mem, g);
        if (!(g.dot(d) < 0.0)) {
            mem.clear();
            d = -g;
        }
        double t = mem.empty() ? std::min(1.0, 1.0 / gn) : 1.0;
        if (mem.empty() && r.iterations > 0) t = 1.0 / gn;

        bool accepted = false;
        Vec xn;
        double fn = 0.0;
        for (int ls = 0; ls < 80; ++ls, t *= cfg.backtrack) {
            xn = r.x + t * d;
            if (xn == r.x) break;
            fn = field(xn);
            if (std::isfinite(fn) && fn <= r.value + cfg.armijo_c * t * g.dot(d)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (!mem.empty()) {
                mem.clear();
                continue;
            }
            r.status = InnerStatus::Stalled;
            break;
        }
        check_unbounded(fn, xn);
        const Vec gnew = field.gradient(xn);
        Vec s = xn - r.x;
        Vec y = gnew - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
            mem.push_back({std::move(s), std::move(y), 1.0 / sy});
            if (static_cast<int>(mem.size()) > cfg.memory) mem.pop_front();
        }
        r.x = xn;
        r.value = fn;
        g = gnew;
    }
    r.grad_norm = g.norm();

    if (r.status != InnerStatus::Converged) check_descent_ray(field, r.x, r.value, g);
    if (r.status != InnerStatus::Converged && field.has_hess_vec() && field.dim() <= cfg.newton_max_dim &&
        cfg.newton_polish_iters > 0)
        newton_polish(field, cfg, r);
    return r;
}

void require_psd(const Mat& B, double tol)
{
    if (B.rows() != B.cols()) throw Error(ErrorCode::DimensionMismatch, "B must be square");
    if (B.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
    if (es.eigenvalues()[0] < -tol * scale)
        throw Error(ErrorCode::NotPsd, "matrix has eigenvalue " + std::to_string(es.eigenvalues()[0]));
}

namespace {

double inf_norm(const Vec& v)
{
    return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
}

double qp_value(const Mat& P, const Vec& q, const Vec& x)
{
    return 0.5 * x.dot(P * x) + q.dot(x);
}

struct PolishCheck {
    bool ok = false;
    Vec x;
    Vec y;
};

PolishCheck try_polish(const Mat& P, const Vec& q, const Mat& C, const Vec& l, const Vec& u,
                       const std::vector<int>& side)
{
    // side: -1 lower active, +1 upper active, 2 equality, 0 inactive.
    const Index n = P.rows();
    std::vector<Index> act;
    for (std::size_t i = 0; i < side.size(); ++i)
        if (side[i] != 0) act.push_back(static_cast<Index>(i));
    const Index k = static_cast<Index>(act.size());
    Mat CA(k, n);
    Vec b(k);
    for (Index a = 0; a < k; ++a) {
        const Index i = act[static_cast<std::size_t>(a)];
        CA.row(a) = C.row(i);
        b[a] = side[static_cast<std::size_t>(i)] == -1 ? l[i] : u[i];
    }
    const double delta = 1e-9;
    Mat K = Mat::Zero(n + k, n + k);
    K.topLeftCorner(n, n) = P;
    K.topRightCorner(n, k) = CA.transpose();
    K.bottomLeftCorner(k, n) = CA;
    Mat Kreg = K;
    Kreg.topLeftCorner(n, n) += delta * Mat::Identity(n, n);
    Kreg.bottomRightCorner(k, k) -= delta * Mat::Identity(k, k);
    Vec rhs(n + k);
    rhs << -q, b;
    Eigen::PartialPivLU<Mat> lu(Kreg);
    Vec sol = lu.solve(rhs);
    for (int ref = 0; ref < 25; ++ref) {
        const Vec res = rhs - K * sol;
        if (inf_norm(res) < 1e-14) break;
        sol += lu.solve(res);
    }
    PolishCheck out;
    if (!sol.allFinite()) return out;
    out.x = sol.head(n);
    out.y = Vec::Zero(C.rows());
    for (Index a = 0; a < k; ++a) out.y[act[static_cast<std::size_t>(a)]] = sol[n + a];

    const Vec Cx = C * out.x;
    const double scale = 1.0 + inf_norm(out.x);
    for (Index i = 0; i < C.rows(); ++i) {
        if (Cx[i] > u[i] + 1e-9 * scale || Cx[i] < l[i] - 1e-9 * scale) return out;
        const int sd = side[static_cast<std::size_t>(i)];
        if (sd == 1 && out.y[i] < -1e-9) return out;
        if (sd == -1 && out.y[i] > 1e-9) return out;
    }
    const Vec stat = P * out.x + q + C.transpose() * out.y;
    if (inf_norm(stat) > 1e-9 * (1.0 + inf_norm(q))) return out;
    out.ok = true;
    return out;
}

}  // namespace

QpResult solve_qp(const Mat& P, const Vec& q, const Mat& C, const Vec& l, const Vec& u, const QpSettings& s)
{
    const Index n = P.rows();
    const Index mc = C.rows();
    if (P.cols() != n || q.size() != n || C.cols() != n || l.size() != mc || u.size() != mc)
        throw Error(ErrorCode::DimensionMismatch, "solve_qp: inconsistent dimensions");

    Vec rho(mc);
    auto set_rho = [&](double base) {
        for (Index i = 0; i < mc; ++i) {
            if (std::isinf(l[i]) && std::isinf(u[i])) rho[i] = 1e-6;
            else if (u[i] - l[i] < 1e-12) rho[i] = 1e3 * base;
            else rho[i] = base;
        }
    };
    double rho_base = s.rho;
    set_rho(rho_base);
    auto factor = [&]() {
        Mat K = P + s.sigma * Mat::Identity(n, n) + C.transpose() * rho.asDiagonal() * C;
        return Eigen::LDLT<Mat>(K);
    };
    Eigen::LDLT<Mat> ldlt = factor();

    Vec x = Vec::Zero(n), z = Vec::Zero(mc), y = Vec::Zero(mc);
    QpResult res;
    res.status = QpStatus::MaxIters;
    double rp = 0.0, rd = 0.0;
    for (int it = 1; it <= s.max_iters; ++it) {
        const Vec rhs = s.sigma * x - q + C.transpose() * (rho.cwiseProduct(z) - y);
        const Vec xt = ldlt.solve(rhs);
        const Vec zt = C * xt;
        x = s.relax * xt + (1.0 - s.relax) * x;
        const Vec zr = s.relax * zt + (1.0 - s.relax) * z;
        const Vec zn = (zr + y.cwiseQuotient(rho)).cwiseMax(l).cwiseMin(u);
        y += rho.cwiseProduct(zr - zn);
        z = zn;
        res.iterations = it;

        if (it % 10 == 0 || it == s.max_iters) {
            const Vec Cx = C * x;
            const Vec Px = P * x;
            const Vec Cty = C.transpose() * y;
            rp = inf_norm(Cx - z);
            rd = inf_norm(Px + q + Cty);
            const double ep = s.eps_abs + s.eps_rel * std::max(inf_norm(Cx), inf_norm(z));
            const double ed = s.eps_abs + s.eps_rel * std::max({inf_norm(Px), inf_norm(Cty), inf_norm(q)});
            if (rp <= ep && rd <= ed) {
                res.status = QpStatus::Solved;
                break;
            }
            if (it % 50 == 0) {
                const double pn = rp / std::max(1e-30, std::max(inf_norm(Cx), inf_norm(z)));
                const double dn = rd / std::max(1e-30, std::max({inf_norm(Px), inf_norm(Cty), inf_norm(q)}));
                const double ratio = std::sqrt(pn / std::max(1e-30, dn));
                if (ratio > 5.0 || ratio < 0.2) {
                    rho_base = std::clamp(rho_base * ratio, 1e-6, 1e6);
                    set_rho(rho_base);
                    ldlt = factor();
                }
            }
        }
    }
    res.x = x;
    res.y = y;
    res.primal_residual = rp;
    res.dual_residual = rd;

    if (s.polish) {
        const Vec Cx = C * x;
        std::vector<std::vector<int>> guesses(2, std::vector<int>(static_cast<std::size_t>(mc), 0));
        for (Index i = 0; i < mc; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (u[i] - l[i] < 1e-12) {
                guesses[0][si] = guesses[1][si] = 2;
                continue;
            }
            if (z[i] - l[i] < -y[i]) guesses[0][si] = -1;
            else if (u[i] - z[i] < y[i]) guesses[0][si] = 1;
            const double tol = 1e-7 * (1.0 + std::abs(Cx[i]));
            if (std::isfinite(l[i]) && Cx[i] - l[i] < tol && y[i] < 1e-9) guesses[1][si] = -1;
            else if (std::isfinite(u[i]) && u[i] - Cx[i] < tol && y[i] > -1e-9) guesses[1][si] = 1;
        }
        for (const auto& guess : guesses) {
            auto pc = try_polish(P, q, C, l, u, guess);
            if (pc.ok && (res.status != QpStatus::Solved || qp_value(P, q, pc.x) <= qp_value(P, q, x) + 1e-9)) {
                res.x = pc.x;
                res.y = pc.y;
                res.polished = true;
                res.status = QpStatus::Solved;
                res.primal_residual = 0.0;
                res.dual_residual = inf_norm(P * pc.x + q + C.transpose() * pc.y);
                break;
            }
        }
    }
    res.value = qp_value(P, q, res.x);
    return res;
}

std::pair<double, Vec> cone_lp(const Vec& q, const Mat& A, const Mat& E)
{
    const Index n = q.size();
    if (A.rows() > 0 && A.cols() != n) throw Error(ErrorCode::DimensionMismatch, "cone_lp: A has wrong width");
    if (E.rows() > 0 && E.cols() != n) throw Error(ErrorCode::DimensionMismatch, "cone_lp: E has wrong width");
    const double qn = q.norm();
    if (qn == 0.0) return {0.0, Vec::Zero(n)};
    const Vec qq = q / qn;
    const Index ra = A.rows(), re = E.rows();
    Mat C(ra + re + n, n);
    if (ra) C.topRows(ra) = A;
    if (re) C.middleRows(ra, re) = E;
    C.bottomRows(n) = Mat::Identity(n, n);
    const double inf = std::numeric_limits<double>::infinity();
    Vec l(ra + re + n), u(ra + re + n);
    l << Vec::Constant(ra, -inf), Vec::Zero(re), Vec::Constant(n, -1.0);
    u << Vec::Zero(ra), Vec::Zero(re), Vec::Constant(n, 1.0);
    const QpResult r = solve_qp(Mat::Zero(n, n), qq, C, l, u);
    return {qq.dot(r.x), r.x};
}

Verdict cone_lp_certificate(const Vec& q, const Mat& A)
{
    const auto [value, d] = cone_lp(q, A, Mat(0, q.size()));
    Verdict v;
    if (value >= tol::kVerdictZero) {
        v.kind = VerdictKind::Certified;
        v.value = 0.0;
        v.detail = "linear objective is nonnegative on the direction cone";
    } else {
        v.kind = VerdictKind::Refuted;
        v.value = value;
        v.witness = d;
        v.detail = "descent ray in the direction cone";
    }
    return v;
}

ConeQpResult solve_cone_qp(const Vec& q, const Mat& B, const Mat& A, double trust_radius)
{
    const Index n = q.size();
    if (B.rows() != n || B.cols() != n || (A.rows() > 0 && A.cols() != n))
        throw Error(ErrorCode::DimensionMismatch, "solve_cone_qp: inconsistent dimensions");
    require_psd(B);
    const Index r = A.rows();
    ConeQpResult out;
    out.multipliers = Vec::Zero(r);
    if (q.norm() == 0.0) {
        out.d_star = Vec::Zero(n);
        out.value = 0.0;
        return out;
    }

    // Recession test: Bd = 0 written as orthonormal rows spanning range(B).
    const Mat Bs = 0.5 * (B + B.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(Bs);
    const double bmax = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<Index> range_cols;
    for (Index i = 0; i < n; ++i)
        if (es.eigenvalues()[i] > 1e-10 * bmax) range_cols.push_back(i);
    Mat E(static_cast<Index>(range_cols.size()), n);
    for (std::size_t k = 0; k < range_cols.size(); ++k)
        E.row(static_cast<Index>(k)) = es.eigenvectors().col(range_cols[k]).transpose();
    const auto [rec_value, rec_dir] = cone_lp(q, A, E);
    if (rec_value * q.norm() < -1e-8) {
        const double scale = inf_norm(rec_dir);
        out.status = ConeQpStatus::Unbounded;
        out.direction = rec_dir / scale;
        out.d_star = *out.direction;
        out.value = -std::numeric_limits<double>::infinity();
        return out;
    }

    Mat C(r + n, n);
    if (r) C.topRows(r) = A;
    C.bottomRows(n) = Mat::Identity(n, n);
    const double inf = std::numeric_limits<double>::infinity();
    Vec l(r + n), u(r + n);
    l << Vec::Constant(r, -inf), Vec::Constant(n, -trust_radius);
    u << Vec::Zero(r), Vec::Constant(n, trust_radius);
    const QpResult qp = solve_qp(Bs, q, C, l, u);
    out.d_star = qp.x;
    out.value = qp.value;
    out.multipliers = qp.y.head(r).cwiseMax(0.0);
    out.status = qp.status == QpStatus::Solved ? ConeQpStatus::Optimal : ConeQpStatus::MaxIters;
    return out;
}

}  // namespace cnopt
