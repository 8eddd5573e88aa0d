#include "cnopt/optimality.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace cnopt {

CandidatePoint make_candidate(const CnForm& form, const Vec& x, const std::optional<Vec>& y)
{
    if (x.size() != form.n) throw Error(ErrorCode::DimensionMismatch, "candidate x has wrong size");
    CandidatePoint pt;
    pt.x = x;
    pt.y = y ? *y : lift(form, x);
    if (pt.y.size() != form.m) throw Error(ErrorCode::DimensionMismatch, "candidate y has wrong size");
    const auto res = constraint_residual(form, pt.x, pt.y);
    const double worst = res.values.size() ? res.values.cwiseAbs().maxCoeff() : 0.0;
    if (!(worst <= tol::kMembership)) {
        std::ostringstream os;
        os << "candidate is not in X(g): max residual " << worst;
        throw Error(ErrorCode::LiftInfeasible, os.str());
    }
    const double g = form.objective(form.join(pt.x, pt.y));
    double f = 0.0;
    if (form.f_direct) f = form.f_direct(pt.x);
    else f = form.objective(form.join(pt.x, lift(form, pt.x)));
    pt.in_Xf = std::abs(g - f) <= tol::kValue;
    return pt;
}

bool DirectionCone::contains(const Vec& d, double tol) const
{
    if (A.rows() == 0) return true;
    const Vec Ad = A * d;
    for (Index i = 0; i < Ad.size(); ++i) {
        if (Ad[i] > tol) return false;
        if (equality_mode && i < equality_rows && Ad[i] < -tol) return false;
    }
    return true;
}

DirectionCone direction_cone(const CnForm& form, const Vec& w, bool equality_mode)
{
    std::vector<Vec> rows;
    for (const auto& c : form.constraints) rows.push_back(c.gradient(w));
    const auto eq = static_cast<Index>(rows.size());
    for (const auto& h : form.ineq_constraints)
        if (h(w) >= -tol::kMembership) rows.push_back(h.gradient(w));
    DirectionCone cone;
    cone.A.resize(static_cast<Index>(rows.size()), form.dim());
    for (std::size_t i = 0; i < rows.size(); ++i) cone.A.row(static_cast<Index>(i)) = rows[i].transpose();
    cone.equality_rows = eq;
    cone.equality_mode = equality_mode;
    return cone;
}

namespace {

Mat require_curvature(const CnForm& form, const Vec& w)
{
    auto B = curvature_matrix(form.grade, w, form.dim());
    if (!B) throw Error(ErrorCode::GradeMismatch, "form '" + form.name + "' carries no curvature bound");
    if (B->rows() != form.dim() || B->cols() != form.dim())
        throw Error(ErrorCode::DimensionMismatch, "curvature matrix has wrong size");
    return *B;
}

bool slater_holds(const Mat& A)
{
    const Index r = A.rows(), d = A.cols();
    if (r == 0) return true;
    // min t  s.t.  A v - t <= 0, |v| <= 1, t >= -1
    Mat C = Mat::Zero(r + d + 1, d + 1);
    C.topLeftCorner(r, d) = A;
    C.topRightCorner(r, 1) = -Vec::Ones(r);
    C.block(r, 0, d, d) = Mat::Identity(d, d);
    C(r + d, d) = 1.0;
    const double inf = std::numeric_limits<double>::infinity();
    Vec l(r + d + 1), u(r + d + 1);
    l << Vec::Constant(r, -inf), Vec::Constant(d, -1.0), -1.0;
    u << Vec::Zero(r), Vec::Constant(d, 1.0), inf;
    Vec q = Vec::Zero(d + 1);
    q[d] = 1.0;
    const QpResult res = solve_qp(Mat::Zero(d + 1, d + 1), q, C, l, u);
    return res.x[d] < -1e-6;
}

/// Quadratic model q'(w - w*) + 0.5 (w - w*)' B (w - w*) minimized over lift
/// branches of x, searched over x in a box with only `free` coordinates moving.
class ModelSearch {
public:
    ModelSearch(const CnForm& form, const Vec& x_star, const Vec& w_star, const Vec& q, const Mat& B,
                std::vector<Index> free, const Box& box)
        : form_(form), xs_(x_star), ws_(w_star), q_(q), B_(B), free_(std::move(free)), box_(box)
    {
    }

    double value(const Vec& x, Vec* arg = nullptr) const
    {
        std::vector<Index> pinned;
        for (Index i : free_)
            if (x[i] == xs_[i]) pinned.push_back(i);
        double best = std::numeric_limits<double>::infinity();
        for (const Vec& y : form_.branches(x, pinned)) {
            Vec w(form_.dim());
            w << x, y;
            const Vec dw = w - ws_;
            const double v = q_.dot(dw) + 0.5 * dw.dot(B_ * dw);
            if (v < best) {
                best = v;
                if (arg) *arg = w;
            }
        }
        return best;
    }

    /// Returns (min value, argmin w).
    std::pair<double, Vec> run(int budget, std::uint64_t seed) const
    {
        const auto k = static_cast<Index>(free_.size());
        std::vector<std::pair<double, Vec>> pool;
        auto consider = [&](const Vec& x) {
            const double v = value(x);
            if (std::isfinite(v)) pool.emplace_back(v, x);
        };
        consider(xs_);
        if (k == 1 || k == 2) {
            const int G = k == 1 ? std::min(budget, 4001) : static_cast<int>(std::sqrt(static_cast<double>(budget)));
            std::vector<std::vector<double>> axes;
            for (Index i : free_) {
                std::vector<double> a;
                for (int t = 0; t < G; ++t) a.push_back(box_.lower[i] + (box_.upper[i] - box_.lower[i]) * t / (G - 1));
                a.push_back(xs_[i]);
                axes.push_back(std::move(a));
            }
            Vec x = xs_;
            if (k == 1) {
                for (double a : axes[0]) {
                    x[free_[0]] = a;
                    consider(x);
                }
            } else {
                for (double a : axes[0])
                    for (double b : axes[1]) {
                        x[free_[0]] = a;
                        x[free_[1]] = b;
                        consider(x);
                    }
            }
        } else if (k > 2) {
            for (int s = 0; s < budget; ++s) {
                Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
                std::uniform_real_distribution<double> u01(0.0, 1.0);
                const double pin_prob = (s % 2 == 0) ? 0.5 : 0.0;
                Vec x = xs_;
                for (Index i : free_)
                    if (u01(rng) >= pin_prob) x[i] = box_.lower[i] + (box_.upper[i] - box_.lower[i]) * u01(rng);
                consider(x);
            }
        }
        std::sort(pool.begin(), pool.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        if (pool.size() > 12) pool.resize(12);

        double best = std::numeric_limits<double>::infinity();
        Vec best_x = xs_;
        for (auto& [v0, x0] : pool) {
            auto [v, x] = polish(x0, v0);
            if (v < best) {
                best = v;
                best_x = x;
            }
        }
        Vec w;
        value(best_x, &w);
        return {best, w};
    }

private:
    std::pair<double, Vec> polish(Vec x, double v) const
    {
        Vec step(form_.n);
        for (Index i = 0; i < form_.n; ++i) step[i] = (box_.upper[i] - box_.lower[i]) / 64.0;
        for (int it = 0; it < 4000; ++it) {
            bool improved = false;
            for (Index i : free_) {
                for (double cand : {x[i] + step[i], x[i] - step[i], xs_[i]}) {
                    cand = std::clamp(cand, box_.lower[i], box_.upper[i]);
                    if (cand == x[i]) continue;
                    Vec xt = x;
                    xt[i] = cand;
                    const double vt = value(xt);
                    if (vt < v) {
                        v = vt;
                        x = xt;
                        improved = true;
                    }
                }
            }
            if (!improved) {
                step *= 0.5;
                bool tiny = true;
                for (Index i : free_) tiny = tiny && step[i] < 1e-10;
                if (tiny) break;
            }
        }
        return {v, x};
    }

    const CnForm& form_;
    Vec xs_;
    Vec ws_;
    Vec q_;
    Mat B_;
    std::vector<Index> free_;
    Box box_;
};

Box finite_box(const Box& b)
{
    Box out = b;
    for (Index i = 0; i < out.dim(); ++i) {
        if (!std::isfinite(out.lower[i])) out.lower[i] = -10.0;
        if (!std::isfinite(out.upper[i])) out.upper[i] = 10.0;
    }
    return out;
}

}  // namespace

WcnpResult wcnp_condition(const CnForm& form, const CandidatePoint& pt, const WcnpOptions& opt)
{
    const Vec w = form.join(pt.x, pt.y);
    const Mat B = require_curvature(form, w);
    const Vec q = form.objective.gradient(w);
    const DirectionCone cone = direction_cone(form, w);

    WcnpResult out;
    out.qp = solve_cone_qp(q, B, cone.A, opt.trust_radius);
    out.slater = slater_holds(cone.A);
    if (out.qp.status != ConeQpStatus::Unbounded) {
        const Vec stat = B * out.qp.d_star + q + cone.A.transpose() * out.qp.multipliers;
        out.stationarity_residual = stat.norm();
    } else {
        out.stationarity_residual = std::numeric_limits<double>::infinity();
    }

    if (out.qp.status == ConeQpStatus::Optimal && out.qp.value >= tol::kVerdictZero) {
        out.verdict.kind = VerdictKind::Certified;
        out.verdict.value = out.qp.value;
        out.verdict.detail = "direction subproblem value is nonnegative";
        return out;
    }

    out.verdict.kind = VerdictKind::Inconclusive;
    out.verdict.value = out.qp.value;
    out.verdict.witness = out.qp.direction ? *out.qp.direction : out.qp.d_star;
    out.verdict.detail = "direction subproblem value is negative";
    if (out.qp.status == ConeQpStatus::Unbounded) out.verdict.detail = "direction subproblem is unbounded";

    if (opt.lifted_search && (form.lift || form.lift_branches)) {
        std::vector<Index> free;
        for (Index i = 0; i < form.n; ++i) free.push_back(i);
        const Box box = finite_box(form.sample_box.intersect(form.domain));
        const ModelSearch search(form, pt.x, w, q, B, free, box);
        const auto [mv, mw] = search.run(opt.search_budget, opt.seed);
        out.model_min = mv;
        if (mv >= tol::kVerdictZero) {
            out.verdict.kind = VerdictKind::Certified;
            out.verdict.value = mv;
            out.verdict.detail = "curvature model is nonnegative on sampled X(g) within the sample box";
        } else {
            out.verdict.value = mv;
            out.verdict.witness = mw;
            out.verdict.detail += "; curvature model is negative at the witness in X(g)";
        }
    }
    return out;
}

Verdict lcnp_condition(const CnForm& form, const CandidatePoint& pt)
{
    const Vec w = form.join(pt.x, pt.y);
    const DirectionCone cone = direction_cone(form, w);
    Verdict v = cone_lp_certificate(form.objective.gradient(w), cone.A);
    if (v.refuted()) {
        v.kind = VerdictKind::Inconclusive;
        v.detail = "linear subproblem has a descent ray (condition not met)";
    }
    return v;
}

double kkt_residual(const CnForm& form, const CandidatePoint& pt, const Vec& alpha, const std::optional<Vec>& d_star,
                    bool normalized)
{
    if (alpha.size() != form.r()) throw Error(ErrorCode::DimensionMismatch, "alpha must have one entry per constraint");
    const Vec w = form.join(pt.x, pt.y);
    Vec v = form.objective.gradient(w);
    for (Index i = 0; i < form.r(); ++i)
        if (alpha[i] != 0.0) form.constraints[static_cast<std::size_t>(i)].add_gradient(w, alpha[i], v);
    if (d_star) {
        if (d_star->size() != form.dim()) throw Error(ErrorCode::DimensionMismatch, "d_star has wrong size");
        v += require_curvature(form, w) * *d_star;
    }
    const double r = v.norm();
    return normalized ? r / (1.0 + alpha.lpNorm<1>()) : r;
}

std::string to_string(KSet k)
{
    switch (k) {
    case KSet::Kw: return "kw";
    case KSet::Ku: return "ku";
    case KSet::Kc: return "kc";
    }
    return "unknown";
}

KSet parse_kset(const std::string& s)
{
    std::string t;
    for (char c : s) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "kw") return KSet::Kw;
    if (t == "ku") return KSet::Ku;
    if (t == "kc") return KSet::Kc;
    throw Error(ErrorCode::BadSpec, "unknown K-set '" + s + "'");
}

Verdict falsify_k_set(const CnForm& form, const CandidatePoint& pt, KSet kind, const Box& box, int n_samples,
                      std::optional<double> radius, std::uint64_t seed)
{
    if (!form.lift && !form.lift_branches) throw Error(ErrorCode::NoLift, "form has no lift to sample X(g)");
    if (box.dim() != form.n) throw Error(ErrorCode::DimensionMismatch, "sampling box must have dimension n");
    const Vec ws = form.join(pt.x, pt.y);
    const Vec q = form.objective.gradient(ws);
    Mat B = Mat::Zero(form.dim(), form.dim());
    if (kind == KSet::Kw) B = require_curvature(form, ws);
    if (kind == KSet::Ku) {
        const auto* u = std::get_if<grade::Uniform>(&form.grade);
        if (!u) throw Error(ErrorCode::GradeMismatch, "Ku needs a uniform grade");
        B = u->rho_bar * Mat::Identity(form.dim(), form.dim());
    }
    Box b = finite_box(box);
    if (radius) {
        b.lower = b.lower.cwiseMax((pt.x.array() - *radius).matrix());
        b.upper = b.upper.cwiseMin((pt.x.array() + *radius).matrix());
    }
    auto model = [&](const Vec& w) {
        const Vec dw = w - ws;
        return q.dot(dw) + 0.5 * dw.dot(B * dw);
    };

    for (int s = 0; s < n_samples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        Vec x = pt.x;
        std::vector<Index> pinned;
        const double pin_prob = s == 0 ? 1.0 : (s % 2 == 0 ? 0.5 : 0.0);
        for (Index i = 0; i < form.n; ++i) {
            if (u01(rng) < pin_prob) pinned.push_back(i);
            else x[i] = b.lower[i] + (b.upper[i] - b.lower[i]) * u01(rng);
        }
        for (const Vec& y : form.branches(x, pinned)) {
            Vec w(form.dim());
            w << x, y;
            if (radius && (w - ws).norm() > *radius) continue;
            const double v = model(w);
            if (v < tol::kWitness) {
                Verdict out;
                out.kind = VerdictKind::Refuted;
                out.witness = w;
                out.value = v;
                out.detail = "sample of X(g) lies in " + to_string(kind) + " (sample " + std::to_string(s) + ")";
                return out;
            }
        }
    }
    Verdict out;
    out.kind = VerdictKind::Inconclusive;
    out.value = 0.0;
    out.detail = "no sample of X(g) landed in " + to_string(kind);
    return out;
}

BlockwiseResult blockwise_condition(const CnForm& form, const Partition& partition, const CandidatePoint& pt,
                                    const WcnpOptions& opt)
{
    partition.validate(form);
    if (!partition.overlap_links.empty())
        throw Error(ErrorCode::NotDecomposable, "partition has overlapping blocks");
    const Vec w = form.join(pt.x, pt.y);
    const Mat B = require_curvature(form, w);
    const Vec q = form.objective.gradient(w);
    const DirectionCone cone = direction_cone(form, w);

    BlockwiseResult out;
    bool all = true;
    for (Index j = 0; j < partition.p; ++j) {
        const auto vars = partition.owned_vars(j, form.n);
        const auto k = static_cast<Index>(vars.size());
        Vec qj(k);
        Mat Bj(k, k);
        for (Index a = 0; a < k; ++a) {
            qj[a] = q[vars[static_cast<std::size_t>(a)]];
            for (Index c = 0; c < k; ++c) Bj(a, c) = B(vars[static_cast<std::size_t>(a)], vars[static_cast<std::size_t>(c)]);
        }
        // Rows of the cone whose support lies in this block.
        std::vector<Index> rows;
        for (Index i = 0; i < cone.A.rows(); ++i) {
            bool inside = true, touches = false;
            for (Index c = 0; c < form.dim(); ++c) {
                if (cone.A(i, c) == 0.0) continue;
                if (std::binary_search(vars.begin(), vars.end(), c)) touches = true;
                else inside = false;
            }
            if (touches && !inside) throw Error(ErrorCode::NotDecomposable, "cone row straddles blocks");
            if (touches) rows.push_back(i);
        }
        Mat Aj(static_cast<Index>(rows.size()), k);
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (Index c = 0; c < k; ++c) Aj(static_cast<Index>(a), c) = cone.A(rows[a], vars[static_cast<std::size_t>(c)]);

        Verdict v;
        const ConeQpResult qp = solve_cone_qp(qj, Bj, Aj, opt.trust_radius);
        if (qp.status == ConeQpStatus::Optimal && qp.value >= tol::kVerdictZero) {
            v.kind = VerdictKind::Certified;
            v.value = qp.value;
            v.detail = "block direction subproblem value is nonnegative";
        } else {
            v.kind = VerdictKind::Inconclusive;
            v.value = qp.value;
            v.detail = "block direction subproblem value is negative";
            if (opt.lifted_search) {
                std::vector<Index> free;
                for (Index i : partition.x_blocks[static_cast<std::size_t>(j)]) free.push_back(i);
                const Box box = finite_box(form.sample_box.intersect(form.domain));
                const ModelSearch search(form, pt.x, w, q, B, free, box);
                const auto [mv, mw] = search.run(opt.search_budget, derive_seed(opt.seed, static_cast<std::uint64_t>(j)));
                if (mv >= tol::kVerdictZero) {
                    v.kind = VerdictKind::Certified;
                    v.value = mv;
                    v.detail = "block curvature model is nonnegative on sampled X(g_j)";
                } else {
                    v.value = mv;
                    v.witness = mw;
                }
            }
        }
        all = all && v.certified();
        out.blocks.push_back(std::move(v));
    }
    out.aggregate.kind = all ? VerdictKind::Certified : VerdictKind::Inconclusive;
    out.aggregate.value = 0.0;
    out.aggregate.detail = all ? "every block certified" : "some block not certified";
    return out;
}

}  // namespace cnopt
