#include "cnopt/solver.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/optimality.hpp"
#include "cnopt/problems.hpp"
#include "cnopt/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>

namespace cnopt {

void SolverConfig::validate() const
{
    if (!(eps > 0.0)) throw Error(ErrorCode::BadSpec, "eps must be positive");
    if (!(sigma1 > 0.0)) throw Error(ErrorCode::BadSpec, "sigma1 must be positive");
    if (!(N > 1.0)) throw Error(ErrorCode::BadSpec, "N must exceed 1");
    if (!(sigma_cap >= sigma1)) throw Error(ErrorCode::BadSpec, "sigma_cap must be at least sigma1");
    if (max_outer < 1) throw Error(ErrorCode::BadSpec, "max_outer must be at least 1");
    if (step3_convexity_samples < 0) throw Error(ErrorCode::BadSpec, "step3_convexity_samples must be >= 0");
}

SolverConfig config_for(const Problem& problem)
{
    SolverConfig cfg;
    cfg.sigma1 = problem.defaults.sigma1;
    cfg.N = problem.defaults.N;
    cfg.alpha0 = problem.defaults.alpha0;
    cfg.w0 = problem.defaults.w0;
    return cfg;
}

std::string to_string(SolveStatus s)
{
    switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Approximate: return "Approximate";
    case SolveStatus::MaxOuterIters: return "MaxOuterIters";
    case SolveStatus::Diverged: return "Diverged";
    }
    return "unknown";
}

std::vector<Index> block_coordinates(const Partition& partition, Index j, Index n)
{
    return partition.block_vars(j, n);
}

namespace {

using Anchors = std::vector<std::pair<Index, double>>;

struct AlContext {
    const CnForm* form = nullptr;
    std::vector<Index> vars;
    std::vector<Index> cons;
    std::vector<Index> ineqs;
    Vec alpha;
    double sigma = 0.0;
    /// (local index, x*)
    std::vector<std::pair<Index, double>> anchors;
    Vec w;
    Vec gw;
    Vec vw;

    void load(const Vec& z)
    {
        for (std::size_t a = 0; a < vars.size(); ++a) w[vars[a]] = z[static_cast<Index>(a)];
    }

    double value(const Vec& z)
    {
        load(z);
        double v = form->objective(w);
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const double c = form->constraints[static_cast<std::size_t>(cons[i])](w);
            v += alpha[static_cast<Index>(i)] * c + 0.5 * sigma * c * c;
        }
        for (Index q : ineqs) {
            const double h = std::max(form->ineq_constraints[static_cast<std::size_t>(q)](w), 0.0);
            v += sigma * h * h;
        }
        for (const auto& [a, xs] : anchors) v += sigma * (xs - z[a]) * (xs - z[a]);
        return v;
    }

    void add_grad(const Vec& z, double scale, Vec& out)
    {
        load(z);
        gw.setZero();
        form->objective.add_gradient(w, 1.0, gw);
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const auto& c = form->constraints[static_cast<std::size_t>(cons[i])];
            c.add_gradient(w, alpha[static_cast<Index>(i)] + sigma * c(w), gw);
        }
        for (Index q : ineqs) {
            const auto& hf = form->ineq_constraints[static_cast<std::size_t>(q)];
            const double h = hf(w);
            if (h > 0.0) hf.add_gradient(w, 2.0 * sigma * h, gw);
        }
        for (std::size_t a = 0; a < vars.size(); ++a) out[static_cast<Index>(a)] += scale * gw[vars[a]];
        for (const auto& [a, xs] : anchors) out[a] += scale * 2.0 * sigma * (z[a] - xs);
    }

    void add_hess_vec(const Vec& z, const Vec& v, double scale, Vec& out)
    {
        load(z);
        vw.setZero();
        for (std::size_t a = 0; a < vars.size(); ++a) vw[vars[a]] = v[static_cast<Index>(a)];
        gw.setZero();
        form->objective.add_hess_vec(w, vw, 1.0, gw);
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const auto& c = form->constraints[static_cast<std::size_t>(cons[i])];
            c.add_hess_vec(w, vw, alpha[static_cast<Index>(i)] + sigma * c(w), gw);
            const Vec gc = c.gradient(w);
            gw += sigma * gc.dot(vw) * gc;
        }
        for (Index q : ineqs) {
            const auto& hf = form->ineq_constraints[static_cast<std::size_t>(q)];
            const double h = hf(w);
            if (h <= 0.0) continue;
            hf.add_hess_vec(w, vw, 2.0 * sigma * h, gw);
            const Vec gh = hf.gradient(w);
            gw += 2.0 * sigma * gh.dot(vw) * gh;
        }
        for (std::size_t a = 0; a < vars.size(); ++a) out[static_cast<Index>(a)] += scale * gw[vars[a]];
        for (const auto& [a, xs] : anchors) out[a] += scale * 2.0 * sigma * v[a];
    }
};

bool form_has_hessian(const CnForm& form)
{
    if (!form.objective.has_hess_vec()) return false;
    for (const auto& c : form.constraints)
        if (!c.has_hess_vec()) return false;
    for (const auto& h : form.ineq_constraints)
        if (!h.has_hess_vec()) return false;
    return true;
}

std::vector<Vec> split_alpha(const Partition& partition, const Vec& alpha, Index r)
{
    std::vector<Vec> out(static_cast<std::size_t>(partition.p));
    for (Index j = 0; j < partition.p; ++j) {
        const auto cons = partition.constraints_of(j);
        Vec a = Vec::Zero(static_cast<Index>(cons.size()));
        if (alpha.size() == r)
            for (std::size_t i = 0; i < cons.size(); ++i) a[static_cast<Index>(i)] = alpha[cons[i]];
        out[static_cast<std::size_t>(j)] = a;
    }
    return out;
}

}  // namespace

ScalarField augmented_lagrangian(const CnForm& form, const Partition& partition, Index j, const Vec& w,
                                 const Vec& alpha_j, double sigma, const Anchors& anchors)
{
    if (j < 0 || j >= partition.p)
        throw Error(ErrorCode::BlockIndexOutOfRange, "block " + std::to_string(j) + " out of range");
    if (w.size() != form.dim()) throw Error(ErrorCode::DimensionMismatch, "w has wrong size");
    auto ctx = std::make_shared<AlContext>();
    ctx->form = &form;
    ctx->vars = block_coordinates(partition, j, form.n);
    ctx->cons = partition.constraints_of(j);
    ctx->ineqs = partition.inequalities_of(form, j);
    if (alpha_j.size() != static_cast<Index>(ctx->cons.size()))
        throw Error(ErrorCode::DimensionMismatch, "alpha_j must have one entry per block constraint");
    ctx->alpha = alpha_j;
    ctx->sigma = sigma;
    for (const auto& [coord, xs] : anchors) {
        const auto it = std::lower_bound(ctx->vars.begin(), ctx->vars.end(), coord);
        if (it == ctx->vars.end() || *it != coord)
            throw Error(ErrorCode::BadSpec, "anchor coordinate is not a block coordinate");
        ctx->anchors.emplace_back(static_cast<Index>(it - ctx->vars.begin()), xs);
    }
    ctx->w = w;
    ctx->gw = Vec::Zero(form.dim());
    ctx->vw = Vec::Zero(form.dim());
    const auto k = static_cast<Index>(ctx->vars.size());
    std::vector<Index> support(static_cast<std::size_t>(k));
    for (Index a = 0; a < k; ++a) support[static_cast<std::size_t>(a)] = a;

    ScalarField::HessVecFn hv;
    if (form_has_hessian(form))
        hv = [ctx](const Vec& z, const Vec& v, double s, Vec& out) { ctx->add_hess_vec(z, v, s, out); };
    return ScalarField(
        k, [ctx](const Vec& z) { return ctx->value(z); },
        [ctx](const Vec& z, double s, Vec& out) { ctx->add_grad(z, s, out); }, hv, support);
}

double full_augmented_lagrangian(const CnForm& form, const Partition& partition, const Vec& w,
                                 const std::vector<Vec>& alpha, double sigma)
{
    double v = form.objective(w);
    for (Index j = 0; j < partition.p; ++j) {
        const auto cons = partition.constraints_of(j);
        const Vec& a = alpha[static_cast<std::size_t>(j)];
        for (std::size_t i = 0; i < cons.size(); ++i) {
            const double c = form.constraints[static_cast<std::size_t>(cons[i])](w);
            v += a[static_cast<Index>(i)] * c + 0.5 * sigma * c * c;
        }
    }
    for (const auto& hf : form.ineq_constraints) {
        const double h = std::max(hf(w), 0.0);
        v += sigma * h * h;
    }
    return v;
}

SolverState initial_state(const CnForm& form, const Partition& partition, const SolverConfig& cfg)
{
    cfg.validate();
    partition.validate(form);
    SolverState s;
    Vec w0 = cfg.w0.size() ? cfg.w0 : Vec::Zero(form.dim());
    if (w0.size() != form.dim()) throw Error(ErrorCode::DimensionMismatch, "w0 must have n + m entries");
    if (cfg.alpha0.size() && cfg.alpha0.size() != form.r())
        throw Error(ErrorCode::DimensionMismatch, "alpha0 must have one entry per constraint");
    s.k = 1;
    s.x = w0.head(form.n);
    s.y = w0.tail(form.m);
    s.alpha = split_alpha(partition, cfg.alpha0, form.r());
    s.sigma = cfg.sigma1;
    for (const auto& l : partition.overlap_links) s.anchors.push_back(w0[l.coordinate]);
    s.block_grad_norms.assign(static_cast<std::size_t>(partition.p), 0.0);
    refresh_metrics(form, partition, s);
    return s;
}

void refresh_metrics(const CnForm& form, const Partition& partition, SolverState& state)
{
    const Vec w = form.join(state.x, state.y);
    state.g_blocks.assign(static_cast<std::size_t>(partition.p), Vec());
    state.residual = 0.0;
    double sq = 0.0;
    for (Index j = 0; j < partition.p; ++j) {
        const auto cons = partition.constraints_of(j);
        Vec g(static_cast<Index>(cons.size()));
        for (std::size_t i = 0; i < cons.size(); ++i)
            g[static_cast<Index>(i)] = form.constraints[static_cast<std::size_t>(cons[i])](w);
        state.residual += g.norm();
        sq += g.squaredNorm();
        state.g_blocks[static_cast<std::size_t>(j)] = g;
    }
    state.g_value = form.objective(w);
    state.hk = state.g_value + state.sigma * sq;
    state.ineq_violation = 0.0;
    for (const auto& hf : form.ineq_constraints) state.ineq_violation = std::max(state.ineq_violation, hf(w));
    if (form.f_direct) state.f_value = form.f_direct(state.x);
    else state.f_value.reset();
}

SolverState block_sweep(const CnForm& form, const Partition& partition, const SolverState& state,
                        const SolverConfig& cfg)
{
    SolverState next = state;
    Vec w = form.join(state.x, state.y);
    const std::vector<double> previous_anchors = state.anchors;
    next.block_grad_norms.assign(static_cast<std::size_t>(partition.p), 0.0);

    for (Index j = 0; j < partition.p; ++j) {
        const auto vars = block_coordinates(partition, j, form.n);
        Anchors anchors;
        for (std::size_t l = 0; l < partition.overlap_links.size(); ++l) {
            const auto& link = partition.overlap_links[l];
            if (link.later != j) continue;
            const double xs = cfg.anchor == OverlapAnchor::CurrentSweep ? next.anchors[l] : previous_anchors[l];
            anchors.emplace_back(link.coordinate, xs);
        }
        const ScalarField A =
            augmented_lagrangian(form, partition, j, w, state.alpha[static_cast<std::size_t>(j)], state.sigma, anchors);
        Vec z0(static_cast<Index>(vars.size()));
        for (std::size_t a = 0; a < vars.size(); ++a) z0[static_cast<Index>(a)] = w[vars[a]];

        InnerResult res;
        try {
            res = minimize_smooth(A, z0, cfg.inner);
        } catch (const Error& e) {
            throw Error(ErrorCode::InnerFailure, "block " + std::to_string(j) + ": " + e.what());
        }
        next.block_grad_norms[static_cast<std::size_t>(j)] = res.grad_norm;

        // Owned coordinates are written back; overlap coordinates only feed x*.
        const auto owned = partition.owned_vars(j, form.n);
        for (std::size_t a = 0; a < vars.size(); ++a) {
            const Index c = vars[a];
            if (std::binary_search(owned.begin(), owned.end(), c)) {
                w[c] = res.x[static_cast<Index>(a)];
                continue;
            }
            for (std::size_t l = 0; l < partition.overlap_links.size(); ++l) {
                const auto& link = partition.overlap_links[l];
                if (link.earlier == j && link.coordinate == c) next.anchors[l] = res.x[static_cast<Index>(a)];
            }
        }
    }
    next.x = w.head(form.n);
    next.y = w.tail(form.m);
    refresh_metrics(form, partition, next);
    return next;
}

SolverState multiplier_update(const SolverState& state, const CnForm& form, const Partition& partition,
                              const SolverConfig& cfg)
{
    SolverState next = state;
    for (std::size_t j = 0; j < next.alpha.size(); ++j) next.alpha[j] = state.alpha[j] + state.sigma * state.g_blocks[j];
    next.sigma = std::min(state.sigma * cfg.N, cfg.sigma_cap);
    next.k = state.k + 1;
    refresh_metrics(form, partition, next);
    return next;
}

namespace {

bool fixed_point(const SolverState& a, const SolverState& b)
{
    constexpr double tol = 1e-10;
    return (a.x - b.x).lpNorm<Eigen::Infinity>() <= tol && (a.y - b.y).lpNorm<Eigen::Infinity>() <= tol;
}

bool in_Xf(const CnForm& form, const SolverState& s)
{
    const auto res = constraint_residual(form, s.x, s.y);
    if (res.values.size() && res.values.cwiseAbs().maxCoeff() > tol::kMembership) return false;
    double f = 0.0;
    try {
        f = form.f_direct ? form.f_direct(s.x) : eval_f_via_form(form, s.x);
    } catch (const Error&) {
        return false;
    }
    return std::abs(s.g_value - f) <= tol::kValue;
}

/// Sampled PSD test of the Hessian of g + alpha' g over the sample box.
bool lagrangian_sampled_convex(const CnForm& form, const Vec& alpha, int samples, std::uint64_t seed)
{
    if (!form_has_hessian(form)) return false;
    const Box box = form.sample_box;
    if (!box.finite()) return false;
    for (int s = 0; s < samples; ++s) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s)));
        const Vec x = uniform_vector(rng, box.lower, box.upper);
        Vec y;
        try {
            y = lift(form, x);
        } catch (const Error&) {
            return false;
        }
        y += 0.1 * unit_sphere_vector(rng, form.m);
        const Vec w = form.join(x, y);
        const Vec d = unit_sphere_vector(rng, form.dim());
        Vec hd = form.objective.hess_vec(w, d);
        for (Index i = 0; i < form.r(); ++i)
            if (alpha[i] != 0.0) form.constraints[static_cast<std::size_t>(i)].add_hess_vec(w, d, alpha[i], hd);
        if (d.dot(hd) < -1e-8) return false;
    }
    return true;
}

Vec global_alpha(const Partition& partition, const std::vector<Vec>& alpha, Index r)
{
    Vec out = Vec::Zero(r);
    for (Index j = 0; j < partition.p; ++j) {
        const auto cons = partition.constraints_of(j);
        for (std::size_t i = 0; i < cons.size(); ++i) out[cons[i]] = alpha[static_cast<std::size_t>(j)][static_cast<Index>(i)];
    }
    return out;
}

}  // namespace

SolveReport solve(const CnForm& form, const Partition& partition, const SolverConfig& cfg)
{
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    SolveReport report;
    SolverState state = initial_state(form, partition, cfg);
    report.max_g_value = -std::numeric_limits<double>::infinity();
    report.max_hk = -std::numeric_limits<double>::infinity();

    while (true) {
        const SolverState prev = state;
        state = block_sweep(form, partition, state, cfg);

        TraceEntry t;
        t.k = state.k;
        t.residual = state.residual;
        t.f_value = state.f_value;
        t.g_value = state.g_value;
        t.hk = state.hk;
        t.sigma = state.sigma;
        t.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
        t.max_block_grad =
            state.block_grad_norms.empty() ? 0.0 : *std::max_element(state.block_grad_norms.begin(), state.block_grad_norms.end());
        t.ineq_violation = state.ineq_violation;
        report.trace.push_back(t);
        report.max_g_value = std::max(report.max_g_value, state.g_value);
        report.max_hk = std::max(report.max_hk, state.hk);

        // Step 3
        if (fixed_point(state, prev) && in_Xf(form, state) &&
            lagrangian_sampled_convex(form, global_alpha(partition, state.alpha, form.r()), cfg.step3_convexity_samples,
                                      cfg.seed)) {
            report.status = SolveStatus::Optimal;
            break;
        }
        // Step 4
        if (state.residual < cfg.eps) {
            report.status = SolveStatus::Approximate;
            break;
        }
        if (state.k >= cfg.max_outer) {
            report.status = SolveStatus::MaxOuterIters;
            break;
        }
        if (state.sigma >= cfg.sigma_cap) {
            report.status = SolveStatus::Diverged;
            break;
        }
        state = multiplier_update(state, form, partition, cfg);
    }
    report.final_state = state;
    report.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    return report;
}

Vec final_multipliers(const Partition& partition, const SolverState& state, Index r)
{
    std::vector<Vec> a(state.alpha.size());
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = state.alpha[j] + state.sigma * state.g_blocks[j];
    return global_alpha(partition, a, r);
}

Verdict certify_solution(const CnForm& form, const Partition& partition, const SolveReport& report)
{
    const SolverState& s = report.final_state;
    const Vec alpha = final_multipliers(partition, s, form.r());
    // Hinge penalties act as multipliers 2 sigma max{h, 0} on the inequalities.
    const Vec w = form.join(s.x, s.y);
    Vec grad = form.objective.gradient(w);
    for (Index i = 0; i < form.r(); ++i) form.constraints[static_cast<std::size_t>(i)].add_gradient(w, alpha[i], grad);
    double weight = 1.0 + alpha.lpNorm<1>();
    for (const auto& hf : form.ineq_constraints) {
        const double mu = 2.0 * s.sigma * std::max(hf(w), 0.0);
        if (mu == 0.0) continue;
        hf.add_gradient(w, mu, grad);
        weight += mu;
    }
    const double res = grad.norm() / weight;

    Verdict v;
    v.kind = VerdictKind::Inconclusive;
    v.value = res;
    std::ostringstream os;
    os << "normalized stationarity residual " << res;
    try {
        const CandidatePoint pt = make_candidate(form, s.x);
        const BlockwiseResult b = blockwise_condition(form, partition, pt);
        if (b.aggregate.certified()) {
            v.kind = VerdictKind::Certified;
            os << "; blockwise condition holds";
        } else {
            os << "; blockwise condition not established";
        }
    } catch (const Error& e) {
        os << "; blockwise condition unavailable (" << to_string(e.code()) << ")";
    }
    v.detail = os.str();
    return v;
}

}  // namespace cnopt
