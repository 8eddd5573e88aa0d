#pragma once

#include "cnopt/cn_form.hpp"
#include "cnopt/convex_inner.hpp"
#include "cnopt/partition.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cnopt {

struct CandidatePoint {
    Vec x;
    Vec y;
    /// g(x, y) agrees with f(x): y is a minimizing lift.
    bool in_Xf = false;
};

/// Builds a candidate from x (and y, or the lift of x). Throws LiftInfeasible
/// when (x, y) misses X(g) by more than the membership tolerance.
CandidatePoint make_candidate(const CnForm& form, const Vec& x, const std::optional<Vec>& y = std::nullopt);

struct DirectionCone {
    /// Rows are gradients of the equality constraints, then of the active
    /// inequality constraints, at the candidate.
    Mat A;
    /// Number of leading rows coming from equality constraints.
    Index equality_rows = 0;
    /// Rows enforced as = 0 instead of <= 0.
    bool equality_mode = false;

    bool contains(const Vec& d, double tol = 1e-12) const;
};

DirectionCone direction_cone(const CnForm& form, const Vec& w, bool equality_mode = false);

struct WcnpOptions {
    /// Run the search of the curvature model over sampled X(g) when the cone
    /// subproblem alone does not certify.
    bool lifted_search = true;
    int search_budget = 40000;
    std::uint64_t seed = 1;
    double trust_radius = 1e3;
};

struct WcnpResult {
    Verdict verdict;
    ConeQpResult qp;
    /// Norm of B d* + grad g + sum alpha_i grad g_i at the cone solution.
    double stationarity_residual = 0.0;
    /// A direction with grad g_i' d < 0 for all rows exists.
    bool slater = false;
    /// Minimum of the curvature model found over sampled X(g) (NaN if not run).
    double model_min = std::numeric_limits<double>::quiet_NaN();
};

/// Weak-uniform direction condition; Uniform grade uses B = rho_bar * I.
WcnpResult wcnp_condition(const CnForm& form, const CandidatePoint& pt, const WcnpOptions& opt = {});

/// Linear cone condition; Inconclusive (with a descent direction) when it fails.
Verdict lcnp_condition(const CnForm& form, const CandidatePoint& pt);

/// ||[B d*] + grad g + sum alpha_i grad g_i||; with `normalized`, the vector is
/// divided by 1 + ||alpha||_1 (eta = 1 / (1 + ||alpha||_1)).
double kkt_residual(const CnForm& form, const CandidatePoint& pt, const Vec& alpha,
                    const std::optional<Vec>& d_star = std::nullopt, bool normalized = false);

enum class KSet { Kw, Ku, Kc };

std::string to_string(KSet k);
KSet parse_kset(const std::string& s);

/// Samples X(g) through lift branches and reports a witness in the K-set.
/// Each sample pins a random subset of x-coordinates to x* so that
/// lower-dimensional pieces of X(g) are visited.
Verdict falsify_k_set(const CnForm& form, const CandidatePoint& pt, KSet kind, const Box& box, int n_samples,
                      std::optional<double> radius, std::uint64_t seed);

struct BlockwiseResult {
    std::vector<Verdict> blocks;
    Verdict aggregate;
};

BlockwiseResult blockwise_condition(const CnForm& form, const Partition& partition, const CandidatePoint& pt,
                                    const WcnpOptions& opt = {});

}  // namespace cnopt
