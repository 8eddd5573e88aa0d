#pragma once

#include "cnopt/cn_form.hpp"
#include "cnopt/convex_inner.hpp"
#include "cnopt/partition.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace cnopt {

struct Problem;

/// Where an overlap block takes its consensus value x* from.
enum class OverlapAnchor { CurrentSweep, PreviousSweep };

struct SolverConfig {
    double eps = 1e-4;
    double sigma1 = 5.0;
    double N = 10.0;
    /// One entry per constraint (global index order); empty means zeros.
    Vec alpha0;
    /// Initial (x, y); empty means the origin.
    Vec w0;
    int max_outer = 30;
    InnerConfig inner;
    double sigma_cap = 1e12;
    int step3_convexity_samples = 200;
    std::uint64_t seed = 1;
    OverlapAnchor anchor = OverlapAnchor::CurrentSweep;

    void validate() const;
};

/// sigma1, N, alpha0 and w0 taken from the problem's recommended values.
SolverConfig config_for(const Problem& problem);

struct SolverState {
    int k = 1;
    Vec x;
    Vec y;
    /// alpha[j] lists multipliers of partition.constraints_of(j), in that order.
    std::vector<Vec> alpha;
    double sigma = 0.0;
    /// sum_j ||g_j(x_j, y_j)||
    double residual = 0.0;
    /// g + sigma * sum g_i^2
    double hk = 0.0;
    double g_value = 0.0;
    std::optional<double> f_value;
    /// g_j at the current iterate, aligned with alpha.
    std::vector<Vec> g_blocks;
    /// Inner gradient norm per block from the last sweep.
    std::vector<double> block_grad_norms;
    /// Largest max{h, 0} over the inequality constraints.
    double ineq_violation = 0.0;
    /// x* values carried by overlap links (aligned with partition.overlap_links).
    std::vector<double> anchors;
};

/// Initial state for iteration k = 1.
SolverState initial_state(const CnForm& form, const Partition& partition, const SolverConfig& cfg);

/// Recomputes residual, g_blocks, g_value, hk, f_value and ineq_violation.
void refresh_metrics(const CnForm& form, const Partition& partition, SolverState& state);

/// A_j over the coordinates returned by block_coordinates(partition, j, n):
/// g + alpha_j' g_j + sigma/2 ||g_j||^2 + sigma * sum max{h, 0}^2
///   + sigma * sum (anchor - x_shared)^2,
/// every other coordinate frozen at w. `anchors` pairs a block coordinate
/// (global index) with its x* value.
ScalarField augmented_lagrangian(const CnForm& form, const Partition& partition, Index j, const Vec& w,
                                 const Vec& alpha_j, double sigma,
                                 const std::vector<std::pair<Index, double>>& anchors = {});

/// Global indices (into w) varied when block j is minimized.
std::vector<Index> block_coordinates(const Partition& partition, Index j, Index n);

/// g + alpha' g + sigma/2 ||g||^2 + sigma * sum max{h, 0}^2 over the whole form.
double full_augmented_lagrangian(const CnForm& form, const Partition& partition, const Vec& w,
                                 const std::vector<Vec>& alpha, double sigma);

/// One Gauss-Seidel pass over blocks 0..p-1. Throws InnerFailure when the inner
/// solver fails on a block.
SolverState block_sweep(const CnForm& form, const Partition& partition, const SolverState& state,
                        const SolverConfig& cfg);

/// alpha_j += sigma * g_j; sigma *= N (capped); k += 1.
SolverState multiplier_update(const SolverState& state, const CnForm& form, const Partition& partition,
                              const SolverConfig& cfg);

enum class SolveStatus { Optimal, Approximate, MaxOuterIters, Diverged };

std::string to_string(SolveStatus s);

struct TraceEntry {
    int k = 0;
    double residual = 0.0;
    std::optional<double> f_value;
    double g_value = 0.0;
    double hk = 0.0;
    double sigma = 0.0;
    double wall_time = 0.0;
    double max_block_grad = 0.0;
    double ineq_violation = 0.0;
};

struct SolveReport {
    SolveStatus status = SolveStatus::MaxOuterIters;
    SolverState final_state;
    std::vector<TraceEntry> trace;
    std::optional<Verdict> certificate;
    /// max g over the trace (level-set diagnostic).
    double max_g_value = 0.0;
    double max_hk = 0.0;
    double wall_time = 0.0;

    int iterations() const { return static_cast<int>(trace.size()); }
};

SolveReport solve(const CnForm& form, const Partition& partition, const SolverConfig& cfg);

/// Multipliers alpha^k + sigma_k g(x^k, y^k) in global constraint order.
Vec final_multipliers(const Partition& partition, const SolverState& state, Index r);

/// Normalized stationarity residual at the final point (Verdict::value), with
/// hinge terms entering as multipliers 2 sigma max{h, 0};
/// Certified only when blockwise_condition also certifies.
Verdict certify_solution(const CnForm& form, const Partition& partition, const SolveReport& report);

}  // namespace cnopt
