#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace cnopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

/// A differentiable function R^dim -> R.
///
/// Gradients and Hessian-vector products are accumulated into caller-owned
/// buffers (`out += scale * grad`), so sparse fields only touch their support.
class ScalarField {
public:
    using ValueFn = std::function<double(const Vec&)>;
    using GradFn = std::function<void(const Vec&, double, Vec&)>;
    using HessVecFn = std::function<void(const Vec&, const Vec&, double, Vec&)>;

    ScalarField() = default;
    /// `support == nullopt` marks a dense field; an empty support is a constant.
    ScalarField(Index dim, ValueFn value, GradFn add_grad, HessVecFn add_hess_vec = {},
                std::optional<std::vector<Index>> support = std::nullopt);

    Index dim() const noexcept { return dim_; }
    bool valid() const noexcept { return static_cast<bool>(value_); }

    double operator()(const Vec& w) const { return value_(w); }
    Vec gradient(const Vec& w) const;
    void add_gradient(const Vec& w, double scale, Vec& out) const { add_grad_(w, scale, out); }

    bool has_hess_vec() const noexcept { return static_cast<bool>(add_hess_vec_); }
    /// Throws Error(MissingHessian) when the field carries no second-order information.
    Vec hess_vec(const Vec& w, const Vec& v) const;
    void add_hess_vec(const Vec& w, const Vec& v, double scale, Vec& out) const;

    /// Sorted coordinates the field depends on (meaningless when dense()).
    const std::vector<Index>& support() const noexcept { return support_; }
    bool dense() const noexcept { return dense_; }
    bool reads(Index coordinate) const;

private:
    Index dim_ = 0;
    ValueFn value_;
    GradFn add_grad_;
    HessVecFn add_hess_vec_;
    std::vector<Index> support_;
    bool dense_ = true;
};

/// coef * prod_k w[var_k]^pow_k
struct Monomial {
    double coef = 0.0;
    std::vector<std::pair<Index, int>> powers;
};

using SparseCoeffs = std::vector<std::pair<Index, double>>;

namespace fields {

ScalarField polynomial(Index dim, std::vector<Monomial> terms);

/// weight * (sum_k c_k w_k + constant)^2
ScalarField affine_square(Index dim, SparseCoeffs coeffs, double constant, double weight = 1.0);

/// sum_k c_k w_k + constant
ScalarField linear(Index dim, SparseCoeffs coeffs, double constant = 0.0);

ScalarField constant(Index dim, double value);

ScalarField sum(const std::vector<ScalarField>& parts);

ScalarField scaled(const ScalarField& f, double a);

/// Embeds `f` into a larger space: old coordinate k is read from new coordinate map[k].
ScalarField remap(const ScalarField& f, Index new_dim, const std::vector<Index>& map);

}  // namespace fields

/// Central-difference gradient, step h scaled by max(1, |w_i|).
Vec fd_gradient(const ScalarField& f, const Vec& w, double h = 1e-6);

/// Central difference of the analytic gradient along v.
Vec fd_hess_vec(const ScalarField& f, const Vec& w, const Vec& v, double h = 1e-6);

/// Dense Hessian assembled from hess_vec (or from finite differences of the
/// gradient when the field has no hess_vec).
Mat dense_hessian(const ScalarField& f, const Vec& w);

}  // namespace cnopt
