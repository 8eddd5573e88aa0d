#include "cnopt/scalar_field.hpp"

#include "cnopt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace cnopt {

namespace {

double ipow(double base, int p)
{
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= base;
    return r;
}

std::vector<Index> normalized_support(std::vector<Index> s)
{
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    return s;
}

}  // namespace

ScalarField::ScalarField(Index dim, ValueFn value, GradFn add_grad, HessVecFn add_hess_vec,
                         std::optional<std::vector<Index>> support)
    : dim_(dim),
      value_(std::move(value)),
      add_grad_(std::move(add_grad)),
      add_hess_vec_(std::move(add_hess_vec)),
      support_(support ? normalized_support(std::move(*support)) : std::vector<Index>{}),
      dense_(!support.has_value())
{
    if (dim_ <= 0) throw Error(ErrorCode::DimensionMismatch, "field dimension must be positive");
}

Vec ScalarField::gradient(const Vec& w) const
{
    Vec g = Vec::Zero(dim_);
    add_grad_(w, 1.0, g);
    return g;
}

Vec ScalarField::hess_vec(const Vec& w, const Vec& v) const
{
    Vec out = Vec::Zero(dim_);
    add_hess_vec(w, v, 1.0, out);
    return out;
}

void ScalarField::add_hess_vec(const Vec& w, const Vec& v, double scale, Vec& out) const
{
    if (!add_hess_vec_) throw Error(ErrorCode::MissingHessian, "field has no Hessian-vector product");
    add_hess_vec_(w, v, scale, out);
}

bool ScalarField::reads(Index coordinate) const
{
    if (dense_) return true;
    return std::binary_search(support_.begin(), support_.end(), coordinate);
}

namespace fields {

ScalarField polynomial(Index dim, std::vector<Monomial> terms)
{
    std::vector<Index> support;
    for (const auto& t : terms)
        for (const auto& [var, pw] : t.powers) {
            if (var < 0 || var >= dim) throw Error(ErrorCode::DimensionMismatch, "monomial index out of range");
            if (pw < 0) throw Error(ErrorCode::BadSpec, "negative monomial power");
            support.push_back(var);
        }
    auto shared = std::make_shared<const std::vector<Monomial>>(std::move(terms));

    auto value = [shared](const Vec& w) {
        double total = 0.0;
        for (const auto& t : *shared) {
            double v = t.coef;
            for (const auto& [var, pw] : t.powers) v *= ipow(w[var], pw);
            total += v;
        }
        return total;
    };
    auto grad = [shared](const Vec& w, double scale, Vec& out) {
        for (const auto& t : *shared) {
            const auto k = t.powers.size();
            for (std::size_t a = 0; a < k; ++a) {
                const auto [va, pa] = t.powers[a];
                if (pa == 0) continue;
                double d = scale * t.coef * pa * ipow(w[va], pa - 1);
                for (std::size_t b = 0; b < k; ++b)
                    if (b != a) d *= ipow(w[t.powers[b].first], t.powers[b].second);
                out[va] += d;
            }
        }
    };
    auto hess = [shared](const Vec& w, const Vec& v, double scale, Vec& out) {
        for (const auto& t : *shared) {
            const auto k = t.powers.size();
            for (std::size_t a = 0; a < k; ++a) {
                const auto [va, pa] = t.powers[a];
                if (pa == 0) continue;
                for (std::size_t b = 0; b < k; ++b) {
                    const auto [vb, pb] = t.powers[b];
                    double h = scale * t.coef;
                    if (a == b) {
                        if (pa < 2) continue;
                        h *= pa * (pa - 1) * ipow(w[va], pa - 2);
                    } else {
                        if (pb == 0) continue;
                        h *= pa * ipow(w[va], pa - 1) * pb * ipow(w[vb], pb - 1);
                    }
                    for (std::size_t c = 0; c < k; ++c)
                        if (c != a && c != b) h *= ipow(w[t.powers[c].first], t.powers[c].second);
                    out[va] += h * v[vb];
                }
            }
        }
    };
    return ScalarField(dim, value, grad, hess, std::move(support));
}

ScalarField affine_square(Index dim, SparseCoeffs coeffs, double constant, double weight)
{
    std::vector<Index> support;
    for (const auto& [i, c] : coeffs) {
        if (i < 0 || i >= dim) throw Error(ErrorCode::DimensionMismatch, "affine index out of range");
        support.push_back(i);
    }
    auto cs = std::make_shared<const SparseCoeffs>(std::move(coeffs));
    auto inner = [cs, constant](const Vec& w) {
        double s = constant;
        for (const auto& [i, c] : *cs) s += c * w[i];
        return s;
    };
    auto value = [inner, weight](const Vec& w) {
        const double s = inner(w);
        return weight * s * s;
    };
    auto grad = [cs, inner, weight](const Vec& w, double scale, Vec& out) {
        const double f = 2.0 * weight * scale * inner(w);
        for (const auto& [i, c] : *cs) out[i] += f * c;
    };
    auto hess = [cs, weight](const Vec&, const Vec& v, double scale, Vec& out) {
        double av = 0.0;
        for (const auto& [i, c] : *cs) av += c * v[i];
        const double f = 2.0 * weight * scale * av;
        for (const auto& [i, c] : *cs) out[i] += f * c;
    };
    return ScalarField(dim, value, grad, hess, std::move(support));
}

ScalarField linear(Index dim, SparseCoeffs coeffs, double constant)
{
    std::vector<Index> support;
    for (const auto& [i, c] : coeffs) {
        if (i < 0 || i >= dim) throw Error(ErrorCode::DimensionMismatch, "linear index out of range");
        support.push_back(i);
    }
    auto cs = std::make_shared<const SparseCoeffs>(std::move(coeffs));
    auto value = [cs, constant](const Vec& w) {
        double s = constant;
        for (const auto& [i, c] : *cs) s += c * w[i];
        return s;
    };
    auto grad = [cs](const Vec&, double scale, Vec& out) {
        for (const auto& [i, c] : *cs) out[i] += scale * c;
    };
    auto hess = [](const Vec&, const Vec&, double, Vec&) {};
    return ScalarField(dim, value, grad, hess, std::move(support));
}

ScalarField constant(Index dim, double value)
{
    return linear(dim, {}, value);
}

ScalarField sum(const std::vector<ScalarField>& parts)
{
    if (parts.empty()) throw Error(ErrorCode::BadSpec, "sum of zero fields");
    const Index dim = parts.front().dim();
    bool all_hv = true;
    bool any_dense = false;
    std::vector<Index> support;
    for (const auto& p : parts) {
        if (p.dim() != dim) throw Error(ErrorCode::DimensionMismatch, "summands differ in dimension");
        all_hv = all_hv && p.has_hess_vec();
        if (p.dense()) any_dense = true;
        support.insert(support.end(), p.support().begin(), p.support().end());
    }
    auto ps = std::make_shared<const std::vector<ScalarField>>(parts);
    auto value = [ps](const Vec& w) {
        double s = 0.0;
        for (const auto& p : *ps) s += p(w);
        return s;
    };
    auto grad = [ps](const Vec& w, double scale, Vec& out) {
        for (const auto& p : *ps) p.add_gradient(w, scale, out);
    };
    ScalarField::HessVecFn hess;
    if (all_hv)
        hess = [ps](const Vec& w, const Vec& v, double scale, Vec& out) {
            for (const auto& p : *ps) p.add_hess_vec(w, v, scale, out);
        };
    if (any_dense) return ScalarField(dim, value, grad, hess);
    return ScalarField(dim, value, grad, hess, std::move(support));
}

ScalarField scaled(const ScalarField& f, double a)
{
    auto value = [f, a](const Vec& w) { return a * f(w); };
    auto grad = [f, a](const Vec& w, double scale, Vec& out) { f.add_gradient(w, a * scale, out); };
    ScalarField::HessVecFn hess;
    if (f.has_hess_vec())
        hess = [f, a](const Vec& w, const Vec& v, double scale, Vec& out) { f.add_hess_vec(w, v, a * scale, out); };
    if (f.dense()) return ScalarField(f.dim(), value, grad, hess);
    return ScalarField(f.dim(), value, grad, hess, f.support());
}

ScalarField remap(const ScalarField& f, Index new_dim, const std::vector<Index>& map)
{
    if (static_cast<Index>(map.size()) != f.dim())
        throw Error(ErrorCode::DimensionMismatch, "remap table size must equal the field dimension");
    for (Index t : map)
        if (t < 0 || t >= new_dim) throw Error(ErrorCode::DimensionMismatch, "remap target out of range");

    auto idx = std::make_shared<const std::vector<Index>>(map);
    // Only the support coordinates need gathering/scattering.
    std::vector<Index> local;
    if (f.dense()) {
        local.resize(map.size());
        for (Index k = 0; k < f.dim(); ++k) local[k] = k;
    } else {
        local = f.support();
    }
    auto loc = std::make_shared<const std::vector<Index>>(local);
    const Index old_dim = f.dim();

    auto gather = [idx, loc, old_dim](const Vec& w) {
        Vec z = Vec::Zero(old_dim);
        for (Index k : *loc) z[k] = w[(*idx)[k]];
        return z;
    };
    auto value = [f, gather](const Vec& w) { return f(gather(w)); };
    auto grad = [f, gather, idx, loc, old_dim](const Vec& w, double scale, Vec& out) {
        Vec g = Vec::Zero(old_dim);
        f.add_gradient(gather(w), scale, g);
        for (Index k : *loc) out[(*idx)[k]] += g[k];
    };
    ScalarField::HessVecFn hess;
    if (f.has_hess_vec())
        hess = [f, gather, idx, loc, old_dim](const Vec& w, const Vec& v, double scale, Vec& out) {
            Vec vz = Vec::Zero(old_dim);
            for (Index k : *loc) vz[k] = v[(*idx)[k]];
            Vec h = Vec::Zero(old_dim);
            f.add_hess_vec(gather(w), vz, scale, h);
            for (Index k : *loc) out[(*idx)[k]] += h[k];
        };
    std::vector<Index> support;
    support.reserve(local.size());
    for (Index k : local) support.push_back(map[k]);
    return ScalarField(new_dim, value, grad, hess, std::move(support));
}

}  // namespace fields

Vec fd_gradient(const ScalarField& f, const Vec& w, double h)
{
    Vec g = Vec::Zero(f.dim());
    Vec p = w;
    for (Index i = 0; i < f.dim(); ++i) {
        const double step = h * std::max(1.0, std::abs(w[i]));
        p[i] = w[i] + step;
        const double fp = f(p);
        p[i] = w[i] - step;
        const double fm = f(p);
        p[i] = w[i];
        g[i] = (fp - fm) / (2.0 * step);
    }
    return g;
}

Vec fd_hess_vec(const ScalarField& f, const Vec& w, const Vec& v, double h)
{
    const double nv = v.norm();
    if (nv == 0.0) return Vec::Zero(f.dim());
    const double step = h * std::max(1.0, w.norm()) / nv;
    return (f.gradient(w + step * v) - f.gradient(w - step * v)) / (2.0 * step);
}

Mat dense_hessian(const ScalarField& f, const Vec& w)
{
    const Index d = f.dim();
    Mat H(d, d);
    Vec e = Vec::Zero(d);
    for (Index i = 0; i < d; ++i) {
        e[i] = 1.0;
        H.col(i) = f.has_hess_vec() ? f.hess_vec(w, e) : fd_hess_vec(f, w, e);
        e[i] = 0.0;
    }
    return 0.5 * (H + H.transpose());
}

}  // namespace cnopt
