#include "cnopt/combinators.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/random.hpp"

#include <algorithm>
#include <cmath>

namespace cnopt {

namespace {

std::vector<Index> identity_map(Index k)
{
    std::vector<Index> v(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = i;
    return v;
}

/// Map for a form with (n, m) embedded into (n, total_m) with its y starting at y_offset.
std::vector<Index> embed_map(Index n, Index m, Index y_offset)
{
    std::vector<Index> v = identity_map(n);
    for (Index k = 0; k < m; ++k) v.push_back(n + y_offset + k);
    return v;
}

Vec gather(const Vec& w, const std::vector<Index>& map)
{
    Vec z(static_cast<Index>(map.size()));
    for (std::size_t k = 0; k < map.size(); ++k) z[static_cast<Index>(k)] = w[map[k]];
    return z;
}

void scatter_add(Mat& big, const Mat& small, const std::vector<Index>& map, double scale)
{
    for (std::size_t a = 0; a < map.size(); ++a)
        for (std::size_t b = 0; b < map.size(); ++b)
            big(map[a], map[b]) += scale * small(static_cast<Index>(a), static_cast<Index>(b));
}

std::vector<ScalarField> remap_all(const std::vector<ScalarField>& fs, Index dim, const std::vector<Index>& map)
{
    std::vector<ScalarField> out;
    out.reserve(fs.size());
    for (const auto& f : fs) out.push_back(fields::remap(f, dim, map));
    return out;
}

std::vector<Vec> cartesian(const std::vector<Vec>& a, const std::vector<Vec>& b)
{
    std::vector<Vec> out;
    out.reserve(a.size() * b.size());
    for (const auto& u : a)
        for (const auto& v : b) {
            Vec w(u.size() + v.size());
            w << u, v;
            out.push_back(std::move(w));
        }
    return out;
}

std::vector<std::string> prefixed(const CnForm& f, const std::string& prefix)
{
    std::vector<std::string> names;
    for (Index k = 0; k < f.m; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        names.push_back(prefix + (ks < f.y_names.size() ? f.y_names[ks] : "y" + std::to_string(k + 1)));
    }
    return names;
}

void require_same_n(const CnForm& f1, const CnForm& f2)
{
    if (f1.n != f2.n) throw Error(ErrorCode::DimensionMismatch, "combined forms must share the x-dimension");
}

}  // namespace

CnForm trivial_form(const ScalarField& g, std::string name)
{
    const Index n = g.dim();
    CnForm out;
    out.name = std::move(name);
    out.n = n;
    out.m = 1;
    out.objective = fields::remap(g, n + 1, identity_map(n));
    out.constraints = {fields::linear(n + 1, {{n, 0.0}})};
    out.domain = Box::unbounded(n);
    out.sample_box = Box::cube(n, -5.0, 5.0);
    out.exact = true;
    out.lift = [](const Vec&) { return Vec::Zero(1).eval(); };
    out.f_direct = [g](const Vec& x) { return g(x); };
    out.y_names = {"dummy"};
    return out;
}

CnForm scale_add(const CnForm& f1, const CnForm& f2, double a1, double a2)
{
    require_same_n(f1, f2);
    const bool both_exact = f1.exact && f2.exact;
    if ((a1 <= 0.0 || a2 <= 0.0) && !both_exact)
        throw Error(ErrorCode::NonExactNegativeScale, "nonpositive scalar applied to a non-exact form");

    const Index n = f1.n;
    const Index m = f1.m + f2.m;
    const Index dim = n + m;
    const auto map1 = embed_map(n, f1.m, 0);
    const auto map2 = embed_map(n, f2.m, f1.m);

    CnForm out;
    out.name = "(" + f1.name + ")+(" + f2.name + ")";
    out.n = n;
    out.m = m;
    out.objective = fields::sum({fields::scaled(fields::remap(f1.objective, dim, map1), a1),
                                 fields::scaled(fields::remap(f2.objective, dim, map2), a2)});
    out.constraints = remap_all(f1.constraints, dim, map1);
    for (auto& c : remap_all(f2.constraints, dim, map2)) out.constraints.push_back(std::move(c));
    out.ineq_constraints = remap_all(f1.ineq_constraints, dim, map1);
    for (auto& c : remap_all(f2.ineq_constraints, dim, map2)) out.ineq_constraints.push_back(std::move(c));
    out.domain = f1.domain.intersect(f2.domain);
    out.sample_box = f1.sample_box.intersect(f2.sample_box);
    out.exact = both_exact;

    if (a1 > 0.0 && a2 > 0.0 && grade_rank(f1.grade) > 0 && grade_rank(f2.grade) > 0) {
        const ConvexityGrade g1 = f1.grade, g2 = f2.grade;
        const Index d1 = f1.dim(), d2 = f2.dim();
        out.grade = grade::WeakUniform{[=](const Vec& w) {
            Mat B = Mat::Zero(dim, dim);
            scatter_add(B, *curvature_matrix(g1, gather(w, map1), d1), map1, a1);
            scatter_add(B, *curvature_matrix(g2, gather(w, map2), d2), map2, a2);
            return B;
        }};
    }

    const CnForm c1 = f1, c2 = f2;
    out.lift = [c1, c2](const Vec& x) {
        Vec y(c1.m + c2.m);
        y << c1.lift(x), c2.lift(x);
        return y;
    };
    out.lift_branches = [c1, c2](const Vec& x, std::span<const Index> focus) {
        return cartesian(c1.branches(x, focus), c2.branches(x, focus));
    };
    if (f1.f_direct && f2.f_direct) {
        auto d1 = f1.f_direct, d2 = f2.f_direct;
        out.f_direct = [d1, d2, a1, a2](const Vec& x) { return a1 * d1(x) + a2 * d2(x); };
    }
    out.y_names = prefixed(f1, "f1.");
    for (auto& s : prefixed(f2, "f2.")) out.y_names.push_back(std::move(s));
    return out;
}

CnForm negate_exact(const CnForm& f)
{
    if (!f.exact) throw Error(ErrorCode::NotExact, "negation requires an exact form");
    CnForm out = f;
    out.name = "-(" + f.name + ")";
    out.objective = fields::scaled(f.objective, -1.0);
    out.grade = grade::Plain{};
    if (f.f_direct) {
        auto d = f.f_direct;
        out.f_direct = [d](const Vec& x) { return -d(x); };
    }
    return out;
}

CnForm product_exact(const CnForm& f1, const CnForm& f2)
{
    if (!f1.exact || !f2.exact) throw Error(ErrorCode::NotExact, "product requires exact forms");
    require_same_n(f1, f2);
    const Index n = f1.n;
    const Index base = f1.m + f2.m;
    const Index m = base + 4;
    const Index dim = n + m;
    const Index u1 = n + base, u2 = u1 + 1, v1 = u1 + 2, v2 = u1 + 3;
    const auto map1 = embed_map(n, f1.m, 0);
    const auto map2 = embed_map(n, f2.m, f1.m);

    CnForm out;
    out.name = "(" + f1.name + ")*(" + f2.name + ")";
    out.n = n;
    out.m = m;
    out.objective = fields::sum({fields::affine_square(dim, {{u1, 1.0}, {u2, 1.0}}, 0.0, 0.5),
                                 fields::linear(dim, {{v1, -0.5}, {v2, -0.5}})});
    out.constraints = remap_all(f1.constraints, dim, map1);
    for (auto& c : remap_all(f2.constraints, dim, map2)) out.constraints.push_back(std::move(c));
    out.constraints.push_back(fields::sum({fields::remap(f1.objective, dim, map1), fields::linear(dim, {{u1, -1.0}})}));
    out.constraints.push_back(fields::sum({fields::remap(f2.objective, dim, map2), fields::linear(dim, {{u2, -1.0}})}));
    out.constraints.push_back(fields::polynomial(dim, {{1.0, {{u1, 2}}}, {-1.0, {{v1, 1}}}}));
    out.constraints.push_back(fields::polynomial(dim, {{1.0, {{u2, 2}}}, {-1.0, {{v2, 1}}}}));
    out.ineq_constraints = remap_all(f1.ineq_constraints, dim, map1);
    for (auto& c : remap_all(f2.ineq_constraints, dim, map2)) out.ineq_constraints.push_back(std::move(c));
    out.domain = f1.domain.intersect(f2.domain);
    out.sample_box = f1.sample_box.intersect(f2.sample_box);
    out.exact = true;
    out.grade = grade::WeakUniform{[dim, u1, u2](const Vec&) {
        Mat B = Mat::Zero(dim, dim);
        B(u1, u1) = B(u1, u2) = B(u2, u1) = B(u2, u2) = 1.0;
        return B;
    }};

    const CnForm c1 = f1, c2 = f2;
    auto complete = [c1, c2](const Vec& x, const Vec& y1, const Vec& y2) {
        Vec w1(c1.dim()), w2(c2.dim());
        w1 << x, y1;
        w2 << x, y2;
        const double a = c1.objective(w1), b = c2.objective(w2);
        Vec y(c1.m + c2.m + 4);
        y << y1, y2, a, b, a * a, b * b;
        return y;
    };
    out.lift = [c1, c2, complete](const Vec& x) { return complete(x, c1.lift(x), c2.lift(x)); };
    out.lift_branches = [c1, c2, complete](const Vec& x, std::span<const Index> focus) {
        std::vector<Vec> out;
        for (const auto& y1 : c1.branches(x, focus))
            for (const auto& y2 : c2.branches(x, focus)) out.push_back(complete(x, y1, y2));
        return out;
    };
    if (f1.f_direct && f2.f_direct) {
        auto d1 = f1.f_direct, d2 = f2.f_direct;
        out.f_direct = [d1, d2](const Vec& x) { return d1(x) * d2(x); };
    }
    out.y_names = prefixed(f1, "f1.");
    for (auto& s : prefixed(f2, "f2.")) out.y_names.push_back(std::move(s));
    for (const char* s : {"u1", "u2", "v1", "v2"}) out.y_names.emplace_back(s);
    return out;
}

namespace {

double phi_at(const ScalarField& phi, double t)
{
    return phi(Vec::Constant(1, t));
}

double dphi_at(const ScalarField& phi, double t)
{
    return phi.gradient(Vec::Constant(1, t))[0];
}

void spot_check_phi(const ScalarField& phi, const CnForm& f)
{
    double lo = -10.0, hi = 10.0;
    if (f.lift) {
        Rng rng(derive_seed(0x5eed, 7));
        Box b = f.sample_box;
        for (Index i = 0; i < b.dim(); ++i) {
            if (!std::isfinite(b.lower[i])) b.lower[i] = -1.0;
            if (!std::isfinite(b.upper[i])) b.upper[i] = 1.0;
        }
        for (int s = 0; s < 32; ++s) {
            const Vec x = uniform_vector(rng, b.lower, b.upper);
            const double t = f.objective(f.join(x, f.lift(x)));
            if (std::isfinite(t)) {
                lo = std::min(lo, t - 1.0);
                hi = std::max(hi, t + 1.0);
            }
        }
    }
    constexpr int kGrid = 129;
    for (int k = 0; k < kGrid; ++k) {
        const double t = lo + (hi - lo) * k / (kGrid - 1);
        if (dphi_at(phi, t) < -1e-10)
            throw Error(ErrorCode::MonotonicityRefuted, "phi decreases at t = " + std::to_string(t));
        if (k + 2 < kGrid) {
            const double a = t, b = lo + (hi - lo) * (k + 2) / (kGrid - 1);
            const double mid = phi_at(phi, 0.5 * (a + b));
            const double chord = 0.5 * (phi_at(phi, a) + phi_at(phi, b));
            if (mid > chord + 1e-10 * std::max(1.0, std::abs(chord)))
                throw Error(ErrorCode::MonotonicityRefuted, "phi fails midpoint convexity near t = " + std::to_string(t));
        }
    }
}

}  // namespace

CnForm compose_monotone(const ScalarField& phi, bool phi_convex_increasing, const CnForm& f,
                        std::optional<BProvider> composed_B)
{
    if (phi.dim() != 1) throw Error(ErrorCode::DimensionMismatch, "phi must be a function of one variable");
    if (!phi_convex_increasing) throw Error(ErrorCode::BadSpec, "phi must be attested convex and nondecreasing");
    spot_check_phi(phi, f);

    const ScalarField g = f.objective;
    auto value = [phi, g](const Vec& w) { return phi_at(phi, g(w)); };
    auto grad = [phi, g](const Vec& w, double scale, Vec& out) { g.add_gradient(w, scale * dphi_at(phi, g(w)), out); };
    ScalarField::HessVecFn hess;
    if (g.has_hess_vec() && phi.has_hess_vec())
        hess = [phi, g](const Vec& w, const Vec& v, double scale, Vec& out) {
            const Vec t = Vec::Constant(1, g(w));
            const double d1 = phi.gradient(t)[0];
            const double d2 = phi.hess_vec(t, Vec::Ones(1))[0];
            const Vec gw = g.gradient(w);
            out += (scale * d2 * gw.dot(v)) * gw;
            g.add_hess_vec(w, v, scale * d1, out);
        };

    CnForm out = f;
    out.name = "phi(" + f.name + ")";
    out.objective = g.dense() ? ScalarField(g.dim(), value, grad, hess)
                              : ScalarField(g.dim(), value, grad, hess, g.support());
    out.grade = composed_B ? ConvexityGrade{grade::WeakUniform{*composed_B}} : ConvexityGrade{grade::Plain{}};
    if (f.f_direct) {
        auto d = f.f_direct;
        out.f_direct = [phi, d](const Vec& x) { return phi_at(phi, d(x)); };
    }
    return out;
}

CnForm from_dc(const ScalarField& d, const ScalarField& c, std::optional<BProvider> d_B)
{
    if (d.dim() != c.dim()) throw Error(ErrorCode::DimensionMismatch, "d and c must share a dimension");
    const Index n = d.dim();
    const Index dim = n + 1;
    const auto map = identity_map(n);

    CnForm out;
    out.name = "dc";
    out.n = n;
    out.m = 1;
    out.objective = fields::sum({fields::remap(d, dim, map), fields::linear(dim, {{n, -1.0}})});
    out.constraints = {fields::sum({fields::remap(c, dim, map), fields::linear(dim, {{n, -1.0}})})};
    out.domain = Box::unbounded(n);
    out.sample_box = Box::cube(n, -5.0, 5.0);
    out.exact = true;
    if (d_B) {
        BProvider inner = *d_B;
        out.grade = grade::WeakUniform{[inner, n, dim](const Vec& w) {
            Mat B = Mat::Zero(dim, dim);
            B.topLeftCorner(n, n) = inner(w.head(n));
            return B;
        }};
    }
    out.lift = [c](const Vec& x) { return Vec::Constant(1, c(x)).eval(); };
    out.f_direct = [d, c](const Vec& x) { return d(x) - c(x); };
    out.y_names = {"z"};
    return out;
}

}  // namespace cnopt
