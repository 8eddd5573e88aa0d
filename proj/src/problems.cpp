#include "cnopt/problems.hpp"

#include "cnopt/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace cnopt {

std::string to_string(ProblemName p)
{
    switch (p) {
    case ProblemName::Ex42: return "ex42";
    case ProblemName::ZeroNormLs: return "zero-norm";
    case ProblemName::Ex43: return "ex43";
    case ProblemName::Ex44: return "ex44";
    case ProblemName::Ex45: return "ex45";
    }
    return "unknown";
}

ProblemName parse_problem_name(const std::string& s)
{
    std::string t;
    for (char c : s)
        if (c != '-' && c != '_' && c != '.') t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "ex42" || t == "ex8") return ProblemName::Ex42;
    if (t == "zeronorm" || t == "zeronormls" || t == "ex9") return ProblemName::ZeroNormLs;
    if (t == "ex43") return ProblemName::Ex43;
    if (t == "ex44") return ProblemName::Ex44;
    if (t == "ex45") return ProblemName::Ex45;
    throw Error(ErrorCode::BadSpec, "unknown problem '" + s + "'");
}

Index count_nonzero(const Vec& x, double tol)
{
    return (x.array().abs() > tol).count();
}

namespace {

using M = Monomial;

/// c * w[i]^k
M mono(double c, Index i, int k)
{
    return M{c, {{i, k}}};
}

ScalarField poly(Index dim, std::vector<M> t)
{
    return fields::polynomial(dim, std::move(t));
}

void require_positive_lambda(const ProblemSpec& s)
{
    if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) throw Error(ErrorCode::BadSpec, "lambda must be positive");
}

void require_blocks(const ProblemSpec& s)
{
    if (s.n < 1) throw Error(ErrorCode::BadSpec, "n must be positive");
    if (s.e < 1 || s.n % s.e != 0) throw Error(ErrorCode::BadSpec, "n must be a positive multiple of e");
}

// (x1 + x2 - 1)^2 + lambda (|x1|^1/2 + |x2|^1/2); y = (y1..y6) at w[2..7].
Problem make_ex42(const ProblemSpec& s)
{
    require_positive_lambda(s);
    if (s.n != 2) throw Error(ErrorCode::BadSpec, "ex42 has n = 2");
    const Index n = 2, m = 6, d = 8;
    const double lam = s.lambda;
    const Index x1 = 0, x2 = 1, y1 = 2, y2 = 3, y3 = 4, y4 = 5, y5 = 6, y6 = 7;

    Problem P;
    CnForm& F = P.form;
    F.name = s.ex42_squared ? "ex42-squared" : "ex42";
    F.n = n;
    F.m = m;
    if (s.ex42_squared)
        F.objective = fields::sum({fields::affine_square(d, {{x1, 1.0}, {x2, 1.0}}, -1.0),
                                   poly(d, {mono(lam, y2, 2), mono(lam, y5, 2)})});
    else
        F.objective = fields::sum({fields::affine_square(d, {{x1, 1.0}, {x2, 1.0}}, -1.0),
                                   fields::linear(d, {{y1, lam}, {y4, lam}})});
    F.constraints = {
        poly(d, {mono(1.0, y1, 4), mono(-1.0, y3, 1)}), poly(d, {mono(1.0, x1, 2), mono(-1.0, y3, 1)}),
        poly(d, {mono(1.0, y2, 2), mono(-1.0, y1, 1)}), poly(d, {mono(1.0, y4, 4), mono(-1.0, y6, 1)}),
        poly(d, {mono(1.0, x2, 2), mono(-1.0, y6, 1)}), poly(d, {mono(1.0, y5, 2), mono(-1.0, y4, 1)}),
    };
    F.domain = Box::unbounded(n);
    F.sample_box = Box::cube(n, -4.0, 4.0);
    const bool sq = s.ex42_squared;
    F.grade = grade::WeakUniform{[d, lam, sq, x1, x2, y2, y5](const Vec&) {
        Mat B = Mat::Zero(d, d);
        B(x1, x1) = B(x1, x2) = B(x2, x1) = B(x2, x2) = 2.0;
        if (sq) B(y2, y2) = B(y5, y5) = 2.0 * lam;
        return B;
    }};
    F.exact = true;
    F.lift = [](const Vec& x) {
        Vec y(6);
        for (int k = 0; k < 2; ++k) {
            const double a = std::abs(x[k]);
            y[3 * k] = std::sqrt(a);
            y[3 * k + 1] = std::sqrt(std::sqrt(a));
            y[3 * k + 2] = x[k] * x[k];
        }
        return y;
    };
    F.f_direct = [lam](const Vec& x) {
        const double r = x[0] + x[1] - 1.0;
        return r * r + lam * (std::sqrt(std::abs(x[0])) + std::sqrt(std::abs(x[1])));
    };
    F.y_names = {"y1", "y2", "y3", "y4", "y5", "y6"};

    P.partition.p = 2;
    P.partition.x_blocks = {{0}, {1}};
    P.partition.y_blocks = {{0, 1, 2}, {3, 4, 5}};
    P.partition.constraint_owner = {0, 0, 0, 1, 1, 1};
    P.defaults.sigma1 = 1000.0;
    P.defaults.N = 1000.0;
    P.defaults.alpha0 = Vec::Constant(6, 2.0);
    P.defaults.w0 = Vec::Constant(d, 2.0);
    return P;
}

// ||Ax - b||^2 + lambda sum y_i^2 with y_i at w[n+i], z_i at w[2n+i].
Problem make_zero_norm(const Mat& A, const Vec& b, double lam, Index e, std::string name)
{
    const Index n = A.cols();
    if (A.rows() != b.size() || n < 1) throw Error(ErrorCode::BadSpec, "zero-norm data: A rows must match b");
    if (e < 1 || n % e != 0) throw Error(ErrorCode::BadSpec, "n must be a positive multiple of e");
    const Index m = 2 * n, d = 3 * n;

    Problem P;
    CnForm& F = P.form;
    F.name = std::move(name);
    F.n = n;
    F.m = m;
    std::vector<ScalarField> obj;
    for (Index row = 0; row < A.rows(); ++row) {
        SparseCoeffs c;
        for (Index i = 0; i < n; ++i)
            if (A(row, i) != 0.0) c.push_back({i, A(row, i)});
        obj.push_back(fields::affine_square(d, std::move(c), -b[row]));
    }
    std::vector<M> ysq;
    for (Index i = 0; i < n; ++i) ysq.push_back(mono(lam, n + i, 2));
    obj.push_back(poly(d, std::move(ysq)));
    F.objective = fields::sum(obj);

    for (Index i = 0; i < n; ++i)
        F.constraints.push_back(fields::sum(
            {fields::affine_square(d, {{i, 1.0}, {n + i, 1.0}}, -1.0), fields::linear(d, {{2 * n + i, -1.0}})}));
    for (Index i = 0; i < n; ++i)
        F.constraints.push_back(fields::sum({poly(d, {mono(1.0, i, 2), mono(-1.0, 2 * n + i, 1)}),
                                             fields::affine_square(d, {{n + i, 1.0}}, -1.0)}));
    for (Index i = 0; i < n; ++i) F.constraints.push_back(poly(d, {mono(1.0, n + i, 2), mono(-1.0, n + i, 1)}));

    F.domain = Box::unbounded(n);
    F.sample_box = Box::cube(n, -3.0, 3.0);
    const Mat AtA = 2.0 * A.transpose() * A;
    F.grade = grade::WeakUniform{[AtA, n, d, lam](const Vec&) {
        Mat B = Mat::Zero(d, d);
        B.topLeftCorner(n, n) = AtA;
        for (Index i = 0; i < n; ++i) B(n + i, n + i) = 2.0 * lam;
        return B;
    }};
    F.exact = false;
    F.lift = [n](const Vec& x) {
        Vec y(2 * n);
        for (Index i = 0; i < n; ++i) {
            y[i] = x[i] == 0.0 ? 0.0 : 1.0;
            y[n + i] = x[i] == 0.0 ? 1.0 : x[i] * x[i];
        }
        return y;
    };
    F.lift_branches = [n](const Vec& x, std::span<const Index> focus) {
        Vec base(2 * n);
        std::vector<Index> free;
        for (Index i = 0; i < n; ++i) {
            base[i] = x[i] == 0.0 ? 0.0 : 1.0;
            base[n + i] = x[i] == 0.0 ? 1.0 : x[i] * x[i];
        }
        for (Index i : focus)
            if (x[i] == 0.0) free.push_back(i);
        std::sort(free.begin(), free.end());
        free.erase(std::unique(free.begin(), free.end()), free.end());
        if (free.size() > 16) throw Error(ErrorCode::TooLarge, "too many zero coordinates to enumerate lift branches");
        std::vector<Vec> out;
        for (std::size_t mask = 0; mask < (std::size_t{1} << free.size()); ++mask) {
            Vec y = base;
            for (std::size_t k = 0; k < free.size(); ++k)
                if (mask & (std::size_t{1} << k)) {
                    y[free[k]] = 1.0;
                    y[n + free[k]] = 0.0;
                }
            out.push_back(std::move(y));
        }
        return out;
    };
    F.f_direct = [A, b, lam](const Vec& x) { return (A * x - b).squaredNorm() + lam * static_cast<double>((x.array() != 0.0).count()); };
    for (Index i = 0; i < n; ++i) F.y_names.push_back("y" + std::to_string(i + 1));
    for (Index i = 0; i < n; ++i) F.y_names.push_back("z" + std::to_string(i + 1));

    const Index p = n / e;
    Partition& Q = P.partition;
    Q.p = p;
    Q.x_blocks.assign(static_cast<std::size_t>(p), {});
    Q.y_blocks.assign(static_cast<std::size_t>(p), {});
    Q.constraint_owner.assign(static_cast<std::size_t>(3 * n), 0);
    for (Index i = 0; i < n; ++i) {
        const Index j = i / e;
        Q.x_blocks[static_cast<std::size_t>(j)].push_back(i);
        Q.y_blocks[static_cast<std::size_t>(j)].push_back(i);
        for (Index t = 0; t < 3; ++t) Q.constraint_owner[static_cast<std::size_t>(t * n + i)] = j;
    }
    for (auto& yb : Q.y_blocks) {
        const auto k = yb.size();
        for (std::size_t a = 0; a < k; ++a) yb.push_back(yb[a] + n);
    }
    P.defaults.sigma1 = 5.0;
    P.defaults.N = 10.0;
    P.defaults.alpha0 = Vec::Zero(3 * n);
    P.defaults.w0 = Vec::Zero(d);
    return P;
}

// n max|x_i| - sum |x_i|; y_i at w[n+i], z_i at w[2n+i], Y at w[3n].
Problem make_ex44(const ProblemSpec& s)
{
    require_blocks(s);
    const Index n = s.n, e = s.e, p = n / e;
    const Index m = 2 * n + 1, d = n + m;
    const Index Y = 3 * n;

    Problem P;
    CnForm& F = P.form;
    F.name = "ex44";
    F.n = n;
    F.m = m;
    SparseCoeffs obj{{Y, static_cast<double>(n)}};
    for (Index i = 0; i < n; ++i) obj.push_back({n + i, -1.0});
    F.objective = fields::linear(d, std::move(obj));
    for (Index i = 0; i < n; ++i) {
        F.constraints.push_back(poly(d, {mono(1.0, n + i, 2), mono(-1.0, 2 * n + i, 1)}));
        F.constraints.push_back(poly(d, {mono(1.0, i, 2), mono(-1.0, 2 * n + i, 1)}));
    }
    for (Index i = 0; i < n; ++i) F.ineq_constraints.push_back(fields::linear(d, {{n + i, -1.0}}));
    for (Index i = 0; i < n; ++i) F.ineq_constraints.push_back(fields::linear(d, {{n + i, 1.0}, {Y, -1.0}}));
    F.domain = Box::unbounded(n);
    F.sample_box = Box::cube(n, -5.0, 5.0);
    F.grade = grade::WeakUniform{[d](const Vec&) { return Mat(Mat::Zero(d, d)); }};
    F.exact = false;
    F.lift = [n](const Vec& x) {
        Vec y(2 * n + 1);
        y.head(n) = x.cwiseAbs();
        y.segment(n, n) = x.cwiseAbs2();
        y[2 * n] = x.cwiseAbs().maxCoeff();
        return y;
    };
    F.f_direct = [n](const Vec& x) { return static_cast<double>(n) * x.cwiseAbs().maxCoeff() - x.cwiseAbs().sum(); };
    for (Index i = 0; i < n; ++i) F.y_names.push_back("y" + std::to_string(i + 1));
    for (Index i = 0; i < n; ++i) F.y_names.push_back("z" + std::to_string(i + 1));
    F.y_names.push_back("Y");

    Partition& Q = P.partition;
    Q.p = p;
    Q.x_blocks.assign(static_cast<std::size_t>(p), {});
    Q.y_blocks.assign(static_cast<std::size_t>(p), {});
    Q.constraint_owner.assign(static_cast<std::size_t>(2 * n), 0);
    for (Index i = 0; i < n; ++i) {
        const auto j = static_cast<std::size_t>(i / e);
        Q.x_blocks[j].push_back(i);
        Q.y_blocks[j].push_back(i);
        Q.constraint_owner[static_cast<std::size_t>(2 * i)] = i / e;
        Q.constraint_owner[static_cast<std::size_t>(2 * i + 1)] = i / e;
    }
    for (Index j = 0; j < p; ++j) {
        auto& yb = Q.y_blocks[static_cast<std::size_t>(j)];
        for (Index t = 0; t < e; ++t) yb.push_back(n + e * j + t);
    }
    Q.y_blocks[0].push_back(2 * n);

    P.defaults.sigma1 = 5.0;
    P.defaults.N = 10.0;
    P.defaults.alpha0 = Vec::Zero(2 * n);
    P.defaults.w0 = Vec::Zero(d);
    for (Index j = 0; j < p; ++j) {
        double v = 1.0;
        for (Index t = 0; t < e; ++t) P.defaults.w0[e * j + t] = v++;
        for (Index t = 0; t < e; ++t) P.defaults.w0[n + e * j + t] = v++;
        for (Index t = 0; t < e; ++t) P.defaults.w0[2 * n + e * j + t] = v++;
        if (j == 0) P.defaults.w0[Y] = v;
    }
    return P;
}

// sum_{i<n-1} (-x_i + 2u_i + 1.75 a_i); u_i at w[n+i], a_i at w[n+(n-1)+i], s_i at w[n+2(n-1)+i].
Problem make_ex45(const ProblemSpec& s)
{
    require_blocks(s);
    if (s.n < 2) throw Error(ErrorCode::BadSpec, "ex45 needs n >= 2");
    const Index n = s.n, e = s.e, p = n / e, k = n - 1;
    const Index m = 3 * k, d = n + m;
    auto U = [n](Index i) { return n + i; };
    auto Aa = [n, k](Index i) { return n + k + i; };
    auto S = [n, k](Index i) { return n + 2 * k + i; };

    Problem P;
    CnForm& F = P.form;
    F.name = "ex45";
    F.n = n;
    F.m = m;
    SparseCoeffs obj;
    for (Index i = 0; i < k; ++i) {
        obj.push_back({i, -1.0});
        obj.push_back({U(i), 2.0});
        obj.push_back({Aa(i), 1.75});
    }
    F.objective = fields::linear(d, std::move(obj));
    for (Index i = 0; i < k; ++i) {
        F.constraints.push_back(poly(d, {mono(1.0, i, 2), mono(1.0, i + 1, 2), M{-1.0, {}}, mono(-1.0, U(i), 1)}));
        F.constraints.push_back(poly(d, {mono(1.0, Aa(i), 2), mono(-1.0, S(i), 1)}));
        F.constraints.push_back(poly(d, {mono(1.0, U(i), 2), mono(-1.0, S(i), 1)}));
    }
    for (Index i = 0; i < k; ++i) {
        F.ineq_constraints.push_back(fields::linear(d, {{U(i), -1.0}}, -1.0));
        F.ineq_constraints.push_back(fields::linear(d, {{Aa(i), -1.0}}));
        F.ineq_constraints.push_back(fields::linear(d, {{S(i), -1.0}}));
    }
    F.domain = Box::unbounded(n);
    F.sample_box = Box::cube(n, -2.0, 2.0);
    F.grade = grade::WeakUniform{[d](const Vec&) { return Mat(Mat::Zero(d, d)); }};
    F.exact = true;
    F.lift = [n, k](const Vec& x) {
        Vec y(3 * k);
        for (Index i = 0; i < k; ++i) {
            const double u = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
            y[i] = u;
            y[k + i] = std::abs(u);
            y[2 * k + i] = u * u;
        }
        (void)n;
        return y;
    };
    F.f_direct = [k](const Vec& x) {
        double f = 0.0;
        for (Index i = 0; i < k; ++i) {
            const double u = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
            f += -x[i] + 2.0 * u + 1.75 * std::abs(u);
        }
        return f;
    };
    for (Index i = 0; i < k; ++i) F.y_names.push_back("u" + std::to_string(i + 1));
    for (Index i = 0; i < k; ++i) F.y_names.push_back("a" + std::to_string(i + 1));
    for (Index i = 0; i < k; ++i) F.y_names.push_back("s" + std::to_string(i + 1));

    Partition& Q = P.partition;
    Q.p = p;
    Q.x_blocks.assign(static_cast<std::size_t>(p), {});
    Q.y_blocks.assign(static_cast<std::size_t>(p), {});
    Q.constraint_owner.assign(static_cast<std::size_t>(3 * k), 0);
    for (Index i = 0; i < n; ++i) Q.x_blocks[static_cast<std::size_t>(i / e)].push_back(i);
    for (Index j = 0; j < p; ++j) {
        auto& yb = Q.y_blocks[static_cast<std::size_t>(j)];
        const Index lo = e * j, hi = std::min(e * j + e, k);
        for (Index i = lo; i < hi; ++i) yb.push_back(i);
        for (Index i = lo; i < hi; ++i) yb.push_back(k + i);
        for (Index i = lo; i < hi; ++i) yb.push_back(2 * k + i);
        for (Index i = lo; i < hi; ++i)
            for (Index t = 0; t < 3; ++t) Q.constraint_owner[static_cast<std::size_t>(3 * i + t)] = j;
    }
    for (Index j = 0; j + 1 < p; ++j) Q.overlap_links.push_back({e * (j + 1), j, j + 1});

    P.defaults.sigma1 = 5.0;
    P.defaults.N = 100.0;
    P.defaults.alpha0 = Vec::Zero(3 * k);
    P.defaults.w0 = Vec::Ones(d);
    return P;
}

}  // namespace

Problem make_problem(const ProblemSpec& spec)
{
    Problem P;
    switch (spec.name) {
    case ProblemName::Ex42: P = make_ex42(spec); break;
    case ProblemName::ZeroNormLs: {
        require_positive_lambda(spec);
        if (!spec.A || !spec.b) throw Error(ErrorCode::BadSpec, "zero-norm problem needs A and b");
        P = make_zero_norm(*spec.A, *spec.b, spec.lambda, spec.e, "zero-norm");
        break;
    }
    case ProblemName::Ex43: {
        require_positive_lambda(spec);
        require_blocks(spec);
        Mat A(1, spec.n);
        for (Index i = 0; i < spec.n; ++i) A(0, i) = static_cast<double>(i + 1);
        P = make_zero_norm(A, Vec::Constant(1, 2.0 * static_cast<double>(spec.n)), spec.lambda, spec.e, "ex43");
        break;
    }
    case ProblemName::Ex44: P = make_ex44(spec); break;
    case ProblemName::Ex45: P = make_ex45(spec); break;
    }
    P.form.validate();
    P.partition.validate(P.form);
    return P;
}

OracleResult brute_force_oracle(const ProblemSpec& spec, const Box& box, int grid_points)
{
    if (spec.n > 3) throw Error(ErrorCode::TooLarge, "grid oracle is limited to n <= 3");
    if (grid_points < 2) throw Error(ErrorCode::BadSpec, "grid needs at least two points per dimension");
    const Problem P = make_problem(spec);
    const Index n = P.form.n;
    if (box.dim() != n || !box.finite()) throw Error(ErrorCode::BadSpec, "oracle box must be finite with dimension n");

    OracleResult best;
    best.f_min = std::numeric_limits<double>::infinity();
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    Vec x(n);
    while (true) {
        for (Index i = 0; i < n; ++i) {
            const double t = static_cast<double>(idx[static_cast<std::size_t>(i)]) / (grid_points - 1);
            x[i] = box.lower[i] + t * (box.upper[i] - box.lower[i]);
            // Snap the grid point nearest zero onto zero exactly.
            if (std::abs(x[i]) < 1e-12 * std::max(1.0, box.upper[i] - box.lower[i])) x[i] = 0.0;
        }
        const double f = P.form.f_direct(x);
        if (f < best.f_min) {
            best.f_min = f;
            best.x_min = x;
        }
        Index k = n - 1;
        while (k >= 0 && ++idx[static_cast<std::size_t>(k)] == grid_points) idx[static_cast<std::size_t>(k--)] = 0;
        if (k < 0) break;
    }
    return best;
}

}  // namespace cnopt
