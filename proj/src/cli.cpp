#include "cnopt/cli.hpp"

#include "cnopt/errors.hpp"
#include "cnopt/optimality.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace cnopt::cli {

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitRefuted = 4;

std::vector<double> read_numbers(std::istream& in)
{
    std::vector<double> v;
    std::string tok;
    char c;
    auto flush = [&] {
        if (tok.empty()) return;
        std::size_t used = 0;
        const double d = std::stod(tok, &used);
        if (used != tok.size()) throw Error(ErrorCode::BadSpec, "not a number: '" + tok + "'");
        v.push_back(d);
        tok.clear();
    };
    while (in.get(c)) {
        if (c == ',' || c == ';' || std::isspace(static_cast<unsigned char>(c))) flush();
        else tok.push_back(c);
    }
    flush();
    return v;
}

/// Inline comma list, or a path to a file holding one.
Vec parse_vector(const std::string& s)
{
    std::vector<double> v;
    try {
        if (std::filesystem::is_regular_file(s)) {
            std::ifstream f(s);
            v = read_numbers(f);
        } else {
            std::istringstream is(s);
            v = read_numbers(is);
        }
    } catch (const std::invalid_argument&) {
        throw Error(ErrorCode::BadSpec, "cannot parse vector '" + s + "'");
    } catch (const std::out_of_range&) {
        throw Error(ErrorCode::BadSpec, "value out of range in '" + s + "'");
    }
    if (v.empty()) throw Error(ErrorCode::BadSpec, "empty vector '" + s + "'");
    return Eigen::Map<Vec>(v.data(), static_cast<Index>(v.size()));
}

/// Scalar fill when `s` is a single number and not a file.
Vec parse_fill_or_vector(const std::string& s, Index size)
{
    const Vec v = parse_vector(s);
    if (v.size() == 1 && size != 1 && !std::filesystem::is_regular_file(s)) return Vec::Constant(size, v[0]);
    if (v.size() != size)
        throw Error(ErrorCode::DimensionMismatch,
                    "expected " + std::to_string(size) + " values, got " + std::to_string(v.size()));
    return v;
}

/// Rows "a_1,...,a_n,b".
std::pair<Mat, Vec> read_data_csv(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::BadSpec, "cannot open data file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
        std::istringstream is(line);
        rows.push_back(read_numbers(is));
        if (rows.back().size() < 2) throw Error(ErrorCode::BadSpec, "data rows need at least one coefficient and b");
        if (rows.back().size() != rows.front().size()) throw Error(ErrorCode::BadSpec, "ragged data file");
    }
    if (rows.empty()) throw Error(ErrorCode::BadSpec, "data file has no rows");
    const auto r = static_cast<Index>(rows.size());
    const auto n = static_cast<Index>(rows.front().size()) - 1;
    Mat A(r, n);
    Vec b(r);
    for (Index i = 0; i < r; ++i) {
        for (Index c = 0; c < n; ++c) A(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        b[i] = rows[static_cast<std::size_t>(i)].back();
    }
    return {A, b};
}

struct ProblemOpts {
    std::string problem = "ex42";
    long n = 0;
    long e = 0;
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::string data;
    bool squared = false;
};

void add_problem_options(CLI::App* app, ProblemOpts& o)
{
    app->add_option("--problem,--name", o.problem, "ex42 | zero-norm | ex43 | ex44 | ex45");
    app->add_option("--n", o.n, "number of x variables");
    app->add_option("--e", o.e, "block width");
    app->add_option("--lambda", o.lambda, "regularization weight");
    app->add_option("--data", o.data, "CSV with rows a_1,...,a_n,b (zero-norm)");
    app->add_flag("--squared", o.squared, "ex42 with lambda*(y2^2 + y5^2)");
}

ProblemSpec build_spec(const ProblemOpts& o)
{
    ProblemSpec s;
    s.name = parse_problem_name(o.problem);
    s.ex42_squared = o.squared;
    Index n = 0, e = 0;
    switch (s.name) {
    case ProblemName::Ex42: n = 2; e = 1; break;
    case ProblemName::ZeroNormLs: n = 2; e = 1; break;
    case ProblemName::Ex43:
    case ProblemName::Ex44: n = 5; e = 5; break;
    case ProblemName::Ex45: n = 50; e = 50; break;
    }
    if (s.name == ProblemName::ZeroNormLs) {
        if (!o.data.empty()) {
            auto [A, b] = read_data_csv(o.data);
            n = A.cols();
            if (o.n > 0 && o.n != n) throw Error(ErrorCode::BadSpec, "--n does not match the data file");
            s.A = A;
            s.b = b;
        } else {
            if (o.n > 0) n = o.n;
            s.A = Mat::Ones(1, n);
            s.b = Vec::Ones(1);
        }
    } else if (o.n > 0) {
        n = o.n;
    } else if (o.n < 0) {
        throw Error(ErrorCode::BadSpec, "n must be positive");
    }
    if (o.e > 0) e = o.e;
    else if (o.e < 0) throw Error(ErrorCode::BadSpec, "e must be positive");
    else if (s.name != ProblemName::Ex42 && s.name != ProblemName::ZeroNormLs && o.n > 0) e = std::min<Index>(e, n);
    s.n = n;
    s.e = e;
    s.lambda = std::isnan(o.lambda) ? 1.0 : o.lambda;
    if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) throw Error(ErrorCode::BadSpec, "lambda must be positive");
    return s;
}

json spec_json(const ProblemSpec& s, const ProblemOpts& o)
{
    json j{{"problem", to_string(s.name)}, {"n", s.n}, {"e", s.e}, {"lambda", s.lambda}};
    if (s.name == ProblemName::Ex42) j["squared"] = s.ex42_squared;
    if (!o.data.empty()) {
        std::ifstream f(o.data, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        j["data_hash"] = git_hash(ss.str());
    }
    return j;
}

json vec_json(const Vec& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(std::isfinite(v[i]) ? json(v[i]) : json(nullptr));
    return a;
}

json num(double d) { return std::isfinite(d) ? json(d) : json(nullptr); }

json opt_num(const std::optional<double>& d) { return d ? num(*d) : json(nullptr); }

json verdict_json(const Verdict& v)
{
    json j{{"verdict", to_string(v.kind)}, {"value", num(v.value)}, {"detail", v.detail}};
    if (v.witness) j["witness"] = vec_json(*v.witness);
    return j;
}

std::string now_iso()
{
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json make_manifest(const std::string& command, const json& spec, const json& config, std::uint64_t seed)
{
    json m{{"command", command}, {"spec", spec}, {"config", config}, {"seed", seed}, {"tool_version", kToolVersion}};
    m["input_hash"] = git_hash(m.dump());
    return m;
}

/// Finalizes a document: payload hash over the timing-free content, then timing.
void seal(json& doc, double wall_time, bool timing)
{
    doc["manifest"]["payload_hash"] = git_hash(strip_timing(doc).dump());
    if (timing) {
        doc["manifest"]["wall_time"] = wall_time;
        doc["manifest"]["timestamp"] = now_iso();
    }
}

void write_output(const std::string& path, const std::string& content, std::ostream& out)
{
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::BadSpec, "cannot write '" + path + "'");
    f << content;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string fmt(double v, int prec = 6)
{
    if (!std::isfinite(v)) return "";
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

std::string trace_csv(const SolveReport& r, bool timing)
{
    std::ostringstream os;
    os << "k,residual,f_value,g_value,hk,sigma,wall_time\n";
    os << std::setprecision(17);
    for (const auto& t : r.trace) {
        os << t.k << ',' << t.residual << ',';
        if (t.f_value) os << *t.f_value;
        os << ',' << t.g_value << ',' << t.hk << ',' << t.sigma << ',' << (timing ? t.wall_time : 0.0) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------- solve

struct SolveOpts {
    ProblemOpts p;
    double eps = 1e-4;
    std::optional<double> sigma1;
    std::optional<double> bigN;
    std::string w0;
    std::string alpha0;
    int max_outer = 30;
    std::string out;
    std::uint64_t seed = 1;
    std::string anchor = "current";
    bool no_certify = false;
    bool no_timing = false;
};

int cmd_solve(const SolveOpts& o, std::ostream& out, std::ostream& err)
{
    const ProblemSpec spec = build_spec(o.p);
    const Problem P = make_problem(spec);
    SolverConfig cfg = config_for(P);
    cfg.eps = o.eps;
    if (o.sigma1) cfg.sigma1 = *o.sigma1;
    if (o.bigN) cfg.N = *o.bigN;
    if (!o.w0.empty()) cfg.w0 = parse_fill_or_vector(o.w0, P.form.dim());
    if (!o.alpha0.empty()) cfg.alpha0 = parse_fill_or_vector(o.alpha0, P.form.r());
    cfg.max_outer = o.max_outer;
    cfg.seed = o.seed;
    if (o.anchor == "current") cfg.anchor = OverlapAnchor::CurrentSweep;
    else if (o.anchor == "previous") cfg.anchor = OverlapAnchor::PreviousSweep;
    else throw Error(ErrorCode::BadSpec, "--anchor must be current or previous");
    cfg.validate();

    SolveReport report = solve(P.form, P.partition, cfg);
    if (!o.no_certify && (report.status == SolveStatus::Optimal || report.status == SolveStatus::Approximate))
        report.certificate = certify_solution(P.form, P.partition, report);

    json config{{"eps", cfg.eps},
                {"sigma1", cfg.sigma1},
                {"N", cfg.N},
                {"max_outer", cfg.max_outer},
                {"sigma_cap", cfg.sigma_cap},
                {"anchor", o.anchor},
                {"w0", vec_json(cfg.w0.size() ? cfg.w0 : Vec::Zero(P.form.dim()))},
                {"alpha0", vec_json(cfg.alpha0.size() ? cfg.alpha0 : Vec::Zero(P.form.r()))}};
    json doc = report_to_json(P.form, report);
    if (o.no_timing) {
        for (auto& t : doc["trace"]) t["wall_time"] = 0.0;
        doc["wall_time"] = 0.0;
    }
    doc["manifest"] = make_manifest("solve", spec_json(spec, o.p), config, o.seed);
    seal(doc, report.wall_time, !o.no_timing);

    if (ends_with(o.out, ".csv")) write_output(o.out, trace_csv(report, !o.no_timing), out);
    else write_output(o.out, doc.dump(2) + "\n", out);

    err << "status " << to_string(report.status) << ", " << report.iterations() << " iterations, residual "
        << report.final_state.residual << '\n';
    const bool ok = report.status == SolveStatus::Optimal || report.status == SolveStatus::Approximate;
    return ok ? kExitOk : kExitNotConverged;
}

// ---------------------------------------------------------------- check

struct CheckOpts {
    ProblemOpts p;
    std::string x;
    std::string y;
    std::string method = "wcnp";
    int samples = 100000;
    std::optional<double> radius;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_check(const CheckOpts& o, std::ostream& out, std::ostream& err)
{
    const ProblemSpec spec = build_spec(o.p);
    const Problem P = make_problem(spec);
    const CnForm& F = P.form;
    const Vec x = parse_vector(o.x);
    if (x.size() != F.n) throw Error(ErrorCode::DimensionMismatch, "--x must have " + std::to_string(F.n) + " entries");
    std::optional<Vec> y;
    if (!o.y.empty()) {
        y = parse_vector(o.y);
        if (y->size() != F.m) throw Error(ErrorCode::DimensionMismatch, "--y must have " + std::to_string(F.m) + " entries");
    }

    json doc;
    CandidatePoint pt;
    try {
        pt = make_candidate(F, x, y);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::LiftInfeasible) throw;
        const Vec yy = y ? *y : Vec::Zero(F.m);
        const Residual res = constraint_residual(F, x, yy);
        json rep{{"error", e.what()}, {"residuals", {{"constraint", vec_json(res.values)}, {"norm", res.norm}}}};
        err << rep.dump(2) << '\n';
        return kExitUsage;
    }

    const Residual res = constraint_residual(F, pt.x, pt.y);
    json residuals{{"constraint_norm", res.norm}, {"in_Xf", pt.in_Xf}};
    Verdict v;
    std::string m = o.method;
    for (auto& c : m) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (m == "wcnp") {
        WcnpOptions wo;
        wo.seed = o.seed;
        const WcnpResult r = wcnp_condition(F, pt, wo);
        v = r.verdict;
        doc["multipliers"] = vec_json(r.qp.multipliers);
        doc["d_star"] = vec_json(r.qp.d_star);
        residuals["stationarity"] = num(r.stationarity_residual);
        residuals["cone_value"] = num(r.qp.value);
        residuals["model_min"] = num(r.model_min);
    } else if (m == "lcnp") {
        v = lcnp_condition(F, pt);
    } else if (m == "kw" || m == "ku" || m == "kc") {
        if (o.samples < 1) throw Error(ErrorCode::BadSpec, "--samples must be positive");
        v = falsify_k_set(F, pt, parse_kset(m), F.sample_box, o.samples, o.radius, o.seed);
    } else {
        throw Error(ErrorCode::BadSpec, "--method must be wcnp, lcnp, kw, ku or kc");
    }
    const json vj = verdict_json(v);
    doc.update(vj);
    doc["method"] = m;
    doc["x"] = vec_json(pt.x);
    doc["y"] = vec_json(pt.y);
    doc["residuals"] = residuals;
    json config{{"method", m}, {"samples", o.samples}, {"radius", o.radius ? json(*o.radius) : json(nullptr)},
                {"x", vec_json(x)}, {"y", y ? vec_json(*y) : json(nullptr)}};
    doc["manifest"] = make_manifest("check", spec_json(spec, o.p), config, o.seed);
    seal(doc, 0.0, false);
    write_output(o.out, doc.dump(2) + "\n", out);

    switch (v.kind) {
    case VerdictKind::Certified: return kExitOk;
    case VerdictKind::Inconclusive: return kExitInconclusive;
    case VerdictKind::Refuted: return kExitRefuted;
    }
    return kExitUsage;
}

// ---------------------------------------------------------------- table

struct TableOpts {
    int table = 0;
    std::string scale = "desk";
    bool allow_long = false;
    std::string out;
};

int cmd_table(const TableOpts& o, std::ostream& out, std::ostream& err)
{
    Scale scale;
    if (o.scale == "desk") scale = Scale::Desk;
    else if (o.scale == "paper") scale = Scale::Paper;
    else throw Error(ErrorCode::BadSpec, "--scale must be desk or paper");
    if (o.table < 1 || o.table > 8) throw Error(ErrorCode::BadSpec, "--table must be between 1 and 8");
    if (scale == Scale::Paper && !o.allow_long)
        throw Error(ErrorCode::BadSpec, "paper scale runs for hours; pass --allow-long to proceed");
    const Table t = make_table(o.table, scale, thread_budget());
    if (t.rows.empty()) err << "table " << o.table << " has no rows at desk scale\n";
    write_output(o.out, t.csv(), out);
    return kExitOk;
}

}  // namespace

// ---------------------------------------------------------------- shared

std::string git_hash(const std::string& content)
{
    const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

json strip_timing(const json& j)
{
    if (j.is_object()) {
        json o = json::object();
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() == "wall_time" || it.key() == "running_time_s" || it.key() == "timestamp" ||
                it.key() == "payload_hash")
                continue;
            o[it.key()] = strip_timing(it.value());
        }
        return o;
    }
    if (j.is_array()) {
        json a = json::array();
        for (const auto& v : j) a.push_back(strip_timing(v));
        return a;
    }
    return j;
}

json report_to_json(const CnForm& form, const SolveReport& r)
{
    const SolverState& s = r.final_state;
    json doc;
    doc["status"] = to_string(r.status);
    doc["problem"] = form.name;
    doc["x"] = vec_json(s.x);
    doc["y"] = vec_json(s.y);
    doc["f_value"] = opt_num(s.f_value);
    doc["g_value"] = num(s.g_value);
    doc["residual"] = num(s.residual);
    doc["ineq_violation"] = num(s.ineq_violation);
    doc["iterations"] = r.iterations();
    doc["sigma"] = num(s.sigma);
    doc["x0_norm"] = count_nonzero(s.x);
    doc["max_g_value"] = num(r.max_g_value);
    doc["max_hk"] = num(r.max_hk);
    doc["wall_time"] = r.wall_time;
    json tr = json::array();
    for (const auto& t : r.trace)
        tr.push_back({{"k", t.k},
                      {"residual", num(t.residual)},
                      {"f_value", opt_num(t.f_value)},
                      {"g_value", num(t.g_value)},
                      {"hk", num(t.hk)},
                      {"sigma", num(t.sigma)},
                      {"max_block_grad", num(t.max_block_grad)},
                      {"ineq_violation", num(t.ineq_violation)},
                      {"wall_time", t.wall_time}});
    doc["trace"] = tr;
    doc["certificate"] = r.certificate ? verdict_json(*r.certificate) : json(nullptr);
    return doc;
}

std::string Table::csv() const
{
    std::ostringstream os;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            const bool quote = cells[i].find_first_of(",\"") != std::string::npos;
            if (quote) {
                os << '"';
                for (char c : cells[i]) os << (c == '"' ? "\"\"" : std::string(1, c));
                os << '"';
            } else {
                os << cells[i];
            }
        }
        os << '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return os.str();
}

int thread_budget()
{
    if (const char* s = std::getenv("CNOPT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(s, &end, 10);
        if (end != s && *end == '\0' && v > 0) return static_cast<int>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

/// Runs tasks on up to `threads` workers; results land by task index.
void run_cells(std::vector<std::function<void()>>& tasks, int threads)
{
    const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto work = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                tasks[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

struct CellResult {
    SolveReport report;
    double seconds = 0.0;
};

CellResult run_problem(const ProblemSpec& spec)
{
    const Problem P = make_problem(spec);
    const SolverConfig cfg = config_for(P);
    CellResult c;
    c.report = solve(P.form, P.partition, cfg);
    c.seconds = c.report.wall_time;
    return c;
}

bool within_desk(Index n, Index p) { return n <= kDeskMaxN && p <= kDeskMaxP; }

std::string x_summary(const Vec& x)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << '(';
    if (x.size() <= 5) {
        for (Index i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    } else {
        os << x[0] << ',' << x[1] << ',' << x[2] << ",...," << x[x.size() - 1];
    }
    os << ')';
    return os.str();
}

Table table_x0_by_lambda(Scale scale, int threads)
{
    const std::vector<Index> ns = {5, 10, 30, 50, 100, 500, 1000};
    const std::vector<double> lambdas = {1, 10, 100, 500, 1000};
    Table t;
    t.header = {"n"};
    for (double l : lambdas) t.header.push_back("lambda=" + fmt(l));
    std::vector<Index> rows;
    for (Index n : ns)
        if (scale == Scale::Paper || within_desk(n, n / 5)) rows.push_back(n);
    t.rows.assign(rows.size(), std::vector<std::string>(lambdas.size() + 1));
    std::vector<std::function<void()>> tasks;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        t.rows[r][0] = std::to_string(rows[r]);
        for (std::size_t c = 0; c < lambdas.size(); ++c)
            tasks.emplace_back([&, r, c] {
                ProblemSpec s;
                s.name = ProblemName::Ex43;
                s.n = rows[r];
                s.e = 5;
                s.lambda = lambdas[c];
                const auto res = run_problem(s);
                t.rows[r][c + 1] = std::to_string(count_nonzero(res.report.final_state.x));
            });
    }
    run_cells(tasks, threads);
    return t;
}

Table table_x0_n100(int threads)
{
    const std::vector<double> lambdas = {10, 100, 1000, 2000, 3000, 5000, 8000, 10000, 15000, 20000, 21000};
    Table t;
    t.header = {"lambda"};
    for (double l : lambdas) t.header.push_back(fmt(l));
    t.rows.assign(1, std::vector<std::string>(lambdas.size() + 1));
    t.rows[0][0] = "x0_norm";
    std::vector<std::function<void()>> tasks;
    for (std::size_t c = 0; c < lambdas.size(); ++c)
        tasks.emplace_back([&, c] {
            ProblemSpec s;
            s.name = ProblemName::Ex43;
            s.n = 100;
            s.e = 5;
            s.lambda = lambdas[c];
            t.rows[0][c + 1] = std::to_string(count_nonzero(run_problem(s).report.final_state.x));
        });
    run_cells(tasks, threads);
    return t;
}

Table table_ex44(Index e, Scale scale, int threads)
{
    const std::vector<Index> ns =
        e == 5 ? std::vector<Index>{5, 10, 50, 250, 500, 1000} : std::vector<Index>{6, 30, 90, 300, 600, 1500};
    Table t;
    t.header = {"n", "k", "x", "running_time_s", "f_value", "residual", "status"};
    std::vector<Index> rows;
    for (Index n : ns)
        if (scale == Scale::Paper || within_desk(n, n / e)) rows.push_back(n);
    t.rows.assign(rows.size(), {});
    std::vector<std::function<void()>> tasks;
    for (std::size_t r = 0; r < rows.size(); ++r)
        tasks.emplace_back([&, r] {
            ProblemSpec s;
            s.name = ProblemName::Ex44;
            s.n = rows[r];
            s.e = e;
            const auto res = run_problem(s);
            const auto& st = res.report.final_state;
            t.rows[r] = {std::to_string(rows[r]), std::to_string(res.report.iterations()), x_summary(st.x),
                         fmt(res.seconds, 4), fmt(st.f_value.value_or(NAN), 8), fmt(st.residual, 4),
                         to_string(res.report.status)};
        });
    run_cells(tasks, threads);
    return t;
}

Table table_ex45(Index n, const std::vector<Index>& es, Scale scale, int threads)
{
    Table t;
    t.header = {"e", "p", "f_n", "g_norm", "running_time_s", "g_value", "k", "status"};
    std::vector<Index> rows;
    for (Index e : es)
        if (scale == Scale::Paper || within_desk(n, n / e)) rows.push_back(e);
    t.rows.assign(rows.size(), {});
    std::vector<std::function<void()>> tasks;
    for (std::size_t r = 0; r < rows.size(); ++r)
        tasks.emplace_back([&, r] {
            ProblemSpec s;
            s.name = ProblemName::Ex45;
            s.n = n;
            s.e = rows[r];
            const auto res = run_problem(s);
            const auto& st = res.report.final_state;
            t.rows[r] = {std::to_string(rows[r]),         std::to_string(n / rows[r]),
                         fmt(st.f_value.value_or(NAN), 8), fmt(st.residual, 4),
                         fmt(res.seconds, 4),              fmt(st.g_value, 8),
                         std::to_string(res.report.iterations()), to_string(res.report.status)};
        });
    run_cells(tasks, threads);
    return t;
}

double ex45_f(const Vec& x)
{
    double f = 0.0;
    for (Index i = 0; i + 1 < x.size(); ++i) {
        const double q = x[i] * x[i] + x[i + 1] * x[i + 1] - 1.0;
        f += -x[i] + 2.0 * q + 1.75 * std::abs(q);
    }
    return f;
}

Vec repeat(const Vec& block, Index times)
{
    Vec v(block.size() * times);
    for (Index k = 0; k < times; ++k) v.segment(k * block.size(), block.size()) = block;
    return v;
}

Table table_repeat(Scale scale, int threads)
{
    // Points reported for n = 5 and n = 2 with p = 1.
    Vec x_tilde(5);
    x_tilde << 0.6897, 0.4153, 0.4965, 0.5386, 0.4707;
    Vec x_hat(2);
    x_hat << 0.6772, 0.49930;
    const std::vector<Index> ns = {50, 200, 1000, 5000, 10000};
    Table t;
    t.header = {"e_tilde", "p_tilde", "f_tilde", "e_hat", "p_hat", "f_hat",
                "e_alg5",  "p_alg5",  "f_alg5",  "e_alg2", "p_alg2", "f_alg2"};
    std::vector<Index> rows;
    for (Index n : ns)
        if (scale == Scale::Paper || n <= kDeskMaxN) rows.push_back(n);
    t.rows.assign(rows.size(), std::vector<std::string>(12));
    std::vector<std::function<void()>> tasks;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Index n = rows[r];
        auto& row = t.rows[r];
        row[0] = "5";
        row[1] = std::to_string(n / 5);
        row[2] = fmt(ex45_f(repeat(x_tilde, n / 5)), 8);
        row[3] = "2";
        row[4] = std::to_string(n / 2);
        row[5] = fmt(ex45_f(repeat(x_hat, n / 2)), 8);
        row[6] = "5";
        row[7] = std::to_string(n / 5);
        row[9] = "2";
        row[10] = std::to_string(n / 2);
        for (Index e : {Index{5}, Index{2}}) {
            if (scale == Scale::Desk && !within_desk(n, n / e)) continue;
            const std::size_t col = e == 5 ? 8 : 11;
            tasks.emplace_back([&t, r, n, e, col] {
                ProblemSpec s;
                s.name = ProblemName::Ex45;
                s.n = n;
                s.e = e;
                t.rows[r][col] = fmt(run_problem(s).report.final_state.f_value.value_or(NAN), 8);
            });
        }
    }
    run_cells(tasks, threads);
    return t;
}

/// Splices "--config FILE" keys into the subcommand's arguments (CLI11 expects
/// reversed order). Keys may sit at top level or under [solve]/[check]/[table];
/// flags given on the command line win.
std::vector<std::string> expand_config(int argc, const char* const* argv)
{
    std::vector<std::string> a(argv + 1, argv + argc);
    std::size_t sub = a.size();
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == "solve" || a[i] == "check" || a[i] == "table") {
            sub = i;
            break;
        }
    if (sub == a.size()) {
        std::reverse(a.begin(), a.end());
        return a;
    }
    std::string path;
    std::vector<std::string> rest;
    for (std::size_t i = sub + 1; i < a.size(); ++i) {
        if (a[i] == "--config" && i + 1 < a.size()) {
            path = a[++i];
        } else if (a[i].rfind("--config=", 0) == 0) {
            path = a[i].substr(9);
        } else {
            rest.push_back(a[i]);
        }
    }
    std::vector<std::string> injected;
    if (!path.empty()) {
        if (!std::filesystem::is_regular_file(path)) throw Error(ErrorCode::BadSpec, "cannot open config '" + path + "'");
        const auto items = CLI::ConfigTOML().from_file(path);
        for (const auto& item : items) {
            if (item.name == "++" || item.name == "--") continue;
            if (!(item.parents.empty() || (item.parents.size() == 1 && item.parents[0] == a[sub]))) continue;
            const std::string flag = "--" + item.name;
            const bool given = std::any_of(rest.begin(), rest.end(), [&](const std::string& r) {
                return r == flag || r.rfind(flag + "=", 0) == 0;
            });
            if (given || item.inputs.empty()) continue;
            if (item.inputs.size() == 1) {
                injected.push_back(flag + "=" + item.inputs[0]);
            } else {
                injected.push_back(flag);
                for (const auto& v : item.inputs) injected.push_back(v);
            }
        }
    }
    std::vector<std::string> out(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(sub) + 1);
    out.insert(out.end(), injected.begin(), injected.end());
    out.insert(out.end(), rest.begin(), rest.end());
    std::reverse(out.begin(), out.end());
    return out;
}

}  // namespace

Table make_table(int id, Scale scale, int threads)
{
    switch (id) {
    case 1: return table_x0_by_lambda(scale, threads);
    case 2: return table_x0_n100(threads);
    case 3: return table_ex44(5, scale, threads);
    case 4: return table_ex44(3, scale, threads);
    case 5: return table_ex45(50, {50, 25, 10, 5, 2}, scale, threads);
    case 6: return table_ex45(200, {20, 10, 5, 4, 2}, scale, threads);
    case 7: return table_ex45(1000, {10, 5, 4, 2}, scale, threads);
    case 8: return table_repeat(scale, threads);
    default: break;
    }
    throw Error(ErrorCode::BadSpec, "no table " + std::to_string(id));
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"cnopt: convertible nonconvex optimization"};
    app.require_subcommand(1);

    SolveOpts so;
    auto* solve_cmd = app.add_subcommand("solve", "run the block augmented-Lagrangian solver on a bundled problem");
    solve_cmd->add_option("--config", "TOML/INI file mirroring the flags");
    add_problem_options(solve_cmd, so.p);
    solve_cmd->add_option("--eps", so.eps, "stopping tolerance on sum_j ||g_j||")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--sigma1", so.sigma1, "initial penalty")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--bigN", so.bigN, "penalty growth factor (> 1)");
    solve_cmd->add_option("--w0", so.w0, "start point: scalar fill, comma list, or CSV path");
    solve_cmd->add_option("--alpha0", so.alpha0, "initial multipliers: scalar fill, comma list, or CSV path");
    solve_cmd->add_option("--max-outer", so.max_outer, "outer iteration limit")->check(CLI::PositiveNumber);
    solve_cmd->add_option("--out", so.out, "report path (.json or .csv); stdout when omitted");
    solve_cmd->add_option("--seed", so.seed, "seed for sampled checks");
    solve_cmd->add_option("--anchor", so.anchor, "overlap anchor timing: current | previous");
    solve_cmd->add_flag("--no-certify", so.no_certify, "skip the final certificate");
    solve_cmd->add_flag("--no-timing", so.no_timing, "zero all timing fields");

    CheckOpts co;
    auto* check_cmd = app.add_subcommand("check", "test optimality conditions at a candidate point");
    check_cmd->add_option("--config", "TOML/INI file mirroring the flags");
    add_problem_options(check_cmd, co.p);
    check_cmd->add_option("--x", co.x, "candidate x: comma list or CSV path")->required();
    check_cmd->add_option("--y", co.y, "candidate y (default: lift of x)");
    check_cmd->add_option("--method", co.method, "wcnp | lcnp | kw | ku | kc");
    check_cmd->add_option("--samples", co.samples, "samples for K-set falsification");
    check_cmd->add_option("--radius", co.radius, "sampling radius around x")->check(CLI::PositiveNumber);
    check_cmd->add_option("--seed", co.seed, "sampling seed");
    check_cmd->add_option("--out", co.out, "verdict JSON path; stdout when omitted");

    TableOpts to;
    auto* table_cmd = app.add_subcommand("table", "reproduce a numerical table as CSV");
    table_cmd->add_option("--config", "TOML/INI file mirroring the flags");
    table_cmd->add_option("--table", to.table, "table number 1-8")->required();
    table_cmd->add_option("--scale", to.scale, "desk | paper");
    table_cmd->add_flag("--allow-long", to.allow_long, "permit paper-scale runs");
    table_cmd->add_option("--out", to.out, "CSV path; stdout when omitted");

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (*solve_cmd) return cmd_solve(so, out, err);
        if (*check_cmd) return cmd_check(co, out, err);
        if (*table_cmd) return cmd_table(to, out, err);
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace cnopt::cli
