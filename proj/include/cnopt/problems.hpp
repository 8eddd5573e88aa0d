#pragma once

#include "cnopt/cn_form.hpp"
#include "cnopt/partition.hpp"

#include <optional>
#include <string>

namespace cnopt {

enum class ProblemName { Ex42, ZeroNormLs, Ex43, Ex44, Ex45 };

std::string to_string(ProblemName p);
/// Accepts "ex42", "zero-norm"/"zeronormls", "ex43", "ex44", "ex45"; throws BadSpec.
ProblemName parse_problem_name(const std::string& s);

struct ProblemSpec {
    ProblemName name = ProblemName::Ex42;
    Index n = 2;
    Index e = 1;
    double lambda = 1.0;
    /// ZeroNormLs data; A is rows x n.
    std::optional<Mat> A;
    std::optional<Vec> b;
    /// Ex42 only: use lambda * (y2^2 + y5^2) instead of lambda * (y1 + y4).
    bool ex42_squared = false;
};

/// Recommended solver starting values for each problem.
struct ProblemDefaults {
    double sigma1 = 5.0;
    double N = 10.0;
    /// Initial multiplier, one value per constraint.
    Vec alpha0;
    Vec w0;
};

struct Problem {
    CnForm form;
    Partition partition;
    ProblemDefaults defaults;
};

Problem make_problem(const ProblemSpec& spec);

/// ||x||_0 with |x_i| > tol counted as nonzero.
Index count_nonzero(const Vec& x, double tol = 1e-4);

struct OracleResult {
    Vec x_min;
    double f_min = 0.0;
};

/// Exhaustive grid over `box` (grid_points per dimension) of f_direct; n <= 3.
OracleResult brute_force_oracle(const ProblemSpec& spec, const Box& box, int grid_points = 401);

}  // namespace cnopt
