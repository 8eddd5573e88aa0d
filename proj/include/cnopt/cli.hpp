#pragma once

#include "cnopt/problems.hpp"
#include "cnopt/solver.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace cnopt::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Entry point shared by tools/cnopt and the integration tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// SHA-1 of "blob <size>\0<content>", hex encoded.
std::string git_hash(const std::string& content);

/// Copy of `j` with every "wall_time" / "running_time_s" key removed.
nlohmann::json strip_timing(const nlohmann::json& j);

nlohmann::json report_to_json(const CnForm& form, const SolveReport& report);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string csv() const;
};

enum class Scale { Desk, Paper };

inline constexpr Index kDeskMaxN = 100;
inline constexpr Index kDeskMaxP = 20;

/// Tables 1-8; throws BadSpec for other ids. Cells run on up to `threads` workers.
Table make_table(int id, Scale scale, int threads);

/// CNOPT_THREADS when set to a positive integer, otherwise hardware concurrency.
int thread_budget();

}  // namespace cnopt::cli
