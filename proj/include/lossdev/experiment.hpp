#pragma once

// Batch front end: validates a JSON experiment config, dispatches one command
// to the computation modules and renders the report as JSON or CSV.
//
// Exit codes: 0 success, 2 validation error (including a non-rare barrier),
// 3 hypothesis failure (including a non-unique optimum), 4 capacity error,
// 1 anything else.

#include <json.hpp>

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace lossdev {

inline constexpr const char* kVersion = "1.0.0";

enum class OutputFormat { json, csv };

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> tol;
};

struct CsvRow {
    int n = 0;
    double estimate = 0.0;
    std::optional<double> standard_error;
    std::string method;
};

struct CommandResult {
    int exit_code = 0;
    // Report without the timing field.
    nlohmann::json report;
    // Empty for commands that produce no n table.
    std::vector<CsvRow> rows;
    bool has_table = false;
};

const std::vector<std::string>& commands();

// Validates `config` for `command` and runs it. Errors propagate as the
// library exception types; see exit_code_for.
CommandResult execute(const std::string& command, const nlohmann::json& config, const Overrides& overrides = {});

int exit_code_for(const std::exception& error);

std::string render_csv(const std::vector<CsvRow>& rows);

// Reads the config, runs the command and writes the report to `out_path`
// (stdout when empty). Diagnostics go to `err`. Returns the exit code.
int run(const std::string& command, const std::string& config_path, const std::string& out_path, OutputFormat format,
        const Overrides& overrides, std::ostream& err);

}  // namespace lossdev
