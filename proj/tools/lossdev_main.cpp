#include "lossdev/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Large-deviation analytics for credit portfolio loss processes"};
    app.set_version_flag("--version", lossdev::kVersion);

    std::string command;
    std::string config;
    std::string out;
    std::string format = "json";
    std::uint64_t seed = 0;
    double tol = 0.0;

    app.add_option("command", command, "Command to run")
        ->required()
        ->check(CLI::IsMember(lossdev::commands()));
    app.add_option("--config", config, "Experiment config (JSON)")->required();
    app.add_option("--out", out, "Report file; stdout when omitted");
    app.add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "Overrides the config seed");
    auto* tol_opt = app.add_option("--tol", tol, "Overrides the config tolerance")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    lossdev::Overrides overrides;
    if (*seed_opt) {
        overrides.seed = seed;
    }
    if (*tol_opt) {
        overrides.tol = tol;
    }
    const auto fmt = format == "csv" ? lossdev::OutputFormat::csv : lossdev::OutputFormat::json;
    return lossdev::run(command, config, out, fmt, overrides, std::cerr);
}
