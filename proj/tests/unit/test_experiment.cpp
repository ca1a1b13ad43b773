#include "lossdev/errors.hpp"
#include "lossdev/experiment.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace lossdev;
using nlohmann::json;

namespace {

json fixture(const std::string& name) {
    std::ifstream in(std::string(LOSSDEV_FIXTURES) + "/" + name);
    return json::parse(in);
}

std::string scratch(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("lossdev_test_" + name)).string();
}

std::string write_config(const std::string& name, const json& config) {
    const std::string path = scratch(name);
    std::ofstream(path) << config.dump();
    return path;
}

int cli(const std::string& args) {
    const std::string cmd = std::string(LOSSDEV_CLI) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("barrier command on the Bernoulli fixture") {
    const auto r = execute("barrier", fixture("bernoulli_barrier.json"));
    CHECK(r.exit_code == 0);
    CHECK(r.report["results"]["t_star"] == 2);
    CHECK(r.report["results"]["decay_rate"].get<double>() == doctest::Approx(0.025732092477985222).epsilon(1e-10));
    CHECK(r.report["command"] == "barrier");
    CHECK(r.report["config"]["gap_tol"] == 1e-9);
    REQUIRE(r.rows.size() == 4);
    CHECK(r.rows[0].method == "asymptotic");
}

TEST_CASE("rate-path on the mean path") {
    const auto r = execute("rate-path", fixture("mean_path.json"));
    CHECK(std::fabs(r.report["results"]["rate"].get<double>()) <= 1e-8);
    CHECK_FALSE(r.has_table);
}

TEST_CASE("legendre command with light-tail probes") {
    const auto r = execute("legendre", fixture("poisson_legendre.json"));
    const auto& t = r.report["results"]["transform"];
    REQUIRE(t.size() == 4);
    CHECK(t[1]["value"].get<double>() == doctest::Approx(0.0).scale(1.0));
    CHECK(r.report["results"]["light_tail"]["classification"] == "everywhere-finite");
}

TEST_CASE("resolved config reproduces the results") {
    for (const auto& [command, name] : std::vector<std::pair<std::string, std::string>>{
             {"barrier", "bernoulli_barrier.json"},
             {"oracle-increment", "bernoulli_increment.json"},
             {"simulate", "rare_simulation.json"}}) {
        CAPTURE(command);
        json config = fixture(name);
        if (command == "simulate") {
            config["replications"] = 2000;
        }
        const auto first = execute(command, config);
        const auto second = execute(command, first.report["config"]);
        CHECK(first.report.dump() == second.report.dump());
    }
}

TEST_CASE("config validation names the field") {
    auto config = fixture("bernoulli_barrier.json");
    config["loss_amount"]["atoms"][0]["prob"] = 1.5;
    try {
        execute("barrier", config);
        FAIL("expected ArgumentError");
    } catch (const ArgumentError& e) {
        CHECK(std::string(e.what()).find("loss_amount.atoms") != std::string::npos);
    }
    config = fixture("bernoulli_barrier.json");
    config["replications"] = 10;
    CHECK_THROWS_WITH_AS(execute("barrier", config), "replications: unknown field", ArgumentError);
    CHECK_THROWS_AS(execute("fly", config), ArgumentError);
    CHECK_THROWS_AS(execute("barrier", fixture("unknown_field.json")), ArgumentError);
}

TEST_CASE("seed and tolerance overrides are echoed") {
    auto config = fixture("rare_simulation.json");
    config["replications"] = 500;
    Overrides o;
    o.seed = 99;
    o.tol = 1e-11;
    const auto r = execute("simulate", config, o);
    CHECK(r.report["config"]["seed"] == 99);
    CHECK(r.report["config"]["tolerance"] == 1e-11);
    CHECK(r.report["results"]["estimates"][0]["seed"] == 99);
}

TEST_CASE("exit codes through the command line") {
    const std::string f = std::string(LOSSDEV_FIXTURES) + "/";
    const std::string out = scratch("report.json");
    CHECK(cli("barrier --config " + f + "bernoulli_barrier.json --out " + out) == 0);
    CHECK(json::parse(slurp(out))["results"]["t_star"] == 2);
    CHECK(cli("barrier --config " + f + "not_rare.json --out " + out) == 2);
    CHECK(slurp(out).find("barrier: not a rare event: level 0.3 at t=1") != std::string::npos);
    CHECK(cli("barrier --config " + f + "tied_optimum.json --out " + out) == 3);
    CHECK(cli("barrier --config " + f + "unknown_field.json --out " + out) == 2);
    CHECK(cli("barrier --config " + f + "missing.json") == 2);
    CHECK(cli("rate-path --config " + f + "mean_path.json --format csv") == 2);
    CHECK(cli("nonsense --config " + f + "mean_path.json") == 2);

    auto big = fixture("bernoulli_barrier.json");
    big["n"] = 1000;
    big["state_cap"] = 10;
    CHECK(cli("oracle-barrier --config " + write_config("cap.json", big)) == 4);

    auto slow = fixture("bernoulli_barrier.json");
    slow["loss_amount"] = {{"family", "poisson-type"}, {"unit", 1.0}, {"lambda", 1.0}};
    slow["default_time"]["probabilities"] = {0.5, 0.5};
    slow["barrier"] = {{"values", {2.6, 2.8}}, {"growth", {{"c0", 25.0}, {"kind", "loglog"}}}};
    slow["t_check"] = 10;
    CHECK(cli("hypothesis --config " + write_config("slow.json", slow) + " --out " + out) == 3);
    CHECK(json::parse(slurp(out))["results"]["report"].get<std::string>().find("overall: FAIL") != std::string::npos);
}

TEST_CASE("csv output") {
    const std::string f = std::string(LOSSDEV_FIXTURES) + "/";
    const std::string out = scratch("table.csv");
    CHECK(cli("oracle-barrier --config " + f + "bernoulli_barrier.json --format csv --out " + out) == 0);
    const std::string text = slurp(out);
    CHECK(text.rfind("n,estimate,stderr,method\n", 0) == 0);
    CHECK(text.find("100,0.0164628532418") != std::string::npos);
    CHECK(render_csv({{5, 0.5, std::nullopt, "asymptotic"}}) == "n,estimate,stderr,method\n5,0.5,,asymptotic\n");
}

TEST_CASE("multiclass command") {
    const json config = {
        {"classes",
         {{{"fraction", 0.5},
           {"loss_amount", {{"family", "exponential"}, {"rate", 1.0}}},
           {"default_time", {{"probabilities", {0.5, 0.5}}}}},
          {{"fraction", 0.5},
           {"loss_amount", {{"family", "exponential"}, {"rate", 1.0}}},
           {"default_time", {{"probabilities", {0.5, 0.5}}}}}}},
        {"path", {0.7, 1.5}},
        {"scenarios", {{{"label", "a"}, {"rate", -0.2}}, {{"label", "b"}, {"rate", -0.1}}}}};
    const auto r = execute("rate-multiclass", config);
    CHECK(r.report["results"]["rate"].get<double>() > 0.0);
    CHECK(r.report["results"]["mixture"]["label"] == "b");
}
