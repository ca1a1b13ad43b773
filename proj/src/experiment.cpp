#include "lossdev/experiment.hpp"

#include "lossdev/barrier.hpp"
#include "lossdev/distributions.hpp"
#include "lossdev/errors.hpp"
#include "lossdev/exact_asymptotics.hpp"
#include "lossdev/legendre.hpp"
#include "lossdev/monte_carlo.hpp"
#include "lossdev/oracle_dp.hpp"
#include "lossdev/path_rate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace lossdev {

namespace {

using nlohmann::json;

// Infinite values have no JSON number form.
json number(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v;
}

json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

std::string item(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

std::string dotted(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ArgumentError(where + ": expected an object");
    }
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    require_object(j, where.empty() ? "config" : where);
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw ArgumentError(dotted(where, key) + ": unknown field");
        }
    }
}

const json& need(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) {
        throw ArgumentError(dotted(where, key) + ": required field is missing");
    }
    return j.at(key);
}

double as_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        throw ArgumentError(where + ": expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ArgumentError(where + ": expected a finite number");
    }
    return x;
}

double as_positive(const json& v, const std::string& where) {
    const double x = as_number(v, where);
    if (!(x > 0.0)) {
        throw ArgumentError(where + ": must be positive");
    }
    return x;
}

std::int64_t as_integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) {
        throw ArgumentError(where + ": expected an integer");
    }
    return v.get<std::int64_t>();
}

std::vector<double> as_numbers(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) {
        throw ArgumentError(where + ": expected a nonempty array of numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_number(v[i], item(where, i)));
    }
    return out;
}

const std::string& as_string(const json& v, const std::string& where) {
    if (!v.is_string()) {
        throw ArgumentError(where + ": expected a string");
    }
    return v.get_ref<const std::string&>();
}

// Library validation errors are re-raised with the offending field in front.
template <class F>
auto in_field(const std::string& where, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const NotRareEventError& e) {
        throw ArgumentError(where + ": " + e.what());
    } catch (const NoTiltError& e) {
        throw ArgumentError(where + ": " + e.what());
    } catch (const ArgumentError& e) {
        throw ArgumentError(where + ": " + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError(where + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(where + ": " + e.what());
    }
}

LossAmountModel parse_loss(const json& j, const std::string& where) {
    require_object(j, where);
    const std::string& family = as_string(need(j, where, "family"), dotted(where, "family"));
    if (family == "discrete") {
        reject_unknown(j, where, {"family", "atoms"});
        const json& atoms = need(j, where, "atoms");
        const std::string aw = dotted(where, "atoms");
        if (!atoms.is_array() || atoms.empty()) {
            throw ArgumentError(aw + ": expected a nonempty array of {value, prob}");
        }
        std::vector<Atom> out;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string w = item(aw, i);
            reject_unknown(atoms[i], w, {"value", "prob"});
            out.push_back({as_number(need(atoms[i], w, "value"), dotted(w, "value")),
                           as_number(need(atoms[i], w, "prob"), dotted(w, "prob"))});
        }
        return in_field(aw, [&] { return LossAmountModel::discrete(out); });
    }
    if (family == "bounded-empirical") {
        reject_unknown(j, where, {"family", "samples"});
        const std::string sw = dotted(where, "samples");
        const auto samples = as_numbers(need(j, where, "samples"), sw);
        return in_field(sw, [&] { return LossAmountModel::bounded_empirical(samples); });
    }
    if (family == "poisson-type") {
        reject_unknown(j, where, {"family", "unit", "lambda"});
        const double u = as_positive(need(j, where, "unit"), dotted(where, "unit"));
        const double lambda = as_number(need(j, where, "lambda"), dotted(where, "lambda"));
        return in_field(dotted(where, "lambda"), [&] { return LossAmountModel::poisson_type(u, lambda); });
    }
    if (family == "exponential") {
        reject_unknown(j, where, {"family", "rate"});
        const double rate = as_positive(need(j, where, "rate"), dotted(where, "rate"));
        return in_field(dotted(where, "rate"), [&] { return LossAmountModel::exponential(rate); });
    }
    throw ArgumentError(dotted(where, "family") + ": unknown family '" + family +
                        "' (expected discrete, poisson-type, exponential or bounded-empirical)");
}

DefaultTimeModel parse_timing(const json& j, const std::string& where) {
    reject_unknown(j, where, {"probabilities"});
    const std::string pw = dotted(where, "probabilities");
    const auto p = as_numbers(need(j, where, "probabilities"), pw);
    return in_field(pw, [&] { return DefaultTimeModel(p); });
}

GrowthDeclaration parse_growth(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    reject_unknown(j, where, allowed);
    GrowthDeclaration g;
    g.c0 = as_positive(need(j, where, "c0"), dotted(where, "c0"));
    const std::string& kind = as_string(need(j, where, "kind"), dotted(where, "kind"));
    if (kind == "log") {
        g.kind = GrowthKind::log;
    } else if (kind == "loglog") {
        g.kind = GrowthKind::loglog;
    } else {
        throw ArgumentError(dotted(where, "kind") + ": expected 'log' or 'loglog'");
    }
    return g;
}

Barrier parse_barrier(const json& j, const std::string& where) {
    reject_unknown(j, where, {"values", "growth"});
    const std::string vw = dotted(where, "values");
    const auto values = as_numbers(need(j, where, "values"), vw);
    std::optional<GrowthDeclaration> growth;
    if (j.contains("growth")) {
        growth = parse_growth(j.at("growth"), dotted(where, "growth"), {"c0", "kind"});
    }
    return in_field(vw, [&] { return Barrier(values, growth); });
}

IncrementBarrier parse_increment_barrier(const json& j, const std::string& where) {
    reject_unknown(j, where, {"entries", "growth"});
    const std::string ew = dotted(where, "entries");
    const json& entries = need(j, where, "entries");
    if (!entries.is_array() || entries.empty()) {
        throw ArgumentError(ew + ": expected a nonempty array of {s, t, value}");
    }
    std::vector<IncrementLevel> levels;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const std::string w = item(ew, i);
        reject_unknown(entries[i], w, {"s", "t", "value"});
        levels.push_back({static_cast<int>(as_integer(need(entries[i], w, "s"), dotted(w, "s"))),
                          static_cast<int>(as_integer(need(entries[i], w, "t"), dotted(w, "t"))),
                          as_number(need(entries[i], w, "value"), dotted(w, "value"))});
    }
    std::map<int, GrowthDeclaration> growth;
    if (j.contains("growth")) {
        const std::string gw = dotted(where, "growth");
        const json& g = j.at("growth");
        if (!g.is_array()) {
            throw ArgumentError(gw + ": expected an array of {s, c0, kind}");
        }
        for (std::size_t i = 0; i < g.size(); ++i) {
            const std::string w = item(gw, i);
            const GrowthDeclaration decl = parse_growth(g[i], w, {"s", "c0", "kind"});
            const int s = static_cast<int>(as_integer(need(g[i], w, "s"), dotted(w, "s")));
            if (s < 0 || !growth.emplace(s, decl).second) {
                throw ArgumentError(dotted(w, "s") + ": must be a nonnegative start not declared twice");
            }
        }
    }
    return in_field(ew, [&] { return IncrementBarrier(levels, growth); });
}

std::vector<int> parse_n_list(const json& config) {
    const json& v = need(config, "", "n");
    std::vector<int> out;
    if (v.is_array()) {
        if (v.empty()) {
            throw ArgumentError("n: expected a positive integer or a nonempty array of them");
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            out.push_back(static_cast<int>(as_integer(v[i], item("n", i))));
        }
    } else {
        out.push_back(static_cast<int>(as_integer(v, "n")));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] < 1) {
            throw ArgumentError(item("n", i) + ": obligor count must be at least 1");
        }
    }
    return out;
}

// Fields accepted by each command; everything else is rejected.
const std::map<std::string, std::set<std::string>>& command_fields() {
    static const std::map<std::string, std::set<std::string>> fields = {
        {"legendre", {"loss_amount", "default_time", "epoch", "points", "probes", "tolerance"}},
        {"rate-path", {"loss_amount", "default_time", "path", "tolerance", "augment_defective", "scenarios"}},
        {"rate-multiclass", {"classes", "path", "tolerance", "augment_defective", "scenarios"}},
        {"barrier", {"loss_amount", "default_time", "barrier", "n", "tolerance", "gap_tol", "t_check"}},
        {"increment", {"loss_amount", "default_time", "increment_barrier", "n", "tolerance", "gap_tol", "t_check"}},
        {"oracle-barrier", {"loss_amount", "default_time", "barrier", "n", "state_cap"}},
        {"oracle-increment", {"loss_amount", "default_time", "increment_barrier", "n", "state_cap"}},
        {"simulate",
         {"loss_amount", "default_time", "barrier", "increment_barrier", "n", "replications", "seed", "method",
          "workers", "paths", "tolerance", "gap_tol", "t_check"}},
        {"hypothesis",
         {"loss_amount", "default_time", "barrier", "increment_barrier", "n", "tolerance", "gap_tol", "t_check"}},
    };
    return fields;
}

double default_tolerance(const std::string& command) {
    if (command == "legendre") {
        return kDefaultTiltTol;
    }
    if (command == "rate-path" || command == "rate-multiclass") {
        return 1e-8;
    }
    return 1e-12;
}

// Fills defaults and applies overrides so that the echoed config reproduces
// the run exactly.
json resolve(const std::string& command, const json& config, const Overrides& overrides) {
    json r = config;
    const auto& allowed = command_fields().at(command);
    auto fill = [&](const char* key, json value) {
        if (allowed.contains(key) && !r.contains(key)) {
            r[key] = std::move(value);
        }
    };
    if (overrides.tol && allowed.contains("tolerance")) {
        r["tolerance"] = *overrides.tol;
    }
    if (overrides.seed && allowed.contains("seed")) {
        r["seed"] = *overrides.seed;
    }
    fill("tolerance", default_tolerance(command));
    fill("augment_defective", false);
    fill("gap_tol", 1e-9);
    fill("t_check", 0);
    fill("state_cap", kDefaultStateCap);
    fill("replications", 100000);
    fill("seed", 1);
    fill("method", "plain");
    fill("workers", 1);
    fill("paths", 0);
    return r;
}

double tolerance_of(const json& r) {
    const double tol = as_number(r.at("tolerance"), "tolerance");
    if (!(tol > 0.0)) {
        throw ArgumentError("tolerance: must be positive");
    }
    return tol;
}

bool flag_of(const json& r, const char* key) {
    if (!r.at(key).is_boolean()) {
        throw ArgumentError(std::string(key) + ": expected true or false");
    }
    return r.at(key).get<bool>();
}

AsymptoticOptions asymptotic_options(const json& r) {
    AsymptoticOptions o;
    o.tol = tolerance_of(r);
    o.gap_tol = as_number(r.at("gap_tol"), "gap_tol");
    if (o.gap_tol < 0.0) {
        throw ArgumentError("gap_tol: must be nonnegative");
    }
    o.t_check = static_cast<int>(as_integer(r.at("t_check"), "t_check"));
    if (o.t_check < 0) {
        throw ArgumentError("t_check: must be nonnegative");
    }
    return o;
}

json to_json(const LatticeInfo& l) { return {{"span", l.span}, {"offset", l.offset}}; }

json to_json(const SimplexPoint& p) { return {{"weights", p.weights}, {"never_weight", p.never_weight}}; }

json to_json(const AsymptoticEstimate& e) {
    json rates = json::array();
    for (const auto& r : e.diagnostics.rates) {
        rates.push_back({{"s", r.s},
                         {"t", r.t},
                         {"level", number(r.level)},
                         {"success_mass", r.success_mass},
                         {"rate", number(r.rate)},
                         {"beyond_horizon", r.beyond_horizon}});
    }
    json tails = json::array();
    for (const auto& tc : e.diagnostics.tails) {
        tails.push_back({{"s", tc.s},
                         {"declared", tc.declared},
                         {"kind", to_string(tc.kind)},
                         {"slope", number(tc.slope)},
                         {"min_ratio", number(tc.min_ratio)},
                         {"passed", tc.passed},
                         {"detail", tc.detail}});
    }
    json estimates = json::array();
    for (const auto& n : e.estimates) {
        estimates.push_back({{"n", n.n}, {"probability", n.probability}, {"lattice_mismatch", n.lattice_mismatch}});
    }
    return {{"s_star", e.s_star},
            {"t_star", e.t_star},
            {"level", e.level},
            {"decay_rate", number(e.decay)},
            {"tilt", e.tilt},
            {"prefactor", e.prefactor},
            {"curvature", e.curvature},
            {"success_mass", e.success_mass},
            {"lattice", e.lattice ? to_json(*e.lattice) : json(nullptr)},
            {"estimates", estimates},
            {"diagnostics",
             {{"rates", rates},
              {"gap_tol", e.diagnostics.gap_tol},
              {"uniqueness_gap", number(e.diagnostics.uniqueness_gap)},
              {"unique", e.diagnostics.unique},
              {"tails", tails},
              {"tail_passed", e.diagnostics.tail_passed},
              {"warnings", e.diagnostics.warnings},
              {"all_passed", e.diagnostics.all_passed()}}}};
}

json to_json(const McEstimate& e) {
    return {{"estimate", e.estimate},
            {"stderr", e.standard_error},
            {"replications", e.replications},
            {"seed", e.seed},
            {"method", to_string(e.method)}};
}

struct Portfolio {
    LossAmountModel loss;
    DefaultTimeModel timing;
};

Portfolio parse_portfolio(const json& r) {
    return {parse_loss(need(r, "", "loss_amount"), "loss_amount"),
            parse_timing(need(r, "", "default_time"), "default_time")};
}

LossPath parse_path(const json& r, const LossAmountModel* loss, const DefaultTimeModel* timing) {
    const json& p = need(r, "", "path");
    if (p.is_string() && p.get<std::string>() == "mean") {
        if (loss == nullptr) {
            throw ArgumentError("path: 'mean' needs a single loss_amount and default_time");
        }
        return LossPath::mean_path(*loss, *timing);
    }
    const auto values = as_numbers(p, "path");
    return in_field("path", [&] { return LossPath(values); });
}

void check_grid(const LossPath& path, const DefaultTimeModel& timing, const std::string& where) {
    if (path.size() != timing.grid_size()) {
        throw ArgumentError("path: has " + std::to_string(path.size()) + " epochs but " + where + " has " +
                            std::to_string(timing.grid_size()));
    }
}

void add_scenarios(const json& r, json& results) {
    if (!r.contains("scenarios")) {
        return;
    }
    const json& s = r.at("scenarios");
    if (!s.is_array() || s.empty()) {
        throw ArgumentError("scenarios: expected a nonempty array of {label, rate}");
    }
    std::vector<ScenarioRate> rates;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const std::string w = item("scenarios", i);
        reject_unknown(s[i], w, {"label", "rate"});
        rates.push_back({as_string(need(s[i], w, "label"), dotted(w, "label")),
                         as_number(need(s[i], w, "rate"), dotted(w, "rate"))});
        if (rates.back().rate > 0.0) {
            throw ArgumentError(dotted(w, "rate") + ": decay rates are limits of (1/n) log P and must be <= 0");
        }
    }
    const MixtureDecay m = mixture_decay(rates);
    results["mixture"] = {{"rate", m.rate}, {"label", m.label}};
}

CommandResult run_legendre(const json& r) {
    const double tol = tolerance_of(r);
    const LossAmountModel loss = parse_loss(need(r, "", "loss_amount"), "loss_amount");
    std::optional<CompositeCgf> composite;
    if (r.contains("epoch") || r.contains("default_time")) {
        const DefaultTimeModel timing = parse_timing(need(r, "", "default_time"), "default_time");
        const int t = static_cast<int>(as_integer(need(r, "", "epoch"), "epoch"));
        composite = in_field("epoch", [&] { return CompositeCgf::at_time(loss, timing, t); });
    }
    const CumulantFunction& cgf = composite ? static_cast<const CumulantFunction&>(*composite) : loss;
    const auto points = as_numbers(need(r, "", "points"), "points");
    json values = json::array();
    for (double x : points) {
        const LegendreResult lr = legendre_transform(cgf, x, tol);
        values.push_back({{"x", x},
                          {"value", number(lr.value)},
                          {"argmax", number(lr.argmax)},
                          {"boundary", to_string(lr.boundary)}});
    }
    CommandResult out;
    out.report["results"] = {{"family", to_string(loss.family())},
                             {"mean", cgf.mean()},
                             {"lattice", cgf.lattice() ? to_json(*cgf.lattice()) : json(nullptr)},
                             {"transform", values}};
    if (r.contains("probes")) {
        const auto probes = as_numbers(r.at("probes"), "probes");
        const LightTailReport lt = in_field("probes", [&] { return check_light_tail(loss, probes); });
        json ratios = json::array();
        for (double v : lt.rate_ratios) {
            ratios.push_back(number(v));
        }
        out.report["results"]["light_tail"] = {{"classification", to_string(lt.classification)},
                                               {"threshold", number(lt.threshold)},
                                               {"finite_on_probes", lt.finite_on_probes},
                                               {"rate_ratios", ratios},
                                               {"ratio_increasing", lt.ratio_increasing},
                                               {"ratio_diverging", lt.ratio_diverging}};
    }
    return out;
}

CommandResult run_rate_path(const json& r) {
    PathRateOptions opt;
    opt.tol = tolerance_of(r);
    opt.augment_defective = flag_of(r, "augment_defective");
    const Portfolio pf = parse_portfolio(r);
    const LossPath path = parse_path(r, &pf.loss, &pf.timing);
    check_grid(path, pf.timing, "default_time.probabilities");
    const PathRateResult res = in_field("default_time", [&] { return path_rate(path, pf.loss, pf.timing, opt); });
    CommandResult out;
    out.report["results"] = {{"path", path.values()},
                             {"rate", number(res.rate)},
                             {"argmin", to_json(res.argmin)},
                             {"augmented", res.augmented}};
    add_scenarios(r, out.report["results"]);
    return out;
}

CommandResult run_rate_multiclass(const json& r) {
    PathRateOptions opt;
    opt.tol = tolerance_of(r);
    opt.augment_defective = flag_of(r, "augment_defective");
    const json& cj = need(r, "", "classes");
    if (!cj.is_array() || cj.empty()) {
        throw ArgumentError("classes: expected a nonempty array of {fraction, loss_amount, default_time}");
    }
    std::vector<ObligorClass> classes;
    for (std::size_t i = 0; i < cj.size(); ++i) {
        const std::string w = item("classes", i);
        reject_unknown(cj[i], w, {"fraction", "loss_amount", "default_time"});
        classes.push_back({as_number(need(cj[i], w, "fraction"), dotted(w, "fraction")),
                           parse_loss(need(cj[i], w, "loss_amount"), dotted(w, "loss_amount")),
                           parse_timing(need(cj[i], w, "default_time"), dotted(w, "default_time"))});
    }
    const MultiClassSpec spec = in_field("classes", [&] { return MultiClassSpec(classes); });
    const LossPath path = parse_path(r, nullptr, nullptr);
    check_grid(path, spec.classes().front().timing, "classes[0].default_time.probabilities");
    const MultiClassResult res = in_field("classes", [&] { return multiclass_rate(path, spec, opt); });
    json argmin = json::array();
    for (const auto& p : res.argmin) {
        argmin.push_back(to_json(p));
    }
    CommandResult out;
    out.report["results"] = {{"path", path.values()},
                             {"rate", number(res.rate)},
                             {"argmin", argmin},
                             {"split", res.split},
                             {"iterations", res.iterations}};
    add_scenarios(r, out.report["results"]);
    return out;
}

AsymptoticEstimate asymptotics_for(const json& r, const Portfolio& pf, const std::vector<int>& ns,
                                   bool& increment) {
    const AsymptoticOptions opt = asymptotic_options(r);
    const bool has_b = r.contains("barrier");
    const bool has_i = r.contains("increment_barrier");
    if (has_b == has_i) {
        throw ArgumentError("barrier, increment_barrier: exactly one of the two must be given");
    }
    increment = has_i;
    if (has_b) {
        const Barrier b = parse_barrier(r.at("barrier"), "barrier");
        return in_field("barrier", [&] { return barrier_asymptotics(pf.loss, pf.timing, b, ns, opt); });
    }
    const IncrementBarrier ib = parse_increment_barrier(r.at("increment_barrier"), "increment_barrier");
    return in_field("increment_barrier", [&] { return increment_asymptotics(pf.loss, pf.timing, ib, ns, opt); });
}

CommandResult table_from(const AsymptoticEstimate& est) {
    CommandResult out;
    out.report["results"] = to_json(est);
    out.has_table = true;
    for (const auto& e : est.estimates) {
        out.rows.push_back({e.n, e.probability, std::nullopt, "asymptotic"});
    }
    return out;
}

// The command's field list admits only the matching barrier kind.
CommandResult run_asymptotics(const json& r, bool increment) {
    const Portfolio pf = parse_portfolio(r);
    const auto ns = parse_n_list(r);
    need(r, "", increment ? "increment_barrier" : "barrier");
    bool is_increment = false;
    return table_from(asymptotics_for(r, pf, ns, is_increment));
}

CommandResult run_oracle(const json& r, bool increment) {
    const Portfolio pf = parse_portfolio(r);
    const auto ns = parse_n_list(r);
    const std::int64_t cap = as_integer(r.at("state_cap"), "state_cap");
    if (cap < 1) {
        throw ArgumentError("state_cap: must be positive");
    }
    std::optional<Barrier> b;
    std::optional<IncrementBarrier> ib;
    if (increment) {
        ib = parse_increment_barrier(need(r, "", "increment_barrier"), "increment_barrier");
    } else {
        b = parse_barrier(need(r, "", "barrier"), "barrier");
    }
    CommandResult out;
    out.has_table = true;
    json rows = json::array();
    for (int n : ns) {
        const LatticePortfolio lp = in_field(
            "loss_amount", [&] { return LatticePortfolio(n, pf.loss, pf.timing, static_cast<std::size_t>(cap)); });
        const double p = increment ? in_field("increment_barrier", [&] { return exact_increment(lp, *ib); })
                                   : in_field("barrier", [&] { return exact_barrier(lp, *b); });
        rows.push_back({{"n", n}, {"probability", p}});
        out.rows.push_back({n, p, 0.0, "exact"});
    }
    out.report["results"] = {{"estimates", rows}};
    return out;
}

CommandResult run_simulate(const json& r) {
    const Portfolio pf = parse_portfolio(r);
    const auto ns = parse_n_list(r);
    SimulationOptions opt;
    if (!r.at("seed").is_number_unsigned()) {
        throw ArgumentError("seed: expected a nonnegative integer");
    }
    opt.seed = r.at("seed").get<std::uint64_t>();
    const std::int64_t reps = as_integer(r.at("replications"), "replications");
    if (reps < 1) {
        throw ArgumentError("replications: must be at least 1");
    }
    opt.replications = static_cast<std::size_t>(reps);
    const std::int64_t workers = as_integer(r.at("workers"), "workers");
    if (workers < 1 || workers > 1024) {
        throw ArgumentError("workers: must lie in 1..1024");
    }
    opt.workers = static_cast<unsigned>(workers);
    const std::string& m = as_string(r.at("method"), "method");
    if (m != "plain" && m != "tilted") {
        throw ArgumentError("method: expected 'plain' or 'tilted'");
    }
    const McMethod method = m == "plain" ? McMethod::plain : McMethod::tilted;
    const std::int64_t paths = as_integer(r.at("paths"), "paths");
    if (paths < 0) {
        throw ArgumentError("paths: must be nonnegative");
    }

    CommandResult out;
    out.has_table = true;
    json results;
    const bool has_b = r.contains("barrier");
    const bool has_i = r.contains("increment_barrier");
    if (has_b == has_i) {
        throw ArgumentError("barrier, increment_barrier: exactly one of the two must be given");
    }
    std::optional<TiltPlan> plan;
    if (method == McMethod::tilted) {
        bool increment = false;
        const AsymptoticEstimate est = asymptotics_for(r, pf, ns, increment);
        plan = TiltPlan{est.s_star, est.t_star, est.tilt};
        results["tilt"] = {{"s", est.s_star}, {"t", est.t_star}, {"sigma", est.tilt}};
    }
    json rows = json::array();
    for (int n : ns) {
        McEstimate e;
        if (has_b) {
            const Barrier b = parse_barrier(r.at("barrier"), "barrier");
            e = in_field("barrier", [&] { return mc_barrier(pf.loss, pf.timing, b, n, opt, method, plan); });
        } else {
            const IncrementBarrier ib = parse_increment_barrier(r.at("increment_barrier"), "increment_barrier");
            e = in_field("increment_barrier",
                         [&] { return mc_increment(pf.loss, pf.timing, ib, n, opt, method, plan); });
        }
        json row = to_json(e);
        row["n"] = n;
        rows.push_back(row);
        out.rows.push_back({n, e.estimate, e.standard_error, to_string(e.method)});
    }
    results["estimates"] = rows;
    if (paths > 0) {
        json sample = json::array();
        simulate_paths(pf.loss, pf.timing, ns.front(), static_cast<std::size_t>(paths), opt.seed,
                       [&](std::size_t, std::span<const double> p) {
                           sample.push_back(std::vector<double>(p.begin(), p.end()));
                       });
        results["paths"] = {{"n", ns.front()}, {"values", sample}};
    }
    out.report["results"] = results;
    return out;
}

CommandResult run_hypothesis(const json& r) {
    const Portfolio pf = parse_portfolio(r);
    const auto ns = parse_n_list(r);
    bool increment = false;
    const AsymptoticEstimate est = asymptotics_for(r, pf, ns, increment);
    CommandResult out = table_from(est);
    out.report["results"]["report"] = hypothesis_report(est);
    out.exit_code = est.diagnostics.all_passed() ? 0 : 3;
    return out;
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> names = {"legendre", "rate-path",      "rate-multiclass",
                                                   "barrier",  "increment",      "oracle-barrier",
                                                   "oracle-increment", "simulate", "hypothesis"};
    return names;
}

CommandResult execute(const std::string& command, const json& config, const Overrides& overrides) {
    const auto& fields = command_fields();
    const auto it = fields.find(command);
    if (it == fields.end()) {
        throw ArgumentError("command: unknown command '" + command + "'");
    }
    reject_unknown(config, "", it->second);
    const json r = resolve(command, config, overrides);

    CommandResult out;
    if (command == "legendre") {
        out = run_legendre(r);
    } else if (command == "rate-path") {
        out = run_rate_path(r);
    } else if (command == "rate-multiclass") {
        out = run_rate_multiclass(r);
    } else if (command == "barrier") {
        out = run_asymptotics(r, false);
    } else if (command == "increment") {
        out = run_asymptotics(r, true);
    } else if (command == "oracle-barrier") {
        out = run_oracle(r, false);
    } else if (command == "oracle-increment") {
        out = run_oracle(r, true);
    } else if (command == "simulate") {
        out = run_simulate(r);
    } else {
        out = run_hypothesis(r);
    }
    out.report["command"] = command;
    out.report["config"] = r;
    out.report["version"] = {{"lossdev", kVersion},
                             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    return out;
}

int exit_code_for(const std::exception& error) {
    if (dynamic_cast<const NonUniqueOptimumError*>(&error) != nullptr) {
        return 3;
    }
    if (dynamic_cast<const CapacityError*>(&error) != nullptr) {
        return 4;
    }
    if (dynamic_cast<const ArgumentError*>(&error) != nullptr ||
        dynamic_cast<const NotRareEventError*>(&error) != nullptr ||
        dynamic_cast<const PreconditionError*>(&error) != nullptr ||
        dynamic_cast<const DomainError*>(&error) != nullptr || dynamic_cast<const NoTiltError*>(&error) != nullptr ||
        dynamic_cast<const json::exception*>(&error) != nullptr) {
        return 2;
    }
    return 1;
}

std::string render_csv(const std::vector<CsvRow>& rows) {
    std::ostringstream os;
    os.precision(17);
    os << "n,estimate,stderr,method\n";
    for (const auto& row : rows) {
        os << row.n << ',' << row.estimate << ',';
        if (row.standard_error) {
            os << *row.standard_error;
        }
        os << ',' << row.method << '\n';
    }
    return os.str();
}

int run(const std::string& command, const std::string& config_path, const std::string& out_path, OutputFormat format,
        const Overrides& overrides, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    CommandResult result;
    json error_report;
    try {
        std::ifstream in(config_path);
        if (!in) {
            throw ArgumentError("config: cannot open '" + config_path + "'");
        }
        json config;
        try {
            config = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ArgumentError("config: invalid JSON: " + std::string(e.what()));
        }
        result = execute(command, config, overrides);
        if (format == OutputFormat::csv && !result.has_table) {
            throw ArgumentError("format: csv output needs a command with an n table, '" + command +
                                "' produces none");
        }
    } catch (const std::exception& e) {
        const int code = exit_code_for(e);
        err << "error: " << e.what() << '\n';
        result.exit_code = code;
        result.report = {{"command", command}, {"error", {{"message", e.what()}, {"exit_code", code}}}};
        if (const auto* tie = dynamic_cast<const NonUniqueOptimumError*>(&e)) {
            json tied = json::array();
            for (const auto& p : tie->tied()) {
                tied.push_back({{"s", p.s}, {"t", p.t}});
            }
            result.report["error"]["tied"] = tied;
        }
        format = OutputFormat::json;
    }
    if (result.exit_code == 3 && result.report.contains("results")) {
        err << "hypothesis check failed; see the report\n";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.report["timing"] = {{"wall_seconds", seconds}};

    const std::string text = format == OutputFormat::csv ? render_csv(result.rows) : result.report.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            err << "error: cannot write '" << out_path << "'\n";
            return result.exit_code == 0 ? 1 : result.exit_code;
        }
        out << text;
    }
    return result.exit_code;
}

}  // namespace lossdev
