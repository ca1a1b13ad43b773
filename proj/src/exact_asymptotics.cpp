#include "lossdev/exact_asymptotics.hpp"

#include "lossdev/errors.hpp"
#include "lossdev/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace lossdev {

namespace {

struct Candidate {
    EpochRate rate;
    CompositeCgf cgf;
};

CompositeCgf composite_for(const LossAmountModel& loss, const DefaultTimeModel& timing, int s, int t) {
    const double w = timing.cumulative(t) - timing.cumulative(s);
    if (t <= timing.grid_size()) {
        return s == 0 ? CompositeCgf::at_time(loss, timing, t) : CompositeCgf::increment(loss, timing, s, t);
    }
    return CompositeCgf::with_mass(loss, std::fmax(0.0, w));
}

Candidate evaluate(const LossAmountModel& loss, const DefaultTimeModel& timing, int s, int t, double level,
                   bool beyond, double tol) {
    CompositeCgf cgf = composite_for(loss, timing, s, t);
    const double mean_level = cgf.mean();
    if (!(level > mean_level)) {
        throw NotRareEventError(s, t, level, mean_level);
    }
    EpochRate r;
    r.s = s;
    r.t = t;
    r.level = level;
    r.success_mass = cgf.success_mass();
    r.rate = legendre_transform(cgf, level, tol).value;
    r.beyond_horizon = beyond;
    return {r, std::move(cgf)};
}

TailCheck check_tail(int s, const std::optional<GrowthDeclaration>& growth, const std::vector<EpochRate>& tail) {
    TailCheck check;
    check.s = s;
    if (tail.empty()) {
        check.detail = "no epochs beyond the tabulated horizon; the event is over a finite epoch set";
        return check;
    }
    check.declared = growth.has_value();
    check.kind = growth ? growth->kind : GrowthKind::log;

    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    bool any_infinite = false;
    for (const auto& r : tail) {
        if (r.t < 2) {
            continue;
        }
        const double lt = std::log(static_cast<double>(r.t));
        check.min_ratio = std::fmin(check.min_ratio, r.rate / lt);
        if (!std::isfinite(r.rate)) {
            any_infinite = true;
            continue;
        }
        sx += lt;
        sy += r.rate;
        sxx += lt * lt;
        sxy += lt * r.rate;
        ++count;
    }
    if (count >= 2) {
        const double denom = count * sxx - sx * sx;
        if (denom > 0.0) {
            check.slope = (count * sxy - sx * sy) / denom;
        }
    } else if (any_infinite) {
        check.slope = kInf;
    }

    std::ostringstream os;
    os.precision(6);
    if (check.kind == GrowthKind::loglog) {
        check.passed = false;
        os << "declared growth c0*log(log t) is slower than log t; the tail condition cannot hold";
    } else {
        const bool slope_ok = check.slope && *check.slope > 0.0;
        const bool ratio_ok = check.min_ratio > 0.0;
        check.passed = slope_ok && ratio_ok;
        os << "declared growth c0*log t; fitted slope ";
        if (check.slope) {
            os << *check.slope;
        } else {
            os << "n/a";
        }
        os << ", min I(t)/log t " << check.min_ratio << " over " << tail.size() << " epochs";
    }
    check.detail = os.str();
    return check;
}

AsymptoticEstimate finish(std::vector<Candidate> candidates, const std::vector<TailCheck>& tails, bool increment,
                          std::span<const int> n_list, const AsymptoticOptions& options) {
    for (int n : n_list) {
        if (n < 1) {
            throw ArgumentError("obligor count n must be at least 1, got " + std::to_string(n));
        }
    }
    AsymptoticEstimate est;
    est.increment = increment;
    HypothesisReport& diag = est.diagnostics;
    diag.gap_tol = options.gap_tol;
    diag.tails = tails;
    for (const auto& tc : tails) {
        diag.tail_passed = diag.tail_passed && tc.passed;
    }

    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        diag.rates.push_back(candidates[i].rate);
        if (std::isfinite(candidates[i].rate.rate) &&
            (best == candidates.size() || candidates[i].rate.rate < candidates[best].rate.rate)) {
            best = i;
        }
    }
    if (best == candidates.size()) {
        throw PreconditionError("every epoch has an infinite rate: the levels exceed the largest attainable loss");
    }
    const double min_rate = candidates[best].rate.rate;
    std::vector<EpochPair> tied;
    double second = kInf;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double r = candidates[i].rate.rate;
        if (r - min_rate <= options.gap_tol) {
            tied.push_back({candidates[i].rate.s, candidates[i].rate.t});
        }
        if (i != best) {
            second = std::fmin(second, r);
        }
    }
    diag.uniqueness_gap = second - min_rate;
    if (tied.size() > 1) {
        throw NonUniqueOptimumError(std::move(tied), min_rate, options.gap_tol);
    }

    const Candidate& star = candidates[best];
    est.s_star = star.rate.s;
    est.t_star = star.rate.t;
    est.level = star.rate.level;
    est.decay = min_rate;
    est.success_mass = star.rate.success_mass;
    const BahadurRaoConstant br = bahadur_rao_constant(star.cgf, est.level, star.cgf.lattice(), options.tol);
    est.tilt = br.tilt;
    est.prefactor = br.constant;
    est.curvature = br.curvature;
    est.lattice = br.lattice;
    if (br.lattice && !br.on_lattice) {
        std::ostringstream os;
        os.precision(12);
        os << "level " << est.level << " is not a lattice point of the dominating variable (span "
           << br.lattice->span << "); the lattice constant is applied at the level as given";
        diag.warnings.push_back(os.str());
    }
    for (int n : n_list) {
        NEstimate e;
        e.n = n;
        e.probability = est.prefactor * std::exp(-static_cast<double>(n) * est.decay) / std::sqrt(static_cast<double>(n));
        if (br.lattice) {
            const double k = static_cast<double>(n) * (est.level - br.lattice->offset) / br.lattice->span;
            e.lattice_mismatch = std::fabs(k - std::round(k)) > 1e-9 * std::fmax(1.0, std::fabs(k));
            if (e.lattice_mismatch) {
                diag.warnings.push_back("n=" + std::to_string(n) +
                                        ": n times the level is not a lattice point of the sum");
            }
        }
        if (!(e.probability < 1.0)) {
            diag.warnings.push_back("n=" + std::to_string(n) + ": estimate is not below 1; n is outside the asymptotic regime");
        }
        est.estimates.push_back(e);
    }
    return est;
}

int resolve_check_horizon(int horizon, int t_check, bool has_growth) {
    const int last = t_check == 0 ? horizon : t_check;
    if (last < horizon) {
        throw ArgumentError("t_check=" + std::to_string(last) + " is below the tabulated horizon " +
                            std::to_string(horizon));
    }
    if (last > horizon && !has_growth) {
        throw ArgumentError("t_check=" + std::to_string(last) +
                            " extends beyond the tabulated horizon but no growth declaration is given");
    }
    return last;
}

}  // namespace

BahadurRaoConstant bahadur_rao_constant(const CumulantFunction& cgf, double q, std::optional<LatticeInfo> lattice,
                                        double tol) {
    if (!(q > cgf.mean())) {
        throw ArgumentError("Bahadur-Rao constant needs a level above the mean");
    }
    BahadurRaoConstant out;
    out.tilt = tilt_solve(cgf, q, tol);
    out.curvature = cgf.derivatives(out.tilt).curvature;
    const double root = std::sqrt(2.0 * std::numbers::pi * out.curvature);
    out.lattice = lattice;
    if (lattice) {
        const double d = lattice->span;
        out.constant = d / (-std::expm1(-out.tilt * d) * root);
        out.on_lattice = lattice->contains(q);
    } else {
        out.constant = 1.0 / (out.tilt * root);
    }
    return out;
}

AsymptoticEstimate barrier_asymptotics(const LossAmountModel& loss, const DefaultTimeModel& timing,
                                       const Barrier& barrier, std::span<const int> n_list,
                                       const AsymptoticOptions& options) {
    const int horizon = barrier.horizon();
    const int last = resolve_check_horizon(horizon, options.t_check, barrier.growth().has_value());
    std::vector<Candidate> candidates;
    std::vector<EpochRate> tail;
    for (int t = 1; t <= last; ++t) {
        Candidate c = evaluate(loss, timing, 0, t, barrier.level(t), t > horizon, options.tol);
        if (t > horizon) {
            tail.push_back(c.rate);
        }
        candidates.push_back(std::move(c));
    }
    std::vector<TailCheck> tails{check_tail(0, barrier.growth(), tail)};
    return finish(std::move(candidates), tails, false, n_list, options);
}

AsymptoticEstimate increment_asymptotics(const LossAmountModel& loss, const DefaultTimeModel& timing,
                                         const IncrementBarrier& barrier, std::span<const int> n_list,
                                         const AsymptoticOptions& options) {
    const int horizon = barrier.horizon();
    const int last = resolve_check_horizon(horizon, options.t_check, !barrier.growth().empty());
    std::vector<Candidate> candidates;
    for (const auto& e : barrier.entries()) {
        candidates.push_back(evaluate(loss, timing, e.s, e.t, e.level, false, options.tol));
    }
    std::vector<TailCheck> tails;
    for (const auto& [s, growth] : barrier.growth()) {
        std::vector<EpochRate> tail;
        for (int t = std::max(horizon, s) + 1; t <= last; ++t) {
            Candidate c = evaluate(loss, timing, s, t, growth.level(t), true, options.tol);
            tail.push_back(c.rate);
            candidates.push_back(std::move(c));
        }
        tails.push_back(check_tail(s, growth, tail));
    }
    if (tails.empty()) {
        tails.push_back(check_tail(0, std::nullopt, {}));
    }
    return finish(std::move(candidates), tails, true, n_list, options);
}

std::string hypothesis_report(const AsymptoticEstimate& estimate) {
    const HypothesisReport& d = estimate.diagnostics;
    std::ostringstream os;
    os.precision(10);
    os << (estimate.increment ? "increment barrier" : "barrier") << " asymptotics\n";
    os << "per-epoch rates:\n";
    for (const auto& r : d.rates) {
        os << "  ";
        if (estimate.increment) {
            os << "(s=" << r.s << ", t=" << r.t << ")";
        } else {
            os << "t=" << r.t;
        }
        os << "  level=" << r.level << "  mass=" << r.success_mass << "  rate=" << r.rate
           << (r.beyond_horizon ? "  [growth]" : "") << '\n';
    }
    os << "optimum: ";
    if (estimate.increment) {
        os << "(s*=" << estimate.s_star << ", t*=" << estimate.t_star << ")";
    } else {
        os << "t*=" << estimate.t_star;
    }
    os << "  I=" << estimate.decay << "  sigma*=" << estimate.tilt << "  C*=" << estimate.prefactor << '\n';
    os << "uniqueness: gap=" << d.uniqueness_gap << " (tol " << d.gap_tol << ") " << (d.unique ? "PASS" : "FAIL")
       << '\n';
    for (const auto& tc : d.tails) {
        os << "tail";
        if (estimate.increment) {
            os << " s=" << tc.s;
        }
        os << ": " << tc.detail << "  " << (tc.passed ? "PASS" : "FAIL") << '\n';
    }
    for (const auto& w : d.warnings) {
        os << "warning: " << w << '\n';
    }
    os << "overall: " << (d.all_passed() ? "PASS" : "FAIL") << '\n';
    return os.str();
}

}  // namespace lossdev
