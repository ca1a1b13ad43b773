#include "lossdev/monte_carlo.hpp"

#include "lossdev/errors.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

namespace lossdev {

namespace {

constexpr std::size_t kBlock = 4096;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Per-replication stream keyed by (seed, replication).
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t replication)
        : engine_(splitmix64(seed ^ splitmix64(replication ^ 0x5851f42d4c957f2dull))) {}

    // Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

std::int64_t sample_poisson(Stream& rng, double lambda) {
    if (lambda > 30.0) {
        std::poisson_distribution<std::int64_t> dist(lambda);
        return dist(rng.engine());
    }
    // Inversion by sequential search.
    const double u = rng.uniform();
    double p = std::exp(-lambda);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 10'000) {
        ++k;
        p *= lambda / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

// Draws loss amounts, possibly tilted by e^{sigma u}.
class LossSampler {
public:
    LossSampler(const LossAmountModel& loss, double tilt) : loss_(loss) {
        switch (loss.family()) {
            case LossFamily::poisson_type:
                lambda_ = loss.lambda() * std::exp(tilt * loss.unit());
                break;
            case LossFamily::exponential:
                if (!(tilt < loss.rate())) {
                    throw ArgumentError("tilt must stay below the exponential rate");
                }
                rate_ = loss.rate() - tilt;
                break;
            default: {
                double shift = -kInf;
                for (const auto& a : loss.atoms()) {
                    shift = std::fmax(shift, tilt * a.value);
                }
                std::vector<double> w;
                detail::CompensatedSum total;
                for (const auto& a : loss.atoms()) {
                    w.push_back(a.probability * std::exp(tilt * a.value - shift));
                    total += w.back();
                }
                detail::CompensatedSum run;
                for (std::size_t k = 0; k < w.size(); ++k) {
                    run += w[k] / total.value();
                    cdf_.push_back(run.value());
                }
                cdf_.back() = 1.0;
            }
        }
    }

    double draw(Stream& rng) const {
        switch (loss_.family()) {
            case LossFamily::poisson_type:
                return loss_.unit() * static_cast<double>(1 + sample_poisson(rng, lambda_));
            case LossFamily::exponential: return -std::log(rng.uniform()) / rate_;
            default: {
                const double u = rng.uniform();
                const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
                const auto k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                                  static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
                return loss_.atoms()[k].value;
            }
        }
    }

private:
    const LossAmountModel& loss_;
    double lambda_ = 0.0;
    double rate_ = 0.0;
    std::vector<double> cdf_;
};

// Draws (default epoch, loss) pairs for one obligor; epoch 0 means no default
// on the grid.
class ObligorSampler {
public:
    ObligorSampler(const LossAmountModel& loss, const DefaultTimeModel& timing, std::optional<TiltPlan> plan)
        : timing_(timing), plain_(loss, 0.0), tilted_(loss, plan ? plan->tilt : 0.0), plan_(plan) {
        for (int j = 1; j <= timing.grid_size(); ++j) {
            cdf_.push_back(timing.cumulative(j));
        }
        if (plan_) {
            const CompositeCgf c = CompositeCgf::increment(loss, timing, plan_->s, plan_->t);
            if (!(c.success_mass() > 0.0)) {
                throw ArgumentError("tilt epoch carries no default mass");
            }
            lo_ = timing.cumulative(plan_->s);
            hi_ = timing.cumulative(plan_->t);
            success_ = c.tilted_success_mass(plan_->tilt);
            log_mgf_ = c(plan_->tilt);
        }
    }

    double log_mgf() const { return log_mgf_; }

    void draw(Stream& rng, int& epoch, double& amount) const {
        if (!plan_) {
            epoch = epoch_at(rng.uniform());
            amount = epoch > 0 ? plain_.draw(rng) : 0.0;
            return;
        }
        if (rng.uniform() < success_) {
            epoch = epoch_at(lo_ + rng.uniform() * (hi_ - lo_));
            epoch = std::clamp(epoch, plan_->s + 1, plan_->t);
            amount = tilted_.draw(rng);
            return;
        }
        // Complement of (F_s, F_t], including the never-default mass.
        const double u = rng.uniform() * (1.0 - (hi_ - lo_));
        epoch = u < lo_ ? epoch_at(u) : epoch_at(u + (hi_ - lo_));
        if (epoch > plan_->s && epoch <= plan_->t) {
            epoch = plan_->t < timing_.grid_size() ? epoch_after(plan_->t, u + (hi_ - lo_)) : 0;
        }
        amount = epoch > 0 ? plain_.draw(rng) : 0.0;
    }

private:
    int epoch_at(double u) const {
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it == cdf_.end()) {
            return 0;
        }
        return static_cast<int>(it - cdf_.begin()) + 1;
    }
    // Guards against u landing exactly on F_t through rounding.
    int epoch_after(int t, double u) const {
        const auto it = std::upper_bound(cdf_.begin() + t, cdf_.end(), u);
        if (it == cdf_.end()) {
            return 0;
        }
        return static_cast<int>(it - cdf_.begin()) + 1;
    }

    const DefaultTimeModel& timing_;
    std::vector<double> cdf_;
    LossSampler plain_;
    LossSampler tilted_;
    std::optional<TiltPlan> plan_;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double success_ = 0.0;
    double log_mgf_ = 0.0;
};

// Cumulative (unnormalized) loss L_n(1..N) of one replication.
void draw_path(const ObligorSampler& sampler, int n, int grid, Stream& rng, std::vector<double>& cumulative) {
    cumulative.assign(static_cast<std::size_t>(grid), 0.0);
    for (int i = 0; i < n; ++i) {
        int epoch = 0;
        double amount = 0.0;
        sampler.draw(rng, epoch, amount);
        if (epoch > 0) {
            cumulative[static_cast<std::size_t>(epoch - 1)] += amount;
        }
    }
    for (std::size_t j = 1; j < cumulative.size(); ++j) {
        cumulative[j] += cumulative[j - 1];
    }
}

struct BlockSums {
    std::size_t hits = 0;
    detail::CompensatedSum weight;
    detail::CompensatedSum weight_sq;
};

bool at_or_above(double loss, double threshold) {
    return loss >= threshold - 1e-9 * detail::relative_scale(threshold);
}

template <class Event>
McEstimate run_estimator(const LossAmountModel& loss, const DefaultTimeModel& timing, int n,
                         const SimulationOptions& options, McMethod method, std::optional<TiltPlan> tilt,
                         const Event& event) {
    if (n < 1) {
        throw ArgumentError("obligor count n must be at least 1");
    }
    if (options.replications < 1) {
        throw ArgumentError("replications must be at least 1");
    }
    if (method == McMethod::tilted && !tilt) {
        throw ArgumentError("tilted estimator needs the dominating epoch and tilt from the asymptotics");
    }
    if (tilt && (tilt->t < 1 || tilt->t > timing.grid_size() || tilt->s < 0 || tilt->s >= tilt->t)) {
        throw ArgumentError("tilt epochs must satisfy 0 <= s < t <= N");
    }
    const std::optional<TiltPlan> plan = method == McMethod::tilted ? tilt : std::nullopt;
    const ObligorSampler sampler(loss, timing, plan);
    const int grid = timing.grid_size();
    const double log_norm = static_cast<double>(n) * sampler.log_mgf();

    const std::size_t blocks = (options.replications + kBlock - 1) / kBlock;
    std::vector<BlockSums> results(blocks);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        std::vector<double> path;
        for (std::size_t b = next++; b < blocks; b = next++) {
            BlockSums& out = results[b];
            const std::size_t first = b * kBlock;
            const std::size_t end = std::min(options.replications, first + kBlock);
            for (std::size_t r = first; r < end; ++r) {
                Stream rng(options.seed, r);
                draw_path(sampler, n, grid, rng, path);
                if (!event(path)) {
                    continue;
                }
                ++out.hits;
                if (plan) {
                    auto at = [&](int t) { return t <= 0 ? 0.0 : path[static_cast<std::size_t>(std::min(t, grid) - 1)]; };
                    const double w = std::exp(-plan->tilt * (at(plan->t) - at(plan->s)) + log_norm);
                    out.weight += w;
                    out.weight_sq += w * w;
                }
            }
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(blocks)));
    {
        std::vector<std::jthread> pool;
        for (unsigned i = 1; i < workers; ++i) {
            pool.emplace_back(worker);
        }
        worker();
    }

    // Fixed block order keeps the estimate independent of the worker count.
    std::size_t hits = 0;
    detail::CompensatedSum weight;
    detail::CompensatedSum weight_sq;
    for (const auto& r : results) {
        hits += r.hits;
        weight += r.weight.value();
        weight_sq += r.weight_sq.value();
    }
    const auto reps = static_cast<double>(options.replications);
    McEstimate est;
    est.replications = options.replications;
    est.seed = options.seed;
    est.method = method;
    if (!plan) {
        const double p = static_cast<double>(hits) / reps;
        est.estimate = p;
        est.standard_error = std::sqrt(p * (1.0 - p) / reps);
    } else {
        const double mean = weight.value() / reps;
        est.estimate = mean;
        if (options.replications > 1) {
            const double var = std::fmax(0.0, (weight_sq.value() - reps * mean * mean) / (reps - 1.0));
            est.standard_error = std::sqrt(var / reps);
        }
    }
    return est;
}

}  // namespace

std::string to_string(McMethod method) { return method == McMethod::plain ? "plain" : "tilted"; }

void simulate_paths(const LossAmountModel& loss, const DefaultTimeModel& timing, int n, std::size_t replications,
                    std::uint64_t seed, const PathSink& sink) {
    if (n < 1) {
        throw ArgumentError("obligor count n must be at least 1");
    }
    if (replications < 1) {
        throw ArgumentError("replications must be at least 1");
    }
    const ObligorSampler sampler(loss, timing, std::nullopt);
    std::vector<double> path;
    for (std::size_t r = 0; r < replications; ++r) {
        Stream rng(seed, r);
        draw_path(sampler, n, timing.grid_size(), rng, path);
        for (double& v : path) {
            v /= static_cast<double>(n);
        }
        sink(r, path);
    }
}

McEstimate mc_barrier(const LossAmountModel& loss, const DefaultTimeModel& timing, const Barrier& barrier, int n,
                      const SimulationOptions& options, McMethod method, std::optional<TiltPlan> tilt) {
    const int grid = timing.grid_size();
    const auto nn = static_cast<double>(n);
    auto event = [&](const std::vector<double>& path) {
        for (int t = 1; t <= barrier.horizon(); ++t) {
            const double l = path[static_cast<std::size_t>(std::min(t, grid) - 1)];
            if (at_or_above(l, nn * barrier.level(t))) {
                return true;
            }
        }
        return false;
    };
    return run_estimator(loss, timing, n, options, method, tilt, event);
}

McEstimate mc_increment(const LossAmountModel& loss, const DefaultTimeModel& timing, const IncrementBarrier& barrier,
                        int n, const SimulationOptions& options, McMethod method, std::optional<TiltPlan> tilt) {
    const int grid = timing.grid_size();
    const auto nn = static_cast<double>(n);
    auto event = [&](const std::vector<double>& path) {
        auto at = [&](int t) { return t <= 0 ? 0.0 : path[static_cast<std::size_t>(std::min(t, grid) - 1)]; };
        for (const auto& e : barrier.entries()) {
            if (at_or_above(at(e.t) - at(e.s), nn * e.level)) {
                return true;
            }
        }
        return false;
    };
    return run_estimator(loss, timing, n, options, method, tilt, event);
}

}  // namespace lossdev
