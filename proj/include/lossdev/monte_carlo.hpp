#pragma once

// Monte Carlo estimation of barrier and increment crossing probabilities,
// plain or with an exponential tilt at the dominating epoch.

#include "lossdev/barrier.hpp"
#include "lossdev/distributions.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>

namespace lossdev {

enum class McMethod { plain, tilted };

std::string to_string(McMethod method);

struct McEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    McMethod method = McMethod::plain;
};

// Change of measure: the success event {s < tau <= t} is reweighted and U is
// tilted by `tilt` on it, as for the composite variable U(Z(t) - Z(s)).
struct TiltPlan {
    int s = 0;
    int t = 1;
    double tilt = 0.0;
};

struct SimulationOptions {
    std::uint64_t seed = 1;
    std::size_t replications = 100'000;
    // Worker threads; results do not depend on this value.
    unsigned workers = 1;
};

using PathSink = std::function<void(std::size_t replication, std::span<const double> path)>;

// Emits L_n(t)/n for t = 1..N, one path per replication, in replication order.
// Replication r uses a random stream derived from (seed, r) only.
void simulate_paths(const LossAmountModel& loss, const DefaultTimeModel& timing, int n, std::size_t replications,
                    std::uint64_t seed, const PathSink& sink);

McEstimate mc_barrier(const LossAmountModel& loss, const DefaultTimeModel& timing, const Barrier& barrier, int n,
                      const SimulationOptions& options, McMethod method = McMethod::plain,
                      std::optional<TiltPlan> tilt = std::nullopt);

McEstimate mc_increment(const LossAmountModel& loss, const DefaultTimeModel& timing, const IncrementBarrier& barrier,
                        int n, const SimulationOptions& options, McMethod method = McMethod::plain,
                        std::optional<TiltPlan> tilt = std::nullopt);

}  // namespace lossdev
