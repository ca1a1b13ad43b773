#include "lossdev/barrier.hpp"

#include "lossdev/distributions.hpp"
#include "lossdev/errors.hpp"

#include <algorithm>
#include <cmath>

namespace lossdev {

std::string to_string(GrowthKind kind) { return kind == GrowthKind::log ? "log" : "loglog"; }

double GrowthDeclaration::level(int t) const {
    const double lt = std::log(static_cast<double>(t));
    return kind == GrowthKind::log ? c0 * lt : c0 * std::log(lt);
}

Barrier::Barrier(std::vector<double> values, std::optional<GrowthDeclaration> growth)
    : values_(std::move(values)), growth_(growth) {
    if (values_.empty()) {
        throw ArgumentError("barrier needs at least one tabulated level");
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ArgumentError("barrier level at t=" + std::to_string(i + 1) + " must be finite");
        }
    }
    if (growth_ && !(growth_->c0 > 0.0)) {
        throw ArgumentError("barrier growth coefficient c0 must be positive");
    }
}

Barrier Barrier::constant(double level, int horizon) {
    if (horizon < 1) {
        throw ArgumentError("barrier horizon must be at least 1");
    }
    return Barrier(std::vector<double>(static_cast<std::size_t>(horizon), level));
}

double Barrier::level(int t) const {
    if (t >= 1 && t <= horizon()) {
        return values_[static_cast<std::size_t>(t - 1)];
    }
    if (t > horizon() && growth_) {
        return growth_->level(t);
    }
    return kInf;
}

IncrementBarrier::IncrementBarrier(std::vector<IncrementLevel> entries, std::map<int, GrowthDeclaration> growth)
    : entries_(std::move(entries)), growth_(std::move(growth)) {
    if (entries_.empty()) {
        throw ArgumentError("increment barrier needs at least one (s,t) entry");
    }
    std::sort(entries_.begin(), entries_.end(),
              [](const IncrementLevel& a, const IncrementLevel& b) { return a.t != b.t ? a.t < b.t : a.s < b.s; });
    for (const auto& e : entries_) {
        if (e.s < 0 || e.t <= e.s) {
            throw ArgumentError("increment barrier pair (" + std::to_string(e.s) + "," + std::to_string(e.t) +
                                ") must satisfy 0 <= s < t");
        }
        if (!std::isfinite(e.level)) {
            throw ArgumentError("increment barrier level must be finite");
        }
        if (!lookup_.emplace(std::pair{e.s, e.t}, e.level).second) {
            throw ArgumentError("increment barrier pair (" + std::to_string(e.s) + "," + std::to_string(e.t) +
                                ") listed twice");
        }
        horizon_ = std::max(horizon_, e.t);
    }
    for (const auto& [s, g] : growth_) {
        if (s < 0 || !(g.c0 > 0.0)) {
            throw ArgumentError("increment growth declaration needs s >= 0 and c0 > 0");
        }
    }
}

IncrementBarrier IncrementBarrier::from_barrier(const Barrier& barrier) {
    std::vector<IncrementLevel> entries;
    for (int t = 1; t <= barrier.horizon(); ++t) {
        entries.push_back({0, t, barrier.level(t)});
    }
    std::map<int, GrowthDeclaration> growth;
    if (barrier.growth()) {
        growth.emplace(0, *barrier.growth());
    }
    return IncrementBarrier(std::move(entries), std::move(growth));
}

double IncrementBarrier::level(int s, int t) const {
    if (auto it = lookup_.find({s, t}); it != lookup_.end()) {
        return it->second;
    }
    if (t > horizon_) {
        if (auto g = growth_.find(s); g != growth_.end()) {
            return g->second.level(t);
        }
    }
    return kInf;
}

}  // namespace lossdev
