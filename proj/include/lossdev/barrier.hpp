#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lossdev {

enum class GrowthKind { log, loglog };

std::string to_string(GrowthKind kind);

// Declared level beyond the tabulated horizon: c0*log(t) or c0*log(log(t)).
struct GrowthDeclaration {
    double c0 = 0.0;
    GrowthKind kind = GrowthKind::log;

    double level(int t) const;
};

// Level zeta(t) for t = 1..horizon, optionally extended by a growth declaration.
class Barrier {
public:
    explicit Barrier(std::vector<double> values, std::optional<GrowthDeclaration> growth = std::nullopt);

    static Barrier constant(double level, int horizon);

    int horizon() const noexcept { return static_cast<int>(values_.size()); }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::optional<GrowthDeclaration>& growth() const noexcept { return growth_; }
    // Tabulated value, the declared growth beyond the horizon, +inf otherwise.
    double level(int t) const;

private:
    std::vector<double> values_;
    std::optional<GrowthDeclaration> growth_;
};

struct IncrementLevel {
    int s = 0;
    int t = 0;
    double level = 0.0;
};

// Levels xi(s,t) on listed pairs 0 <= s < t; unlisted pairs are not part of the event.
class IncrementBarrier {
public:
    explicit IncrementBarrier(std::vector<IncrementLevel> entries, std::map<int, GrowthDeclaration> growth = {});

    // xi(s,t) = zeta(t) with s = 0 for every tabulated t.
    static IncrementBarrier from_barrier(const Barrier& barrier);

    // Largest tabulated t.
    int horizon() const noexcept { return horizon_; }
    const std::vector<IncrementLevel>& entries() const noexcept { return entries_; }
    const std::map<int, GrowthDeclaration>& growth() const noexcept { return growth_; }
    // Tabulated value, the growth declared for s beyond the horizon, +inf otherwise.
    double level(int s, int t) const;

private:
    std::vector<IncrementLevel> entries_;
    std::map<std::pair<int, int>, double> lookup_;
    std::map<int, GrowthDeclaration> growth_;
    int horizon_ = 0;
};

}  // namespace lossdev
