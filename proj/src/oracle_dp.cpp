#include "lossdev/oracle_dp.hpp"

#include "lossdev/errors.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace lossdev {

namespace {

std::vector<double> binomial_pmf(int trials, double p) {
    std::vector<double> pmf(static_cast<std::size_t>(trials) + 1, 0.0);
    if (p <= 0.0) {
        pmf.front() = 1.0;
        return pmf;
    }
    if (p >= 1.0) {
        pmf.back() = 1.0;
        return pmf;
    }
    const double lp = std::log(p);
    const double lq = std::log1p(-p);
    const double lg_n = std::lgamma(trials + 1.0);
    for (int k = 0; k <= trials; ++k) {
        const double lc = lg_n - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
        pmf[static_cast<std::size_t>(k)] = std::exp(lc + k * lp + (trials - k) * lq);
    }
    return pmf;
}

// Law of a D-fold sum of loss indices, stored from its smallest index.
struct IndexLaw {
    std::int64_t lo = 0;
    std::vector<double> mass;
};

std::vector<IndexLaw> fold_table(const LatticePortfolio& pf, int max_fold, std::size_t budget) {
    std::vector<IndexLaw> table;
    table.reserve(static_cast<std::size_t>(max_fold) + 1);
    table.push_back({0, {1.0}});
    const auto& idx = pf.atom_index();
    const auto& mass = pf.atom_mass();
    const std::int64_t kmin = idx.front();
    const std::int64_t kspan = idx.back() - idx.front();
    std::size_t used = 1;
    for (int d = 1; d <= max_fold; ++d) {
        const IndexLaw& prev = table.back();
        IndexLaw next;
        next.lo = prev.lo + kmin;
        const std::size_t width = prev.mass.size() + static_cast<std::size_t>(kspan);
        used += width;
        if (used > budget) {
            throw CapacityError("loss convolution table", used, budget);
        }
        next.mass.resize(width);
        for (std::size_t out = 0; out < width; ++out) {
            detail::CompensatedSum s;
            for (std::size_t a = 0; a < idx.size(); ++a) {
                const auto shift = static_cast<std::int64_t>(idx[a] - kmin);
                const auto src = static_cast<std::int64_t>(out) - shift;
                if (src >= 0 && src < static_cast<std::int64_t>(prev.mass.size())) {
                    s += mass[a] * prev.mass[static_cast<std::size_t>(src)];
                }
            }
            next.mass[out] = s.value();
        }
        table.push_back(std::move(next));
    }
    return table;
}

struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
        std::size_t h = 1469598103934665603ull;
        for (auto v : key) {
            h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

}  // namespace

// ---------------------------------------------------------------------------

LatticePortfolio::LatticePortfolio(int n, LossAmountModel loss, DefaultTimeModel timing, std::size_t state_cap)
    : n_(n), loss_(std::move(loss)), timing_(std::move(timing)), cap_(state_cap) {
    if (n_ < 1) {
        throw ArgumentError("obligor count n must be at least 1");
    }
    if (!loss_.has_finite_atoms()) {
        throw ArgumentError("exact oracle needs a loss amount with finitely many lattice atoms (family " +
                            to_string(loss_.family()) + " is not supported; use Monte Carlo)");
    }
    std::vector<double> values{0.0};
    for (const auto& a : loss_.atoms()) {
        values.push_back(a.value);
    }
    const auto lattice = detect_lattice(values);
    if (lattice) {
        span_ = lattice->span;
    } else if (loss_.atoms().back().value != 0.0) {
        throw ArgumentError("loss atoms do not lie on a common lattice through 0");
    }
    for (const auto& a : loss_.atoms()) {
        index_.push_back(std::llround(a.value / span_));
        mass_.push_back(a.probability);
    }
    max_index_ = index_.back();
    const auto required = static_cast<std::size_t>(n_) * static_cast<std::size_t>(max_index_) + 1;
    if (required > cap_) {
        throw CapacityError("lattice portfolio state space", required, cap_);
    }
}

std::int64_t LatticePortfolio::threshold_index(double level) const {
    const double x = static_cast<double>(n_) * level / span_;
    if (x <= 0.0) {
        return 0;
    }
    return static_cast<std::int64_t>(std::ceil(x - 1e-9 * std::fmax(1.0, x)));
}

double LatticeLaw::total() const {
    detail::CompensatedSum s;
    for (double m : masses) {
        s += m;
    }
    return s.value();
}

double LatticeLaw::mean() const {
    detail::CompensatedSum s;
    for (std::size_t k = 0; k < masses.size(); ++k) {
        s += masses[k] * static_cast<double>(k) * span;
    }
    return s.value();
}

LatticeLaw exact_marginal(const LatticePortfolio& pf, int t) {
    const auto& timing = pf.timing();
    if (t < 1 || t > timing.grid_size()) {
        throw ArgumentError("epoch t=" + std::to_string(t) + " is not on the grid 1.." +
                            std::to_string(timing.grid_size()));
    }
    const double w = timing.cumulative(t);
    // Single-obligor law: 0 with mass 1 - F_t, atom k with mass F_t P(U = k d).
    std::vector<std::pair<std::int64_t, double>> single{{0, 1.0 - w}};
    for (std::size_t a = 0; a < pf.atom_index().size(); ++a) {
        single.emplace_back(pf.atom_index()[a], w * pf.atom_mass()[a]);
    }
    LatticeLaw law;
    law.span = pf.span();
    law.masses = {1.0};
    for (int i = 0; i < pf.obligors(); ++i) {
        std::vector<double> next(law.masses.size() + static_cast<std::size_t>(pf.max_index()), 0.0);
        for (std::size_t out = 0; out < next.size(); ++out) {
            detail::CompensatedSum s;
            for (const auto& [k, m] : single) {
                const auto src = static_cast<std::int64_t>(out) - k;
                if (src >= 0 && src < static_cast<std::int64_t>(law.masses.size())) {
                    s += m * law.masses[static_cast<std::size_t>(src)];
                }
            }
            next[out] = s.value();
        }
        law.masses = std::move(next);
    }
    return law;
}

double exact_marginal_tail(const LatticePortfolio& pf, int t, double level) {
    const LatticeLaw law = exact_marginal(pf, t);
    const auto k = static_cast<std::size_t>(pf.threshold_index(level));
    detail::CompensatedSum s;
    for (std::size_t i = k; i < law.masses.size(); ++i) {
        s += law.masses[i];
    }
    return s.value();
}

double exact_barrier(const LatticePortfolio& pf, const Barrier& barrier) {
    const int n = pf.obligors();
    const int grid = pf.timing().grid_size();
    const int last = barrier.horizon();
    std::vector<std::int64_t> kmin(static_cast<std::size_t>(last) + 1, 0);
    std::int64_t kcap = 0;
    for (int t = 1; t <= last; ++t) {
        kmin[static_cast<std::size_t>(t)] = pf.threshold_index(barrier.level(t));
        if (kmin[static_cast<std::size_t>(t)] == 0) {
            return 1.0;
        }
        kcap = std::max(kcap, kmin[static_cast<std::size_t>(t)]);
    }

    // P(cross) = P(A_a) + P(cross, not A_a) with A_a = {L(a) >= n zeta(a)} for
    // the epoch a with the largest marginal tail; L is constant after the grid.
    int anchor = 1;
    double single = -1.0;
    for (int g = 1; g <= std::min(grid, last); ++g) {
        const LatticeLaw law = exact_marginal(pf, g);
        for (int t = g; t <= (g == grid ? last : g); ++t) {
            detail::CompensatedSum s;
            for (auto i = static_cast<std::size_t>(kmin[static_cast<std::size_t>(t)]); i < law.masses.size(); ++i) {
                s += law.masses[i];
            }
            if (s.value() > single) {
                single = s.value();
                anchor = t;
            }
        }
    }
    const std::int64_t ka = kmin[static_cast<std::size_t>(anchor)];

    const std::vector<IndexLaw> folds = fold_table(pf, n, pf.state_cap() * 16);
    const auto cap = static_cast<std::size_t>(kcap);
    // tail[D][k] = P(fold_D >= k) for k in [0, kcap].
    std::vector<std::vector<double>> tail(folds.size(), std::vector<double>(cap + 1, 0.0));
    for (std::size_t d = 0; d < folds.size(); ++d) {
        const IndexLaw& f = folds[d];
        detail::CompensatedSum above;
        for (std::size_t k = f.mass.size(); k-- > 0;) {
            const std::int64_t idx = f.lo + static_cast<std::int64_t>(k);
            if (idx >= kcap) {
                above += f.mass[k];
            }
        }
        detail::CompensatedSum run = above;
        tail[d][cap] = run.value();
        for (std::int64_t k = kcap - 1; k >= 0; --k) {
            const std::int64_t off = k - f.lo;
            if (off >= 0 && off < static_cast<std::int64_t>(f.mass.size())) {
                run += f.mass[static_cast<std::size_t>(off)];
            }
            tail[d][static_cast<std::size_t>(k)] = run.value();
        }
    }

    // live[M][K]: no crossing yet, M defaults so far, cumulative loss index K.
    // crossed[M][K]: crossed before the anchor, K still below the anchor threshold.
    using Grid = std::vector<std::vector<double>>;
    using SumGrid = std::vector<std::vector<detail::CompensatedSum>>;
    Grid live(static_cast<std::size_t>(n) + 1);
    Grid crossed(static_cast<std::size_t>(n) + 1);
    live[0] = std::vector<double>(cap, 0.0);
    live[0][0] = 1.0;
    detail::CompensatedSum remainder;
    const std::size_t budget = pf.state_cap() * 16;

    for (int t = 1; t <= last; ++t) {
        const double h = pf.timing().hazard(t);
        const std::int64_t limit = kmin[static_cast<std::size_t>(t)];
        SumGrid next_live(static_cast<std::size_t>(n) + 1);
        SumGrid next_crossed(static_cast<std::size_t>(n) + 1);
        std::size_t states = 0;
        auto slot = [&](SumGrid& g, int m) -> std::vector<detail::CompensatedSum>& {
            auto& row = g[static_cast<std::size_t>(m)];
            if (row.empty()) {
                row.resize(cap);
                states += cap;
                if (states > budget) {
                    throw CapacityError("barrier dynamic program", states, budget);
                }
            }
            return row;
        };
        for (int m = 0; m <= n; ++m) {
            const auto& lrow = live[static_cast<std::size_t>(m)];
            const auto& crow = crossed[static_cast<std::size_t>(m)];
            if (lrow.empty() && crow.empty()) {
                continue;
            }
            const std::vector<double> pmf = binomial_pmf(n - m, h);
            for (int d = 0; d <= n - m; ++d) {
                const double b = pmf[static_cast<std::size_t>(d)];
                if (b == 0.0) {
                    continue;
                }
                const IndexLaw& f = folds[static_cast<std::size_t>(d)];
                for (std::size_t k = 0; k < lrow.size(); ++k) {
                    if (lrow[k] == 0.0) {
                        continue;
                    }
                    const double w = lrow[k] * b;
                    const auto K = static_cast<std::int64_t>(k);
                    if (t > anchor) {
                        const std::int64_t need = std::max<std::int64_t>(0, limit - K);
                        remainder += w * tail[static_cast<std::size_t>(d)][static_cast<std::size_t>(need)];
                    }
                    for (std::size_t j = 0; j < f.mass.size(); ++j) {
                        const std::int64_t to = K + f.lo + static_cast<std::int64_t>(j);
                        if (t == anchor ? to >= ka : to >= limit) {
                            // Crossed here: before the anchor it stays tracked
                            // while L is below the anchor threshold.
                            if (t < anchor && to < ka) {
                                slot(next_crossed, m + d)[static_cast<std::size_t>(to)] += w * f.mass[j];
                                continue;
                            }
                            break;
                        }
                        slot(next_live, m + d)[static_cast<std::size_t>(to)] += w * f.mass[j];
                    }
                }
                for (std::size_t k = 0; k < crow.size(); ++k) {
                    if (crow[k] == 0.0) {
                        continue;
                    }
                    const double w = crow[k] * b;
                    const auto K = static_cast<std::int64_t>(k);
                    for (std::size_t j = 0; j < f.mass.size(); ++j) {
                        const std::int64_t to = K + f.lo + static_cast<std::int64_t>(j);
                        if (to >= ka) {
                            break;
                        }
                        if (t == anchor) {
                            remainder += w * f.mass[j];
                        } else {
                            slot(next_crossed, m + d)[static_cast<std::size_t>(to)] += w * f.mass[j];
                        }
                    }
                }
            }
        }
        auto settle = [&](SumGrid& src, Grid& dst) {
            for (int m = 0; m <= n; ++m) {
                auto& s = src[static_cast<std::size_t>(m)];
                auto& d = dst[static_cast<std::size_t>(m)];
                d.clear();
                if (!s.empty()) {
                    d.resize(cap);
                    for (std::size_t k = 0; k < cap; ++k) {
                        d[k] = s[k].value();
                    }
                }
            }
        };
        settle(next_live, live);
        settle(next_crossed, crossed);
    }
    return single + std::fmax(0.0, remainder.value());
}

double exact_increment(const LatticePortfolio& pf, const IncrementBarrier& barrier) {
    const int n = pf.obligors();
    const int last = barrier.horizon();
    // Pairs ending at each epoch, with their thresholds.
    std::map<int, std::vector<std::pair<int, std::int64_t>>> ending;
    for (const auto& e : barrier.entries()) {
        ending[e.t].emplace_back(e.s, pf.threshold_index(e.level));
    }
    // Starts whose cumulative loss is still needed after epoch j.
    auto open_starts = [&](int j) {
        std::vector<int> starts;
        std::set<int> seen;
        for (const auto& e : barrier.entries()) {
            if (e.s <= j && e.t > j && seen.insert(e.s).second) {
                starts.push_back(e.s);
            }
        }
        std::sort(starts.begin(), starts.end());
        return starts;
    };

    const std::vector<IndexLaw> folds = fold_table(pf, n, pf.state_cap() * 16);

    // Key: [defaults so far, current loss index, loss index at each open start].
    using Key = std::vector<std::int64_t>;
    std::vector<int> starts = open_starts(0);
    std::unordered_map<Key, detail::CompensatedSum, KeyHash> live;
    {
        Key k0(2 + starts.size(), 0);
        live[k0] += 1.0;
    }
    detail::CompensatedSum absorbed;
    for (int t = 1; t <= last; ++t) {
        const double h = pf.timing().hazard(t);
        const std::vector<int> next_starts = open_starts(t);
        const auto here = ending.find(t);
        const bool keep = t < last;
        std::unordered_map<Key, detail::CompensatedSum, KeyHash> next;
        std::map<int, std::vector<double>> pmfs;
        for (const auto& [key, acc] : live) {
            const double base = acc.value();
            if (base == 0.0) {
                continue;
            }
            const auto m = static_cast<int>(key[0]);
            const std::int64_t cur = key[1];
            auto start_loss = [&](int s) -> std::int64_t {
                if (s == t) {
                    return -1;
                }
                const auto pos = std::lower_bound(starts.begin(), starts.end(), s) - starts.begin();
                return key[2 + static_cast<std::size_t>(pos)];
            };
            auto pit = pmfs.find(m);
            if (pit == pmfs.end()) {
                pit = pmfs.emplace(m, binomial_pmf(n - m, h)).first;
            }
            const std::vector<double>& pmf = pit->second;
            for (int d = 0; d <= n - m; ++d) {
                const double b = pmf[static_cast<std::size_t>(d)];
                if (b == 0.0) {
                    continue;
                }
                const IndexLaw& f = folds[static_cast<std::size_t>(d)];
                for (std::size_t j = 0; j < f.mass.size(); ++j) {
                    const double w = base * b * f.mass[j];
                    if (w == 0.0) {
                        continue;
                    }
                    const std::int64_t loss = cur + f.lo + static_cast<std::int64_t>(j);
                    bool crossed = false;
                    if (here != ending.end()) {
                        for (const auto& [s, threshold] : here->second) {
                            if (loss - start_loss(s) >= threshold) {
                                crossed = true;
                                break;
                            }
                        }
                    }
                    if (crossed) {
                        absorbed += w;
                        continue;
                    }
                    if (!keep) {
                        continue;
                    }
                    Key nk(2 + next_starts.size());
                    nk[0] = m + d;
                    nk[1] = loss;
                    for (std::size_t i = 0; i < next_starts.size(); ++i) {
                        const int s = next_starts[i];
                        nk[2 + i] = s == t ? loss : start_loss(s);
                    }
                    next[std::move(nk)] += w;
                }
            }
        }
        if (next.size() > pf.state_cap()) {
            throw CapacityError("increment dynamic program (use Monte Carlo for this grid)", next.size(),
                                pf.state_cap());
        }
        live = std::move(next);
        starts = next_starts;
    }
    return std::clamp(absorbed.value(), 0.0, 1.0);
}

}  // namespace lossdev
