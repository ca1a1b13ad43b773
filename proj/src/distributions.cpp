#include "lossdev/distributions.hpp"

#include "lossdev/errors.hpp"
#include "lossdev/legendre.hpp"
#include "numeric.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lossdev {

namespace {

constexpr double kLatticeTol = 1e-9;
// A span needing more steps than this across the support is treated as no lattice.
constexpr double kMaxLatticeSteps = 1e6;
constexpr double kMassTol = 1e-12;

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Euclid on reals; remainders below tol*scale count as zero.
double real_gcd(double a, double b, double scale) {
    const double eps = kLatticeTol * scale;
    if (a < b) {
        std::swap(a, b);
    }
    while (b > eps) {
        double r = std::fmod(a, b);
        if (b - r <= eps) {
            r = 0.0;
        }
        a = b;
        b = r;
    }
    return a;
}

}  // namespace

bool LatticeInfo::contains(double v, double tol) const {
    const double k = (v - offset) / span;
    return std::fabs(k - std::round(k)) <= tol * detail::relative_scale(k);
}

std::optional<LatticeInfo> detect_lattice(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double scale = sorted.empty() ? 1.0 : detail::relative_scale(sorted.back() - sorted.front());
    sorted.erase(std::unique(sorted.begin(), sorted.end(),
                             [&](double a, double b) { return std::fabs(a - b) <= kLatticeTol * scale; }),
                 sorted.end());
    if (sorted.size() < 2) {
        return std::nullopt;
    }
    const double base = sorted.front();
    double g = sorted[1] - base;
    for (std::size_t i = 2; i < sorted.size(); ++i) {
        g = real_gcd(g, sorted[i] - base, scale);
    }
    if (!(g > kLatticeTol * scale)) {
        return std::nullopt;
    }
    LatticeInfo info{g, base};
    for (double v : sorted) {
        const double k = (v - base) / g;
        if (k > kMaxLatticeSteps || std::fabs(k - std::round(k)) > kLatticeTol * std::fmax(1.0, k)) {
            return std::nullopt;
        }
    }
    return info;
}

std::string to_string(LossFamily family) {
    switch (family) {
        case LossFamily::discrete: return "discrete";
        case LossFamily::poisson_type: return "poisson-type";
        case LossFamily::exponential: return "exponential";
        case LossFamily::bounded_empirical: return "bounded-empirical";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// LossAmountModel

LossAmountModel LossAmountModel::discrete(std::vector<Atom> atoms) {
    if (atoms.empty()) {
        throw ArgumentError("discrete loss amount needs at least one atom");
    }
    detail::CompensatedSum total;
    for (const auto& a : atoms) {
        if (!std::isfinite(a.value) || a.value < 0.0) {
            throw ArgumentError("loss atom value must be finite and nonnegative, got " + format_double(a.value));
        }
        if (!(a.probability > 0.0) || a.probability > 1.0) {
            throw ArgumentError("loss atom probability must lie in (0,1], got " + format_double(a.probability));
        }
        total += a.probability;
    }
    if (std::fabs(total.value() - 1.0) > kMassTol) {
        throw ArgumentError("loss atom probabilities sum to " + format_double(total.value()) + ", expected 1");
    }
    LossAmountModel m;
    m.family_ = LossFamily::discrete;
    m.atoms_ = std::move(atoms);
    m.finalize_atoms();
    return m;
}

LossAmountModel LossAmountModel::bounded_empirical(std::span<const double> samples) {
    if (samples.empty()) {
        throw ArgumentError("bounded-empirical loss amount needs at least one sample");
    }
    const double w = 1.0 / static_cast<double>(samples.size());
    std::vector<Atom> atoms;
    atoms.reserve(samples.size());
    for (double v : samples) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ArgumentError("loss sample must be finite and nonnegative, got " + format_double(v));
        }
        atoms.push_back({v, w});
    }
    LossAmountModel m;
    m.family_ = LossFamily::bounded_empirical;
    m.atoms_ = std::move(atoms);
    m.finalize_atoms();
    return m;
}

LossAmountModel LossAmountModel::constant(double value) { return discrete({{value, 1.0}}); }

LossAmountModel LossAmountModel::poisson_type(double unit, double lambda) {
    if (!(unit > 0.0) || !std::isfinite(unit)) {
        throw ArgumentError("poisson-type unit must be positive, got " + format_double(unit));
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ArgumentError("poisson-type lambda must be positive, got " + format_double(lambda));
    }
    LossAmountModel m;
    m.family_ = LossFamily::poisson_type;
    m.unit_ = unit;
    m.lambda_ = lambda;
    m.lattice_ = LatticeInfo{unit, unit};
    return m;
}

LossAmountModel LossAmountModel::exponential(double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw ArgumentError("exponential rate must be positive, got " + format_double(rate));
    }
    LossAmountModel m;
    m.family_ = LossFamily::exponential;
    m.rate_ = rate;
    return m;
}

void LossAmountModel::finalize_atoms() {
    std::sort(atoms_.begin(), atoms_.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> merged;
    for (const auto& a : atoms_) {
        if (!merged.empty() && std::fabs(merged.back().value - a.value) <= kLatticeTol * detail::relative_scale(a.value)) {
            merged.back().probability += a.probability;
        } else {
            merged.push_back(a);
        }
    }
    atoms_ = std::move(merged);
    min_gap_ = kInf;
    for (std::size_t i = 1; i < atoms_.size(); ++i) {
        min_gap_ = std::fmin(min_gap_, atoms_[i].value - atoms_[i - 1].value);
    }
    if (!std::isfinite(min_gap_)) {
        min_gap_ = detail::relative_scale(atoms_.front().value);
    }
    std::vector<double> values;
    values.reserve(atoms_.size());
    for (const auto& a : atoms_) {
        values.push_back(a.value);
    }
    lattice_ = detect_lattice(values);
}

double LossAmountModel::mean() const {
    switch (family_) {
        case LossFamily::poisson_type: return unit_ * (1.0 + lambda_);
        case LossFamily::exponential: return 1.0 / rate_;
        default: {
            detail::CompensatedSum s;
            for (const auto& a : atoms_) {
                s += a.probability * a.value;
            }
            return s.value();
        }
    }
}

double LossAmountModel::variance() const {
    switch (family_) {
        case LossFamily::poisson_type: return lambda_ * unit_ * unit_;
        case LossFamily::exponential: return 1.0 / (rate_ * rate_);
        default: {
            const double mu = mean();
            detail::CompensatedSum s;
            for (const auto& a : atoms_) {
                s += a.probability * (a.value - mu) * (a.value - mu);
            }
            return s.value();
        }
    }
}

double LossAmountModel::domain_upper() const {
    return family_ == LossFamily::exponential ? rate_ : kInf;
}

double LossAmountModel::probe_ceiling() const {
    switch (family_) {
        case LossFamily::poisson_type: return 700.0 / unit_;
        case LossFamily::exponential: return 1e15 * rate_;
        default: return 700.0 / min_gap_;
    }
}

double LossAmountModel::operator()(double theta) const {
    if (theta == 0.0) {
        return 0.0;
    }
    switch (family_) {
        case LossFamily::poisson_type: return theta * unit_ + lambda_ * std::expm1(theta * unit_);
        case LossFamily::exponential:
            if (theta >= rate_) {
                return kInf;
            }
            return -std::log1p(-theta / rate_);
        default: {
            double shift = -kInf;
            for (const auto& a : atoms_) {
                shift = std::fmax(shift, theta * a.value);
            }
            detail::CompensatedSum s;
            for (const auto& a : atoms_) {
                s += a.probability * std::exp(theta * a.value - shift);
            }
            return shift + std::log(s.value());
        }
    }
}

Cumulants LossAmountModel::derivatives(double theta) const {
    if (!in_domain(theta)) {
        throw DomainError("CGF derivatives requested outside the finiteness domain at theta=" + format_double(theta));
    }
    switch (family_) {
        case LossFamily::poisson_type: {
            const double e = std::exp(theta * unit_);
            return {(*this)(theta), unit_ + lambda_ * unit_ * e, lambda_ * unit_ * unit_ * e};
        }
        case LossFamily::exponential: {
            const double inv = 1.0 / (rate_ - theta);
            return {(*this)(theta), inv, inv * inv};
        }
        default: {
            double shift = -kInf;
            for (const auto& a : atoms_) {
                shift = std::fmax(shift, theta * a.value);
            }
            std::vector<double> w(atoms_.size());
            detail::CompensatedSum total;
            for (std::size_t k = 0; k < atoms_.size(); ++k) {
                w[k] = atoms_[k].probability * std::exp(theta * atoms_[k].value - shift);
                total += w[k];
            }
            const double z = total.value();
            detail::CompensatedSum m1;
            for (std::size_t k = 0; k < atoms_.size(); ++k) {
                w[k] /= z;
                m1 += w[k] * atoms_[k].value;
            }
            const double slope = m1.value();
            detail::CompensatedSum m2;
            for (std::size_t k = 0; k < atoms_.size(); ++k) {
                const double d = atoms_[k].value - slope;
                m2 += w[k] * d * d;
            }
            return {theta == 0.0 ? 0.0 : shift + std::log(z), slope, m2.value()};
        }
    }
}

SupportEdge LossAmountModel::support_lower() const {
    switch (family_) {
        case LossFamily::poisson_type: return {unit_, std::exp(-lambda_)};
        case LossFamily::exponential: return {0.0, 0.0};
        default: return {atoms_.front().value, atoms_.front().probability};
    }
}

SupportEdge LossAmountModel::support_upper() const {
    switch (family_) {
        case LossFamily::poisson_type:
        case LossFamily::exponential: return {kInf, 0.0};
        default: return {atoms_.back().value, atoms_.back().probability};
    }
}

// ---------------------------------------------------------------------------
// DefaultTimeModel

DefaultTimeModel::DefaultTimeModel(std::vector<double> probabilities) : p_(std::move(probabilities)) {
    if (p_.empty()) {
        throw ArgumentError("default-time law needs a grid of at least one epoch");
    }
    cumulative_.reserve(p_.size());
    detail::CompensatedSum total;
    for (std::size_t j = 0; j < p_.size(); ++j) {
        const double pj = p_[j];
        if (!(pj >= 0.0) || pj > 1.0) {
            throw ArgumentError("default probability p_" + std::to_string(j + 1) + " must lie in [0,1], got " +
                                format_double(pj));
        }
        total += pj;
        cumulative_.push_back(std::fmin(total.value(), 1.0));
    }
    if (total.value() > 1.0 + kMassTol) {
        throw ArgumentError("default probabilities sum to " + format_double(total.value()) + " > 1");
    }
    defect_ = std::fmax(0.0, 1.0 - total.value());
}

double DefaultTimeModel::probability(int j) const {
    if (j < 1 || j > grid_size()) {
        return 0.0;
    }
    return p_[static_cast<std::size_t>(j - 1)];
}

double DefaultTimeModel::cumulative(int t) const {
    if (t <= 0) {
        return 0.0;
    }
    if (t >= grid_size()) {
        return cumulative_.back();
    }
    return cumulative_[static_cast<std::size_t>(t - 1)];
}

double DefaultTimeModel::hazard(int j) const {
    const double survive = 1.0 - cumulative(j - 1);
    if (survive <= 0.0) {
        return 0.0;
    }
    return std::fmin(1.0, probability(j) / survive);
}

// ---------------------------------------------------------------------------
// CompositeCgf

CompositeCgf::CompositeCgf(LossAmountModel loss, double w, Kind kind, int s, int t)
    : loss_(std::move(loss)), w_(w), kind_(kind), s_(s), t_(t) {
    if (!(w_ >= 0.0) || w_ > 1.0 + kMassTol) {
        throw ArgumentError("success mass must lie in [0,1], got " + format_double(w_));
    }
    w_ = std::clamp(w_, 0.0, 1.0);
    if (w_ >= 1.0) {
        lattice_ = loss_.lattice();
    } else if (w_ > 0.0) {
        switch (loss_.family()) {
            case LossFamily::poisson_type: lattice_ = LatticeInfo{loss_.unit(), 0.0}; break;
            case LossFamily::exponential: break;
            default: {
                std::vector<double> values{0.0};
                for (const auto& a : loss_.atoms()) {
                    values.push_back(a.value);
                }
                lattice_ = detect_lattice(values);
            }
        }
    }
}

CompositeCgf CompositeCgf::at_time(const LossAmountModel& loss, const DefaultTimeModel& timing, int t) {
    if (t < 1 || t > timing.grid_size()) {
        throw ArgumentError("epoch t=" + std::to_string(t) + " is not on the grid 1.." +
                            std::to_string(timing.grid_size()));
    }
    return CompositeCgf(loss, timing.cumulative(t), Kind::at_time, 0, t);
}

CompositeCgf CompositeCgf::increment(const LossAmountModel& loss, const DefaultTimeModel& timing, int s, int t) {
    if (t < 1 || t > timing.grid_size()) {
        throw ArgumentError("epoch t=" + std::to_string(t) + " is not on the grid 1.." +
                            std::to_string(timing.grid_size()));
    }
    if (s < 0 || s >= t) {
        throw ArgumentError("increment start s=" + std::to_string(s) + " must satisfy 0 <= s < t=" + std::to_string(t));
    }
    return CompositeCgf(loss, timing.cumulative(t) - timing.cumulative(s), Kind::increment, s, t);
}

CompositeCgf CompositeCgf::with_mass(const LossAmountModel& loss, double success_mass) {
    return CompositeCgf(loss, success_mass, Kind::explicit_mass, 0, 0);
}

double CompositeCgf::domain_upper() const { return w_ > 0.0 ? loss_.domain_upper() : kInf; }

double CompositeCgf::operator()(double theta) const {
    if (theta == 0.0 || w_ <= 0.0) {
        return 0.0;
    }
    const double base = loss_(theta);
    if (w_ >= 1.0 || !std::isfinite(base)) {
        return base;
    }
    // log(w e^base + 1 - w)
    const double log_rest = std::log1p(-w_);
    return log_rest + detail::softplus(std::log(w_) + base - log_rest);
}

double CompositeCgf::tilted_success_mass(double theta) const {
    if (w_ <= 0.0 || w_ >= 1.0) {
        return w_;
    }
    const double base = loss_(theta);
    return detail::logistic(std::log(w_) + base - std::log1p(-w_));
}

Cumulants CompositeCgf::derivatives(double theta) const {
    if (!in_domain(theta)) {
        throw DomainError("CGF derivatives requested outside the finiteness domain at theta=" + format_double(theta));
    }
    if (w_ <= 0.0) {
        return {};
    }
    const Cumulants u = loss_.derivatives(theta);
    if (w_ >= 1.0) {
        return u;
    }
    const double r = tilted_success_mass(theta);
    return {(*this)(theta), r * u.slope, r * u.curvature + r * (1.0 - r) * u.slope * u.slope};
}

SupportEdge CompositeCgf::support_lower() const {
    if (w_ <= 0.0) {
        return {0.0, 1.0};
    }
    const SupportEdge u = loss_.support_lower();
    if (w_ >= 1.0) {
        return u;
    }
    return {0.0, (1.0 - w_) + (u.value == 0.0 ? w_ * u.mass : 0.0)};
}

SupportEdge CompositeCgf::support_upper() const {
    if (w_ <= 0.0) {
        return {0.0, 1.0};
    }
    const SupportEdge u = loss_.support_upper();
    if (w_ >= 1.0) {
        return u;
    }
    if (u.value == 0.0) {
        return {0.0, 1.0};
    }
    return {u.value, w_ * u.mass};
}

// ---------------------------------------------------------------------------
// Light-tail diagnostics

std::string to_string(TailClass tail) {
    switch (tail) {
        case TailClass::everywhere_finite: return "everywhere-finite";
        case TailClass::finite_up_to_threshold: return "finite-up-to-threshold";
        case TailClass::heavy: return "heavy";
    }
    return "unknown";
}

LightTailReport check_light_tail(const LossAmountModel& model, std::span<const double> probes) {
    LightTailReport report;
    report.threshold = model.domain_upper();
    for (double theta : probes) {
        if (!std::isfinite(model(theta))) {
            report.finite_on_probes = false;
        }
    }
    if (!(report.threshold > 0.0)) {
        report.classification = TailClass::heavy;
    } else if (std::isfinite(report.threshold)) {
        report.classification = TailClass::finite_up_to_threshold;
    } else {
        report.classification = report.finite_on_probes ? TailClass::everywhere_finite : TailClass::heavy;
    }

    const double mu = model.mean();
    for (double probe : probes) {
        const double x = mu * (1.0 + probe);
        const double value = legendre_transform(model, x).value;
        report.rate_ratios.push_back(value / x);
    }
    for (std::size_t i = 1; i < report.rate_ratios.size(); ++i) {
        const double prev = report.rate_ratios[i - 1];
        const double cur = report.rate_ratios[i];
        if (!(cur > prev) && !(std::isinf(cur) && std::isinf(prev))) {
            report.ratio_increasing = false;
        }
    }
    // Lambda*(x)/x tends to the supremum of the CGF domain, so the ratio can
    // only diverge when that supremum is infinite.
    report.ratio_diverging = report.ratio_increasing && !std::isfinite(report.threshold);
    return report;
}

}  // namespace lossdev
