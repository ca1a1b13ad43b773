#include "lossdev/errors.hpp"

#include <sstream>

namespace lossdev {

namespace {

std::string no_tilt_message(TiltSide side, double level, double edge) {
    std::ostringstream os;
    os.precision(12);
    os << "no finite tilt for level " << level << ": level is "
       << (side == TiltSide::above_supremum ? "at or above the essential supremum "
                                            : "at or below the essential infimum ")
       << edge;
    return os.str();
}

std::string not_rare_message(int s, int t, double level, double mean_level) {
    std::ostringstream os;
    os.precision(12);
    os << "not a rare event: level " << level;
    if (s > 0) {
        os << " at pair (s=" << s << ", t=" << t << ")";
    } else {
        os << " at t=" << t;
    }
    os << " does not exceed the mean loss level " << mean_level;
    return os.str();
}

std::string tie_message(const std::vector<EpochPair>& tied, double rate, double gap_tol) {
    std::ostringstream os;
    os.precision(12);
    os << "non-unique optimum: rate " << rate << " attained within " << gap_tol << " at";
    for (const auto& p : tied) {
        if (p.s > 0) {
            os << " (" << p.s << "," << p.t << ")";
        } else {
            os << " t=" << p.t;
        }
    }
    return os.str();
}

std::string capacity_message(const std::string& what, std::size_t required, std::size_t cap) {
    std::ostringstream os;
    os << "capacity exceeded for " << what << ": requires " << required << " states, cap is " << cap;
    return os.str();
}

}  // namespace

NoTiltError::NoTiltError(TiltSide side, double level, double edge)
    : Error(no_tilt_message(side, level, edge)), side_(side), level_(level), edge_(edge) {}

NotRareEventError::NotRareEventError(int s, int t, double level, double mean_level)
    : Error(not_rare_message(s, t, level, mean_level)), s_(s), t_(t) {}

NonUniqueOptimumError::NonUniqueOptimumError(std::vector<EpochPair> tied, double rate, double gap_tol)
    : Error(tie_message(tied, rate, gap_tol)), tied_(std::move(tied)) {}

CapacityError::CapacityError(const std::string& what, std::size_t required, std::size_t cap)
    : Error(capacity_message(what, required, cap)), required_(required), cap_(cap) {}

}  // namespace lossdev
