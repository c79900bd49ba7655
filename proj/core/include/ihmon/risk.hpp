#pragma once

#include "ihmon/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace ihmon {

enum class Direction { Max, Min };

struct RobustResult {
    double value;
    std::vector<double> witness;
};

/// Extremum of sum_j p_j * values_j over {p : lo <= p <= hi, sum p = 1}.
///
/// Greedy bound saturation: start from p = lo and hand the remaining mass to
/// successors in order of decreasing (Max) or increasing (Min) value, ties by
/// ascending index. Throws InfeasibleInterval when sum(lo) > 1 or sum(hi) < 1
/// beyond kProbTol.
RobustResult robust_expectation(std::span<const double> values, std::span<const double> lo,
                                std::span<const double> hi, Direction dir);

/// Allocation-free form of robust_expectation for inner loops. `order` must
/// have values.size() entries; `witness` may be empty when not needed.
/// Bounds are assumed feasible.
double robust_expectation_into(std::span<const double> values, std::span<const double> lo,
                               std::span<const double> hi, Direction dir, std::span<std::uint32_t> order,
                               std::span<double> witness);

/// Replaces bounds whose refinement set is empty by the smallest relaxation
/// that contains every distribution over the same support: lower bounds drop
/// to 0 when sum(lo) > 1, upper bounds rise to 1 when sum(hi) < 1.
/// Returns true when the bounds were changed.
bool relax_bounds(std::span<double> lo, std::span<double> hi);

/// Interval transition rows in compressed form with infeasible rows relaxed
/// (see relax_bounds); shared by the risk and monitor routines.
struct IntervalRows {
    std::vector<std::uint32_t> offset;  // size n + 1
    std::vector<StateId> target;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> init_lo;
    std::vector<double> init_hi;
    std::size_t relaxed_rows = 0;

    explicit IntervalRows(const Ihmm& m);

    std::size_t num_states() const { return offset.size() - 1; }
    std::size_t begin(StateId s) const { return offset[s]; }
    std::size_t end(StateId s) const { return offset[s + 1]; }
};

/// Bounded-horizon violation probabilities per state. Point tables (from an
/// HMM) have lo == hi.
struct RiskTable {
    std::size_t horizon = 0;
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t size() const { return lo.size(); }
    double width(StateId s) const { return hi[s] - lo[s]; }
};

/// r^0(s) = [s bad];  r^k(s) = sum_s' P(s,s') r^{k-1}(s') for good s.
RiskTable risk_hmm(const Hmm& m, const Spec& spec);

/// Robust backward induction: at every step and state the successor
/// distribution is chosen inside the intervals to minimize (lo) or maximize
/// (hi) the risk.
RiskTable risk_ihmm(const Ihmm& m, const Spec& spec);
RiskTable risk_ihmm(const IntervalRows& rows, const Spec& spec);

/// Tables for every horizon 0..spec.horizon (index = horizon).
std::vector<RiskTable> risk_hmm_by_horizon(const Hmm& m, const Spec& spec);
std::vector<RiskTable> risk_ihmm_by_horizon(const Ihmm& m, const Spec& spec);

/// CSV with header "state,lo,hi", one row per state in index order.
void write_risk_csv(std::ostream& os, const RiskTable& table, std::span<const std::string> states);

} // namespace ihmon
