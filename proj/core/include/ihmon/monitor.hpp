#pragma once

#include "ihmon/model.hpp"
#include "ihmon/risk.hpp"

#include <cstdint>
#include <vector>

namespace ihmon {

/// Posterior Pr(last state = s | trace) by forward filtering. An empty trace
/// yields the initial distribution. Throws ZeroProbabilityTrace.
std::vector<double> filter_hmm(const Hmm& m, const Trace& trace);

/// Expected bounded-horizon risk conditioned on the trace.
double ideal_monitor(const Hmm& m, const Trace& trace, const Spec& spec);

/// Ideal monitor with the risk table precomputed once per model.
class HmmMonitor {
public:
    HmmMonitor(const Hmm& m, const Spec& spec);

    const RiskTable& risk() const { return risk_; }
    double evaluate(const Trace& trace) const;

private:
    const Hmm* model_;
    RiskTable risk_;
};

/// Interval monitor verdict: the minimum and maximum conditional risk over
/// the refinements, and the bracket width the search left open.
struct Verdict {
    double lo = 0.0;
    double hi = 0.0;
    double tol = 0.0;

    double width() const { return hi - lo; }
};

struct UnrolledEdge {
    std::uint32_t target;  // node index in the next layer
    double lo;
    double hi;
};

struct UnrolledNode {
    StateId state;
    std::vector<UnrolledEdge> edges;
    double leak_lo = 0.0;  // aggregated bounds towards observation-inconsistent states
    double leak_hi = 0.0;
    double terminal = 0.0;  // last layer only: weight of the edge to the top terminal
};

/// Trace-indexed layered DAG. Layer j holds the states that emit trace[j]
/// and are reachable with positive upper bounds; the root distributes the
/// initial bounds over layer 0. Last-layer nodes reach the top terminal with
/// their bounded risk (hi for Max, lo for Min) and the bottom terminal with
/// the complement.
struct UnrolledModel {
    Direction direction = Direction::Max;
    UnrolledNode root{0, {}, 0.0, 0.0, 0.0};
    std::vector<std::vector<UnrolledNode>> layers;

    std::size_t num_nodes() const;
};

/// Throws NoConsistentPath when some layer of the trace has no consistent
/// state with positive upper-bound mass (in particular an unmatched first
/// symbol) and InvalidArgument for an empty trace.
UnrolledModel unroll(const Ihmm& im, const Trace& trace, const Spec& spec, Direction dir);
UnrolledModel unroll(const IntervalRows& rows, std::span<const SymbolId> obs, const Trace& trace,
                     const RiskTable& risk, Direction dir);

/// Threshold test of the conditional top-reachability probability.
///
/// One robust backward sweep of Pr(top) - lambda * Pr(trace) with terminal
/// values top -> 1 - lambda, bottom -> -lambda, leak -> 0. For Max the result
/// is true iff the maximum is > 0, i.e. some refinement has conditional risk
/// above lambda. For Min it is true iff the minimum is < 0, i.e. some
/// refinement has conditional risk below lambda.
bool decide(const UnrolledModel& u, double lambda);

/// Extremum of the weighted objective (exposed for tests and tooling).
double weighted_extremum(const UnrolledModel& u, double lambda);

inline constexpr double kDefaultMonitorTol = 1e-6;
inline constexpr int kMaxBisectionSteps = 60;

/// Interval monitor with model-level precomputation (compressed rows, risk
/// bounds) shared across traces. Immutable; safe to use from many threads.
class IhmmMonitor {
public:
    IhmmMonitor(const Ihmm& im, const Spec& spec);

    const RiskTable& risk() const { return risk_; }
    const Ihmm& model() const { return *model_; }

    /// Throws NoConsistentPath when every refinement gives the trace
    /// probability zero.
    Verdict evaluate(const Trace& trace, double tol = kDefaultMonitorTol) const;

    /// Conditional risk bound in one direction.
    double bound(const Trace& trace, Direction dir, double tol, double* achieved_tol = nullptr) const;

private:
    const Ihmm* model_;
    Spec spec_;
    IntervalRows rows_;
    RiskTable risk_;
};

Verdict monitor_ihmm(const Ihmm& im, const Trace& trace, const Spec& spec, double tol = kDefaultMonitorTol);

} // namespace ihmon
