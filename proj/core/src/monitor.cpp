#include "ihmon/monitor.hpp"

#include "ihmon/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ihmon {

// ---------------------------------------------------------------------------
// Forward filtering

std::vector<double> filter_hmm(const Hmm& m, const Trace& trace) {
    const std::size_t n = m.num_states();
    std::vector<double> belief(m.init);
    if (trace.empty()) return belief;

    auto normalize = [&](std::size_t step) {
        double total = 0.0;
        for (double b : belief) total += b;
        if (!(total > 0.0))
            throw ZeroProbabilityTrace("trace has probability zero (no consistent state at position " +
                                       std::to_string(step) + ")");
        for (double& b : belief) b /= total;
    };

    for (StateId s = 0; s < n; ++s) belief[s] *= m.emission(s, trace[0]);
    normalize(0);
    std::vector<double> next(n);
    for (std::size_t t = 1; t < trace.size(); ++t) {
        std::fill(next.begin(), next.end(), 0.0);
        for (StateId s = 0; s < n; ++s) {
            if (belief[s] == 0.0) continue;
            for (const auto& tr : m.trans[s]) next[tr.to] += belief[s] * tr.p;
        }
        for (StateId s = 0; s < n; ++s) next[s] *= next[s] > 0.0 ? m.emission(s, trace[t]) : 0.0;
        belief.swap(next);
        normalize(t);
    }
    return belief;
}

HmmMonitor::HmmMonitor(const Hmm& m, const Spec& spec) : model_(&m), risk_(risk_hmm(m, spec)) {}

double HmmMonitor::evaluate(const Trace& trace) const {
    auto belief = filter_hmm(*model_, trace);
    double r = 0.0;
    for (std::size_t s = 0; s < belief.size(); ++s) r += belief[s] * risk_.lo[s];
    return std::clamp(r, 0.0, 1.0);
}

double ideal_monitor(const Hmm& m, const Trace& trace, const Spec& spec) { return HmmMonitor(m, spec).evaluate(trace); }

// ---------------------------------------------------------------------------
// Unrolling

std::size_t UnrolledModel::num_nodes() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.size();
    return n;
}

UnrolledModel unroll(const IntervalRows& rows, std::span<const SymbolId> obs, const Trace& trace,
                     const RiskTable& risk, Direction dir) {
    if (trace.empty()) throw InvalidArgument("unroll: empty trace");
    const std::size_t n = rows.num_states();
    UnrolledModel u;
    u.direction = dir;
    u.layers.resize(trace.size());

    std::vector<std::int64_t> slot(n, -1);
    std::vector<StateId> touched;

    // root -> layer 0
    for (StateId s = 0; s < n; ++s) {
        if (obs[s] == trace[0] && rows.init_hi[s] > 0.0) {
            u.root.edges.push_back({static_cast<std::uint32_t>(u.layers[0].size()), rows.init_lo[s], rows.init_hi[s]});
            u.layers[0].push_back({s, {}, 0.0, 0.0, 0.0});
        } else {
            u.root.leak_lo += rows.init_lo[s];
            u.root.leak_hi += rows.init_hi[s];
        }
    }
    if (u.layers[0].empty())
        throw NoConsistentPath("no initial state emits the first trace symbol with positive upper bound");

    for (std::size_t j = 0; j + 1 < trace.size(); ++j) {
        auto& next = u.layers[j + 1];
        for (auto& node : u.layers[j]) {
            for (std::size_t e = rows.begin(node.state); e < rows.end(node.state); ++e) {
                const StateId t = rows.target[e];
                if (obs[t] == trace[j + 1] && rows.hi[e] > 0.0) {
                    if (slot[t] < 0) {
                        slot[t] = static_cast<std::int64_t>(next.size());
                        touched.push_back(t);
                        next.push_back({t, {}, 0.0, 0.0, 0.0});
                    }
                    node.edges.push_back({static_cast<std::uint32_t>(slot[t]), rows.lo[e], rows.hi[e]});
                } else {
                    node.leak_lo += rows.lo[e];
                    node.leak_hi += rows.hi[e];
                }
            }
        }
        for (StateId t : touched) slot[t] = -1;
        touched.clear();
        if (next.empty())
            throw NoConsistentPath("no state consistent with the trace at position " + std::to_string(j + 1));
    }

    for (auto& node : u.layers.back()) node.terminal = dir == Direction::Max ? risk.hi[node.state] : risk.lo[node.state];
    return u;
}

UnrolledModel unroll(const Ihmm& im, const Trace& trace, const Spec& spec, Direction dir) {
    IntervalRows rows(im);
    RiskTable risk = risk_ihmm(rows, spec);
    return unroll(rows, im.obs, trace, risk, dir);
}

// ---------------------------------------------------------------------------
// Robust sweeps over the unrolled model

namespace {

struct SweepResult {
    double value = 0.0;
    double top = 0.0;    // Pr(top and trace) under the extremal choice
    double trace = 0.0;  // Pr(trace) under the extremal choice

    double ratio() const { return trace > 0.0 ? std::clamp(top / trace, 0.0, 1.0) : std::numeric_limits<double>::quiet_NaN(); }
};

class Sweeper {
public:
    explicit Sweeper(const UnrolledModel& u) : u_(u) {
        weights_.resize(u.layers.size());
        for (std::size_t j = 0; j < u.layers.size(); ++j) weights_[j].resize(u.layers[j].size());
    }

    /// Extremum of E[top_value * [top] + bottom_value * [bottom]], leak worth 0.
    SweepResult run(double top_value, double bottom_value, Direction dir, bool with_policy) {
        const std::size_t depth = u_.layers.size();
        std::vector<double> next_values(u_.layers.back().size());
        for (std::size_t i = 0; i < next_values.size(); ++i) {
            const double r = u_.layers.back()[i].terminal;
            next_values[i] = r * top_value + (1.0 - r) * bottom_value;
        }
        std::vector<double> cur_values;
        for (std::size_t j = depth - 1; j-- > 0;) {
            const auto& layer = u_.layers[j];
            cur_values.assign(layer.size(), 0.0);
            for (std::size_t i = 0; i < layer.size(); ++i)
                cur_values[i] = node_value(layer[i], next_values, dir, with_policy ? &weights_[j][i] : nullptr);
            next_values.swap(cur_values);
        }
        SweepResult out;
        std::vector<double> root_weights;
        out.value = node_value(u_.root, next_values, dir, with_policy ? &root_weights : nullptr);
        if (!with_policy) return out;

        // forward pass under the extremal choice
        std::vector<double> mass(u_.layers[0].size(), 0.0);
        for (std::size_t e = 0; e < u_.root.edges.size(); ++e) mass[u_.root.edges[e].target] += root_weights[e];
        for (std::size_t j = 0; j + 1 < depth; ++j) {
            std::vector<double> next_mass(u_.layers[j + 1].size(), 0.0);
            const auto& layer = u_.layers[j];
            for (std::size_t i = 0; i < layer.size(); ++i) {
                if (mass[i] == 0.0) continue;
                const auto& w = weights_[j][i];
                for (std::size_t e = 0; e < layer[i].edges.size(); ++e) next_mass[layer[i].edges[e].target] += mass[i] * w[e];
            }
            mass.swap(next_mass);
        }
        for (std::size_t i = 0; i < mass.size(); ++i) {
            out.trace += mass[i];
            out.top += mass[i] * u_.layers.back()[i].terminal;
        }
        return out;
    }

private:
    double node_value(const UnrolledNode& node, const std::vector<double>& succ_values, Direction dir,
                      std::vector<double>* weights) {
        const std::size_t k = node.edges.size();
        vals_.resize(k + 1);
        lo_.resize(k + 1);
        hi_.resize(k + 1);
        order_.resize(k + 1);
        for (std::size_t e = 0; e < k; ++e) {
            vals_[e] = succ_values[node.edges[e].target];
            lo_[e] = node.edges[e].lo;
            hi_[e] = node.edges[e].hi;
        }
        vals_[k] = 0.0;
        lo_[k] = node.leak_lo;
        hi_[k] = node.leak_hi;
        std::span<double> witness;
        if (weights) {
            weights->resize(k + 1);
            witness = *weights;
        }
        return robust_expectation_into(vals_, lo_, hi_, dir, order_, witness);
    }

    const UnrolledModel& u_;
    std::vector<std::vector<std::vector<double>>> weights_;
    std::vector<double> vals_, lo_, hi_;
    std::vector<std::uint32_t> order_;
};

} // namespace

double weighted_extremum(const UnrolledModel& u, double lambda) {
    Sweeper sw(u);
    return sw.run(1.0 - lambda, -lambda, u.direction, false).value;
}

bool decide(const UnrolledModel& u, double lambda) {
    const double v = weighted_extremum(u, lambda);
    return u.direction == Direction::Max ? v > 0.0 : v < 0.0;
}

// ---------------------------------------------------------------------------
// Interval monitor

IhmmMonitor::IhmmMonitor(const Ihmm& im, const Spec& spec)
    : model_(&im), spec_(spec), rows_(im), risk_(risk_ihmm(rows_, spec)) {}

namespace {

// Certified search for the extremal conditional risk. Every positive test
// comes with an extremal refinement whose exact ratio moves the attained side
// of the bracket (a Dinkelbach step); negative tests move the other side.
double search_bound(const UnrolledModel& u, double tol, double* achieved) {
    Sweeper sw(u);
    const bool maximize = u.direction == Direction::Max;
    auto test = [&](double lambda) { return sw.run(1.0 - lambda, -lambda, u.direction, true); };
    auto positive = [&](const SweepResult& r) { return maximize ? r.value > 0.0 : r.value < 0.0; };

    // attained: the value of a concrete extremal refinement; open: the other bracket side
    double attained, open;
    {
        SweepResult r = test(maximize ? 0.0 : 1.0);
        if (!positive(r) || std::isnan(r.ratio())) {
            if (achieved) *achieved = 0.0;
            return maximize ? 0.0 : 1.0;
        }
        attained = r.ratio();
        open = maximize ? 1.0 : 0.0;
    }
    auto gap = [&] { return std::abs(open - attained); };
    auto improves = [&](double x) { return maximize ? x > attained : x < attained; };

    double probe = attained;
    for (int step = 0; step < kMaxBisectionSteps && gap() > tol; ++step) {
        SweepResult r = test(probe);
        if (positive(r) && !std::isnan(r.ratio()) && improves(r.ratio())) {
            attained = r.ratio();
            probe = attained;
            continue;
        }
        if (positive(r)) {
            // no progress at the attained value: step just past it
            probe = maximize ? std::min(open, attained + 0.5 * tol) : std::max(open, attained - 0.5 * tol);
            if (probe == attained) break;
            // the next failed test closes the bracket; a success yields a better ratio
            SweepResult q = test(probe);
            if (positive(q) && !std::isnan(q.ratio()) && improves(q.ratio())) {
                attained = q.ratio();
                probe = attained;
            } else {
                open = probe;
                probe = 0.5 * (attained + open);
            }
            continue;
        }
        open = probe;
        probe = 0.5 * (attained + open);
    }
    if (achieved) *achieved = gap();
    return attained;
}

} // namespace

double IhmmMonitor::bound(const Trace& trace, Direction dir, double tol, double* achieved_tol) const {
    if (!(tol > 0.0)) throw InvalidArgument("monitor tolerance must be positive");
    if (trace.empty()) {
        // risk interval of the initial belief
        std::vector<double> values(dir == Direction::Max ? risk_.hi : risk_.lo);
        std::vector<std::uint32_t> order(values.size());
        if (achieved_tol) *achieved_tol = 0.0;
        return std::clamp(robust_expectation_into(values, rows_.init_lo, rows_.init_hi, dir, order, {}), 0.0, 1.0);
    }
    UnrolledModel u = unroll(rows_, model_->obs, trace, risk_, dir);
    return search_bound(u, tol, achieved_tol);
}

Verdict IhmmMonitor::evaluate(const Trace& trace, double tol) const {
    Verdict v;
    double tol_hi = 0.0, tol_lo = 0.0;
    if (trace.empty()) {
        v.hi = bound(trace, Direction::Max, tol, &tol_hi);
        v.lo = bound(trace, Direction::Min, tol, &tol_lo);
        return v;
    }
    if (!(tol > 0.0)) throw InvalidArgument("monitor tolerance must be positive");
    UnrolledModel u = unroll(rows_, model_->obs, trace, risk_, Direction::Max);
    {
        // consistency: maximal trace probability over the refinements
        Sweeper sw(u);
        if (!(sw.run(1.0, 1.0, Direction::Max, false).value > 0.0))
            throw NoConsistentPath("no refinement gives the trace positive probability");
    }
    v.hi = search_bound(u, tol, &tol_hi);
    u.direction = Direction::Min;
    for (auto& node : u.layers.back()) node.terminal = risk_.lo[node.state];
    v.lo = search_bound(u, tol, &tol_lo);
    v.tol = std::max(tol_hi, tol_lo);
    return v;
}

Verdict monitor_ihmm(const Ihmm& im, const Trace& trace, const Spec& spec, double tol) {
    return IhmmMonitor(im, spec).evaluate(trace, tol);
}

} // namespace ihmon
