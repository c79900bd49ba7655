#pragma once

#include "ihmon/learner.hpp"
#include "ihmon/monitor.hpp"
#include "ihmon/rng.hpp"
#include "ihmon/suo.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace ihmon {

enum class PrefixMethod { Prefix, Split };

struct RefinementConfig {
    double theta = 0.05;
    std::size_t batch_size = 100;
    std::size_t trace_len = 6;
    std::size_t horizon = 2;
    PrefixMethod method = PrefixMethod::Prefix;
    std::size_t n_neigh = 10;  // prefix fractions n / n_neigh for n = 0..n_neigh
    std::size_t neighborhood_samples = 10;
    std::size_t states_per_prefix = 1;
    std::size_t max_rounds = 200;
    std::uint64_t seed = 1;
    double tol = kDefaultMonitorTol;
    std::size_t workers = 1;

    /// Throws InvalidArgument on out-of-range fields.
    void validate() const;
};

struct RoundRecord {
    std::size_t round = 0;
    std::uint64_t samples_total = 0;
    double mean_width = 0.0;
    std::size_t n_bad = 0;
    std::size_t states_touched = 0;
    bool converged = false;
};

struct RefinementReport {
    std::vector<RoundRecord> rounds;
    bool converged = false;
    std::uint64_t total_samples = 0;
};

/// Columns: round,samples_total,mean_width,n_bad,converged.
void write_report_csv(std::ostream& os, const RefinementReport& report);

struct ConformanceResult {
    bool passed = false;
    double mean_width = 0.0;
    std::vector<double> widths;
    std::vector<Trace> bad;  // traces with width >= theta, in input order
};

/// Mean risk-interval width over `traces`. Traces without a consistent path
/// count with width 1. Requires a nonempty trace set.
ConformanceResult conformance_test(const IhmmMonitor& monitor, std::span<const Trace> traces, double theta,
                                   double tol = kDefaultMonitorTol, std::size_t workers = 1);
ConformanceResult conformance_test(const Ihmm& im, std::span<const Trace> traces, const Spec& spec, double theta,
                                   double tol = kDefaultMonitorTol, std::size_t workers = 1);

/// Prefixes of length floor(n |tau| / n_neigh), n = 0..n_neigh, of every
/// bad trace; duplicates removed, ordered by first occurrence.
std::vector<Trace> bad_prefixes_prefix_method(std::span<const Trace> bad, std::size_t n_neigh);

/// Either the whole trace or the empty trace, depending on whether a state
/// sampled from the end-of-trace belief of the midpoint model has a risk
/// width above theta.
Trace bad_prefix_split_method(const Hmm& midpoint, const RiskTable& risk, const Trace& trace, double theta, Rng& rng);
Trace bad_prefix_split_method(const Ihmm& im, const Trace& trace, const Spec& spec, double theta, Rng& rng);

/// Draws a state from the filtering posterior of `midpoint` after `prefix`
/// (the initial distribution for an empty prefix). A zero-probability prefix
/// falls back to a uniform draw among the states emitting its last symbol;
/// NoConsistentPath when there are none.
StateId sample_belief_state(const Hmm& midpoint, const Trace& prefix, Rng& rng);

struct RefinementResult {
    LearnerState learner;
    RefinementReport report;
};

/// Conformance-testing refinement loop. Per round: m fresh traces plus the
/// traces retained from the last round are tested; on failure, neighborhood
/// paths of length trace_len + horizon are drawn from states consistent with
/// the bad prefixes and fed to the learner. The empty prefix restarts from
/// the system's initial distribution. Every simulator path, tested traces
/// included, counts towards the sample budget.
RefinementResult refine_loop(const Suo& suo, const LearnerView& view, const RefinementConfig& cfg,
                             const LearnerConfig& lcfg);

/// Plain batch learning: per round, m paths of length trace_len + horizon
/// from the initial distribution are learned; the model is then tested on m
/// fresh traces that are not counted as samples.
RefinementResult plain_learning(const Suo& suo, const LearnerView& view, const RefinementConfig& cfg,
                                const LearnerConfig& lcfg);

PrefixMethod parse_prefix_method(const std::string& s);
const char* to_string(PrefixMethod m);

} // namespace ihmon
