#pragma once

#include "ihmon/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ihmon {

/// State space known to the learner: names, the deterministic observation
/// of every state and the allowed transition / initial-state graph.
struct LearnerSpace {
    std::vector<std::string> states;
    std::vector<std::string> symbols;
    std::vector<SymbolId> obs;
    std::vector<std::vector<StateId>> successors;  // sorted
    std::vector<StateId> initial;                  // sorted

    std::size_t num_states() const { return states.size(); }

    /// Support graph of a deterministic-observation HMM (positive entries).
    static LearnerSpace from_hmm(const Hmm& m);
};

struct LearnerConfig {
    double epsilon = 0.1;
    double n_lo0 = 0.0;
    double n_hi0 = 5.0;

    /// Throws InvalidArgument unless 0 < epsilon <= 0.5 and 0 <= n_lo0 <= n_hi0.
    void validate() const;
};

struct Strength {
    double lo;
    double hi;
};

/// Strength intervals aligned with the iHMM rows: trans[s][e] belongs to
/// Ihmm::trans[s][e], init[s] to the initial bounds of state s.
struct StrengthTable {
    std::vector<std::vector<Strength>> trans;
    std::vector<Strength> init;
};

/// Transition and initial-state counts of a batch of paths.
///
/// visits[i] counts occurrences of i that have a successor in their path, so
/// sum_j succ[i][j] == visits[i].
struct CountTable {
    std::vector<std::uint64_t> visits;
    std::vector<std::map<StateId, std::uint64_t>> succ;
    std::uint64_t paths = 0;
    std::vector<std::uint64_t> starts;

    std::uint64_t count(StateId from, StateId to) const;
    std::size_t states_touched() const;
};

struct LearnerState {
    Ihmm model;
    StrengthTable strength;
};

/// Fresh iHMM: [epsilon, 1 - epsilon] on every supported transition and
/// supported initial state, [0, 0] elsewhere; strengths (n_lo0, n_hi0).
/// Throws DeadState when a state has no supported successor.
LearnerState init_learner(const LearnerSpace& space, const LearnerConfig& cfg);

/// Counts a batch. With `count_initial` false the paths contribute to the
/// transition counts only (used for paths started from a chosen state).
/// Throws InvalidArgument for an empty batch, UnknownState for ids out of range.
CountTable count_batch(std::span<const Path> paths, std::size_t num_states, bool count_initial = true);

/// Linearly-updating-intervals step.
///
/// For every state i with visits N > 0 the strength used for all of its
/// bounds is n_hi when every empirical frequency k(i,x)/N lies inside its
/// prior interval and n_lo otherwise; then
///   lo := (n lo + k) / (n + N),   hi := (n hi + k) / (n + N)
/// and both strengths grow by N. The initial bounds are updated the same way
/// with the number of paths and the start counts. Throws InvalidArgument
/// when a count names a transition outside the support.
LearnerState lui_update(const LearnerState& current, const CountTable& counts);
void lui_update_in_place(LearnerState& state, const CountTable& counts);

/// Sequential updates over `rounds` consecutive, near-equal batches.
Ihmm learn_dataset(std::span<const Path> paths, const LearnerSpace& space, const LearnerConfig& cfg,
                   std::size_t rounds = 1);

} // namespace ihmon
