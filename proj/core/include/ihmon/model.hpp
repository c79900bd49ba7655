#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihmon {

using StateId = std::uint32_t;
using SymbolId = std::uint32_t;

/// Sequence of observation symbols.
using Trace = std::vector<SymbolId>;
/// Sequence of state identifiers.
using Path = std::vector<StateId>;

/// Absolute tolerance of every probability-sum check.
inline constexpr double kProbTol = 1e-9;

struct Transition {
    StateId to;
    double p;
};

struct Emission {
    SymbolId symbol;
    double p;
};

struct IntervalTransition {
    StateId to;
    double lo;
    double hi;
};

/// Hidden Markov model with sparse transition rows and per-state
/// observation distributions.
///
/// Rows are kept sorted by target state; `sort_rows()` restores that order
/// and merges duplicates after manual construction.
struct Hmm {
    std::vector<std::string> states;
    std::vector<std::string> symbols;
    std::vector<double> init;
    std::vector<std::vector<Transition>> trans;
    std::vector<std::vector<Emission>> obs;

    std::size_t num_states() const { return states.size(); }
    std::size_t num_symbols() const { return symbols.size(); }

    /// P(from, to); zero for absent entries.
    double prob(StateId from, StateId to) const;
    /// O(state)(symbol); zero for absent entries.
    double emission(StateId state, SymbolId symbol) const;

    bool has_deterministic_obs() const;
    /// The unique symbol of `state`. Requires a deterministic observation.
    SymbolId symbol_of(StateId state) const;

    std::optional<StateId> find_state(std::string_view name) const;
    std::optional<SymbolId> find_symbol(std::string_view name) const;

    void sort_rows();
};

/// Interval HMM in determinized-observation form: each state carries exactly
/// one observation symbol. Transitions absent from a row have bounds [0,0].
struct Ihmm {
    std::vector<std::string> states;
    std::vector<std::string> symbols;
    std::vector<double> init_lo;
    std::vector<double> init_hi;
    std::vector<std::vector<IntervalTransition>> trans;
    std::vector<SymbolId> obs;

    std::size_t num_states() const { return states.size(); }
    std::size_t num_symbols() const { return symbols.size(); }

    /// Row entry for (from, to), or nullptr when the transition is [0,0].
    const IntervalTransition* find(StateId from, StateId to) const;

    std::optional<StateId> find_state(std::string_view name) const;
    std::optional<SymbolId> find_symbol(std::string_view name) const;

    void sort_rows();
};

/// Bounded safety property: never visit a bad state within `horizon` steps.
struct Spec {
    std::vector<bool> bad;
    std::size_t horizon = 1;

    bool is_bad(StateId s) const { return s < bad.size() && bad[s]; }
    std::size_t num_bad() const;

    /// Builds a spec from bad-state names; throws UnknownState.
    static Spec from_names(std::span<const std::string> states, std::span<const std::string> bad_names,
                           std::size_t horizon);
};

/// One invariant violation found by a validator.
struct Violation {
    std::string where;  // "init", "trans", "obs", "spec", ...
    std::optional<StateId> state;
    std::string message;
};

std::vector<Violation> validate_hmm(const Hmm& m);

/// Checks entrywise 0 <= lo <= hi <= 1 and, when `require_feasible`,
/// sum(lo) <= 1 <= sum(hi) for every row and for the initial bounds.
std::vector<Violation> validate_ihmm(const Ihmm& m, bool require_feasible = true);

/// Spec checks: horizon >= 1, size matches, bad states absorbing in `m`.
std::vector<Violation> validate_spec(const Hmm& m, const Spec& spec);

/// True iff `m` lies inside every interval of `im` (tolerance kProbTol) and
/// both share states and deterministic observations. Throws ShapeMismatch when
/// state or symbol sets differ.
bool refines(const Hmm& m, const Ihmm& im);

/// Result of the observation-determinization product construction.
struct Determinized {
    Hmm model;
    /// Original state of every product state.
    std::vector<StateId> origin;
};

/// Product construction over (state, symbol) pairs with positive emission
/// probability. The new model has deterministic observations and the same
/// trace distribution. Models that already observe deterministically are
/// returned unchanged (state order and names preserved).
Determinized determinize_observations(const Hmm& m);

/// Spec on product states induced through `origin`.
Spec lift_spec(const Spec& spec, std::span<const StateId> origin);

/// Degenerate intervals lo = hi = the probabilities of `m`. Requires
/// deterministic observations.
Ihmm point_ihmm(const Hmm& m);

/// HMM whose rows are the normalized interval midpoints (lo + hi) / 2.
Hmm midpoint_hmm(const Ihmm& im);

/// Replaces the rows of bad states by self-loops. Returns true when the
/// model changed, in which case a warning is logged.
bool make_bad_absorbing(Hmm& m, const Spec& spec);
bool make_bad_absorbing(Ihmm& m, const Spec& spec);

/// Whitespace-separated symbol names to a trace; throws UnknownSymbol.
Trace parse_trace(std::string_view line, std::span<const std::string> symbols);
/// Whitespace-separated state names to a path; throws UnknownState.
Path parse_path(std::string_view line, std::span<const std::string> states);

std::string format_trace(const Trace& t, std::span<const std::string> symbols);
std::string format_path(const Path& p, std::span<const std::string> states);

} // namespace ihmon
