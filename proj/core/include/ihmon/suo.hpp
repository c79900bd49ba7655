#pragma once

#include "ihmon/learner.hpp"
#include "ihmon/model.hpp"
#include "ihmon/rng.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ihmon {

/// System under observation: a native simulator together with the HMM it
/// realizes. Implementations are immutable; all randomness comes from the
/// generator passed in.
class Suo {
public:
    virtual ~Suo() = default;

    const std::string& name() const { return name_; }
    const Hmm& ground_truth() const { return truth_; }
    const Spec& spec() const { return spec_; }
    bool bad(StateId s) const { return spec_.is_bad(s); }

    /// Learner-visible abstraction of a state (identity unless coarse).
    StateId abstraction(StateId s) const { return abstract_of_.empty() ? s : abstract_of_[s]; }
    bool coarse() const { return !abstract_of_.empty(); }
    const std::vector<std::string>& abstract_names() const { return coarse() ? abstract_names_ : truth_.states; }

    virtual StateId sample_initial(Rng& rng) const = 0;
    virtual StateId step(StateId s, Rng& rng) const = 0;
    virtual SymbolId observe(StateId s, Rng& rng) const = 0;

    Path sample_path(std::size_t len, Rng& rng) const;
    Path sample_from(StateId s, std::size_t len, Rng& rng) const;
    Trace emit_trace(const Path& path, Rng& rng) const;

protected:
    std::string name_;
    Hmm truth_;
    Spec spec_;
    std::vector<StateId> abstract_of_;
    std::vector<std::string> abstract_names_;
};

/// Learner state space of a system: pairs (abstraction(s), observed symbol)
/// that occur with positive probability, with the transition support induced
/// by the ground truth. Without coarsening and with deterministic
/// observations it coincides with the ground-truth states; without
/// coarsening it coincides with determinize_observations(ground_truth).
class LearnerView {
public:
    explicit LearnerView(const Suo& suo);

    const LearnerSpace& space() const { return space_; }
    /// Learner-level spec with the given horizon.
    Spec spec(std::size_t horizon) const;
    std::size_t num_states() const { return space_.num_states(); }

    /// Throws UnknownState when the pair does not occur.
    StateId learner_state(StateId s, SymbolId z) const;
    Path to_learner(const Path& path, const Trace& trace) const;

    /// A concrete state mapping to the learner state, drawn uniformly among
    /// the preimages.
    StateId concretize(StateId learner, Rng& rng) const;

private:
    const Suo* suo_;
    LearnerSpace space_;
    std::vector<bool> bad_;
    std::map<std::pair<StateId, SymbolId>, StateId> index_;  // (abstract state, symbol) -> learner
    std::vector<std::vector<StateId>> preimage_;
};

struct UnlikelyParams {
    std::size_t n = 15;
    double epsilon = 0.1;
};

struct SnlBoard {
    std::size_t cells = 100;
    std::size_t die = 6;
    std::vector<std::pair<std::size_t, std::size_t>> ladders;
    std::vector<std::pair<std::size_t, std::size_t>> snakes;

    static SnlBoard standard();
    /// JSON board file ("format": "ihmon-board"); throws ParseError.
    static SnlBoard load(std::istream& is);
    void save(std::ostream& os) const;
};

struct EvadeParams {
    std::size_t grid = 4;
    std::size_t obs_radius = 1;
    bool coarse = false;
};

struct AirportParams {
    std::size_t vehicles = 1;
    std::size_t positions = 4;
    std::size_t countdown = 6;
    std::size_t noise = 1;
    double persist = 0.8;
    std::size_t crossing = 0;  // lane position of the crossing zone
    bool coarse = false;
};

std::unique_ptr<Suo> build_unlikely(const UnlikelyParams& p);
/// Throws InvalidArgument for an out-of-range or cyclic remap.
std::unique_ptr<Suo> build_snl(const SnlBoard& board);
std::unique_ptr<Suo> build_evade(const EvadeParams& p);
std::unique_ptr<Suo> build_airport(const AirportParams& p);

/// Named benchmark instance with its monitoring setup.
struct BenchmarkConfig {
    std::string benchmark;                 // unlikely | snl | evade | airport
    std::map<std::string, double> params;  // benchmark-specific numeric parameters
    std::string board_file;                // snl only; empty = shipped default
    bool coarse = false;
    std::size_t trace_len = 0;  // 0 = benchmark default
    std::size_t horizon = 0;    // 0 = benchmark default

    /// JSON ("format": "ihmon-benchmark"); throws ParseError.
    static BenchmarkConfig load(std::istream& is);
    static BenchmarkConfig load_file(const std::string& path);
    void save(std::ostream& os) const;
};

/// Builds the simulator and fills trace_len / horizon defaults. Throws
/// InvalidArgument for unknown benchmarks or parameters.
std::unique_ptr<Suo> make_benchmark(BenchmarkConfig& cfg);

std::vector<std::string> benchmark_names();

} // namespace ihmon
