#include "ihmon/learner.hpp"

#include "ihmon/error.hpp"

#include <algorithm>

namespace ihmon {

LearnerSpace LearnerSpace::from_hmm(const Hmm& m) {
    if (!m.has_deterministic_obs()) throw InvalidArgument("learner space needs deterministic observations");
    LearnerSpace space;
    space.states = m.states;
    space.symbols = m.symbols;
    space.obs.resize(m.num_states());
    space.successors.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        space.obs[s] = m.symbol_of(s);
        for (const auto& t : m.trans[s])
            if (t.p > 0.0) space.successors[s].push_back(t.to);
        if (m.init[s] > 0.0) space.initial.push_back(s);
    }
    return space;
}

void LearnerConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon <= 0.5)) throw InvalidArgument("epsilon must lie in (0, 0.5]");
    if (!(n_lo0 >= 0.0 && n_lo0 <= n_hi0)) throw InvalidArgument("strengths must satisfy 0 <= n_lo0 <= n_hi0");
}

std::uint64_t CountTable::count(StateId from, StateId to) const {
    const auto& row = succ.at(from);
    auto it = row.find(to);
    return it == row.end() ? 0 : it->second;
}

std::size_t CountTable::states_touched() const {
    return static_cast<std::size_t>(std::count_if(visits.begin(), visits.end(), [](auto v) { return v > 0; }));
}

LearnerState init_learner(const LearnerSpace& space, const LearnerConfig& cfg) {
    cfg.validate();
    const std::size_t n = space.num_states();
    if (space.obs.size() != n || space.successors.size() != n)
        throw ShapeMismatch("learner space tables do not match the state count");
    LearnerState st;
    auto& im = st.model;
    im.states = space.states;
    im.symbols = space.symbols;
    im.obs = space.obs;
    im.init_lo.assign(n, 0.0);
    im.init_hi.assign(n, 0.0);
    im.trans.resize(n);
    st.strength.trans.resize(n);
    st.strength.init.assign(n, {cfg.n_lo0, cfg.n_hi0});
    const double lo = cfg.epsilon, hi = 1.0 - cfg.epsilon;
    for (StateId s = 0; s < n; ++s) {
        if (space.successors[s].empty()) throw DeadState("state " + space.states[s] + " has no supported successor");
        for (StateId t : space.successors[s]) {
            if (t >= n) throw UnknownState("successor index out of range");
            im.trans[s].push_back({t, lo, hi});
            st.strength.trans[s].push_back({cfg.n_lo0, cfg.n_hi0});
        }
    }
    for (StateId s : space.initial) {
        if (s >= n) throw UnknownState("initial state index out of range");
        im.init_lo[s] = lo;
        im.init_hi[s] = hi;
    }
    im.sort_rows();
    return st;
}

CountTable count_batch(std::span<const Path> paths, std::size_t num_states, bool count_initial) {
    if (paths.empty()) throw InvalidArgument("count_batch: empty batch");
    CountTable c;
    c.visits.assign(num_states, 0);
    c.succ.resize(num_states);
    c.starts.assign(num_states, 0);
    for (const auto& p : paths) {
        for (StateId s : p)
            if (s >= num_states) throw UnknownState("path state " + std::to_string(s) + " out of range");
        if (p.empty()) continue;
        if (count_initial) {
            ++c.paths;
            ++c.starts[p.front()];
        }
        for (std::size_t t = 0; t + 1 < p.size(); ++t) {
            ++c.visits[p[t]];
            ++c.succ[p[t]][p[t + 1]];
        }
    }
    return c;
}

namespace {

bool frequencies_inside(std::span<const IntervalTransition> row, std::span<const std::uint64_t> k, double total) {
    for (std::size_t e = 0; e < row.size(); ++e) {
        const double f = static_cast<double>(k[e]) / total;
        if (f < row[e].lo || f > row[e].hi) return false;
    }
    return true;
}

void update_bound(double& lo, double& hi, Strength& st, bool inside, double k, double total) {
    const double n = inside ? st.hi : st.lo;
    lo = std::clamp((n * lo + k) / (n + total), 0.0, 1.0);
    hi = std::clamp((n * hi + k) / (n + total), 0.0, 1.0);
    if (lo > hi) lo = hi;
    st.lo += total;
    st.hi += total;
}

} // namespace

void lui_update_in_place(LearnerState& state, const CountTable& counts) {
    auto& im = state.model;
    auto& str = state.strength;
    const std::size_t n = im.num_states();
    if (counts.visits.size() != n || counts.succ.size() != n || counts.starts.size() != n)
        throw ShapeMismatch("count table does not match the model");

    std::vector<std::uint64_t> k;
    for (StateId s = 0; s < n; ++s) {
        const std::uint64_t total = counts.visits[s];
        if (total == 0) continue;
        auto& row = im.trans[s];
        k.assign(row.size(), 0);
        std::uint64_t matched = 0;
        for (const auto& [to, cnt] : counts.succ[s]) {
            auto it = std::lower_bound(row.begin(), row.end(), to, [](const auto& t, StateId v) { return t.to < v; });
            if (it == row.end() || it->to != to)
                throw InvalidArgument("observed transition " + im.states[s] + " -> " + im.states.at(to) +
                                      " is outside the learner support");
            k[static_cast<std::size_t>(it - row.begin())] = cnt;
            matched += cnt;
        }
        if (matched != total) throw InvalidArgument("count table rows are inconsistent with visit counts");
        const double N = static_cast<double>(total);
        const bool inside = frequencies_inside(row, k, N);
        for (std::size_t e = 0; e < row.size(); ++e)
            update_bound(row[e].lo, row[e].hi, str.trans[s][e], inside, static_cast<double>(k[e]), N);
    }

    if (counts.paths > 0) {
        const double N = static_cast<double>(counts.paths);
        bool inside = true;
        for (StateId s = 0; s < n; ++s) {
            if (im.init_hi[s] <= 0.0 && im.init_lo[s] <= 0.0) {
                if (counts.starts[s] > 0)
                    throw InvalidArgument("observed initial state " + im.states[s] + " is outside the learner support");
                continue;
            }
            const double f = static_cast<double>(counts.starts[s]) / N;
            if (f < im.init_lo[s] || f > im.init_hi[s]) inside = false;
        }
        for (StateId s = 0; s < n; ++s) {
            if (im.init_hi[s] <= 0.0 && im.init_lo[s] <= 0.0) continue;
            update_bound(im.init_lo[s], im.init_hi[s], str.init[s], inside, static_cast<double>(counts.starts[s]), N);
        }
    }
}

LearnerState lui_update(const LearnerState& current, const CountTable& counts) {
    LearnerState next = current;
    lui_update_in_place(next, counts);
    return next;
}

Ihmm learn_dataset(std::span<const Path> paths, const LearnerSpace& space, const LearnerConfig& cfg,
                   std::size_t rounds) {
    if (paths.empty()) throw InvalidArgument("learn_dataset: empty dataset");
    rounds = std::clamp<std::size_t>(rounds, 1, paths.size());
    LearnerState st = init_learner(space, cfg);
    const std::size_t total = paths.size();
    for (std::size_t r = 0; r < rounds; ++r) {
        const std::size_t b = total * r / rounds, e = total * (r + 1) / rounds;
        lui_update_in_place(st, count_batch(paths.subspan(b, e - b), space.num_states()));
    }
    return std::move(st.model);
}

} // namespace ihmon
