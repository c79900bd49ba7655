#include "ihmon/suo.hpp"

#include "ihmon/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

namespace ihmon {

Path Suo::sample_path(std::size_t len, Rng& rng) const {
    if (len == 0) return {};
    return sample_from(sample_initial(rng), len, rng);
}

Path Suo::sample_from(StateId s, std::size_t len, Rng& rng) const {
    Path p;
    if (len == 0) return p;
    if (s >= truth_.num_states()) throw UnknownState("sample_from: state out of range");
    p.reserve(len);
    p.push_back(s);
    while (p.size() < len) p.push_back(step(p.back(), rng));
    return p;
}

Trace Suo::emit_trace(const Path& path, Rng& rng) const {
    Trace t;
    t.reserve(path.size());
    for (StateId s : path) t.push_back(observe(s, rng));
    return t;
}

// ---------------------------------------------------------------------------
// Learner view

LearnerView::LearnerView(const Suo& suo) : suo_(&suo) {
    const Hmm& m = suo.ground_truth();
    const Spec& sp = suo.spec();
    const bool plain = !suo.coarse() && m.has_deterministic_obs();
    const auto& anames = suo.abstract_names();
    std::vector<std::vector<std::pair<SymbolId, StateId>>> of_state(m.num_states());
    space_.symbols = m.symbols;
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& e : m.obs[s]) {
            if (e.p <= 0.0) continue;
            auto key = std::make_pair(suo.abstraction(s), e.symbol);
            auto [it, fresh] = index_.emplace(key, static_cast<StateId>(space_.states.size()));
            if (fresh) {
                space_.states.push_back(plain ? m.states[s] : anames[key.first] + "/" + m.symbols[e.symbol]);
                space_.obs.push_back(e.symbol);
                preimage_.emplace_back();
                bad_.push_back(sp.is_bad(s));
            } else if (bad_[it->second] != sp.is_bad(s)) {
                throw InvalidArgument("abstraction of " + suo.name() + " mixes bad and safe states");
            }
            preimage_[it->second].push_back(s);
            of_state[s].push_back({e.symbol, it->second});
        }
    }
    const std::size_t n = space_.states.size();
    std::vector<std::set<StateId>> succ(n);
    std::set<StateId> init;
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (auto [z, l] : of_state[s]) {
            if (m.init[s] > 0.0) init.insert(l);
            for (const auto& t : m.trans[s]) {
                if (t.p <= 0.0) continue;
                for (auto [z2, l2] : of_state[t.to]) succ[l].insert(l2);
            }
        }
    }
    space_.successors.resize(n);
    for (StateId l = 0; l < n; ++l) space_.successors[l].assign(succ[l].begin(), succ[l].end());
    space_.initial.assign(init.begin(), init.end());
}

Spec LearnerView::spec(std::size_t horizon) const {
    Spec s;
    s.bad = bad_;
    s.horizon = horizon;
    return s;
}

StateId LearnerView::learner_state(StateId s, SymbolId z) const {
    auto it = index_.find({suo_->abstraction(s), z});
    if (it == index_.end()) throw UnknownState("state/symbol pair outside the learner space");
    return it->second;
}

Path LearnerView::to_learner(const Path& path, const Trace& trace) const {
    if (path.size() != trace.size()) throw ShapeMismatch("to_learner: path and trace lengths differ");
    Path out(path.size());
    for (std::size_t t = 0; t < path.size(); ++t) out[t] = learner_state(path[t], trace[t]);
    return out;
}

StateId LearnerView::concretize(StateId learner, Rng& rng) const {
    const auto& pre = preimage_.at(learner);
    return pre.size() == 1 ? pre.front() : pre[rng.index(pre.size())];
}

namespace {

void finish_truth(Hmm& m) {
    m.sort_rows();
    auto v = validate_hmm(m);
    if (!v.empty()) throw InvalidArgument("generated model is invalid: " + v.front().message);
}

// ---------------------------------------------------------------------------
// unlikely-n

class UnlikelySuo final : public Suo {
public:
    explicit UnlikelySuo(const UnlikelyParams& p) : n_(p.n), eps_(p.epsilon) {
        if (p.n < 1) throw InvalidArgument("unlikely: n must be >= 1");
        if (!(p.epsilon > 0.0 && p.epsilon < 0.5)) throw InvalidArgument("unlikely: epsilon must lie in (0, 0.5)");
        name_ = "unlikely-" + std::to_string(n_);
        const std::size_t ns = 6 * n_ + 2;
        Hmm& m = truth_;
        m.states = {"start", "done"};
        m.symbols = {"start", "done"};
        for (std::size_t i = 1; i <= n_; ++i) {
            const std::string c = std::to_string(i);
            for (const char* pos : {"1", "2", "3", "4", "good", "bad"}) m.states.push_back("s" + c + "_" + pos);
            m.symbols.push_back("c" + c + "a");
            m.symbols.push_back("c" + c + "b");
        }
        m.init.assign(ns, 0.0);
        m.init[0] = 1.0;
        m.trans.assign(ns, {});
        m.obs.assign(ns, {});
        m.trans[0] = {{1, 1.0 - eps_}, {first(1), eps_}};
        m.trans[1] = {{1, 1.0}};
        m.obs[0] = {{0, 1.0}};
        m.obs[1] = {{1, 1.0}};
        for (std::size_t i = 1; i <= n_; ++i) {
            const StateId b = first(i);
            if (i < n_)
                m.trans[b] = {{1, (1.0 - eps_) / 2.0}, {b + 1, (1.0 - eps_) / 2.0}, {first(i + 1), eps_}};
            else
                m.trans[b] = {{1, 0.5}, {b + 1, 0.5}};
            m.trans[b + 1] = {{b + 2, 0.5}, {b + 3, 0.5}};
            m.trans[b + 2] = {{b + 3, 0.8}, {b + 4, 0.2}};
            m.trans[b + 3] = {{b + 2, 0.2}, {b + 5, 0.8}};
            m.trans[b + 4] = {{b + 4, 1.0}};
            m.trans[b + 5] = {{b + 5, 1.0}};
            const auto sa = static_cast<SymbolId>(2 * i), sb = static_cast<SymbolId>(2 * i + 1);
            m.obs[b] = {{sa, 1.0}};
            for (StateId k = 1; k < 6; ++k) m.obs[b + k] = {{sb, 1.0}};
        }
        finish_truth(m);
        spec_.bad.assign(ns, false);
        for (std::size_t i = 1; i <= n_; ++i) spec_.bad[first(i) + 5] = true;
        spec_.horizon = 2;
    }

    StateId sample_initial(Rng&) const override { return 0; }

    StateId step(StateId s, Rng& rng) const override {
        if (s == 0) return rng.bernoulli(eps_) ? first(1) : 1;
        if (s == 1) return 1;
        const std::size_t i = (s - 2) / 6 + 1;
        const StateId b = first(i);
        switch (s - b) {
        case 0: {
            const double u = rng.uniform();
            if (i < n_) {
                if (u < eps_) return first(i + 1);
                return u < eps_ + (1.0 - eps_) / 2.0 ? 1 : b + 1;
            }
            return u < 0.5 ? 1 : b + 1;
        }
        case 1: return rng.bernoulli(0.5) ? b + 2 : b + 3;
        case 2: return rng.bernoulli(0.8) ? b + 3 : b + 4;
        case 3: return rng.bernoulli(0.8) ? b + 5 : b + 2;
        default: return s;
        }
    }

    SymbolId observe(StateId s, Rng&) const override {
        if (s < 2) return s;
        const std::size_t i = (s - 2) / 6 + 1;
        return static_cast<SymbolId>(s == first(i) ? 2 * i : 2 * i + 1);
    }

private:
    StateId first(std::size_t copy) const { return static_cast<StateId>(2 + 6 * (copy - 1)); }

    std::size_t n_;
    double eps_;
};

// ---------------------------------------------------------------------------
// snakes and ladders

class SnlSuo final : public Suo {
public:
    explicit SnlSuo(const SnlBoard& b) : cells_(b.cells), die_(b.die) {
        if (cells_ < 2) throw InvalidArgument("snl: board needs at least 2 cells");
        if (die_ < 1) throw InvalidArgument("snl: die needs at least one side");
        remap_.resize(cells_ + 1);
        for (std::size_t c = 0; c <= cells_; ++c) remap_[c] = c;
        auto add = [&](std::size_t from, std::size_t to, bool up) {
            if (from == 0 || from >= cells_ || to == 0 || to >= cells_ || from == to)
                throw InvalidArgument("snl: remap " + std::to_string(from) + "->" + std::to_string(to) + " out of range");
            if (up != (to > from)) throw InvalidArgument("snl: ladders go up and snakes go down");
            if (remap_[from] != from) throw InvalidArgument("snl: cell " + std::to_string(from) + " remapped twice");
            remap_[from] = to;
        };
        for (auto [f, t] : b.ladders) add(f, t, true);
        for (auto [f, t] : b.snakes) add(f, t, false);
        // resolve chains; a revisited cell is a cycle
        for (std::size_t c = 0; c <= cells_; ++c) {
            std::size_t cur = c, hops = 0;
            while (remap_[cur] != cur) {
                cur = remap_[cur];
                if (++hops > cells_) throw InvalidArgument("snl: remap cycle through cell " + std::to_string(c));
            }
            final_.push_back(cur);
        }

        name_ = "snl";
        const std::size_t ns = cells_ + 1;
        Hmm& m = truth_;
        for (std::size_t c = 0; c < ns; ++c) {
            m.states.push_back("c" + std::to_string(c));
            m.symbols.push_back("c" + std::to_string(c));
        }
        m.init.assign(ns, 0.0);
        m.init[0] = 1.0;
        m.trans.assign(ns, {});
        m.obs.assign(ns, {});
        const double q = 1.0 / static_cast<double>(die_);
        for (std::size_t c = 0; c < ns; ++c) {
            m.obs[c] = {{static_cast<SymbolId>(c), 1.0}};
            if (c == cells_) {
                m.trans[c] = {{static_cast<StateId>(c), 1.0}};
                continue;
            }
            for (std::size_t d = 1; d <= die_; ++d) m.trans[c].push_back({static_cast<StateId>(move(c, d)), q});
        }
        finish_truth(m);
        spec_.bad.assign(ns, false);
        spec_.bad[cells_] = true;
        spec_.horizon = 10;
    }

    StateId sample_initial(Rng&) const override { return 0; }

    StateId step(StateId s, Rng& rng) const override {
        if (s == cells_) return s;
        return static_cast<StateId>(move(s, rng.index(die_) + 1));
    }

    SymbolId observe(StateId s, Rng&) const override { return s; }

private:
    std::size_t move(std::size_t c, std::size_t d) const {
        std::size_t t = c + d;
        if (t > cells_) t = 2 * cells_ - t;
        return final_[t];
    }

    std::size_t cells_;
    std::size_t die_;
    std::vector<std::size_t> remap_;
    std::vector<std::size_t> final_;
};

// ---------------------------------------------------------------------------
// evade gridworld

class EvadeSuo final : public Suo {
public:
    explicit EvadeSuo(const EvadeParams& p) : g_(p.grid), r_(p.obs_radius) {
        if (g_ < 3) throw InvalidArgument("evade: grid must be at least 3");
        for (std::size_t x = 0; x < g_; ++x) perim_.push_back(cell(x, 0));
        for (std::size_t y = 1; y < g_; ++y) perim_.push_back(cell(g_ - 1, y));
        for (std::size_t x = g_ - 1; x-- > 0;) perim_.push_back(cell(x, g_ - 1));
        for (std::size_t y = g_ - 1; y-- > 1;) perim_.push_back(cell(0, y));
        cells_ = g_ * g_;
        const std::size_t ns = perim_.size() * cells_;

        name_ = "evade-" + std::to_string(g_) + "-" + std::to_string(r_) + (p.coarse ? "-coarse" : "");
        Hmm& m = truth_;
        for (std::size_t k = 0; k < perim_.size(); ++k)
            for (std::size_t e = 0; e < cells_; ++e) {
                const std::string pre = "p" + std::to_string(k) + ":";
                m.states.push_back(pre + std::to_string(e % g_) + "," + std::to_string(e / g_));
                m.symbols.push_back(pre + "o" + std::to_string(e % g_) + "," + std::to_string(e / g_));
            }
        m.init.assign(ns, 0.0);
        m.init[state(0, cell(g_ - 1, g_ - 1))] = 1.0;
        m.trans.assign(ns, {});
        m.obs.assign(ns, {});
        spec_.bad.assign(ns, false);
        spec_.horizon = 3;
        for (std::size_t k = 0; k < perim_.size(); ++k) {
            for (std::size_t e = 0; e < cells_; ++e) {
                const StateId s = state(k, e);
                const auto seen = window(e);
                for (std::size_t o : seen)
                    m.obs[s].push_back({static_cast<SymbolId>(k * cells_ + o), 1.0 / static_cast<double>(seen.size())});
                if (perim_[k] == e) {
                    spec_.bad[s] = true;
                    m.trans[s] = {{s, 1.0}};
                    continue;
                }
                const auto moves = neighbors(e);
                const std::size_t k2 = (k + 1) % perim_.size();
                for (std::size_t e2 : moves)
                    m.trans[s].push_back({state(k2, e2), 1.0 / static_cast<double>(moves.size())});
            }
        }
        finish_truth(m);

        if (p.coarse) {
            abstract_of_.resize(ns);
            std::map<std::tuple<std::size_t, std::size_t, bool>, StateId> ids;
            for (std::size_t k = 0; k < perim_.size(); ++k)
                for (std::size_t e = 0; e < cells_; ++e) {
                    const StateId s = state(k, e);
                    auto key = std::make_tuple(k, e % g_, spec_.bad[s]);
                    auto [it, fresh] = ids.emplace(key, static_cast<StateId>(abstract_names_.size()));
                    if (fresh)
                        abstract_names_.push_back("p" + std::to_string(k) + ":x" + std::to_string(e % g_) +
                                                  (spec_.bad[s] ? ":caught" : ""));
                    abstract_of_[s] = it->second;
                }
        }
    }

    StateId sample_initial(Rng&) const override { return state(0, cell(g_ - 1, g_ - 1)); }

    StateId step(StateId s, Rng& rng) const override {
        const std::size_t k = s / cells_, e = s % cells_;
        if (perim_[k] == e) return s;
        const std::size_t x = e % g_, y = e / g_;
        // stay, left, right, up, down; illegal moves are redrawn
        for (;;) {
            switch (rng.index(5)) {
            case 0: return state((k + 1) % perim_.size(), e);
            case 1: if (x > 0) return state((k + 1) % perim_.size(), e - 1); break;
            case 2: if (x + 1 < g_) return state((k + 1) % perim_.size(), e + 1); break;
            case 3: if (y > 0) return state((k + 1) % perim_.size(), e - g_); break;
            default: if (y + 1 < g_) return state((k + 1) % perim_.size(), e + g_); break;
            }
        }
    }

    SymbolId observe(StateId s, Rng& rng) const override {
        const std::size_t k = s / cells_, e = s % cells_;
        const auto x = static_cast<long>(e % g_), y = static_cast<long>(e / g_);
        const auto r = static_cast<long>(r_), g = static_cast<long>(g_);
        for (;;) {
            const long ox = x + static_cast<long>(rng.index(2 * r_ + 1)) - r;
            const long oy = y + static_cast<long>(rng.index(2 * r_ + 1)) - r;
            if (ox >= 0 && ox < g && oy >= 0 && oy < g)
                return static_cast<SymbolId>(k * cells_ + static_cast<std::size_t>(oy * g + ox));
        }
    }

private:
    std::size_t cell(std::size_t x, std::size_t y) const { return y * g_ + x; }
    StateId state(std::size_t k, std::size_t e) const { return static_cast<StateId>(k * cells_ + e); }

    std::vector<std::size_t> neighbors(std::size_t e) const {
        const std::size_t x = e % g_, y = e / g_;
        std::vector<std::size_t> out{e};
        if (x > 0) out.push_back(e - 1);
        if (x + 1 < g_) out.push_back(e + 1);
        if (y > 0) out.push_back(e - g_);
        if (y + 1 < g_) out.push_back(e + g_);
        return out;
    }

    std::vector<std::size_t> window(std::size_t e) const {
        const auto x = static_cast<long>(e % g_), y = static_cast<long>(e / g_);
        const auto r = static_cast<long>(r_), g = static_cast<long>(g_);
        std::vector<std::size_t> out;
        for (long oy = std::max(0L, y - r); oy <= std::min(g - 1, y + r); ++oy)
            for (long ox = std::max(0L, x - r); ox <= std::min(g - 1, x + r); ++ox)
                out.push_back(static_cast<std::size_t>(oy * g + ox));
        std::sort(out.begin(), out.end());
        return out;
    }

    std::size_t g_, r_, cells_ = 0;
    std::vector<std::size_t> perim_;
};

// ---------------------------------------------------------------------------
// airport

class AirportSuo final : public Suo {
public:
    explicit AirportSuo(const AirportParams& p) : p_(p) {
        if (p.vehicles < 1 || p.positions < 2 || p.countdown < 1)
            throw InvalidArgument("airport: vehicles >= 1, positions >= 2 and countdown >= 1 required");
        if (p.crossing >= p.positions) throw InvalidArgument("airport: crossing zone outside the lane");
        if (!(p.persist >= 0.0 && p.persist <= 1.0)) throw InvalidArgument("airport: persist must lie in [0, 1]");
        if (p.vehicles > 4) throw InvalidArgument("airport: at most 4 vehicles");
        lane_ = 2 * p.positions;
        combos_ = ipow(lane_, p.vehicles);
        obs_combos_ = ipow(p.positions, p.vehicles);
        const std::size_t ns = (p.countdown + 1) * combos_;

        name_ = "airport-" + std::to_string(p.vehicles) + "-" + std::to_string(p.positions) + "-" +
                std::to_string(p.countdown) + (p.coarse ? "-coarse" : "");
        Hmm& m = truth_;
        for (std::size_t d = 0; d <= p.countdown; ++d)
            for (std::size_t c = 0; c < combos_; ++c) m.states.push_back(state_name(d, c, true));
        for (std::size_t d = 0; d <= p.countdown; ++d)
            for (std::size_t c = 0; c < obs_combos_; ++c) {
                std::string s = "d" + std::to_string(d) + ":o";
                for (std::size_t k = 0; k < p.vehicles; ++k)
                    s += (k ? "," : "") + std::to_string(digit(c, p.positions, k));
                m.symbols.push_back(s);
            }
        m.init.assign(ns, 0.0);
        for (std::size_t c = 0; c < combos_; ++c) m.init[index(p.countdown, c)] = 1.0 / static_cast<double>(combos_);
        m.trans.assign(ns, {});
        m.obs.assign(ns, {});
        spec_.bad.assign(ns, false);
        spec_.horizon = 3;

        // per-vehicle successor and observation kernels
        std::vector<std::vector<std::pair<std::size_t, double>>> vnext(lane_), vobs(lane_);
        for (std::size_t v = 0; v < lane_; ++v) {
            const std::size_t pos = v / 2, vel = v % 2;
            std::map<std::size_t, double> nx;
            for (std::size_t vel2 = 0; vel2 < 2; ++vel2) {
                const double q = vel2 == vel ? p.persist : 1.0 - p.persist;
                if (q > 0.0) nx[((pos + vel2) % p.positions) * 2 + vel2] += q;
            }
            vnext[v].assign(nx.begin(), nx.end());
            std::map<std::size_t, double> ob;
            const double w = 1.0 / static_cast<double>(2 * p.noise + 1);
            for (std::size_t k = 0; k <= 2 * p.noise; ++k)
                ob[(pos + p.positions * (p.noise + 1) + k - p.noise) % p.positions] += w;
            vobs[v].assign(ob.begin(), ob.end());
        }

        for (std::size_t d = 0; d <= p.countdown; ++d) {
            for (std::size_t c = 0; c < combos_; ++c) {
                const StateId s = index(d, c);
                bool crossing = false;
                for (std::size_t k = 0; k < p.vehicles; ++k) crossing |= digit(c, lane_, k) / 2 == p.crossing;
                spec_.bad[s] = d == 0 && crossing;
                // observations: product of per-vehicle kernels
                std::vector<std::pair<std::size_t, double>> acc{{0, 1.0}};
                for (std::size_t k = 0; k < p.vehicles; ++k) {
                    std::vector<std::pair<std::size_t, double>> nxt;
                    for (auto [code, q] : acc)
                        for (auto [o, w] : vobs[digit(c, lane_, k)]) nxt.push_back({code + o * ipow(p.positions, k), q * w});
                    acc.swap(nxt);
                }
                for (auto [code, q] : acc) m.obs[s].push_back({static_cast<SymbolId>(d * obs_combos_ + code), q});
                if (d == 0) {
                    m.trans[s] = {{s, 1.0}};
                    continue;
                }
                std::vector<std::pair<std::size_t, double>> tr{{0, 1.0}};
                for (std::size_t k = 0; k < p.vehicles; ++k) {
                    std::vector<std::pair<std::size_t, double>> nxt;
                    for (auto [code, q] : tr)
                        for (auto [v2, w] : vnext[digit(c, lane_, k)]) nxt.push_back({code + v2 * ipow(lane_, k), q * w});
                    tr.swap(nxt);
                }
                for (auto [code, q] : tr) m.trans[s].push_back({index(d - 1, code), q});
            }
        }
        for (auto& row : m.obs) {
            std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.symbol < b.symbol; });
        }
        finish_truth(m);

        if (p.coarse) {
            abstract_of_.resize(ns);
            std::map<std::pair<std::size_t, std::size_t>, StateId> ids;
            for (std::size_t d = 0; d <= p.countdown; ++d)
                for (std::size_t c = 0; c < combos_; ++c) {
                    std::size_t posc = 0;
                    for (std::size_t k = 0; k < p.vehicles; ++k) posc += digit(c, lane_, k) / 2 * ipow(p.positions, k);
                    auto [it, fresh] = ids.emplace(std::make_pair(d, posc), static_cast<StateId>(abstract_names_.size()));
                    if (fresh) abstract_names_.push_back(state_name(d, c, false));
                    abstract_of_[index(d, c)] = it->second;
                }
        }
    }

    StateId sample_initial(Rng& rng) const override {
        std::size_t c = 0;
        for (std::size_t k = 0; k < p_.vehicles; ++k) {
            const std::size_t pos = rng.index(p_.positions);
            const std::size_t vel = rng.index(2);
            c += (pos * 2 + vel) * ipow(lane_, k);
        }
        return index(p_.countdown, c);
    }

    StateId step(StateId s, Rng& rng) const override {
        const std::size_t d = s / combos_, c = s % combos_;
        if (d == 0) return s;
        std::size_t c2 = 0;
        for (std::size_t k = 0; k < p_.vehicles; ++k) {
            const std::size_t v = digit(c, lane_, k);
            std::size_t pos = v / 2, vel = v % 2;
            if (!rng.bernoulli(p_.persist)) vel = 1 - vel;
            pos = (pos + vel) % p_.positions;
            c2 += (pos * 2 + vel) * ipow(lane_, k);
        }
        return index(d - 1, c2);
    }

    SymbolId observe(StateId s, Rng& rng) const override {
        const std::size_t d = s / combos_, c = s % combos_;
        std::size_t code = 0;
        for (std::size_t k = 0; k < p_.vehicles; ++k) {
            const std::size_t pos = digit(c, lane_, k) / 2;
            const std::size_t off = rng.index(2 * p_.noise + 1);
            const std::size_t o = (pos + p_.positions * (p_.noise + 1) + off - p_.noise) % p_.positions;
            code += o * ipow(p_.positions, k);
        }
        return static_cast<SymbolId>(d * obs_combos_ + code);
    }

private:
    static std::size_t ipow(std::size_t b, std::size_t e) {
        std::size_t r = 1;
        while (e--) r *= b;
        return r;
    }
    static std::size_t digit(std::size_t code, std::size_t base, std::size_t k) { return code / ipow(base, k) % base; }
    StateId index(std::size_t d, std::size_t c) const { return static_cast<StateId>(d * combos_ + c); }

    std::string state_name(std::size_t d, std::size_t c, bool with_velocity) const {
        std::string s = "d" + std::to_string(d) + ":";
        for (std::size_t k = 0; k < p_.vehicles; ++k) {
            const std::size_t v = digit(c, lane_, k);
            s += (k ? "," : "") + std::to_string(v / 2);
            if (with_velocity) s += v % 2 ? "+" : ".";
        }
        return s;
    }

    AirportParams p_;
    std::size_t lane_ = 0, combos_ = 0, obs_combos_ = 0;
};

using json = nlohmann::json;

std::size_t count_param(const std::map<std::string, double>& p, const std::string& key, std::size_t def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    const double v = it->second;
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e9)
        throw InvalidArgument("parameter " + key + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

double real_param(const std::map<std::string, double>& p, const std::string& key, double def) {
    auto it = p.find(key);
    return it == p.end() ? def : it->second;
}

void check_keys(const std::map<std::string, double>& p, std::initializer_list<const char*> allowed,
                const std::string& bench) {
    for (const auto& [k, v] : p) {
        bool ok = false;
        for (const char* a : allowed) ok |= k == a;
        if (!ok) throw InvalidArgument("unknown parameter '" + k + "' for benchmark " + bench);
    }
}

} // namespace

std::unique_ptr<Suo> build_unlikely(const UnlikelyParams& p) { return std::make_unique<UnlikelySuo>(p); }
std::unique_ptr<Suo> build_snl(const SnlBoard& board) { return std::make_unique<SnlSuo>(board); }
std::unique_ptr<Suo> build_evade(const EvadeParams& p) { return std::make_unique<EvadeSuo>(p); }
std::unique_ptr<Suo> build_airport(const AirportParams& p) { return std::make_unique<AirportSuo>(p); }

SnlBoard SnlBoard::standard() {
    SnlBoard b;
    b.ladders = {{3, 22}, {8, 30}, {28, 84}, {58, 77}, {75, 86}};
    b.snakes = {{17, 4}, {54, 34}, {62, 19}, {87, 24}, {98, 79}};
    return b;
}

SnlBoard SnlBoard::load(std::istream& is) {
    json j;
    try {
        is >> j;
        if (j.at("format").get<std::string>() != "ihmon-board") throw ParseError("not an ihmon-board document");
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported board version");
        SnlBoard b;
        b.cells = j.value("cells", std::size_t{100});
        b.die = j.value("die", std::size_t{6});
        const json ladders = j.value("ladders", json::array()), snakes = j.value("snakes", json::array());
        for (const auto& e : ladders) b.ladders.push_back({e.at(0), e.at(1)});
        for (const auto& e : snakes) b.snakes.push_back({e.at(0), e.at(1)});
        return b;
    } catch (const json::exception& e) {
        throw ParseError(std::string("board: ") + e.what());
    }
}

void SnlBoard::save(std::ostream& os) const {
    json j;
    j["format"] = "ihmon-board";
    j["version"] = 1;
    j["cells"] = cells;
    j["die"] = die;
    j["ladders"] = json::array();
    j["snakes"] = json::array();
    for (auto [f, t] : ladders) j["ladders"].push_back({f, t});
    for (auto [f, t] : snakes) j["snakes"].push_back({f, t});
    os << j.dump(2) << '\n';
}

BenchmarkConfig BenchmarkConfig::load(std::istream& is) {
    json j;
    try {
        is >> j;
        if (j.at("format").get<std::string>() != "ihmon-benchmark") throw ParseError("not an ihmon-benchmark document");
        if (j.at("version").get<int>() != 1) throw ParseError("unsupported benchmark version");
        BenchmarkConfig c;
        c.benchmark = j.at("benchmark").get<std::string>();
        const json params = j.value("params", json::object());
        for (const auto& [k, v] : params.items()) c.params[k] = v.get<double>();
        c.board_file = j.value("board_file", std::string{});
        c.coarse = j.value("coarse", false);
        c.trace_len = j.value("trace_len", std::size_t{0});
        c.horizon = j.value("horizon", std::size_t{0});
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("benchmark config: ") + e.what());
    }
}

BenchmarkConfig BenchmarkConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return load(in);
}

void BenchmarkConfig::save(std::ostream& os) const {
    json j;
    j["format"] = "ihmon-benchmark";
    j["version"] = 1;
    j["benchmark"] = benchmark;
    j["params"] = json::object();
    for (const auto& [k, v] : params) j["params"][k] = v;
    if (!board_file.empty()) j["board_file"] = board_file;
    j["coarse"] = coarse;
    j["trace_len"] = trace_len;
    j["horizon"] = horizon;
    os << j.dump(2) << '\n';
}

std::vector<std::string> benchmark_names() { return {"unlikely", "snl", "evade", "airport"}; }

std::unique_ptr<Suo> make_benchmark(BenchmarkConfig& cfg) {
    std::unique_ptr<Suo> suo;
    std::size_t len = 0;
    const auto& p = cfg.params;
    if (cfg.benchmark == "unlikely") {
        check_keys(p, {"n", "epsilon"}, cfg.benchmark);
        if (cfg.coarse) throw InvalidArgument("unlikely has no coarse variant");
        suo = build_unlikely({count_param(p, "n", 15), real_param(p, "epsilon", 0.1)});
        len = 6;
    } else if (cfg.benchmark == "snl") {
        check_keys(p, {"die"}, cfg.benchmark);
        if (cfg.coarse) throw InvalidArgument("snl has no coarse variant");
        SnlBoard b = SnlBoard::standard();
        if (!cfg.board_file.empty()) {
            std::ifstream in(cfg.board_file);
            if (!in) throw ParseError("cannot open board file " + cfg.board_file);
            b = SnlBoard::load(in);
        }
        b.die = count_param(p, "die", b.die);
        suo = build_snl(b);
        len = 10;
    } else if (cfg.benchmark == "evade") {
        check_keys(p, {"grid", "obs_radius"}, cfg.benchmark);
        suo = build_evade({count_param(p, "grid", 4), count_param(p, "obs_radius", 1), cfg.coarse});
        len = 6;
    } else if (cfg.benchmark == "airport") {
        check_keys(p, {"vehicles", "positions", "countdown", "noise", "persist", "crossing"}, cfg.benchmark);
        AirportParams a;
        a.vehicles = count_param(p, "vehicles", a.vehicles);
        a.positions = count_param(p, "positions", a.positions);
        a.countdown = count_param(p, "countdown", a.countdown);
        a.noise = count_param(p, "noise", a.noise);
        a.persist = real_param(p, "persist", a.persist);
        a.crossing = count_param(p, "crossing", a.crossing);
        a.coarse = cfg.coarse;
        suo = build_airport(a);
        len = 4;
    } else {
        throw InvalidArgument("unknown benchmark '" + cfg.benchmark + "'");
    }
    if (cfg.trace_len == 0) cfg.trace_len = len;
    if (cfg.horizon == 0) cfg.horizon = suo->spec().horizon;
    return suo;
}

} // namespace ihmon
