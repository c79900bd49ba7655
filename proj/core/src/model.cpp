#include "ihmon/model.hpp"

#include "ihmon/error.hpp"
#include "ihmon/log.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

namespace ihmon {

namespace {

template <class Names>
std::optional<std::uint32_t> find_name(const Names& names, std::string_view name) {
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::uint32_t>(it - names.begin());
}

std::string state_label(const std::vector<std::string>& names, StateId s) {
    return s < names.size() ? names[s] : std::to_string(s);
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0 && std::isfinite(x); }

} // namespace

// ---------------------------------------------------------------------------
// Hmm

double Hmm::prob(StateId from, StateId to) const {
    const auto& row = trans.at(from);
    auto it = std::lower_bound(row.begin(), row.end(), to, [](const Transition& t, StateId v) { return t.to < v; });
    return (it != row.end() && it->to == to) ? it->p : 0.0;
}

double Hmm::emission(StateId state, SymbolId symbol) const {
    for (const auto& e : obs.at(state))
        if (e.symbol == symbol) return e.p;
    return 0.0;
}

bool Hmm::has_deterministic_obs() const {
    for (const auto& row : obs) {
        std::size_t positive = 0;
        for (const auto& e : row)
            if (e.p > 0.0) ++positive;
        if (positive != 1) return false;
        for (const auto& e : row)
            if (e.p > 0.0 && std::abs(e.p - 1.0) > kProbTol) return false;
    }
    return true;
}

SymbolId Hmm::symbol_of(StateId state) const {
    for (const auto& e : obs.at(state))
        if (e.p > 0.0) return e.symbol;
    throw InvalidArgument("state " + state_label(states, state) + " emits no symbol");
}

std::optional<StateId> Hmm::find_state(std::string_view name) const { return find_name(states, name); }
std::optional<SymbolId> Hmm::find_symbol(std::string_view name) const { return find_name(symbols, name); }

void Hmm::sort_rows() {
    for (auto& row : trans) {
        std::map<StateId, double> merged;
        for (const auto& t : row) merged[t.to] += t.p;
        row.clear();
        for (auto [to, p] : merged) row.push_back({to, p});
    }
    for (auto& row : obs) {
        std::map<SymbolId, double> merged;
        for (const auto& e : row) merged[e.symbol] += e.p;
        row.clear();
        for (auto [z, p] : merged) row.push_back({z, p});
    }
}

// ---------------------------------------------------------------------------
// Ihmm

const IntervalTransition* Ihmm::find(StateId from, StateId to) const {
    const auto& row = trans.at(from);
    auto it = std::lower_bound(row.begin(), row.end(), to,
                               [](const IntervalTransition& t, StateId v) { return t.to < v; });
    return (it != row.end() && it->to == to) ? &*it : nullptr;
}

std::optional<StateId> Ihmm::find_state(std::string_view name) const { return find_name(states, name); }
std::optional<SymbolId> Ihmm::find_symbol(std::string_view name) const { return find_name(symbols, name); }

void Ihmm::sort_rows() {
    for (auto& row : trans) {
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.to < b.to; });
        auto last = std::unique(row.begin(), row.end(), [](const auto& a, const auto& b) { return a.to == b.to; });
        if (last != row.end()) throw InvalidArgument("duplicate interval transition");
    }
}

// ---------------------------------------------------------------------------
// Spec

std::size_t Spec::num_bad() const { return static_cast<std::size_t>(std::count(bad.begin(), bad.end(), true)); }

Spec Spec::from_names(std::span<const std::string> states, std::span<const std::string> bad_names,
                      std::size_t horizon) {
    Spec spec;
    spec.horizon = horizon;
    spec.bad.assign(states.size(), false);
    for (const auto& name : bad_names) {
        auto it = std::find(states.begin(), states.end(), name);
        if (it == states.end()) throw UnknownState("unknown bad state '" + name + "'");
        spec.bad[static_cast<std::size_t>(it - states.begin())] = true;
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate_hmm(const Hmm& m) {
    std::vector<Violation> out;
    const std::size_t n = m.num_states();
    if (m.init.size() != n) out.push_back({"init", std::nullopt, "init has wrong length"});
    if (m.trans.size() != n) out.push_back({"trans", std::nullopt, "transition rows have wrong count"});
    if (m.obs.size() != n) out.push_back({"obs", std::nullopt, "observation rows have wrong count"});
    if (!out.empty()) return out;

    double init_sum = 0.0;
    for (StateId s = 0; s < n; ++s) {
        if (!in_unit(m.init[s]))
            out.push_back({"init", s, "init entry of " + m.states[s] + " outside [0,1]"});
        init_sum += m.init[s];
    }
    if (std::abs(init_sum - 1.0) > kProbTol)
        out.push_back({"init", std::nullopt, "init sums to " + std::to_string(init_sum)});

    for (StateId s = 0; s < n; ++s) {
        double row_sum = 0.0;
        for (const auto& t : m.trans[s]) {
            if (t.to >= n) out.push_back({"trans", s, "transition of " + m.states[s] + " to unknown state"});
            if (!in_unit(t.p)) out.push_back({"trans", s, "transition of " + m.states[s] + " outside [0,1]"});
            row_sum += t.p;
        }
        if (std::abs(row_sum - 1.0) > kProbTol)
            out.push_back({"trans", s, "row of " + m.states[s] + " sums to " + std::to_string(row_sum)});

        double obs_sum = 0.0;
        for (const auto& e : m.obs[s]) {
            if (e.symbol >= m.num_symbols())
                out.push_back({"obs", s, "observation of " + m.states[s] + " uses unknown symbol"});
            if (!in_unit(e.p)) out.push_back({"obs", s, "observation of " + m.states[s] + " outside [0,1]"});
            obs_sum += e.p;
        }
        if (std::abs(obs_sum - 1.0) > kProbTol)
            out.push_back({"obs", s, "observation row of " + m.states[s] + " sums to " + std::to_string(obs_sum)});
    }
    return out;
}

std::vector<Violation> validate_ihmm(const Ihmm& m, bool require_feasible) {
    std::vector<Violation> out;
    const std::size_t n = m.num_states();
    if (m.init_lo.size() != n || m.init_hi.size() != n)
        out.push_back({"init", std::nullopt, "init bounds have wrong length"});
    if (m.trans.size() != n) out.push_back({"trans", std::nullopt, "transition rows have wrong count"});
    if (m.obs.size() != n) out.push_back({"obs", std::nullopt, "observation vector has wrong length"});
    if (!out.empty()) return out;

    double lo_sum = 0.0, hi_sum = 0.0;
    for (StateId s = 0; s < n; ++s) {
        if (!in_unit(m.init_lo[s]) || !in_unit(m.init_hi[s]) || m.init_lo[s] > m.init_hi[s])
            out.push_back({"init", s, "init bounds of " + m.states[s] + " violate 0 <= lo <= hi <= 1"});
        lo_sum += m.init_lo[s];
        hi_sum += m.init_hi[s];
    }
    if (require_feasible && (lo_sum > 1.0 + kProbTol || hi_sum < 1.0 - kProbTol))
        out.push_back({"init", std::nullopt, "init bounds admit no distribution"});

    for (StateId s = 0; s < n; ++s) {
        if (m.obs[s] >= m.num_symbols()) out.push_back({"obs", s, "observation of " + m.states[s] + " unknown"});
        double rlo = 0.0, rhi = 0.0;
        for (const auto& t : m.trans[s]) {
            if (t.to >= n) out.push_back({"trans", s, "transition of " + m.states[s] + " to unknown state"});
            if (!in_unit(t.lo) || !in_unit(t.hi) || t.lo > t.hi)
                out.push_back({"trans", s, "bounds of " + m.states[s] + " violate 0 <= lo <= hi <= 1"});
            rlo += t.lo;
            rhi += t.hi;
        }
        if (require_feasible && (rlo > 1.0 + kProbTol || rhi < 1.0 - kProbTol))
            out.push_back({"trans", s, "row of " + m.states[s] + " admits no distribution"});
    }
    return out;
}

std::vector<Violation> validate_spec(const Hmm& m, const Spec& spec) {
    std::vector<Violation> out;
    if (spec.horizon < 1) out.push_back({"spec", std::nullopt, "horizon must be >= 1"});
    if (spec.bad.size() != m.num_states()) {
        out.push_back({"spec", std::nullopt, "bad-state mask has wrong length"});
        return out;
    }
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!spec.bad[s]) continue;
        for (const auto& t : m.trans[s])
            if (t.p > 0.0 && !spec.bad[t.to])
                out.push_back({"spec", s, "bad state " + m.states[s] + " can leave the bad set"});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Relations and transformations

bool refines(const Hmm& m, const Ihmm& im) {
    if (m.num_states() != im.num_states() || m.states != im.states)
        throw ShapeMismatch("refines: state sets differ");
    if (m.symbols != im.symbols) throw ShapeMismatch("refines: observation alphabets differ");
    if (!m.has_deterministic_obs()) throw ShapeMismatch("refines: HMM must observe deterministically");

    for (StateId s = 0; s < m.num_states(); ++s) {
        if (m.symbol_of(s) != im.obs[s]) return false;
        if (m.init[s] < im.init_lo[s] - kProbTol || m.init[s] > im.init_hi[s] + kProbTol) return false;
        for (const auto& t : m.trans[s]) {
            const auto* e = im.find(s, t.to);
            double lo = e ? e->lo : 0.0;
            double hi = e ? e->hi : 0.0;
            if (t.p < lo - kProbTol || t.p > hi + kProbTol) return false;
        }
        for (const auto& e : im.trans[s])
            if (m.prob(s, e.to) < e.lo - kProbTol) return false;
    }
    return true;
}

Determinized determinize_observations(const Hmm& m) {
    Determinized out;
    const std::size_t n = m.num_states();
    if (m.has_deterministic_obs()) {
        out.model = m;
        for (auto& row : out.model.obs) {
            SymbolId z = 0;
            for (const auto& e : row)
                if (e.p > 0.0) z = e.symbol;
            row = {{z, 1.0}};
        }
        out.origin.resize(n);
        for (StateId s = 0; s < n; ++s) out.origin[s] = s;
        return out;
    }

    // product index of (s, z) for every positive emission
    std::vector<std::vector<std::pair<SymbolId, StateId>>> index(n);
    std::vector<double> emit_p;
    for (StateId s = 0; s < n; ++s) {
        for (const auto& e : m.obs[s]) {
            if (e.p <= 0.0) continue;
            auto id = static_cast<StateId>(out.origin.size());
            index[s].push_back({e.symbol, id});
            out.origin.push_back(s);
            emit_p.push_back(e.p);
            out.model.states.push_back(m.states[s] + "/" + m.symbols[e.symbol]);
            out.model.obs.push_back({{e.symbol, 1.0}});
        }
    }
    const std::size_t np = out.origin.size();
    out.model.symbols = m.symbols;
    out.model.init.assign(np, 0.0);
    out.model.trans.assign(np, {});
    for (StateId ps = 0; ps < np; ++ps) {
        StateId s = out.origin[ps];
        out.model.init[ps] = m.init[s] * emit_p[ps];
        auto& row = out.model.trans[ps];
        for (const auto& t : m.trans[s]) {
            for (auto [z, target] : index[t.to]) {
                double p = t.p * emit_p[target];
                if (p > 0.0) row.push_back({target, p});
            }
        }
    }
    out.model.sort_rows();
    return out;
}

Spec lift_spec(const Spec& spec, std::span<const StateId> origin) {
    Spec out;
    out.horizon = spec.horizon;
    out.bad.resize(origin.size());
    for (std::size_t i = 0; i < origin.size(); ++i) out.bad[i] = spec.is_bad(origin[i]);
    return out;
}

Ihmm point_ihmm(const Hmm& m) {
    if (!m.has_deterministic_obs()) throw InvalidArgument("point_ihmm requires deterministic observations");
    Ihmm im;
    im.states = m.states;
    im.symbols = m.symbols;
    im.init_lo = m.init;
    im.init_hi = m.init;
    im.trans.resize(m.num_states());
    im.obs.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (const auto& t : m.trans[s]) im.trans[s].push_back({t.to, t.p, t.p});
        im.obs[s] = m.symbol_of(s);
    }
    return im;
}

Hmm midpoint_hmm(const Ihmm& im) {
    Hmm m;
    m.states = im.states;
    m.symbols = im.symbols;
    const std::size_t n = im.num_states();
    m.init.resize(n);
    double total = 0.0;
    for (StateId s = 0; s < n; ++s) total += 0.5 * (im.init_lo[s] + im.init_hi[s]);
    for (StateId s = 0; s < n; ++s)
        m.init[s] = total > 0.0 ? 0.5 * (im.init_lo[s] + im.init_hi[s]) / total : 1.0 / static_cast<double>(n);
    m.trans.resize(n);
    m.obs.resize(n);
    for (StateId s = 0; s < n; ++s) {
        double row_total = 0.0;
        for (const auto& t : im.trans[s]) row_total += 0.5 * (t.lo + t.hi);
        for (const auto& t : im.trans[s]) {
            double mid = 0.5 * (t.lo + t.hi);
            if (mid > 0.0) m.trans[s].push_back({t.to, mid / row_total});
        }
        if (m.trans[s].empty()) m.trans[s].push_back({s, 1.0});
        m.obs[s] = {{im.obs[s], 1.0}};
    }
    return m;
}

bool make_bad_absorbing(Hmm& m, const Spec& spec) {
    bool changed = false;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!spec.is_bad(s)) continue;
        auto& row = m.trans[s];
        if (row.size() == 1 && row[0].to == s && row[0].p == 1.0) continue;
        row = {{s, 1.0}};
        changed = true;
    }
    if (changed) log_warning("bad states made absorbing");
    return changed;
}

bool make_bad_absorbing(Ihmm& m, const Spec& spec) {
    bool changed = false;
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (!spec.is_bad(s)) continue;
        auto& row = m.trans[s];
        if (row.size() == 1 && row[0].to == s && row[0].lo == 1.0 && row[0].hi == 1.0) continue;
        row = {{s, 1.0, 1.0}};
        changed = true;
    }
    if (changed) log_warning("bad states made absorbing");
    return changed;
}

// ---------------------------------------------------------------------------
// Text helpers

Trace parse_trace(std::string_view line, std::span<const std::string> symbols) {
    Trace out;
    for (auto tok : split_ws(line)) {
        auto id = find_name(symbols, tok);
        if (!id) throw UnknownSymbol("unknown observation symbol '" + std::string(tok) + "'");
        out.push_back(*id);
    }
    return out;
}

Path parse_path(std::string_view line, std::span<const std::string> states) {
    Path out;
    for (auto tok : split_ws(line)) {
        auto id = find_name(states, tok);
        if (!id) throw UnknownState("unknown state '" + std::string(tok) + "'");
        out.push_back(*id);
    }
    return out;
}

std::string format_trace(const Trace& t, std::span<const std::string> symbols) {
    std::ostringstream os;
    for (std::size_t i = 0; i < t.size(); ++i) os << (i ? " " : "") << symbols[t[i]];
    return os.str();
}

std::string format_path(const Path& p, std::span<const std::string> states) {
    std::ostringstream os;
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? " " : "") << states[p[i]];
    return os.str();
}

} // namespace ihmon
