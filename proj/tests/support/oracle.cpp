#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace ihmon::oracle {

std::vector<std::vector<double>> interval_vertices(std::span<const double> lo, std::span<const double> hi) {
    const std::size_t n = lo.size();
    std::vector<std::vector<double>> out;
    if (n == 0) return out;
    for (std::size_t free = 0; free < n; ++free) {
        const std::size_t others = n - 1;
        for (std::size_t mask = 0; mask < (std::size_t{1} << others); ++mask) {
            std::vector<double> p(n);
            double sum = 0.0;
            std::size_t bit = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == free) continue;
                p[j] = (mask >> bit++) & 1 ? hi[j] : lo[j];
                sum += p[j];
            }
            p[free] = 1.0 - sum;
            if (p[free] < lo[free] - 1e-12 || p[free] > hi[free] + 1e-12) continue;
            p[free] = std::clamp(p[free], lo[free], hi[free]);
            bool dup = false;
            for (const auto& q : out) {
                double d = 0.0;
                for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::abs(q[j] - p[j]));
                if (d < 1e-15) dup = true;
            }
            if (!dup) out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

struct Row {
    std::vector<StateId> to;
    std::vector<double> lo, hi;
    std::vector<std::vector<double>> vertices;
};

std::vector<Row> rows_of(const Ihmm& im) {
    std::vector<Row> rows(im.num_states());
    for (StateId s = 0; s < im.num_states(); ++s) {
        for (const auto& t : im.trans[s]) {
            rows[s].to.push_back(t.to);
            rows[s].lo.push_back(t.lo);
            rows[s].hi.push_back(t.hi);
        }
        rows[s].vertices = interval_vertices(rows[s].lo, rows[s].hi);
    }
    return rows;
}

Row init_row(const Ihmm& im) {
    Row r;
    for (StateId s = 0; s < im.num_states(); ++s) {
        r.to.push_back(s);
        r.lo.push_back(im.init_lo[s]);
        r.hi.push_back(im.init_hi[s]);
    }
    r.vertices = interval_vertices(r.lo, r.hi);
    return r;
}

double extremum(const Row& row, const std::function<double(StateId)>& value, bool maximize) {
    double best = maximize ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (const auto& p : row.vertices) {
        double v = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) v += p[j] * value(row.to[j]);
        best = maximize ? std::max(best, v) : std::min(best, v);
    }
    return best;
}

double parametric(const Ihmm& im, const std::vector<Row>& rows, const Row& init, const std::vector<double>& r,
                  const Trace& trace, double top, double bottom, bool maximize) {
    const std::size_t n = im.num_states();
    // value of being in state s at trace position j (already matching trace[j])
    std::vector<double> next(n), cur(n);
    const std::size_t last = trace.size() - 1;
    for (StateId s = 0; s < n; ++s) next[s] = r[s] * top + (1.0 - r[s]) * bottom;
    for (std::size_t j = last; j-- > 0;) {
        for (StateId s = 0; s < n; ++s)
            cur[s] = extremum(rows[s], [&](StateId t) { return im.obs[t] == trace[j + 1] ? next[t] : 0.0; }, maximize);
        next.swap(cur);
    }
    return extremum(init, [&](StateId s) { return im.obs[s] == trace[0] ? next[s] : 0.0; }, maximize);
}

} // namespace

RiskBounds risk(const Ihmm& im, const Spec& spec) {
    const auto rows = rows_of(im);
    const std::size_t n = im.num_states();
    RiskBounds r;
    r.lo.resize(n);
    for (StateId s = 0; s < n; ++s) r.lo[s] = spec.is_bad(s) ? 1.0 : 0.0;
    r.hi = r.lo;
    for (std::size_t k = 0; k < spec.horizon; ++k) {
        RiskBounds nx = r;
        for (StateId s = 0; s < n; ++s) {
            if (spec.is_bad(s)) continue;
            nx.hi[s] = extremum(rows[s], [&](StateId t) { return r.hi[t]; }, true);
            nx.lo[s] = extremum(rows[s], [&](StateId t) { return r.lo[t]; }, false);
        }
        r = std::move(nx);
    }
    return r;
}

double conditional_risk(const Ihmm& im, const Trace& trace, const Spec& spec, bool maximize) {
    const auto rows = rows_of(im);
    const Row init = init_row(im);
    const RiskBounds rb = risk(im, spec);
    const auto& r = maximize ? rb.hi : rb.lo;
    auto f = [&](double lambda) { return parametric(im, rows, init, r, trace, 1.0 - lambda, -lambda, maximize); };
    double a = 0.0, b = 1.0;
    if (maximize) {
        if (!(f(0.0) > 0.0)) return 0.0;
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (f(m) > 0.0 ? a : b) = m;
        }
    } else {
        if (!(f(1.0) < 0.0)) return 1.0;
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (f(m) < 0.0 ? b : a) = m;
        }
    }
    return 0.5 * (a + b);
}

double max_trace_probability(const Ihmm& im, const Trace& trace) {
    const auto rows = rows_of(im);
    const Row init = init_row(im);
    std::vector<double> r(im.num_states(), 0.0);
    return parametric(im, rows, init, r, trace, 1.0, 1.0, true);
}

double path_risk(const Hmm& m, StateId s, const Spec& spec) {
    // sum over all horizon-step paths of the probability of those touching a bad state
    double total = 0.0;
    std::function<void(StateId, std::size_t, double, bool)> go = [&](StateId x, std::size_t k, double p, bool hit) {
        hit = hit || spec.is_bad(x);
        if (k == spec.horizon) {
            if (hit) total += p;
            return;
        }
        for (const auto& t : m.trans[x])
            if (t.p > 0.0) go(t.to, k + 1, p * t.p, hit);
    };
    go(s, 0, 1.0, false);
    return total;
}

double path_ideal(const Hmm& m, const Trace& trace, const Spec& spec) {
    double num = 0.0, den = 0.0;
    std::function<void(StateId, std::size_t, double)> go = [&](StateId x, std::size_t j, double p) {
        p *= m.emission(x, trace[j]);
        if (p <= 0.0) return;
        if (j + 1 == trace.size()) {
            den += p;
            num += p * path_risk(m, x, spec);
            return;
        }
        for (const auto& t : m.trans[x])
            if (t.p > 0.0) go(t.to, j + 1, p * t.p);
    };
    for (StateId s = 0; s < m.num_states(); ++s)
        if (m.init[s] > 0.0) go(s, 0, m.init[s]);
    return num / den;
}

RandomCase random_case(Rng& rng, std::size_t max_states, std::size_t symbols, double max_width,
                       std::size_t max_horizon) {
    RandomCase c;
    const std::size_t n = 1 + rng.index(max_states);
    Hmm& m = c.truth;
    for (std::size_t s = 0; s < n; ++s) m.states.push_back("q" + std::to_string(s));
    for (std::size_t z = 0; z < symbols; ++z) m.symbols.push_back("z" + std::to_string(z));
    m.trans.resize(n);
    m.obs.resize(n);
    c.spec.bad.assign(n, false);
    c.spec.horizon = 1 + rng.index(max_horizon);
    for (std::size_t s = 0; s < n; ++s) c.spec.bad[s] = n > 1 && rng.bernoulli(0.3);

    auto random_dist = [&](std::vector<double>& w) {
        double sum = 0.0;
        for (auto& x : w) sum += x;
        for (auto& x : w) x /= sum;
    };
    for (StateId s = 0; s < n; ++s) {
        m.obs[s] = {{static_cast<SymbolId>(rng.index(symbols)), 1.0}};
        if (c.spec.bad[s]) {
            m.trans[s] = {{s, 1.0}};
            continue;
        }
        std::vector<StateId> sup;
        for (StateId t = 0; t < n; ++t)
            if (rng.bernoulli(0.7)) sup.push_back(t);
        if (sup.empty()) sup.push_back(static_cast<StateId>(rng.index(n)));
        std::vector<double> w(sup.size());
        for (auto& x : w) x = 0.05 + rng.uniform();
        random_dist(w);
        for (std::size_t k = 0; k < sup.size(); ++k) m.trans[s].push_back({sup[k], w[k]});
    }
    m.init.assign(n, 0.0);
    {
        std::vector<double> w(n);
        for (auto& x : w) x = rng.bernoulli(0.6) ? 0.05 + rng.uniform() : 0.0;
        if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[rng.index(n)] = 1.0;
        random_dist(w);
        m.init = w;
    }
    m.sort_rows();

    auto around = [&](double p, double& lo, double& hi) {
        if (p == 1.0 || rng.bernoulli(0.15)) {
            lo = hi = p;
            return;
        }
        const double a = rng.uniform() * max_width / 2.0, b = rng.uniform() * max_width / 2.0;
        lo = std::max(0.0, p - a);
        hi = std::min(1.0, p + b);
    };
    Ihmm& im = c.im;
    im.states = m.states;
    im.symbols = m.symbols;
    im.obs.resize(n);
    im.trans.resize(n);
    im.init_lo.assign(n, 0.0);
    im.init_hi.assign(n, 0.0);
    for (StateId s = 0; s < n; ++s) {
        im.obs[s] = m.obs[s].front().symbol;
        for (const auto& t : m.trans[s]) {
            double lo, hi;
            around(t.p, lo, hi);
            im.trans[s].push_back({t.to, lo, hi});
        }
        if (m.init[s] > 0.0) around(m.init[s], im.init_lo[s], im.init_hi[s]);
    }
    im.sort_rows();
    return c;
}

Path sample_path(const Hmm& m, std::size_t len, Rng& rng) {
    Path p;
    if (len == 0) return p;
    p.push_back(static_cast<StateId>(rng.categorical(m.init)));
    while (p.size() < len) {
        const auto& row = m.trans[p.back()];
        std::vector<double> w;
        for (const auto& t : row) w.push_back(t.p);
        p.push_back(row[rng.categorical(w)].to);
    }
    return p;
}

Trace sample_trace(const Hmm& m, std::size_t len, Rng& rng) {
    Trace t;
    for (StateId s : sample_path(m, len, rng)) {
        std::vector<double> w;
        for (const auto& e : m.obs[s]) w.push_back(e.p);
        t.push_back(m.obs[s][rng.categorical(w)].symbol);
    }
    return t;
}

} // namespace ihmon::oracle
