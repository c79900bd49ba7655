#include "ihmon/risk.hpp"

#include "ihmon/error.hpp"
#include "ihmon/model_io.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

namespace ihmon {

double robust_expectation_into(std::span<const double> values, std::span<const double> lo,
                               std::span<const double> hi, Direction dir, std::span<std::uint32_t> order,
                               std::span<double> witness) {
    const std::size_t n = values.size();
    std::iota(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), 0u);
    if (dir == Direction::Max) {
        std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), [&](std::uint32_t a, std::uint32_t b) {
            return values[a] > values[b] || (values[a] == values[b] && a < b);
        });
    } else {
        std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), [&](std::uint32_t a, std::uint32_t b) {
            return values[a] < values[b] || (values[a] == values[b] && a < b);
        });
    }
    double remaining = 1.0;
    double value = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        remaining -= lo[j];
        value += lo[j] * values[j];
    }
    const bool want_witness = !witness.empty();
    if (want_witness)
        for (std::size_t j = 0; j < n; ++j) witness[j] = lo[j];
    for (std::size_t k = 0; k < n && remaining > 0.0; ++k) {
        const std::uint32_t j = order[k];
        const double add = std::min(hi[j] - lo[j], remaining);
        if (add <= 0.0) continue;
        value += add * values[j];
        remaining -= add;
        if (want_witness) witness[j] += add;
    }
    return value;
}

RobustResult robust_expectation(std::span<const double> values, std::span<const double> lo,
                                std::span<const double> hi, Direction dir) {
    const std::size_t n = values.size();
    if (lo.size() != n || hi.size() != n) throw ShapeMismatch("robust_expectation: size mismatch");
    double lo_sum = 0.0, hi_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (lo[j] > hi[j]) throw InfeasibleInterval("robust_expectation: lower bound above upper bound");
        lo_sum += lo[j];
        hi_sum += hi[j];
    }
    if (lo_sum > 1.0 + kProbTol) throw InfeasibleInterval("robust_expectation: lower bounds sum above 1");
    if (hi_sum < 1.0 - kProbTol) throw InfeasibleInterval("robust_expectation: upper bounds sum below 1");
    std::vector<std::uint32_t> order(n);
    RobustResult out{0.0, std::vector<double>(n)};
    out.value = robust_expectation_into(values, lo, hi, dir, order, out.witness);
    return out;
}

bool relax_bounds(std::span<double> lo, std::span<double> hi) {
    double lo_sum = 0.0, hi_sum = 0.0;
    for (std::size_t j = 0; j < lo.size(); ++j) {
        lo_sum += lo[j];
        hi_sum += hi[j];
    }
    bool changed = false;
    if (lo_sum > 1.0 + kProbTol) {
        std::fill(lo.begin(), lo.end(), 0.0);
        changed = true;
    }
    if (hi_sum < 1.0 - kProbTol && !hi.empty()) {
        std::fill(hi.begin(), hi.end(), 1.0);
        changed = true;
    }
    return changed;
}

IntervalRows::IntervalRows(const Ihmm& m) {
    const std::size_t n = m.num_states();
    offset.reserve(n + 1);
    offset.push_back(0);
    for (StateId s = 0; s < n; ++s) {
        const std::size_t first = target.size();
        for (const auto& t : m.trans[s]) {
            target.push_back(t.to);
            lo.push_back(t.lo);
            hi.push_back(t.hi);
        }
        auto len = static_cast<std::ptrdiff_t>(target.size() - first);
        if (len > 0 && relax_bounds(std::span(lo).subspan(first, static_cast<std::size_t>(len)),
                                    std::span(hi).subspan(first, static_cast<std::size_t>(len))))
            ++relaxed_rows;
        offset.push_back(static_cast<std::uint32_t>(target.size()));
    }
    init_lo = m.init_lo;
    init_hi = m.init_hi;
    if (relax_bounds(init_lo, init_hi)) ++relaxed_rows;
}

namespace {

void check_spec(std::size_t n, const Spec& spec) {
    if (spec.bad.size() != n) throw ShapeMismatch("spec bad-state mask does not match the model");
}

RiskTable initial_table(const Spec& spec) {
    RiskTable t;
    t.horizon = 0;
    t.lo.resize(spec.bad.size());
    for (std::size_t s = 0; s < spec.bad.size(); ++s) t.lo[s] = spec.bad[s] ? 1.0 : 0.0;
    t.hi = t.lo;
    return t;
}

RiskTable step_hmm(const Hmm& m, const Spec& spec, const RiskTable& prev) {
    RiskTable next;
    next.horizon = prev.horizon + 1;
    next.lo.resize(m.num_states());
    for (StateId s = 0; s < m.num_states(); ++s) {
        if (spec.bad[s]) {
            next.lo[s] = 1.0;
            continue;
        }
        double r = 0.0;
        for (const auto& t : m.trans[s]) r += t.p * prev.lo[t.to];
        next.lo[s] = std::clamp(r, 0.0, 1.0);
    }
    next.hi = next.lo;
    return next;
}

RiskTable step_ihmm(const IntervalRows& rows, const Spec& spec, const RiskTable& prev, std::vector<double>& vals,
                    std::vector<std::uint32_t>& order) {
    RiskTable next;
    next.horizon = prev.horizon + 1;
    const std::size_t n = rows.num_states();
    next.lo.resize(n);
    next.hi.resize(n);
    for (StateId s = 0; s < n; ++s) {
        if (spec.bad[s]) {
            next.lo[s] = next.hi[s] = 1.0;
            continue;
        }
        const std::size_t b = rows.begin(s), e = rows.end(s), len = e - b;
        if (len == 0) {
            next.lo[s] = next.hi[s] = 0.0;
            continue;
        }
        vals.resize(len);
        order.resize(len);
        auto lo = std::span(rows.lo).subspan(b, len);
        auto hi = std::span(rows.hi).subspan(b, len);
        for (std::size_t j = 0; j < len; ++j) vals[j] = prev.hi[rows.target[b + j]];
        next.hi[s] = std::clamp(robust_expectation_into(vals, lo, hi, Direction::Max, order, {}), 0.0, 1.0);
        for (std::size_t j = 0; j < len; ++j) vals[j] = prev.lo[rows.target[b + j]];
        next.lo[s] = std::clamp(robust_expectation_into(vals, lo, hi, Direction::Min, order, {}), 0.0, 1.0);
    }
    return next;
}

} // namespace

std::vector<RiskTable> risk_hmm_by_horizon(const Hmm& m, const Spec& spec) {
    check_spec(m.num_states(), spec);
    std::vector<RiskTable> out{initial_table(spec)};
    for (std::size_t k = 1; k <= spec.horizon; ++k) out.push_back(step_hmm(m, spec, out.back()));
    return out;
}

RiskTable risk_hmm(const Hmm& m, const Spec& spec) { return std::move(risk_hmm_by_horizon(m, spec).back()); }

RiskTable risk_ihmm(const IntervalRows& rows, const Spec& spec) {
    check_spec(rows.num_states(), spec);
    RiskTable cur = initial_table(spec);
    std::vector<double> vals;
    std::vector<std::uint32_t> order;
    for (std::size_t k = 1; k <= spec.horizon; ++k) cur = step_ihmm(rows, spec, cur, vals, order);
    return cur;
}

RiskTable risk_ihmm(const Ihmm& m, const Spec& spec) { return risk_ihmm(IntervalRows(m), spec); }

std::vector<RiskTable> risk_ihmm_by_horizon(const Ihmm& m, const Spec& spec) {
    IntervalRows rows(m);
    check_spec(rows.num_states(), spec);
    std::vector<RiskTable> out{initial_table(spec)};
    std::vector<double> vals;
    std::vector<std::uint32_t> order;
    for (std::size_t k = 1; k <= spec.horizon; ++k) out.push_back(step_ihmm(rows, spec, out.back(), vals, order));
    return out;
}

void write_risk_csv(std::ostream& os, const RiskTable& table, std::span<const std::string> states) {
    os << "state,lo,hi\n";
    for (std::size_t s = 0; s < table.size(); ++s)
        os << states[s] << ',' << format_prob(table.lo[s]) << ',' << format_prob(table.hi[s]) << '\n';
}

} // namespace ihmon
