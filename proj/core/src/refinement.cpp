#include "ihmon/refinement.hpp"

#include "ihmon/error.hpp"
#include "ihmon/log.hpp"
#include "ihmon/model_io.hpp"
#include "ihmon/parallel.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace ihmon {

void RefinementConfig::validate() const {
    if (!(theta >= 0.0)) throw InvalidArgument("theta must be >= 0");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (trace_len < 1) throw InvalidArgument("trace_len must be >= 1");
    if (horizon < 1) throw InvalidArgument("horizon must be >= 1");
    if (n_neigh < 1) throw InvalidArgument("n_neigh must be >= 1");
    if (neighborhood_samples < 1) throw InvalidArgument("neighborhood_samples must be >= 1");
    if (states_per_prefix < 1) throw InvalidArgument("states_per_prefix must be >= 1");
    if (max_rounds < 1) throw InvalidArgument("max_rounds must be >= 1");
    if (!(tol > 0.0)) throw InvalidArgument("tol must be > 0");
}

PrefixMethod parse_prefix_method(const std::string& s) {
    if (s == "prefix") return PrefixMethod::Prefix;
    if (s == "split") return PrefixMethod::Split;
    throw InvalidArgument("unknown prefix method '" + s + "'");
}

const char* to_string(PrefixMethod m) { return m == PrefixMethod::Prefix ? "prefix" : "split"; }

void write_report_csv(std::ostream& os, const RefinementReport& report) {
    os << "round,samples_total,mean_width,n_bad,converged\n";
    for (const auto& r : report.rounds)
        os << r.round << ',' << r.samples_total << ',' << format_prob(r.mean_width) << ',' << r.n_bad << ','
           << (r.converged ? 1 : 0) << '\n';
}

ConformanceResult conformance_test(const IhmmMonitor& monitor, std::span<const Trace> traces, double theta,
                                   double tol, std::size_t workers) {
    if (traces.empty()) throw InvalidArgument("conformance_test: no traces");
    ConformanceResult out;
    out.widths.resize(traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) {
        try {
            out.widths[i] = std::max(0.0, monitor.evaluate(traces[i], tol).width());
        } catch (const NoConsistentPath&) {
            out.widths[i] = 1.0;
        }
    });
    double sum = 0.0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        sum += out.widths[i];
        if (out.widths[i] >= theta) out.bad.push_back(traces[i]);
    }
    out.mean_width = sum / static_cast<double>(traces.size());
    out.passed = out.mean_width < theta;
    return out;
}

ConformanceResult conformance_test(const Ihmm& im, std::span<const Trace> traces, const Spec& spec, double theta,
                                   double tol, std::size_t workers) {
    IhmmMonitor mon(im, spec);
    return conformance_test(mon, traces, theta, tol, workers);
}

std::vector<Trace> bad_prefixes_prefix_method(std::span<const Trace> bad, std::size_t n_neigh) {
    if (n_neigh < 1) throw InvalidArgument("n_neigh must be >= 1");
    std::vector<Trace> out;
    std::set<Trace> seen;
    for (const auto& t : bad) {
        for (std::size_t n = 0; n <= n_neigh; ++n) {
            const std::size_t len = n * t.size() / n_neigh;
            Trace p(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(len));
            if (seen.insert(p).second) out.push_back(std::move(p));
        }
    }
    return out;
}

StateId sample_belief_state(const Hmm& midpoint, const Trace& prefix, Rng& rng) {
    if (prefix.empty()) return static_cast<StateId>(rng.categorical(midpoint.init));
    try {
        const auto post = filter_hmm(midpoint, prefix);
        return static_cast<StateId>(rng.categorical(post));
    } catch (const ZeroProbabilityTrace&) {
        std::vector<StateId> cands;
        for (StateId s = 0; s < midpoint.num_states(); ++s)
            if (midpoint.emission(s, prefix.back()) > 0.0) cands.push_back(s);
        if (cands.empty()) throw NoConsistentPath("no state emits the last symbol of the prefix");
        return cands[rng.index(cands.size())];
    }
}

Trace bad_prefix_split_method(const Hmm& midpoint, const RiskTable& risk, const Trace& trace, double theta, Rng& rng) {
    try {
        const StateId s = sample_belief_state(midpoint, trace, rng);
        return risk.width(s) > theta ? trace : Trace{};
    } catch (const NoConsistentPath&) {
        return {};
    }
}

Trace bad_prefix_split_method(const Ihmm& im, const Trace& trace, const Spec& spec, double theta, Rng& rng) {
    return bad_prefix_split_method(midpoint_hmm(im), risk_ihmm(im, spec), trace, theta, rng);
}

namespace {

std::vector<Trace> fresh_traces(const Suo& suo, std::size_t m, std::size_t len, Rng& rng) {
    std::vector<Trace> out;
    out.reserve(m);
    for (std::size_t i = 0; i < m; ++i) out.push_back(suo.emit_trace(suo.sample_path(len, rng), rng));
    return out;
}

Path learner_path_from_initial(const Suo& suo, const LearnerView& view, std::size_t len, Rng& rng) {
    Path p = suo.sample_path(len, rng);
    Trace t = suo.emit_trace(p, rng);
    return view.to_learner(p, t);
}

Path learner_path_from(const Suo& suo, const LearnerView& view, StateId learner, std::size_t len, Rng& rng) {
    const StateId s = view.concretize(learner, rng);
    Path p = suo.sample_from(s, len, rng);
    Trace t = suo.emit_trace(p, rng);
    t.front() = view.space().obs[learner];
    return view.to_learner(p, t);
}

void update_with(LearnerState& st, const std::vector<Path>& restart, const std::vector<Path>& neigh,
                 std::size_t& touched) {
    LearnerState next = st;
    const std::size_t n = next.model.num_states();
    std::vector<bool> hit(n, false);
    for (const auto* batch : {&restart, &neigh}) {
        if (batch->empty()) continue;
        const auto c = count_batch(*batch, n, batch == &restart);
        for (StateId s = 0; s < n; ++s) hit[s] = hit[s] || c.visits[s] > 0;
        lui_update_in_place(next, c);
    }
    touched = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
    st = std::move(next);
}

} // namespace

RefinementResult refine_loop(const Suo& suo, const LearnerView& view, const RefinementConfig& cfg,
                             const LearnerConfig& lcfg) {
    cfg.validate();
    RefinementResult res{init_learner(view.space(), lcfg), {}};
    const Spec spec = view.spec(cfg.horizon);
    const Rng root(cfg.seed);
    Rng trace_rng = root.fork(1);
    Rng neigh_rng = root.fork(2);
    const std::size_t path_len = cfg.trace_len + cfg.horizon;
    std::vector<Trace> retained;
    std::uint64_t samples = 0;

    for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
        std::vector<Trace> curr = fresh_traces(suo, cfg.batch_size, cfg.trace_len, trace_rng);
        samples += cfg.batch_size;
        curr.insert(curr.end(), retained.begin(), retained.end());

        const IhmmMonitor mon(res.learner.model, spec);
        auto conf = conformance_test(mon, curr, cfg.theta, cfg.tol, cfg.workers);
        RoundRecord rec{round, samples, conf.mean_width, conf.bad.size(), 0, conf.passed};
        if (conf.passed || round == cfg.max_rounds) {
            res.report.rounds.push_back(rec);
            res.report.converged = conf.passed;
            break;
        }
        retained = std::move(conf.bad);

        std::vector<Trace> prefixes;
        const Hmm mid = midpoint_hmm(res.learner.model);
        if (cfg.method == PrefixMethod::Prefix) {
            prefixes = bad_prefixes_prefix_method(retained, cfg.n_neigh);
        } else {
            for (const auto& t : retained) prefixes.push_back(bad_prefix_split_method(mid, mon.risk(), t, cfg.theta, neigh_rng));
        }

        try {
            std::vector<Path> restart, neigh;
            for (const auto& pre : prefixes) {
                for (std::size_t k = 0; k < cfg.states_per_prefix; ++k) {
                    if (pre.empty()) {
                        for (std::size_t j = 0; j < cfg.neighborhood_samples; ++j)
                            restart.push_back(learner_path_from_initial(suo, view, path_len, neigh_rng));
                        continue;
                    }
                    StateId l;
                    try {
                        l = sample_belief_state(mid, pre, neigh_rng);
                    } catch (const NoConsistentPath&) {
                        continue;
                    }
                    for (std::size_t j = 0; j < cfg.neighborhood_samples; ++j)
                        neigh.push_back(learner_path_from(suo, view, l, path_len, neigh_rng));
                }
            }
            samples += restart.size() + neigh.size();
            update_with(res.learner, restart, neigh, rec.states_touched);
        } catch (const Error& e) {
            log_warning("refinement round " + std::to_string(round) + " aborted: " + e.what());
        }
        rec.samples_total = samples;
        res.report.rounds.push_back(rec);
    }
    res.report.total_samples = samples;
    return res;
}

RefinementResult plain_learning(const Suo& suo, const LearnerView& view, const RefinementConfig& cfg,
                                const LearnerConfig& lcfg) {
    cfg.validate();
    RefinementResult res{init_learner(view.space(), lcfg), {}};
    const Spec spec = view.spec(cfg.horizon);
    const Rng root(cfg.seed);
    Rng learn_rng = root.fork(3);
    Rng test_rng = root.fork(4);
    const std::size_t path_len = cfg.trace_len + cfg.horizon;
    std::uint64_t samples = 0;

    for (std::size_t round = 1; round <= cfg.max_rounds; ++round) {
        std::vector<Path> batch;
        batch.reserve(cfg.batch_size);
        for (std::size_t j = 0; j < cfg.batch_size; ++j)
            batch.push_back(learner_path_from_initial(suo, view, path_len, learn_rng));
        samples += batch.size();
        RoundRecord rec{round, samples, 0.0, 0, 0, false};
        update_with(res.learner, batch, {}, rec.states_touched);

        const auto tests = fresh_traces(suo, cfg.batch_size, cfg.trace_len, test_rng);
        const auto conf = conformance_test(res.learner.model, tests, spec, cfg.theta, cfg.tol, cfg.workers);
        rec.mean_width = conf.mean_width;
        rec.n_bad = conf.bad.size();
        rec.converged = conf.passed;
        res.report.rounds.push_back(rec);
        if (conf.passed) {
            res.report.converged = true;
            break;
        }
    }
    res.report.total_samples = samples;
    return res;
}

} // namespace ihmon
