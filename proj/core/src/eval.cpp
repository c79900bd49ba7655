#include "ihmon/eval.hpp"

#include "ihmon/error.hpp"
#include "ihmon/model_io.hpp"
#include "ihmon/monitor.hpp"
#include "ihmon/parallel.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

namespace ihmon {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

std::vector<LabeledTrace> make_test_set(const Suo& suo, std::size_t n, std::size_t trace_len, std::size_t horizon,
                                        Rng& rng, Labeling labeling, double risk_threshold, std::size_t workers) {
    if (n == 0) throw InvalidArgument("make_test_set: n must be >= 1");
    if (trace_len == 0) throw InvalidArgument("make_test_set: trace_len must be >= 1");
    std::vector<LabeledTrace> out(n);
    for (auto& lt : out) {
        lt.path = suo.sample_path(trace_len + horizon, rng);
        Path head(lt.path.begin(), lt.path.begin() + static_cast<std::ptrdiff_t>(trace_len));
        lt.trace = suo.emit_trace(head, rng);
        lt.violated = false;
        for (std::size_t t = trace_len - 1; t < lt.path.size(); ++t) lt.violated = lt.violated || suo.bad(lt.path[t]);
    }
    Spec spec = suo.spec();
    spec.horizon = horizon;
    const HmmMonitor ideal(suo.ground_truth(), spec);
    parallel_for(n, workers, [&](std::size_t i) { out[i].ideal_risk = ideal.evaluate(out[i].trace); });
    if (labeling == Labeling::RiskThreshold)
        for (auto& lt : out) lt.violated = lt.ideal_risk >= risk_threshold;
    return out;
}

bool alarm(double risk, double threshold) { return threshold < 1.0 && risk >= threshold; }

std::vector<double> threshold_grid(std::size_t count) {
    if (count < 2) throw InvalidArgument("threshold grid needs at least 2 points");
    std::vector<double> g(count);
    for (std::size_t i = 0; i < count; ++i) g[i] = static_cast<double>(i) / static_cast<double>(count - 1);
    return g;
}

namespace {

double trapezoid(std::span<const double> x, const std::vector<double>& y) {
    double area = 0.0;
    bool any = false;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (std::isnan(y[i]) || std::isnan(y[i + 1])) continue;
        area += (x[i + 1] - x[i]) * (y[i] + y[i + 1]) / 2.0;
        any = true;
    }
    return any ? area : kNaN;
}

} // namespace

Curve fnr_fpr(std::span<const double> risks, const std::vector<bool>& violated, std::span<const double> thresholds) {
    if (risks.size() != violated.size()) throw ShapeMismatch("fnr_fpr: risks and labels differ in length");
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (!(thresholds[i] >= 0.0 && thresholds[i] <= 1.0)) throw InvalidArgument("fnr_fpr: threshold outside [0, 1]");
        if (i > 0 && thresholds[i] < thresholds[i - 1]) throw InvalidArgument("fnr_fpr: thresholds not sorted");
    }
    std::size_t pos = 0;
    for (bool v : violated) pos += v;
    const std::size_t neg = violated.size() - pos;
    Curve c;
    std::vector<double> fnr, fpr;
    for (double t : thresholds) {
        std::size_t missed = 0, false_alarms = 0;
        for (std::size_t i = 0; i < risks.size(); ++i) {
            const bool a = alarm(risks[i], t);
            if (violated[i] && !a) ++missed;
            if (!violated[i] && a) ++false_alarms;
        }
        const double fn = pos ? static_cast<double>(missed) / static_cast<double>(pos) : kNaN;
        const double fp = neg ? static_cast<double>(false_alarms) / static_cast<double>(neg) : kNaN;
        c.points.push_back({t, fn, fp});
        fnr.push_back(fn);
        fpr.push_back(fp);
    }
    c.auc_fnr = trapezoid(thresholds, fnr);
    c.auc_fpr = trapezoid(thresholds, fpr);
    return c;
}

double distance_to_ideal(std::span<const double> ideal, std::span<const double> verdicts) {
    if (ideal.size() != verdicts.size()) throw ShapeMismatch("distance_to_ideal: length mismatch");
    if (ideal.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < ideal.size(); ++i) sum += std::abs(ideal[i] - verdicts[i]);
    return sum / static_cast<double>(ideal.size());
}

OverUnder over_under(std::span<const double> ideal, std::span<const double> verdicts, double tol) {
    if (ideal.size() != verdicts.size()) throw ShapeMismatch("over_under: length mismatch");
    OverUnder c;
    for (std::size_t i = 0; i < ideal.size(); ++i) {
        if (verdicts[i] > ideal[i] + tol)
            ++c.over;
        else if (verdicts[i] < ideal[i] - tol)
            ++c.under;
        else
            ++c.equal;
    }
    return c;
}

Hmm frequentist_hmm(std::span<const Path> paths, const LearnerSpace& space) {
    const std::size_t n = space.num_states();
    const CountTable c = count_batch(paths, n);
    Hmm m;
    m.states = space.states;
    m.symbols = space.symbols;
    m.init.assign(n, 0.0);
    m.trans.assign(n, {});
    m.obs.assign(n, {});
    for (StateId s = 0; s < n; ++s) {
        m.obs[s] = {{space.obs[s], 1.0}};
        const auto& sup = space.successors[s];
        if (c.visits[s] == 0) {
            for (StateId t : sup) m.trans[s].push_back({t, 1.0 / static_cast<double>(sup.size())});
            continue;
        }
        for (const auto& [t, k] : c.succ[s])
            m.trans[s].push_back({t, static_cast<double>(k) / static_cast<double>(c.visits[s])});
    }
    if (c.paths > 0) {
        for (StateId s = 0; s < n; ++s) m.init[s] = static_cast<double>(c.starts[s]) / static_cast<double>(c.paths);
    } else {
        for (StateId s : space.initial) m.init[s] = 1.0 / static_cast<double>(space.initial.size());
    }
    m.sort_rows();
    return m;
}

double trace_probability(const Hmm& m, const Trace& trace) {
    if (trace.empty()) return 1.0;
    const std::size_t n = m.num_states();
    std::vector<double> a(n), b(n);
    for (StateId s = 0; s < n; ++s) a[s] = m.init[s] * m.emission(s, trace[0]);
    for (std::size_t t = 1; t < trace.size(); ++t) {
        std::fill(b.begin(), b.end(), 0.0);
        for (StateId s = 0; s < n; ++s) {
            if (a[s] == 0.0) continue;
            for (const auto& tr : m.trans[s]) b[tr.to] += a[s] * tr.p;
        }
        for (StateId s = 0; s < n; ++s) b[s] *= m.emission(s, trace[t]);
        a.swap(b);
    }
    double sum = 0.0;
    for (double x : a) sum += x;
    return sum;
}

namespace {

// Depth-first expansion of the trace tree, pruning prefixes whose expected
// count falls below the bin threshold.
struct TraceBinner {
    const Hmm& m;
    std::size_t len;
    double min_prob;
    std::vector<std::pair<Trace, double>> bins;
    Trace cur;

    void expand(const std::vector<double>& alpha, double mass) {
        if (cur.size() == len) {
            bins.push_back({cur, mass});
            return;
        }
        std::map<SymbolId, std::vector<double>> next;
        const std::size_t n = m.num_states();
        if (cur.empty()) {
            for (StateId s = 0; s < n; ++s) {
                if (m.init[s] <= 0.0) continue;
                for (const auto& e : m.obs[s]) {
                    auto& v = next[e.symbol];
                    if (v.empty()) v.assign(n, 0.0);
                    v[s] += m.init[s] * e.p;
                }
            }
        } else {
            for (StateId s = 0; s < n; ++s) {
                if (alpha[s] <= 0.0) continue;
                for (const auto& t : m.trans[s])
                    for (const auto& e : m.obs[t.to]) {
                        auto& v = next[e.symbol];
                        if (v.empty()) v.assign(n, 0.0);
                        v[t.to] += alpha[s] * t.p * e.p;
                    }
            }
        }
        for (auto& [z, v] : next) {
            double p = 0.0;
            for (double x : v) p += x;
            if (p < min_prob) continue;
            cur.push_back(z);
            expand(v, p);
            cur.pop_back();
        }
    }
};

} // namespace

FitResult chi_square_trace_fit(const Suo& suo, std::size_t len, std::size_t samples, Rng& rng) {
    if (samples == 0 || len == 0) throw InvalidArgument("chi_square_trace_fit: empty sample");
    const double N = static_cast<double>(samples);
    TraceBinner binner{suo.ground_truth(), len, 5.0 / N, {}, {}};
    binner.expand({}, 1.0);
    std::map<Trace, std::uint64_t> observed;
    for (std::size_t i = 0; i < samples; ++i) ++observed[suo.emit_trace(suo.sample_path(len, rng), rng)];

    FitResult r;
    double covered_p = 0.0, covered_obs = 0.0;
    for (const auto& [t, p] : binner.bins) {
        const double e = N * p;
        auto it = observed.find(t);
        const double o = it == observed.end() ? 0.0 : static_cast<double>(it->second);
        r.statistic += (o - e) * (o - e) / e;
        covered_p += p;
        covered_obs += o;
        ++r.bins;
    }
    const double rest_e = N * std::max(0.0, 1.0 - covered_p);
    const double rest_o = N - covered_obs;
    if (rest_e > 1e-9 * N) {
        r.statistic += (rest_o - rest_e) * (rest_o - rest_e) / rest_e;
        ++r.bins;
    } else if (rest_o > 0.0) {
        r.statistic = std::numeric_limits<double>::infinity();
    }
    r.dof = r.bins > 1 ? r.bins - 1 : 1;
    if (std::isinf(r.statistic)) {
        r.p_value = 0.0;
    } else {
        boost::math::chi_squared dist(static_cast<double>(r.dof));
        r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
    }
    return r;
}

void EvalConfig::validate() const {
    refine.validate();
    learner.validate();
    if (ihmm_method != "refine" && ihmm_method != "plain" && ihmm_method != "dataset")
        throw InvalidArgument("ihmm_method must be refine, plain or dataset");
    if (train_paths < 1) throw InvalidArgument("train_paths must be >= 1");
    if (train_batches < 1) throw InvalidArgument("train_batches must be >= 1");
    if (test_traces < 1) throw InvalidArgument("test_traces must be >= 1");
    if (seeds.empty()) throw InvalidArgument("at least one seed is required");
    if (grid_points < 2) throw InvalidArgument("grid_points must be >= 2");
    if (!(band >= 0.0)) throw InvalidArgument("band must be >= 0");
}

namespace {

MethodSummary summarize(const std::string& method, std::uint64_t seed, const std::vector<double>& ideal,
                        const std::vector<double>& verdict, const std::vector<bool>& labels,
                        std::span<const double> grid, double band, std::vector<MethodCurve>& curves) {
    std::vector<double> id, v;
    std::vector<bool> lab;
    std::size_t undefined = 0;
    for (std::size_t i = 0; i < verdict.size(); ++i) {
        if (std::isnan(verdict[i])) {
            ++undefined;
            continue;
        }
        id.push_back(ideal[i]);
        v.push_back(verdict[i]);
        lab.push_back(labels[i]);
    }
    Curve c = fnr_fpr(v, lab, grid);
    MethodSummary s{method, seed, c.auc_fnr, c.auc_fpr, distance_to_ideal(id, v), over_under(id, v, band), undefined};
    curves.push_back({method, seed, std::move(c)});
    return s;
}

} // namespace

EvalResult run_eval(const Suo& suo, std::size_t trace_len, std::size_t horizon, const EvalConfig& cfg) {
    cfg.validate();
    const LearnerView view(suo);
    const Spec lspec = view.spec(horizon);
    const auto grid = threshold_grid(cfg.grid_points);
    const double band = cfg.band > 0.0 ? cfg.band : 2.0 * cfg.refine.tol;
    EvalResult out;

    for (std::uint64_t seed : cfg.seeds) {
        const Rng root(seed);
        Rng test_rng = root.fork(10);
        Rng train_rng = root.fork(11);
        const auto tests = make_test_set(suo, cfg.test_traces, trace_len, horizon, test_rng, cfg.labeling,
                                         cfg.risk_threshold, cfg.workers);

        std::vector<Path> train;
        train.reserve(cfg.train_paths);
        for (std::size_t i = 0; i < cfg.train_paths; ++i) {
            Path p = suo.sample_path(trace_len + horizon, train_rng);
            Trace t = suo.emit_trace(p, train_rng);
            train.push_back(view.to_learner(p, t));
        }
        const Hmm hmm = frequentist_hmm(train, view.space());

        Ihmm learned;
        const Ihmm* im = cfg.fixed_ihmm;
        if (!im) {
            RefinementConfig rc = cfg.refine;
            rc.trace_len = trace_len;
            rc.horizon = horizon;
            rc.seed = root.fork(12).seed();
            rc.workers = cfg.workers;
            if (cfg.ihmm_method == "refine")
                learned = refine_loop(suo, view, rc, cfg.learner).learner.model;
            else if (cfg.ihmm_method == "plain")
                learned = plain_learning(suo, view, rc, cfg.learner).learner.model;
            else
                learned = learn_dataset(train, view.space(), cfg.learner, cfg.train_batches);
            im = &learned;
        }

        const std::size_t n = tests.size();
        std::vector<double> ideal(n), ihmm_v(n), hmm_v(n);
        std::vector<bool> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            ideal[i] = tests[i].ideal_risk;
            labels[i] = tests[i].violated;
        }
        const IhmmMonitor imon(*im, lspec);
        const HmmMonitor hmon(hmm, lspec);
        parallel_for(n, cfg.workers, [&](std::size_t i) {
            try {
                ihmm_v[i] = imon.evaluate(tests[i].trace, cfg.refine.tol).hi;
            } catch (const NoConsistentPath&) {
                ihmm_v[i] = kNaN;
            }
            try {
                hmm_v[i] = hmon.evaluate(tests[i].trace);
            } catch (const ZeroProbabilityTrace&) {
                hmm_v[i] = kNaN;
            }
        });
        out.rows.push_back(summarize("ideal", seed, ideal, ideal, labels, grid, band, out.curves));
        out.rows.push_back(summarize("ihmm", seed, ideal, ihmm_v, labels, grid, band, out.curves));
        out.rows.push_back(summarize("hmm", seed, ideal, hmm_v, labels, grid, band, out.curves));
    }
    return out;
}

void write_curves_csv(std::ostream& os, const EvalResult& r) {
    os << "threshold,fnr,fpr,method,seed\n";
    for (const auto& mc : r.curves)
        for (const auto& p : mc.curve.points)
            os << format_prob(p.threshold) << ',' << format_prob(p.fnr) << ',' << format_prob(p.fpr) << ','
               << mc.method << ',' << mc.seed << '\n';
}

void write_summary_csv(std::ostream& os, const EvalResult& r) {
    os << "method,seed,auc_fnr,auc_fpr,delta,over,under,equal\n";
    std::vector<std::string> methods;
    for (const auto& row : r.rows)
        if (std::find(methods.begin(), methods.end(), row.method) == methods.end()) methods.push_back(row.method);
    for (const auto& m : methods) {
        std::vector<std::vector<double>> cols(6);
        for (const auto& row : r.rows) {
            if (row.method != m) continue;
            os << row.method << ',' << row.seed << ',' << format_prob(row.auc_fnr) << ',' << format_prob(row.auc_fpr)
               << ',' << format_prob(row.delta) << ',' << row.counts.over << ',' << row.counts.under << ','
               << row.counts.equal << '\n';
            const double vals[6] = {row.auc_fnr, row.auc_fpr, row.delta, static_cast<double>(row.counts.over),
                                    static_cast<double>(row.counts.under), static_cast<double>(row.counts.equal)};
            for (int k = 0; k < 6; ++k) cols[k].push_back(vals[k]);
        }
        std::vector<double> mean(6), sd(6);
        for (int k = 0; k < 6; ++k) {
            const auto& c = cols[k];
            double s = 0.0;
            for (double x : c) s += x;
            mean[k] = s / static_cast<double>(c.size());
            double q = 0.0;
            for (double x : c) q += (x - mean[k]) * (x - mean[k]);
            sd[k] = c.size() > 1 ? std::sqrt(q / static_cast<double>(c.size() - 1)) : 0.0;
        }
        for (const auto* tag : {"mean", "std"}) {
            const auto& v = std::string(tag) == "mean" ? mean : sd;
            os << m << ',' << tag;
            for (double x : v) os << ',' << format_prob(x);
            os << '\n';
        }
    }
}

} // namespace ihmon
