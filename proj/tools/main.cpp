#include "ihmon/error.hpp"
#include "ihmon/eval.hpp"
#include "ihmon/learner.hpp"
#include "ihmon/model.hpp"
#include "ihmon/model_io.hpp"
#include "ihmon/monitor.hpp"
#include "ihmon/refinement.hpp"
#include "ihmon/suo.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace ihmon;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;
constexpr int kExitData = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BenchOpts {
    std::string config_file;
    std::string name;
    std::vector<std::string> params;
    std::string board;
    bool coarse = false;
    std::size_t trace_len = 0;
    std::size_t horizon = 0;

    void add(CLI::App* app) {
        app->add_option("--benchmark_config", config_file, "Benchmark file written by 'gen'");
        app->add_option("--benchmark", name, "Benchmark name (unlikely, snl, evade, airport)");
        app->add_option("--param", params, "Benchmark parameter key=value (repeatable)");
        app->add_option("--board", board, "Snakes-and-ladders board file");
        app->add_flag("--coarse", coarse, "Coarse learner abstraction");
        app->add_option("--trace_len", trace_len, "Trace length (0 = benchmark default)");
        app->add_option("--horizon", horizon, "Monitoring horizon (0 = benchmark default)");
    }

    BenchmarkConfig resolve() const {
        BenchmarkConfig c;
        if (!config_file.empty()) c = BenchmarkConfig::load_file(config_file);
        if (!name.empty()) c.benchmark = name;
        if (c.benchmark.empty()) throw UsageError("no benchmark given (--benchmark or --benchmark_config)");
        for (const auto& kv : params) {
            auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got '" + kv + "'");
            try {
                std::size_t used = 0;
                const std::string val = kv.substr(eq + 1);
                c.params[kv.substr(0, eq)] = std::stod(val, &used);
                if (used != val.size()) throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                throw UsageError("--param value is not a number: '" + kv + "'");
            }
        }
        if (!board.empty()) c.board_file = board;
        if (coarse) c.coarse = true;
        if (trace_len) c.trace_len = trace_len;
        if (horizon) c.horizon = horizon;
        return c;
    }
};

struct LearnOpts {
    RefinementConfig rc;
    LearnerConfig lc;
    std::string prefix_method = "prefix";
    std::string method = "refine";

    LearnOpts() { rc.workers = 0; }

    void add(CLI::App* app, bool with_method) {
        app->add_option("--theta", rc.theta, "Stopping threshold on the mean risk-interval width");
        app->add_option("--batch_size", rc.batch_size, "Fresh traces (or paths) per round");
        app->add_option("--prefix_method", prefix_method, "Neighborhood prefix rule")->check(CLI::IsMember({"prefix", "split"}));
        app->add_option("--n_neigh", rc.n_neigh, "Number of prefix fractions");
        app->add_option("--neighborhood_samples", rc.neighborhood_samples, "Paths per sampled state");
        app->add_option("--states_per_prefix", rc.states_per_prefix, "Belief states sampled per prefix");
        app->add_option("--max_rounds", rc.max_rounds, "Round limit");
        app->add_option("--seed", rc.seed, "Random seed");
        app->add_option("--tol", rc.tol, "Monitor bracket tolerance");
        app->add_option("--epsilon", lc.epsilon, "Initial interval [epsilon, 1 - epsilon]");
        app->add_option("--n_lo", lc.n_lo0, "Initial lower strength");
        app->add_option("--n_hi", lc.n_hi0, "Initial upper strength");
        app->add_option("--workers", rc.workers, "Worker threads (0 = available parallelism)");
        if (with_method)
            app->add_option("--method", method, "Learning procedure")->check(CLI::IsMember({"refine", "plain", "dataset"}));
    }

    void finish() {
        rc.method = parse_prefix_method(prefix_method);
    }
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write " + path);
    return out;
}

void require_ok(const std::vector<Violation>& v, const std::string& what) {
    if (v.empty()) return;
    std::string msg = what + " is invalid:";
    for (const auto& x : v) msg += " [" + x.where + "] " + x.message + ";";
    throw ParseError(msg);
}

void emit_violations(const std::vector<Violation>& v, const std::vector<std::string>& states) {
    for (const auto& x : v) {
        std::cout << x.where;
        if (x.state && *x.state < states.size()) std::cout << " " << states[*x.state];
        std::cout << ": " << x.message << '\n';
    }
}

// ------------------------------------------------------------------ gen

struct GenCmd {
    BenchOpts bench;
    std::string model_out;
    std::string config_out;
    std::string dataset_out;
    std::size_t paths = 1000;
    std::uint64_t seed = 1;

    void add(CLI::App* app) {
        bench.add(app);
        app->add_option("--model", model_out, "Ground-truth model output")->required();
        app->add_option("--config", config_out, "Benchmark file output");
        app->add_option("--dataset", dataset_out, "Also write sampled learner paths here");
        app->add_option("--paths", paths, "Number of dataset paths");
        app->add_option("--seed", seed, "Dataset seed");
    }

    int run() {
        BenchmarkConfig cfg = bench.resolve();
        auto suo = make_benchmark(cfg);
        Spec spec = suo->spec();
        spec.horizon = cfg.horizon;
        if (!dataset_out.empty() && paths == 0) throw UsageError("--paths must be >= 1");

        std::vector<Path> data;
        LearnerView view(*suo);
        if (!dataset_out.empty()) {
            Rng rng(seed);
            for (std::size_t i = 0; i < paths; ++i) {
                Path p = suo->sample_path(cfg.trace_len + cfg.horizon, rng);
                Trace t = suo->emit_trace(p, rng);
                data.push_back(view.to_learner(p, t));
            }
        }
        {
            auto out = open_out(model_out);
            save_model(out, suo->ground_truth(), &spec);
        }
        if (!config_out.empty()) {
            auto out = open_out(config_out);
            cfg.save(out);
        }
        if (!dataset_out.empty()) {
            auto out = open_out(dataset_out);
            save_paths(out, data, view.space().states);
        }
        std::cerr << suo->name() << ": " << suo->ground_truth().num_states() << " states, "
                  << suo->ground_truth().num_symbols() << " symbols, learner space " << view.num_states() << " states\n";
        return kExitOk;
    }
};

// ---------------------------------------------------------------- learn

struct LearnCmd {
    BenchOpts bench;
    LearnOpts learn;
    std::string dataset;
    std::size_t rounds = 10;
    std::string model_out;
    std::string report_out;

    void add(CLI::App* app) {
        bench.add(app);
        learn.add(app, true);
        app->add_option("--dataset", dataset, "Path dataset for --method dataset");
        app->add_option("--rounds", rounds, "Batches for --method dataset");
        app->add_option("--out", model_out, "Learned iHMM output")->required();
        app->add_option("--report", report_out, "Per-round report CSV");
    }

    int run() {
        learn.finish();
        BenchmarkConfig cfg = bench.resolve();
        auto suo = make_benchmark(cfg);
        learn.rc.trace_len = cfg.trace_len;
        learn.rc.horizon = cfg.horizon;
        learn.rc.validate();
        learn.lc.validate();
        LearnerView view(*suo);
        const Spec spec = view.spec(cfg.horizon);

        Ihmm model;
        std::optional<RefinementReport> report;
        if (learn.method == "dataset") {
            if (dataset.empty()) throw UsageError("--method dataset needs --dataset");
            if (rounds == 0) throw UsageError("--rounds must be >= 1");
            std::ifstream in(dataset);
            if (!in) throw ParseError("cannot open " + dataset);
            const auto paths = load_paths(in, view.space().states);
            if (paths.empty()) throw ParseError("dataset " + dataset + " has no paths");
            model = learn_dataset(paths, view.space(), learn.lc, rounds);
        } else {
            auto res = learn.method == "refine" ? refine_loop(*suo, view, learn.rc, learn.lc)
                                                : plain_learning(*suo, view, learn.rc, learn.lc);
            model = std::move(res.learner.model);
            report = std::move(res.report);
        }
        {
            auto out = open_out(model_out);
            save_model(out, model, &spec);
        }
        if (report && !report_out.empty()) {
            auto out = open_out(report_out);
            write_report_csv(out, *report);
        }
        if (report) {
            const auto& last = report->rounds.back();
            std::cerr << "rounds " << report->rounds.size() << ", samples " << report->total_samples
                      << ", mean width " << last.mean_width << (report->converged ? ", converged\n" : ", not converged\n");
            if (!report->converged) return kExitNotConverged;
        }
        return kExitOk;
    }
};

// -------------------------------------------------------------- monitor

struct MonitorCmd {
    std::string model_file;
    double threshold = 0.5;
    double tol = kDefaultMonitorTol;
    std::string format = "csv";
    std::size_t horizon = 0;
    std::vector<std::string> bad;
    std::string input;

    void add(CLI::App* app) {
        app->add_option("--model", model_file, "HMM or iHMM model file")->required();
        app->add_option("--threshold", threshold, "Alarm when the upper risk bound reaches this value")->required();
        app->add_option("--tol", tol, "Bracket tolerance of the interval monitor");
        app->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "jsonlines"}));
        app->add_option("--horizon", horizon, "Override the model's horizon");
        app->add_option("--bad", bad, "Override the model's bad states by name");
        app->add_option("--input", input, "Trace file (default: standard input)");
    }

    int run() {
        if (!(tol > 0.0)) throw UsageError("--tol must be > 0");
        const ModelDocument doc = load_model_file(model_file);
        const auto& states = doc.is_hmm() ? doc.hmm().states : doc.ihmm().states;
        const auto& symbols = doc.is_hmm() ? doc.hmm().symbols : doc.ihmm().symbols;
        Spec spec;
        if (!bad.empty()) {
            spec = Spec::from_names(states, bad, horizon ? horizon : (doc.spec ? doc.spec->horizon : 1));
        } else if (doc.spec) {
            spec = *doc.spec;
            if (horizon) spec.horizon = horizon;
        } else {
            throw UsageError("model has no spec; pass --bad (and --horizon)");
        }
        if (doc.is_hmm()) {
            require_ok(validate_hmm(doc.hmm()), "model");
        } else {
            require_ok(validate_ihmm(doc.ihmm(), false), "model");
        }

        std::optional<HmmMonitor> hmon;
        std::optional<IhmmMonitor> imon;
        if (doc.is_hmm())
            hmon.emplace(doc.hmm(), spec);
        else
            imon.emplace(doc.ihmm(), spec);

        std::ifstream file;
        if (!input.empty()) {
            file.open(input);
            if (!file) throw ParseError("cannot open " + input);
        }
        std::istream& in = input.empty() ? std::cin : file;
        std::string line;
        std::size_t lineno = 0;
        char buf[128];
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            try {
                const Trace tr = parse_trace(line, symbols);
                Verdict v;
                if (hmon) {
                    v.lo = v.hi = hmon->evaluate(tr);
                } else {
                    v = imon->evaluate(tr, tol);
                }
                const int a = v.hi >= threshold ? 1 : 0;
                if (format == "csv")
                    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%d\n", v.lo, v.hi, a);
                else
                    std::snprintf(buf, sizeof buf, "{\"lo\":%.17g,\"hi\":%.17g,\"alarm\":%d}\n", v.lo, v.hi, a);
                std::cout << buf << std::flush;
            } catch (const Error& e) {
                std::cerr << "line " << lineno << ": " << e.what() << '\n';
            }
        }
        return kExitOk;
    }
};

// ----------------------------------------------------------------- eval

struct EvalCmd {
    BenchOpts bench;
    LearnOpts learn;
    EvalConfig ec;
    std::string ihmm_model;
    std::string seeds = "1";
    std::string labeling = "event";
    std::string curves_out;
    std::string summary_out;

    void add(CLI::App* app) {
        bench.add(app);
        learn.add(app, true);
        app->add_option("--ihmm_model", ihmm_model, "Evaluate this iHMM instead of learning one");
        app->add_option("--train_paths", ec.train_paths, "Training paths for the HMM baseline and --method dataset");
        app->add_option("--train_batches", ec.train_batches, "Batches for --method dataset");
        app->add_option("--test_traces", ec.test_traces, "Test traces per seed");
        app->add_option("--seeds", seeds, "Comma-separated seeds");
        app->add_option("--labeling", labeling, "Ground-truth label rule")->check(CLI::IsMember({"event", "risk"}));
        app->add_option("--risk_threshold", ec.risk_threshold, "Threshold for --labeling risk");
        app->add_option("--grid_points", ec.grid_points, "Number of alarm thresholds");
        app->add_option("--band", ec.band, "Over/under tolerance (0 = twice --tol)");
        app->add_option("--curves", curves_out, "Curve CSV output")->required();
        app->add_option("--summary", summary_out, "Summary CSV output")->required();
    }

    int run() {
        learn.finish();
        BenchmarkConfig cfg = bench.resolve();
        auto suo = make_benchmark(cfg);
        ec.refine = learn.rc;
        ec.refine.trace_len = cfg.trace_len;
        ec.refine.horizon = cfg.horizon;
        ec.learner = learn.lc;
        ec.ihmm_method = learn.method;
        ec.workers = learn.rc.workers;
        ec.labeling = labeling == "risk" ? Labeling::RiskThreshold : Labeling::Event;
        ec.seeds.clear();
        std::stringstream ss(seeds);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                ec.seeds.push_back(std::stoull(item, &used));
                if (used != item.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw UsageError("--seeds expects comma-separated integers");
            }
        }
        ec.validate();

        std::optional<ModelDocument> doc;
        if (!ihmm_model.empty()) {
            doc = load_model_file(ihmm_model);
            if (doc->is_hmm()) throw ParseError(ihmm_model + " is not an iHMM");
            require_ok(validate_ihmm(doc->ihmm(), false), "iHMM");
            LearnerView view(*suo);
            if (doc->ihmm().states != view.space().states || doc->ihmm().symbols != view.space().symbols)
                throw ParseError(ihmm_model + " does not match the benchmark's learner space");
            ec.fixed_ihmm = &doc->ihmm();
        }

        const EvalResult res = run_eval(*suo, cfg.trace_len, cfg.horizon, ec);
        std::ostringstream curves, summary;
        write_curves_csv(curves, res);
        write_summary_csv(summary, res);
        open_out(curves_out) << curves.str();
        open_out(summary_out) << summary.str();
        return kExitOk;
    }
};

// ------------------------------------------------------------- validate

struct ValidateCmd {
    std::string model_file;
    std::string dataset;
    std::string bench_file;

    void add(CLI::App* app) {
        app->add_option("--model", model_file, "Model file to check");
        app->add_option("--dataset", dataset, "Path dataset to check against --model");
        app->add_option("--benchmark_config", bench_file, "Benchmark file to check");
    }

    int run() {
        if (model_file.empty() && bench_file.empty()) throw UsageError("nothing to validate (--model or --benchmark_config)");
        if (!dataset.empty() && model_file.empty()) throw UsageError("--dataset needs --model");
        bool ok = true;
        if (!bench_file.empty()) {
            BenchmarkConfig cfg = BenchmarkConfig::load_file(bench_file);
            auto suo = make_benchmark(cfg);
            std::cout << bench_file << ": " << suo->name() << " ok\n";
        }
        if (!model_file.empty()) {
            const ModelDocument doc = load_model_file(model_file);
            std::vector<Violation> v;
            const std::vector<std::string>* states;
            if (doc.is_hmm()) {
                v = validate_hmm(doc.hmm());
                if (doc.spec) {
                    auto s = validate_spec(doc.hmm(), *doc.spec);
                    v.insert(v.end(), s.begin(), s.end());
                }
                states = &doc.hmm().states;
            } else {
                v = validate_ihmm(doc.ihmm(), false);
                const std::size_t infeasible = validate_ihmm(doc.ihmm(), true).size() - v.size();
                if (infeasible > 0)
                    std::cout << model_file << ": " << infeasible
                              << " row(s) with an empty refinement set, relaxed when monitored\n";
                states = &doc.ihmm().states;
            }
            emit_violations(v, *states);
            ok = ok && v.empty();
            if (!dataset.empty()) {
                std::ifstream in(dataset);
                if (!in) throw ParseError("cannot open " + dataset);
                const auto paths = load_paths(in, *states);
                std::cout << dataset << ": " << paths.size() << " paths ok\n";
            }
            std::cout << model_file << ": " << (v.empty() ? "ok" : std::to_string(v.size()) + " violation(s)") << '\n';
        }
        return ok ? kExitOk : kExitData;
    }
};

// Splices `--config_file FILE` entries into the argument list as long flags.
// Flags already present on the command line win.
std::vector<std::string> merge_config(int argc, char** argv, const std::vector<std::string>& with_config) {
    std::vector<std::string> args(argv, argv + argc);
    if (args.size() < 2) return args;
    if (std::find(with_config.begin(), with_config.end(), args[1]) == with_config.end()) return args;
    std::string file;
    std::size_t at = 0;
    for (std::size_t k = 2; k < args.size(); ++k) {
        if (args[k] == "--config_file" && k + 1 < args.size()) {
            file = args[k + 1];
            at = k;
            break;
        }
        if (args[k].rfind("--config_file=", 0) == 0) {
            file = args[k].substr(14);
            at = k;
            break;
        }
    }
    if (file.empty()) return args;
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open config file " + file);
    const auto items = CLI::ConfigTOML().from_config(in);
    auto given = [&](const std::string& name) {
        const std::string flag = "--" + name;
        for (const auto& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };
    std::vector<std::string> extra;
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == args[1]))
            throw UsageError("config section " + item.fullname() + " does not belong to " + args[1]);
        if (given(item.name)) continue;
        if (item.inputs.empty()) {
            extra.push_back("--" + item.name);
            continue;
        }
        for (const auto& v : item.inputs) extra.push_back("--" + item.name + "=" + v);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(at),
               args.begin() + static_cast<std::ptrdiff_t>(std::min(at + (args[at] == "--config_file" ? 2 : 1), args.size())));
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interval hidden Markov model monitors: learning, monitoring and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "ihmon 0.1.0");

    GenCmd gen;
    LearnCmd learn;
    MonitorCmd monitor;
    EvalCmd eval;
    ValidateCmd validate;

    struct Entry {
        CLI::App* app;
        std::function<int()> run;
    };
    std::vector<Entry> cmds;
    auto sub = [&](const char* name, const char* help, auto& cmd, bool config) {
        CLI::App* s = app.add_subcommand(name, help);
        cmd.add(s);
        if (config) {
            s->add_option("--config_file", "Key-value configuration; command-line flags take precedence")->type_name("FILE");
        }
        cmds.push_back({s, [&cmd] { return cmd.run(); }});
    };
    sub("gen", "Write a benchmark's ground-truth model and benchmark file", gen, true);
    sub("learn", "Learn an iHMM by refinement, plain batches or from a dataset", learn, true);
    sub("monitor", "Risk intervals for traces read line by line", monitor, false);
    sub("eval", "FNR/FPR curves and distance to the ideal monitor", eval, true);
    sub("validate", "Check model, dataset and benchmark files", validate, false);

    std::vector<std::string> args;
    try {
        args = merge_config(argc, argv, {"gen", "learn", "eval"});
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    try {
        for (auto& c : cmds)
            if (c.app->parsed()) return c.run();
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
