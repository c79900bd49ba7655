#pragma once

#include "ihmon/learner.hpp"
#include "ihmon/model.hpp"
#include "ihmon/refinement.hpp"
#include "ihmon/rng.hpp"
#include "ihmon/suo.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ihmon {

enum class Labeling {
    Event,          // a bad state occurs on the sampled continuation
    RiskThreshold,  // the ideal risk reaches the threshold
};

struct LabeledTrace {
    Trace trace;
    Path path;  // full episode: trace_len + horizon states
    bool violated = false;
    double ideal_risk = 0.0;
};

/// n independent episodes of length trace_len + horizon. Throws
/// InvalidArgument for n == 0.
std::vector<LabeledTrace> make_test_set(const Suo& suo, std::size_t n, std::size_t trace_len, std::size_t horizon,
                                        Rng& rng, Labeling labeling = Labeling::Event, double risk_threshold = 0.5,
                                        std::size_t workers = 1);

/// Alarm rule of the curves: risk >= t, except that t = 1 raises no alarm.
bool alarm(double risk, double threshold);

/// count evenly spaced thresholds in [0, 1].
std::vector<double> threshold_grid(std::size_t count = 101);

struct CurvePoint {
    double threshold;
    double fnr;  // NaN when there is no violated trace
    double fpr;  // NaN when there is no safe trace
};

struct Curve {
    std::vector<CurvePoint> points;
    double auc_fnr;  // trapezoid over defined points; NaN when none is defined
    double auc_fpr;
};

/// Requires sorted thresholds in [0, 1] and equal lengths of risks and labels.
Curve fnr_fpr(std::span<const double> risks, const std::vector<bool>& violated, std::span<const double> thresholds);

/// Mean absolute deviation; throws ShapeMismatch on unequal lengths.
double distance_to_ideal(std::span<const double> ideal, std::span<const double> verdicts);

struct OverUnder {
    std::size_t over = 0;
    std::size_t under = 0;
    std::size_t equal = 0;
};

/// verdict > ideal + tol is over, verdict < ideal - tol is under.
OverUnder over_under(std::span<const double> ideal, std::span<const double> verdicts, double tol);

/// Maximum-likelihood HMM over the learner space: k(i,j)/N(i) for visited
/// states, uniform over the support otherwise; start frequencies for the
/// initial distribution.
Hmm frequentist_hmm(std::span<const Path> paths, const LearnerSpace& space);

/// Joint probability of a trace under an HMM (forward algorithm).
double trace_probability(const Hmm& m, const Trace& trace);

struct FitResult {
    double statistic = 0.0;
    std::size_t dof = 0;
    double p_value = 1.0;
    std::size_t bins = 0;
};

/// Chi-square goodness of fit of simulated length-`len` traces against the
/// ground-truth trace distribution. Bins are the traces with expected count
/// >= 5; everything else is pooled into one remainder bin.
FitResult chi_square_trace_fit(const Suo& suo, std::size_t len, std::size_t samples, Rng& rng);

struct EvalConfig {
    RefinementConfig refine;   // seed is derived per evaluation seed
    LearnerConfig learner;
    std::string ihmm_method = "refine";  // refine | plain | dataset
    std::size_t train_paths = 1000;      // dataset for the HMM baseline (and for ihmm_method = dataset)
    std::size_t train_batches = 10;
    std::size_t test_traces = 500;
    std::vector<std::uint64_t> seeds{1};
    Labeling labeling = Labeling::Event;
    double risk_threshold = 0.5;
    std::size_t grid_points = 101;
    double band = 0.0;  // over/under tolerance; 0 = twice refine.tol
    std::size_t workers = 1;
    const Ihmm* fixed_ihmm = nullptr;  // use this model instead of learning one

    void validate() const;
};

struct MethodCurve {
    std::string method;
    std::uint64_t seed;
    Curve curve;
};

struct MethodSummary {
    std::string method;
    std::uint64_t seed;
    double auc_fnr;
    double auc_fpr;
    double delta;
    OverUnder counts;
    std::size_t undefined = 0;  // traces the method could not evaluate
};

struct EvalResult {
    std::vector<MethodCurve> curves;
    std::vector<MethodSummary> rows;
};

/// Ideal monitor, iHMM monitor (upper bound) and frequentist HMM monitor on
/// a fresh test set per seed.
EvalResult run_eval(const Suo& suo, std::size_t trace_len, std::size_t horizon, const EvalConfig& cfg);

/// Columns: threshold,fnr,fpr,method,seed.
void write_curves_csv(std::ostream& os, const EvalResult& r);
/// Columns: method,seed,auc_fnr,auc_fpr,delta,over,under,equal; per method
/// one row per seed followed by "mean" and "std" rows.
void write_summary_csv(std::ostream& os, const EvalResult& r);

} // namespace ihmon
