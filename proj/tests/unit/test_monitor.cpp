#include "ihmon/error.hpp"
#include "ihmon/monitor.hpp"

#include "fixtures.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace ihmon;

namespace {

Trace fig2a_trace(std::initializer_list<const char*> names) {
    Trace t;
    const Ihmm im = fixtures::fig2a();
    for (const char* n : names) t.push_back(*im.find_symbol(n));
    return t;
}

} // namespace

TEST(Filter, Fig2aMidpointBelief) {
    const Hmm mid = midpoint_hmm(fixtures::fig2a());
    const auto b = filter_hmm(mid, fig2a_trace({"blue", "orange"}));
    EXPECT_NEAR(b[0], 0.0, 1e-15);
    EXPECT_NEAR(b[1], 0.8, 1e-15);
    EXPECT_NEAR(b[2], 0.2, 1e-15);
}

TEST(Filter, EmptyTraceIsInitial) {
    const Hmm m = fixtures::three_state();
    EXPECT_EQ(filter_hmm(m, {}), m.init);
}

TEST(Filter, ZeroProbabilityThrows) {
    const Hmm m = fixtures::fig2a_refined(0.2);
    EXPECT_THROW(filter_hmm(m, fig2a_trace({"orange"})), ZeroProbabilityTrace);
    EXPECT_THROW(ideal_monitor(m, fig2a_trace({"blue", "blue"}), fixtures::fig2a_spec()), ZeroProbabilityTrace);
}

TEST(IdealMonitor, Fig2aRefinement) {
    const Hmm m = fixtures::fig2a_refined(0.25);
    EXPECT_NEAR(ideal_monitor(m, fig2a_trace({"blue"}), fixtures::fig2a_spec()), 0.25, 1e-15);
    EXPECT_NEAR(ideal_monitor(m, fig2a_trace({"blue", "orange"}), fixtures::fig2a_spec()), 0.25, 1e-15);
}

TEST(IdealMonitor, AgreesWithPathEnumeration) {
    Rng rng(31);
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
        const auto c = oracle::random_case(rng, 5, 2, 0.3, 3);
        const HmmMonitor mon(c.truth, c.spec);
        for (int j = 0; j < 5; ++j) {
            const Trace t = oracle::sample_trace(c.truth, 1 + rng.index(5), rng);
            EXPECT_NEAR(mon.evaluate(t), oracle::path_ideal(c.truth, t, c.spec), 1e-12);
            ++checked;
        }
    }
    EXPECT_EQ(checked, 1000);
}

TEST(IhmmMonitor, Fig2aTwoSymbols) {
    const Verdict v = monitor_ihmm(fixtures::fig2a(), fig2a_trace({"blue", "orange"}), fixtures::fig2a_spec());
    EXPECT_NEAR(v.lo, 0.1, 1e-6);
    EXPECT_NEAR(v.hi, 0.3, 1e-6);
    EXPECT_LE(v.tol, 1e-6);
}

TEST(IhmmMonitor, Fig2aThreeSymbolsMatchesOracle) {
    const Ihmm im = fixtures::fig2a();
    const Trace t = fig2a_trace({"blue", "orange", "orange"});
    const Verdict v = monitor_ihmm(im, t, fixtures::fig2a_spec());
    EXPECT_NEAR(v.lo, oracle::conditional_risk(im, t, fixtures::fig2a_spec(), false), 1e-6);
    EXPECT_NEAR(v.hi, oracle::conditional_risk(im, t, fixtures::fig2a_spec(), true), 1e-6);
    EXPECT_NEAR(v.lo, 0.1 / 0.55, 1e-6);
    EXPECT_NEAR(v.hi, 0.3 / 0.65, 1e-6);
}

TEST(IhmmMonitor, RandomModelsAgainstOracle) {
    Rng rng(41);
    for (int k = 0; k < 100; ++k) {
        const auto c = oracle::random_case(rng, 4, 2, 0.4, 3);
        const IhmmMonitor mon(c.im, c.spec);
        for (int j = 0; j < 3; ++j) {
            const Trace t = oracle::sample_trace(c.truth, 1 + rng.index(4), rng);
            const Verdict v = mon.evaluate(t);
            EXPECT_NEAR(v.lo, oracle::conditional_risk(c.im, t, c.spec, false), 1e-6);
            EXPECT_NEAR(v.hi, oracle::conditional_risk(c.im, t, c.spec, true), 1e-6);
            const double ideal = oracle::path_ideal(c.truth, t, c.spec);
            EXPECT_LE(v.lo, ideal + 1e-6);
            EXPECT_GE(v.hi, ideal - 1e-6);
        }
    }
}

TEST(IhmmMonitor, PointModelCollapsesToIdeal) {
    Rng rng(51);
    for (int k = 0; k < 50; ++k) {
        const auto c = oracle::random_case(rng, 5, 2, 0.3, 3);
        const Ihmm p = point_ihmm(c.truth);
        const IhmmMonitor mon(p, c.spec);
        const HmmMonitor ideal(c.truth, c.spec);
        const Trace t = oracle::sample_trace(c.truth, 1 + rng.index(6), rng);
        const Verdict v = mon.evaluate(t);
        const double r = ideal.evaluate(t);
        EXPECT_NEAR(v.lo, r, 2e-6);
        EXPECT_NEAR(v.hi, r, 2e-6);
    }
}

TEST(IhmmMonitor, NoConsistentPath) {
    const Ihmm im = fixtures::fig2a();
    EXPECT_THROW(monitor_ihmm(im, fig2a_trace({"orange"}), fixtures::fig2a_spec()), NoConsistentPath);
    EXPECT_THROW(monitor_ihmm(im, fig2a_trace({"blue", "blue"}), fixtures::fig2a_spec()), NoConsistentPath);
    EXPECT_THROW(unroll(im, {}, fixtures::fig2a_spec(), Direction::Max), InvalidArgument);
}

TEST(IhmmMonitor, EmptyTraceGivesInitialRisk) {
    const Verdict v = monitor_ihmm(fixtures::fig2a(), {}, fixtures::fig2a_spec());
    EXPECT_NEAR(v.lo, 0.1, 1e-6);
    EXPECT_NEAR(v.hi, 0.3, 1e-6);
}

TEST(IhmmMonitor, BisectionTolerance) {
    const Ihmm im = fixtures::fig2a();
    const IhmmMonitor mon(im, fixtures::fig2a_spec());
    const Trace t = fig2a_trace({"blue", "orange", "orange", "blue", "orange"});
    const Verdict coarse = mon.evaluate(t, 1e-2);
    const Verdict fine = mon.evaluate(t, 1e-9);
    EXPECT_LE(coarse.tol, 1e-2);
    EXPECT_LE(fine.tol, 1e-9);
    EXPECT_NEAR(coarse.hi, fine.hi, 1e-2);
    EXPECT_NEAR(coarse.lo, fine.lo, 1e-2);
}

TEST(Decide, ThresholdSemantics) {
    const Ihmm im = fixtures::fig2a();
    const Trace t = fig2a_trace({"blue", "orange"});
    const auto mx = unroll(im, t, fixtures::fig2a_spec(), Direction::Max);
    EXPECT_TRUE(decide(mx, 0.29));
    EXPECT_FALSE(decide(mx, 0.31));
    const auto mn = unroll(im, t, fixtures::fig2a_spec(), Direction::Min);
    EXPECT_TRUE(decide(mn, 0.11));
    EXPECT_FALSE(decide(mn, 0.09));
}

TEST(Unroll, LayersHoldConsistentStates) {
    const auto u = unroll(fixtures::fig2a(), fig2a_trace({"blue", "orange", "orange"}), fixtures::fig2a_spec(),
                          Direction::Max);
    ASSERT_EQ(u.layers.size(), 3u);
    EXPECT_EQ(u.layers[0].size(), 1u);
    EXPECT_EQ(u.layers[1].size(), 2u);
    EXPECT_EQ(u.layers[2].size(), 2u);
    EXPECT_EQ(u.num_nodes(), 5u);
}
