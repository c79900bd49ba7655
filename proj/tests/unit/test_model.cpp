#include "ihmon/error.hpp"
#include "ihmon/eval.hpp"
#include "ihmon/log.hpp"
#include "ihmon/model.hpp"
#include "ihmon/model_io.hpp"

#include "fixtures.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace ihmon;

TEST(Validate, AcceptsWellFormedModels) {
    EXPECT_TRUE(validate_hmm(fixtures::fig2a_refined(0.2)).empty());
    EXPECT_TRUE(validate_ihmm(fixtures::fig2a()).empty());
    EXPECT_TRUE(validate_spec(fixtures::fig2a_refined(0.2), fixtures::fig2a_spec()).empty());
}

TEST(Validate, ReportsRowSumAndRange) {
    Hmm m = fixtures::fig2a_refined(0.2);
    m.trans[0][0].p = 0.5;
    auto v = validate_hmm(m);
    ASSERT_FALSE(v.empty());
    EXPECT_EQ(v.front().state, StateId{0});

    Ihmm im = fixtures::fig2a();
    im.trans[0][0].lo = 0.95;  // lo > hi
    EXPECT_FALSE(validate_ihmm(im).empty());

    im = fixtures::fig2a();
    im.trans[0][0].hi = 0.6;  // sum of hi below 1
    im.trans[0][0].lo = 0.5;
    EXPECT_FALSE(validate_ihmm(im, true).empty());
    EXPECT_TRUE(validate_ihmm(im, false).empty());
}

TEST(Validate, SpecNeedsAbsorbingBadStates) {
    Hmm m = fixtures::fig2a_refined(0.2);
    Spec s = fixtures::fig2a_spec();
    s.bad = {false, true, false};
    EXPECT_FALSE(validate_spec(m, s).empty());
    s.horizon = 0;
    EXPECT_FALSE(validate_spec(m, fixtures::fig2a_spec(0)).empty());
}

TEST(Refines, Fig2aContainsItsRefinements) {
    EXPECT_TRUE(refines(fixtures::fig2a_refined(0.2), fixtures::fig2a()));
    EXPECT_TRUE(refines(fixtures::fig2a_refined(0.3), fixtures::fig2a()));
    EXPECT_FALSE(refines(fixtures::fig2a_refined(0.35), fixtures::fig2a()));
}

TEST(Refines, DifferentStateSetsThrow) {
    Hmm m = fixtures::three_state();
    EXPECT_THROW(refines(m, fixtures::fig2a()), ShapeMismatch);
}

TEST(Determinize, PreservesTraceDistribution) {
    Hmm m;
    m.states = {"a", "b"};
    m.symbols = {"x", "y"};
    m.init = {0.7, 0.3};
    m.trans = {{{0, 0.4}, {1, 0.6}}, {{0, 0.9}, {1, 0.1}}};
    m.obs = {{{0, 0.8}, {1, 0.2}}, {{0, 0.25}, {1, 0.75}}};
    const auto d = determinize_observations(m);
    EXPECT_TRUE(d.model.has_deterministic_obs());
    EXPECT_EQ(d.model.num_states(), 4u);
    EXPECT_TRUE(validate_hmm(d.model).empty());
    for (const Trace& t : {Trace{0}, Trace{1, 0}, Trace{0, 1, 1}, Trace{1, 1, 0, 0}})
        EXPECT_NEAR(trace_probability(m, t), trace_probability(d.model, t), 1e-15);
}

TEST(Determinize, IdentityOnDeterministicModels) {
    const Hmm m = fixtures::fig2a_refined(0.2);
    const auto d = determinize_observations(m);
    EXPECT_EQ(d.model.states, m.states);
    EXPECT_EQ(d.origin, (std::vector<StateId>{0, 1, 2}));
}

TEST(Determinize, LiftedSpecFollowsOrigin) {
    Hmm m;
    m.states = {"a", "b"};
    m.symbols = {"x", "y"};
    m.init = {1.0, 0.0};
    m.trans = {{{0, 0.5}, {1, 0.5}}, {{1, 1.0}}};
    m.obs = {{{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {1, 0.5}}};
    const auto d = determinize_observations(m);
    Spec s;
    s.bad = {false, true};
    const Spec l = lift_spec(s, d.origin);
    ASSERT_EQ(l.bad.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(l.bad[i], d.origin[i] == 1);
}

TEST(PointAndMidpoint, RoundTrip) {
    const Hmm m = fixtures::fig2a_refined(0.25);
    const Ihmm p = point_ihmm(m);
    EXPECT_TRUE(refines(m, p));
    const Hmm mid = midpoint_hmm(p);
    for (StateId s = 0; s < 3; ++s)
        for (StateId t = 0; t < 3; ++t) EXPECT_DOUBLE_EQ(mid.prob(s, t), m.prob(s, t));

    const Hmm mid2 = midpoint_hmm(fixtures::fig2a());
    EXPECT_NEAR(mid2.prob(0, 1), 0.8, 1e-15);
    EXPECT_NEAR(mid2.prob(0, 2), 0.2, 1e-15);
}

TEST(MakeBadAbsorbing, RewritesRowsAndWarns) {
    std::vector<std::string> seen;
    set_warning_sink([&](std::string_view w) { seen.emplace_back(w); });
    Hmm m = fixtures::fig2a_refined(0.2);
    Spec s = fixtures::fig2a_spec();
    s.bad = {false, true, true};
    EXPECT_TRUE(make_bad_absorbing(m, s));
    EXPECT_DOUBLE_EQ(m.prob(1, 1), 1.0);
    EXPECT_DOUBLE_EQ(m.prob(1, 0), 0.0);
    EXPECT_FALSE(make_bad_absorbing(m, s));
    set_warning_sink(nullptr);
    EXPECT_EQ(seen.size(), 1u);
}

TEST(Parse, TracesAndPaths) {
    const std::vector<std::string> syms{"blue", "orange"};
    EXPECT_EQ(parse_trace("blue  orange\torange", syms), (Trace{0, 1, 1}));
    EXPECT_TRUE(parse_trace("   ", syms).empty());
    EXPECT_THROW(parse_trace("blue red", syms), UnknownSymbol);
    EXPECT_EQ(format_trace({1, 0}, syms), "orange blue");
    const std::vector<std::string> states{"s0", "s1"};
    EXPECT_EQ(parse_path("s1 s0", states), (Path{1, 0}));
    EXPECT_THROW(parse_path("s2", states), UnknownState);
}

TEST(ModelIo, HmmRoundTripIsBitExact) {
    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        const auto c = oracle::random_case(rng, 4, 3, 0.3, 2);
        std::stringstream ss;
        save_model(ss, c.truth, &c.spec);
        const auto doc = load_model(ss);
        ASSERT_TRUE(doc.is_hmm());
        const Hmm& m = doc.hmm();
        ASSERT_EQ(m.num_states(), c.truth.num_states());
        for (StateId s = 0; s < m.num_states(); ++s) {
            EXPECT_EQ(m.init[s], c.truth.init[s]);
            ASSERT_EQ(m.trans[s].size(), c.truth.trans[s].size());
            for (std::size_t e = 0; e < m.trans[s].size(); ++e) EXPECT_EQ(m.trans[s][e].p, c.truth.trans[s][e].p);
        }
        ASSERT_TRUE(doc.spec.has_value());
        EXPECT_EQ(doc.spec->bad, c.spec.bad);
        EXPECT_EQ(doc.spec->horizon, c.spec.horizon);
    }
}

TEST(ModelIo, IhmmRoundTripIsBitExact) {
    Rng rng(4);
    for (int k = 0; k < 20; ++k) {
        const auto c = oracle::random_case(rng, 4, 3, 0.3, 2);
        std::stringstream ss;
        save_model(ss, c.im);
        const auto doc = load_model(ss);
        ASSERT_FALSE(doc.is_hmm());
        const Ihmm& im = doc.ihmm();
        EXPECT_EQ(im.init_lo, c.im.init_lo);
        EXPECT_EQ(im.init_hi, c.im.init_hi);
        EXPECT_EQ(im.obs, c.im.obs);
        for (StateId s = 0; s < im.num_states(); ++s) {
            ASSERT_EQ(im.trans[s].size(), c.im.trans[s].size());
            for (std::size_t e = 0; e < im.trans[s].size(); ++e) {
                EXPECT_EQ(im.trans[s][e].lo, c.im.trans[s][e].lo);
                EXPECT_EQ(im.trans[s][e].hi, c.im.trans[s][e].hi);
            }
        }
        EXPECT_FALSE(doc.spec.has_value());
    }
}

TEST(ModelIo, RejectsMalformedDocuments) {
    for (const char* bad : {"", "[1,2]", "{\"format\": \"other\", \"version\": 1}",
                            "{\"format\": \"ihmon-model\", \"version\": 9}",
                            "{\"format\": \"ihmon-model\", \"version\": 1, \"kind\": \"hmm\", \"states\": [\"a\"], "
                            "\"observations\": [\"x\"], \"init\": [1], \"obs_map\": [[0, 3, 1]], \"trans\": []}"}) {
        std::stringstream ss(bad);
        EXPECT_THROW(load_model(ss), ParseError) << bad;
    }
}

TEST(ModelIo, Datasets) {
    const std::vector<std::string> states{"a", "b", "c"};
    const std::vector<Path> paths{{0, 1, 2}, {2}, {1, 1}};
    std::stringstream ss;
    save_paths(ss, paths, states);
    EXPECT_EQ(load_paths(ss, states), paths);

    std::stringstream no_header("a b\n");
    EXPECT_THROW(load_paths(no_header, states), ParseError);
    std::stringstream unknown(std::string(kDatasetHeader) + "\na d\n");
    EXPECT_THROW(load_paths(unknown, states), ParseError);
}
