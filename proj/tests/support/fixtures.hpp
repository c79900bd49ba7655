#pragma once

#include "ihmon/model.hpp"

namespace ihmon::fixtures {

// Three-state example: s0 (blue) -> s1 [0.7, 0.9], s2 [0.1, 0.3];
// s1 (orange) -> s0 0.5, s1 0.5; s2 (orange) absorbing and bad.
inline Ihmm fig2a() {
    Ihmm im;
    im.states = {"s0", "s1", "s2"};
    im.symbols = {"blue", "orange"};
    im.obs = {0, 1, 1};
    im.init_lo = {1.0, 0.0, 0.0};
    im.init_hi = {1.0, 0.0, 0.0};
    im.trans = {{{1, 0.7, 0.9}, {2, 0.1, 0.3}}, {{0, 0.5, 0.5}, {1, 0.5, 0.5}}, {{2, 1.0, 1.0}}};
    return im;
}

inline Spec fig2a_spec(std::size_t horizon = 1) {
    Spec s;
    s.bad = {false, false, true};
    s.horizon = horizon;
    return s;
}

// Refinement of fig2a with P(s0, s2) = p2.
inline Hmm fig2a_refined(double p2) {
    Hmm m;
    m.states = {"s0", "s1", "s2"};
    m.symbols = {"blue", "orange"};
    m.init = {1.0, 0.0, 0.0};
    m.trans = {{{1, 1.0 - p2}, {2, p2}}, {{0, 0.5}, {1, 0.5}}, {{2, 1.0}}};
    m.obs = {{{0, 1.0}}, {{1, 1.0}}, {{1, 1.0}}};
    return m;
}

// Three-state chain used by the learning tests.
inline Hmm three_state() {
    Hmm m;
    m.states = {"a", "b", "c"};
    m.symbols = {"x", "y", "z"};
    m.init = {0.6, 0.4, 0.0};
    m.trans = {{{0, 0.2}, {1, 0.5}, {2, 0.3}}, {{0, 0.6}, {2, 0.4}}, {{0, 0.3}, {1, 0.3}, {2, 0.4}}};
    m.obs = {{{0, 1.0}}, {{1, 1.0}}, {{2, 1.0}}};
    return m;
}

} // namespace ihmon::fixtures
