#pragma once

// Ready-made machines and grammars used across the test corpus and the demo
// subcommands: the two-state measurement automaton, forbidden-block and
// counting DFAs, Dyck and interference grammars.

#include "qag/grammar.hpp"

namespace qag {

// One qubit rotated by theta per input symbol; f(a^n) = cos^2(n theta).
inline Qfa measurement_qfa(double theta) {
    Qfa q;
    q.alphabet = {"a"};
    q.dim = 2;
    q.init = {1.0, 0.0};
    CMat u(2, 2);
    u.at(0, 0) = std::cos(theta);
    u.at(0, 1) = std::sin(theta);
    u.at(1, 0) = -std::sin(theta);
    u.at(1, 1) = std::cos(theta);
    q.transitions["a"] = std::move(u);
    q.accept = OrthonormalBasis{{{1.0, 0.0}}, 2, kStructuralTol};
    q.validate();
    return q;
}

// Binary words with no "bb" factor; counts by length are the Fibonacci
// numbers 1, 2, 3, 5, 8, ...
inline Dfa bb_forbidden_dfa() {
    Dfa d;
    d.states = {"ok", "b", "dead"};
    d.alphabet = {"a", "b"};
    d.init = "ok";
    d.accepting = {"ok", "b"};
    d.delta[{"ok", "a"}] = "ok";
    d.delta[{"ok", "b"}] = "b";
    d.delta[{"b", "a"}] = "ok";
    d.delta[{"b", "b"}] = "dead";
    d.delta[{"dead", "a"}] = "dead";
    d.delta[{"dead", "b"}] = "dead";
    return d;
}

// Even number of a's over {a,b}; its transition monoid is a group.
inline Dfa parity_dfa() {
    Dfa d;
    d.states = {"even", "odd"};
    d.alphabet = {"a", "b"};
    d.init = "even";
    d.accepting = {"even"};
    d.delta[{"even", "a"}] = "odd";
    d.delta[{"even", "b"}] = "even";
    d.delta[{"odd", "a"}] = "even";
    d.delta[{"odd", "b"}] = "odd";
    return d;
}

// Number of a's divisible by 3, over {a}.
inline Dfa mod3_dfa() {
    Dfa d;
    d.states = {"r0", "r1", "r2"};
    d.alphabet = {"a"};
    d.init = "r0";
    d.accepting = {"r0"};
    d.delta[{"r0", "a"}] = "r1";
    d.delta[{"r1", "a"}] = "r2";
    d.delta[{"r2", "a"}] = "r0";
    return d;
}

// Balanced-parenthesis grammar in its textbook ambiguous-looking but
// actually unambiguous form I -> a I b I | epsilon.
inline QuantumGrammar dyck_general() {
    return embed_unambiguous({"I"}, {"a", "b"}, "I",
                             {{"I", {"a", "I", "b", "I"}}, {"I", {}}});
}

// Same language with the epsilon production separated onto a fresh start,
// so the normal-form pipeline applies.
inline QuantumGrammar dyck_start_separated() {
    return embed_unambiguous({"S", "D"}, {"a", "b"}, "S",
                             {{"S", {}},
                              {"S", {"D"}},
                              {"D", {"a", "b"}},
                              {"D", {"a", "D", "b"}},
                              {"D", {"a", "b", "D"}},
                              {"D", {"a", "D", "b", "D"}}});
}

// Hand-written Greibach form of the same language, for cross-checks.
inline QuantumGrammar dyck_gnf() {
    return embed_unambiguous({"S", "D", "B"}, {"a", "b"}, "S",
                             {{"S", {}},
                              {"S", {"a", "B"}},
                              {"S", {"a", "D", "B"}},
                              {"S", {"a", "B", "D"}},
                              {"S", {"a", "D", "B", "D"}},
                              {"D", {"a", "B"}},
                              {"D", {"a", "D", "B"}},
                              {"D", {"a", "B", "D"}},
                              {"D", {"a", "D", "B", "D"}},
                              {"B", {"b"}}});
}

// a^i b^i c^k over {a,b,c} (any i, k >= 0), unambiguous.
inline QuantumGrammar l1_grammar() {
    return embed_unambiguous({"S1", "X", "C"}, {"a", "b", "c"}, "S1",
                             {{"S1", {}},
                              {"S1", {"X"}},
                              {"S1", {"C"}},
                              {"S1", {"X", "C"}},
                              {"X", {"a", "b"}},
                              {"X", {"a", "X", "b"}},
                              {"C", {"c"}},
                              {"C", {"c", "C"}}});
}

// a^i b^j c^j over {a,b,c}, unambiguous.
inline QuantumGrammar l2_grammar() {
    return embed_unambiguous({"S2", "A", "Y"}, {"a", "b", "c"}, "S2",
                             {{"S2", {}},
                              {"S2", {"A"}},
                              {"S2", {"Y"}},
                              {"S2", {"A", "Y"}},
                              {"A", {"a"}},
                              {"A", {"a", "A"}},
                              {"Y", {"b", "c"}},
                              {"Y", {"b", "Y", "c"}}});
}

// Classical membership predicates, used as oracles.
inline bool is_dyck_word(const Word& w) {
    long depth = 0;
    for (const auto& s : w) {
        if (s == "a")
            ++depth;
        else if (s == "b")
            --depth;
        else
            return false;
        if (depth < 0) return false;
    }
    return depth == 0;
}

inline bool in_l1(const Word& w) { // a^i b^i c^k
    std::size_t i = 0, na = 0, nb = 0, nc = 0;
    while (i < w.size() && w[i] == "a") ++na, ++i;
    while (i < w.size() && w[i] == "b") ++nb, ++i;
    while (i < w.size() && w[i] == "c") ++nc, ++i;
    return i == w.size() && na == nb;
}

inline bool in_l2(const Word& w) { // a^i b^j c^j
    std::size_t i = 0, na = 0, nb = 0, nc = 0;
    while (i < w.size() && w[i] == "a") ++na, ++i;
    while (i < w.size() && w[i] == "b") ++nb, ++i;
    while (i < w.size() && w[i] == "c") ++nc, ++i;
    (void)na;
    return i == w.size() && nb == nc;
}

inline bool has_bb_factor(const Word& w) {
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
        if (w[i] == "b" && w[i + 1] == "b") return true;
    return false;
}

} // namespace qag
