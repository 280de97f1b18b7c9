#include <catch2/catch_amalgamated.hpp>

#include "qag/machines.hpp"
#include "qag/qpda.hpp"
#include "support.hpp"

using namespace qag;
using test::Rng;

namespace {

bool equal_counts(const Word& w) {
    long d = 0;
    for (const auto& s : w) d += (s == "a") ? 1 : -1;
    return d == 0;
}

// Simple two-symbol pop machine with a depth-2 initial stack: accepts once
// both initial symbols have been popped (and ever after, via the Stay rule).
Qpda two_pop_machine() {
    Qpda p;
    p.controls = {"q"};
    p.input_alphabet = {"a"};
    p.stack_alphabet = {"s", "t"};
    p.init[{"q", {"s", "t"}}] = 1.0;
    p.set_accept_controls({"q"});
    auto& rules = p.transitions["a"];
    rules.push_back({"q", "s", StackAction::Pop(), kBelowAny, "q", 1.0});
    rules.push_back({"q", "t", StackAction::Pop(), kBelowAny, "q", 1.0});
    rules.push_back({"q", kTopEmpty, StackAction::Stay(), kBelowAny, "q", 1.0});
    p.validate();
    return p;
}

} // namespace

TEST_CASE("the equal-counts machine recognizes balanced letter counts") {
    const Qpda p = build_leq_qpda();
    CHECK(qpda_accept_probability(p, {}) == Catch::Approx(1.0).margin(1e-12));
    CHECK(qpda_accept_probability(p, word_from_chars("ab")) == Catch::Approx(1.0).margin(1e-12));
    CHECK(qpda_accept_probability(p, word_from_chars("ba")) == Catch::Approx(1.0).margin(1e-12));
    CHECK(qpda_accept_probability(p, word_from_chars("a")) == Catch::Approx(0.0).margin(1e-12));
    CHECK(qpda_accept_probability(p, word_from_chars("abb")) == Catch::Approx(0.0).margin(1e-12));
    CHECK(qpda_accept_probability(p, word_from_chars("aabb")) == Catch::Approx(1.0).margin(1e-12));
    for (const Word& w : test::all_words({"a", "b"}, 8))
        CHECK(qpda_accept_probability(p, w) ==
              Catch::Approx(equal_counts(w) ? 1.0 : 0.0).margin(1e-9));
}

TEST_CASE("the equal-counts machine conserves norm at every step") {
    const Qpda p = build_leq_qpda();
    for (const Word& w : test::all_words({"a", "b"}, 10)) {
        SparseState s = p.init;
        for (const auto& a : w) {
            s = qpda_step(p, s, a);
            REQUIRE(state_norm2(s) == Catch::Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("qpda_step is linear and drops unmatched amplitude") {
    const Qpda p = build_leq_qpda();
    SECTION("single basis configurations") {
        SparseState one{{{"A", {}}, 1.0}};
        const SparseState next = qpda_step(p, one, "a");
        REQUIRE(next.size() == 1);
        CHECK(std::abs(next.at({"A", {"x"}}) - Complex(1.0)) < 1e-15);
    }
    SECTION("linearity over superpositions") {
        Rng rng(601);
        const Complex alpha = test::random_complex(rng);
        const Complex beta = test::random_complex(rng);
        SparseState x{{{"A", {}}, 1.0}};
        SparseState y{{{"B", {"x"}}, 1.0}};
        SparseState mix;
        for (const auto& [c, amp] : x) mix[c] += alpha * amp;
        for (const auto& [c, amp] : y) mix[c] += beta * amp;
        const SparseState sx = qpda_step(p, x, "b");
        const SparseState sy = qpda_step(p, y, "b");
        const SparseState sm = qpda_step(p, mix, "b");
        SparseState want;
        for (const auto& [c, amp] : sx) want[c] += alpha * amp;
        for (const auto& [c, amp] : sy) want[c] += beta * amp;
        prune_state(want);
        REQUIRE(sm.size() == want.size());
        for (const auto& [c, amp] : want) CHECK(std::abs(sm.at(c) - amp) < 1e-12);
    }
    SECTION("unknown input symbols are rejected") {
        CHECK_THROWS_AS(qpda_step(p, p.init, "z"), AlphabetError);
    }
}

TEST_CASE("Greibach grammars compile to word-pushing QPDAs") {
    SECTION("single production I -> a") {
        QuantumGrammar g;
        g.variables = {"I"};
        g.terminals = {"a"};
        g.initial = "I";
        g.productions.push_back({"I", {"a"}, {Complex(0.5)}});
        const Qpda p = grammar_to_qpda(g);
        CHECK(qpda_accept_probability(p, word_from_chars("a")) == Catch::Approx(0.25).margin(1e-12));
        CHECK(qpda_accept_probability(p, {}) == Catch::Approx(0.0).margin(1e-12));
        CHECK(qpda_accept_probability(p, word_from_chars("aa")) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("the Dyck grammar machine recognizes balanced words") {
        const Qpda p = grammar_to_qpda(dyck_gnf());
        for (const Word& w : test::all_words({"a", "b"}, 8))
            CHECK(qpda_accept_probability(p, w) ==
                  Catch::Approx(is_dyck_word(w) ? 1.0 : 0.0).margin(1e-9));
    }
    SECTION("agreement with f on an interference grammar") {
        const QuantumGrammar g = to_greibach(symmetric_difference(l1_grammar(), l2_grammar()));
        const Qpda p = grammar_to_qpda(g);
        for (const Word& w : test::all_words({"a", "b", "c"}, 5))
            CHECK(qpda_accept_probability(p, w) == Catch::Approx(f_of_word(g, w)).margin(1e-9));
    }
    SECTION("non-Greibach grammars are rejected") {
        CHECK_THROWS_AS(grammar_to_qpda(dyck_general()), GrammarError);
    }
}

TEST_CASE("lemma11_expand removes below-symbol dependence") {
    SECTION("the equal-counts machine as a generalized machine") {
        Qpda p = build_leq_qpda();
        p.unitary_claimed = false;
        const Qpda e = lemma11_expand(p);
        for (const auto& [a, rules] : e.transitions)
            for (const auto& r : rules)
                if (r.action.kind == ActionKind::pop) CHECK(r.below == kBelowAny);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(e, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("machines without below-dependence keep their behavior") {
        const Qpda p = grammar_to_qpda(dyck_gnf());
        const Qpda e = lemma11_expand(p);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(e, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("unitary-claimed machines are rejected") {
        CHECK_THROWS_AS(lemma11_expand(build_leq_qpda()), ModeError);
    }
}

TEST_CASE("lemma12_convert reduces word pushes to single-symbol actions") {
    SECTION("the Dyck grammar machine, whose longest push is three symbols") {
        const Qpda p = grammar_to_qpda(dyck_gnf());
        const Qpda c = lemma12_convert(p);
        CHECK_FALSE(c.pushes_words);
        for (const auto& [a, rules] : c.transitions)
            for (const auto& r : rules) {
                CHECK(r.action.kind != ActionKind::push_word);
                if (r.action.kind == ActionKind::push) CHECK(r.action.word.size() == 1);
            }
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(c, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("the expanded equal-counts machine") {
        Qpda p = build_leq_qpda();
        p.unitary_claimed = false;
        const Qpda e = lemma11_expand(p);
        const Qpda c = lemma12_convert(e);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(c, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("a deep initial stack round-trips through composites") {
        const Qpda p = two_pop_machine();
        const Qpda c = lemma12_convert(p);
        for (std::size_t n = 0; n <= 4; ++n) {
            const Word w(n, "a");
            CHECK(qpda_accept_probability(c, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
            CHECK(qpda_accept_probability(p, w) == Catch::Approx(n >= 2 ? 1.0 : 0.0).margin(1e-12));
        }
    }
    SECTION("below-dependent pops require the expansion first") {
        Qpda p = build_leq_qpda();
        p.unitary_claimed = false;
        CHECK_THROWS_AS(lemma12_convert(p), ModeError);
        CHECK_THROWS_AS(lemma12_convert(build_leq_qpda()), ModeError);
    }
}

TEST_CASE("lemma13_convert moves acceptance onto marked controls") {
    SECTION("the equal-counts machine keeps its language and unitarity") {
        const Qpda p = build_leq_qpda();
        const Qpda c = lemma13_convert(p);
        CHECK(c.acceptance == QpdaAcceptance::control_only);
        CHECK(c.unitary_claimed);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(c, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
        const UnitarityReport rep = check_unitarity_truncated(c, 5);
        CHECK(rep.interior_unitary);
    }
    SECTION("a generalized machine converts as well") {
        const Qpda p = grammar_to_qpda(dyck_gnf());
        const Qpda c = lemma13_convert(p);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(c, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("control-only machines cannot be converted again") {
        const Qpda c = lemma13_convert(build_leq_qpda());
        CHECK_THROWS_AS(lemma13_convert(c), ModeError);
    }
}

TEST_CASE("qpda_to_grammar inverts the grammar compilation") {
    SECTION("round trip through the Dyck machine") {
        const Qpda p = grammar_to_qpda(dyck_gnf());
        const QuantumGrammar g = qpda_to_grammar(p);
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(f_of_word(g, w) == Catch::Approx(is_dyck_word(w) ? 1.0 : 0.0).margin(1e-9));
    }
    SECTION("the expanded equal-counts machine becomes a grammar") {
        Qpda p = build_leq_qpda();
        p.unitary_claimed = false;
        const QuantumGrammar g = qpda_to_grammar(lemma11_expand(p));
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(f_of_word(g, w) == Catch::Approx(equal_counts(w) ? 1.0 : 0.0).margin(1e-9));
    }
    SECTION("input read after the stack empties is still covered") {
        // the two-pop machine accepts a^n for every n >= 2 via its Stay rule
        const QuantumGrammar g = qpda_to_grammar(two_pop_machine());
        for (std::size_t n = 0; n <= 5; ++n)
            CHECK(f_of_word(g, Word(n, "a")) == Catch::Approx(n >= 2 ? 1.0 : 0.0).margin(1e-9));
    }
    SECTION("preconditions") {
        CHECK_THROWS_AS(qpda_to_grammar(build_leq_qpda()), ModeError); // unitary claimed
        Qpda p = build_leq_qpda();
        p.unitary_claimed = false;
        CHECK_THROWS_AS(qpda_to_grammar(p), ModeError); // below-dependent pops
        Qpda c = lemma13_convert(grammar_to_qpda(dyck_gnf()));
        CHECK_THROWS_AS(qpda_to_grammar(c), ModeError); // control-only acceptance
    }
}

TEST_CASE("tensor_with_qfa multiplies pushdown and finite probabilities") {
    const Qpda p = build_leq_qpda();
    SECTION("product with the constant 1 is the original language") {
        const Qpda t = tensor_with_qfa(p, constant(1.0, {"a", "b"}));
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(t, w) ==
                  Catch::Approx(qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("product with the constant 1/2 halves every probability") {
        const Qpda t = tensor_with_qfa(p, constant(0.5, {"a", "b"}));
        for (const Word& w : test::all_words({"a", "b"}, 6))
            CHECK(qpda_accept_probability(t, w) ==
                  Catch::Approx(0.5 * qpda_accept_probability(p, w)).margin(1e-9));
    }
    SECTION("product with an embedded DFA intersects the languages") {
        const Qfa q = embed_dfa(parity_dfa()); // generalized 0/1 machine
        const Qpda t = tensor_with_qfa(p, q);
        CHECK_FALSE(t.unitary_claimed);
        for (const Word& w : test::all_words({"a", "b"}, 6)) {
            const double want = qpda_accept_probability(p, w) * accept_probability(q, w);
            CHECK(qpda_accept_probability(t, w) == Catch::Approx(want).margin(1e-9));
        }
    }
    SECTION("alphabets must match") {
        CHECK_THROWS_AS(tensor_with_qfa(p, constant(1.0, {"a"})), AlphabetError);
    }
}

TEST_CASE("truncated unitarity check separates unitary from lossy machines") {
    SECTION("the equal-counts machine is interior unitary to depth 6") {
        const UnitarityReport rep = check_unitarity_truncated(build_leq_qpda(), 6);
        CHECK(rep.interior_unitary);
        CHECK(rep.max_deviation < 1e-12);
    }
    SECTION("the Dyck grammar machine is not unitary") {
        const UnitarityReport rep = check_unitarity_truncated(grammar_to_qpda(dyck_gnf()), 4);
        CHECK_FALSE(rep.interior_unitary);
        CHECK(rep.max_deviation > 0.1);
    }
    SECTION("an all-Stay machine is trivially unitary") {
        Qpda p;
        p.controls = {"q"};
        p.input_alphabet = {"a"};
        p.stack_alphabet = {"x"};
        p.init[{"q", {}}] = 1.0;
        p.set_accept_controls({"q"});
        p.transitions["a"].push_back({"q", "x", StackAction::Stay(), kBelowAny, "q", 1.0});
        p.transitions["a"].push_back({"q", kTopEmpty, StackAction::Stay(), kBelowAny, "q", 1.0});
        p.validate();
        CHECK(check_unitarity_truncated(p, 4).interior_unitary);
    }
    CHECK_THROWS_AS(check_unitarity_truncated(build_leq_qpda(), 0), ShapeError);
}

TEST_CASE("qpda validation rejects malformed machines") {
    Qpda p = build_leq_qpda();
    SECTION("pop on empty stack") {
        p.transitions["a"].push_back({"A", kTopEmpty, StackAction::Pop(), kBelowAny, "A", 1.0});
        CHECK_THROWS_AS(p.validate(), ShapeError);
    }
    SECTION("below field on a non-pop rule") {
        p.transitions["a"].push_back({"A", "x", StackAction::Stay(), "x", "A", 1.0});
        CHECK_THROWS_AS(p.validate(), ShapeError);
    }
    SECTION("push_word on a single-symbol machine") {
        p.transitions["a"].push_back({"A", "x", StackAction::PushWord({"x", "x"}), kBelowAny, "A", 1.0});
        CHECK_THROWS_AS(p.validate(), ModeError);
    }
    SECTION("unknown stack symbol") {
        p.init[{"A", {"y"}}] = 0.5;
        CHECK_THROWS_AS(p.validate(), AlphabetError);
    }
    SECTION("unit norm required when unitarity is claimed") {
        p.init[{"A", {}}] = 2.0;
        CHECK_THROWS_AS(p.validate(), ShapeError);
        p.unitary_claimed = false;
        CHECK_NOTHROW(p.validate());
    }
}
