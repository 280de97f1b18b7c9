#pragma once

// Quantum push-down automata: sparse superposition simulation, structural
// conversions (below-independence, single-symbol actions, control-only
// acceptance), compilation to and from quantum grammars, the product with a
// QFA, truncated unitarity checking, and the equal-counts witness machine.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "qag/grammar.hpp"

namespace qag {

inline const Symbol kTopEmpty = "";   // matches only the empty stack
inline const Symbol kBelowAny = "*";  // wildcard below-symbol on Pop rules
inline const Symbol kBelowEmpty = "";

enum class ActionKind { push, push_word, pop, stay };

struct StackAction {
    ActionKind kind = ActionKind::stay;
    std::vector<Symbol> word; // push: single symbol; push_word: whole word

    static StackAction Push(Symbol s) { return {ActionKind::push, {std::move(s)}}; }
    static StackAction PushWord(std::vector<Symbol> w) { return {ActionKind::push_word, std::move(w)}; }
    static StackAction Pop() { return {ActionKind::pop, {}}; }
    static StackAction Stay() { return {ActionKind::stay, {}}; }

    bool operator==(const StackAction&) const = default;
};

struct QpdaRule {
    std::string from;
    Symbol top;   // kTopEmpty = empty stack
    StackAction action;
    Symbol below = kBelowAny; // consulted by Pop rules only
    std::string to;
    Complex amp;

    bool operator==(const QpdaRule&) const = default;
};

using Stack = std::vector<Symbol>;

struct Config {
    std::string control;
    Stack stack; // top is leftmost

    auto operator<=>(const Config&) const = default;
};

using SparseState = std::map<Config, Complex>;

constexpr double kSparsePruneTol = 1e-15;

enum class QpdaAcceptance { empty_stack_and_control, control_only };

struct Qpda {
    std::vector<std::string> controls;
    std::vector<Symbol> input_alphabet;
    std::vector<Symbol> stack_alphabet;
    std::map<Symbol, std::vector<QpdaRule>> transitions;
    SparseState init;
    std::vector<CVec> accept_vectors; // coordinates follow `controls` order
    QpdaAcceptance acceptance = QpdaAcceptance::empty_stack_and_control;
    bool unitary_claimed = false;
    bool pushes_words = false;

    std::size_t control_index(const std::string& q) const {
        for (std::size_t i = 0; i < controls.size(); ++i)
            if (controls[i] == q) return i;
        throw ParseError("qpda: unknown control " + q);
    }

    bool has_stack_symbol(const Symbol& t) const {
        return std::find(stack_alphabet.begin(), stack_alphabet.end(), t) != stack_alphabet.end();
    }

    void set_accept_controls(const std::vector<std::string>& names) {
        accept_vectors.clear();
        for (const auto& q : names) {
            CVec v(controls.size(), 0.0);
            v[control_index(q)] = 1.0;
            accept_vectors.push_back(std::move(v));
        }
    }

    // Only defined when every accept vector is a standard basis vector.
    std::vector<std::string> accept_control_names() const {
        std::vector<std::string> names;
        for (const auto& v : accept_vectors) {
            std::size_t hits = 0, at = 0;
            for (std::size_t i = 0; i < v.size(); ++i)
                if (v[i] != 0.0) {
                    if (v[i] != Complex(1.0)) hits = 2;
                    ++hits;
                    at = i;
                }
            if (hits != 1) throw ModeError("qpda: accept vectors are not single controls");
            names.push_back(controls[at]);
        }
        return names;
    }

    void validate() const {
        if (controls.empty()) throw ShapeError("qpda: no controls");
        for (const auto& v : accept_vectors)
            if (v.size() != controls.size())
                throw ShapeError("qpda: accept vector dimension mismatch");
        for (const auto& [a, rules] : transitions) {
            if (std::find(input_alphabet.begin(), input_alphabet.end(), a) == input_alphabet.end())
                throw AlphabetError("qpda: rules for unknown input symbol " + a);
            for (const auto& r : rules) {
                (void)control_index(r.from);
                (void)control_index(r.to);
                if (r.top != kTopEmpty && !has_stack_symbol(r.top))
                    throw AlphabetError("qpda: unknown top symbol " + r.top);
                if (r.action.kind == ActionKind::pop) {
                    if (r.below != kBelowAny && r.below != kBelowEmpty && !has_stack_symbol(r.below))
                        throw AlphabetError("qpda: unknown below symbol " + r.below);
                    if (r.top == kTopEmpty)
                        throw ShapeError("qpda: pop rule on empty stack");
                } else if (r.below != kBelowAny) {
                    throw ShapeError("qpda: below field meaningful only on pop rules");
                }
                if (!pushes_words && r.action.kind == ActionKind::push_word)
                    throw ModeError("qpda: push_word rule on a single-symbol machine");
                for (const auto& s : r.action.word)
                    if (!has_stack_symbol(s))
                        throw AlphabetError("qpda: unknown pushed symbol " + s);
                if (!is_finite(r.amp)) throw ShapeError("qpda: non-finite rule amplitude");
            }
        }
        for (const auto& [cfg, amp] : init) {
            (void)control_index(cfg.control);
            for (const auto& s : cfg.stack)
                if (!has_stack_symbol(s)) throw AlphabetError("qpda: unknown initial stack symbol " + s);
            if (!is_finite(amp)) throw ShapeError("qpda: non-finite initial amplitude");
        }
        if (unitary_claimed) {
            double n = 0.0;
            for (const auto& [cfg, amp] : init) n += std::norm(amp);
            if (std::abs(n - 1.0) > kStructuralTol)
                throw ShapeError("qpda: unitary machine with non-unit initial norm");
        }
    }
};

inline void prune_state(SparseState& s) {
    std::erase_if(s, [](const auto& kv) { return std::abs(kv.second) < kSparsePruneTol; });
}

inline double state_norm2(const SparseState& s) {
    double n = 0.0;
    for (const auto& [cfg, amp] : s) n += std::norm(amp);
    return n;
}

inline SparseState qpda_step(const Qpda& p, const SparseState& s, const Symbol& a) {
    if (std::find(p.input_alphabet.begin(), p.input_alphabet.end(), a) == p.input_alphabet.end())
        throw AlphabetError("qpda_step: unknown input symbol " + a);
    std::map<std::pair<std::string, Symbol>, std::vector<const QpdaRule*>> index;
    auto it = p.transitions.find(a);
    if (it != p.transitions.end())
        for (const auto& r : it->second) index[{r.from, r.top}].push_back(&r);

    SparseState out;
    for (const auto& [cfg, amp] : s) {
        const Symbol top = cfg.stack.empty() ? kTopEmpty : cfg.stack.front();
        auto rit = index.find({cfg.control, top});
        if (rit == index.end()) continue; // amplitude lost: generalized behavior
        for (const QpdaRule* r : rit->second) {
            Stack ns;
            switch (r->action.kind) {
            case ActionKind::push:
                ns = cfg.stack;
                ns.insert(ns.begin(), r->action.word[0]);
                break;
            case ActionKind::push_word:
                // replace semantics: the matched top (if any) comes off first
                ns.assign(r->action.word.begin(), r->action.word.end());
                if (!cfg.stack.empty())
                    ns.insert(ns.end(), cfg.stack.begin() + 1, cfg.stack.end());
                break;
            case ActionKind::pop: {
                const Symbol below = cfg.stack.size() >= 2 ? cfg.stack[1] : kBelowEmpty;
                if (r->below != kBelowAny && r->below != below) continue;
                ns.assign(cfg.stack.begin() + 1, cfg.stack.end());
                break;
            }
            case ActionKind::stay:
                ns = cfg.stack;
                break;
            }
            out[{r->to, std::move(ns)}] += amp * r->amp;
        }
        if (out.size() > 1'000'000) throw ScaleError("qpda_step: superposition size exceeded");
    }
    prune_state(out);
    return out;
}

inline SparseState qpda_run(const Qpda& p, const Word& w) {
    SparseState s = p.init;
    for (const auto& a : w) s = qpda_step(p, s, a);
    return s;
}

// Amplitudes over controls interfere within a fixed stack content; distinct
// stacks (and, in empty-stack mode, only the empty one) add noninterferingly.
inline double qpda_accept_probability(const Qpda& p, const Word& w) {
    const SparseState s = qpda_run(p, w);
    std::map<Stack, CVec> by_stack;
    for (const auto& [cfg, amp] : s) {
        if (p.acceptance == QpdaAcceptance::empty_stack_and_control && !cfg.stack.empty()) continue;
        auto [it, fresh] = by_stack.try_emplace(cfg.stack, CVec(p.controls.size(), 0.0));
        (void)fresh;
        it->second[p.control_index(cfg.control)] += amp;
    }
    double prob = 0.0;
    for (const auto& [stack, v] : by_stack)
        for (const auto& h : p.accept_vectors) prob += std::norm(pair_bilinear(v, h));
    return prob;
}

// Control A pushes x per a and pops per b; control B does the reverse; the
// b-table is the conjugate transpose of the a-table. Ends in (A, empty)
// exactly when the counts agree.
inline Qpda build_leq_qpda() {
    Qpda p;
    p.controls = {"A", "B"};
    p.input_alphabet = {"a", "b"};
    p.stack_alphabet = {"x"};
    p.unitary_claimed = true;
    p.pushes_words = false;
    p.acceptance = QpdaAcceptance::empty_stack_and_control;
    p.init[{"A", {}}] = 1.0;
    p.set_accept_controls({"A"});

    auto& ua = p.transitions["a"];
    ua.push_back({"A", kTopEmpty, StackAction::Push("x"), kBelowAny, "A", 1.0});
    ua.push_back({"A", "x", StackAction::Push("x"), kBelowAny, "A", 1.0});
    ua.push_back({"B", "x", StackAction::Pop(), "x", "B", 1.0});
    ua.push_back({"B", "x", StackAction::Pop(), kBelowEmpty, "A", 1.0});
    ua.push_back({"B", kTopEmpty, StackAction::Stay(), kBelowAny, "B", 1.0});

    auto& ub = p.transitions["b"];
    ub.push_back({"A", "x", StackAction::Pop(), kBelowAny, "A", 1.0});
    ub.push_back({"B", "x", StackAction::Push("x"), kBelowAny, "B", 1.0});
    ub.push_back({"A", kTopEmpty, StackAction::Push("x"), kBelowAny, "B", 1.0});
    ub.push_back({"B", kTopEmpty, StackAction::Stay(), kBelowAny, "B", 1.0});

    p.validate();
    return p;
}

// Greibach grammar to a generalized QPDA: one control per dimension, never
// changed; reading a with variable v on top replaces v by the production's
// variable tail.
inline Qpda grammar_to_qpda(const QuantumGrammar& g) {
    g.validate();
    if (!is_greibach(g)) throw GrammarError("grammar_to_qpda: grammar must be in Greibach form");
    Qpda p;
    for (std::size_t k = 0; k < g.dimension; ++k) p.controls.push_back("q" + std::to_string(k + 1));
    p.input_alphabet = g.terminals;
    p.stack_alphabet = g.variables;
    p.pushes_words = true;
    p.unitary_claimed = false;
    p.acceptance = QpdaAcceptance::empty_stack_and_control;
    p.set_accept_controls(p.controls);
    for (std::size_t k = 0; k < g.dimension; ++k) {
        p.init[{p.controls[k], {g.initial}}] += 1.0;
        for (const auto& pr : g.productions)
            if (pr.lhs == g.initial && pr.rhs.empty() && pr.amps[k] != 0.0)
                p.init[{p.controls[k], {}}] += pr.amps[k];
    }
    for (const auto& pr : g.productions) {
        if (pr.rhs.empty()) continue; // separated start epsilon, handled above
        const Symbol a = pr.rhs[0];
        std::vector<Symbol> gamma(pr.rhs.begin() + 1, pr.rhs.end());
        const StackAction act = gamma.empty() ? StackAction::Pop() : StackAction::PushWord(gamma);
        for (std::size_t k = 0; k < g.dimension; ++k) {
            if (pr.amps[k] == 0.0) continue;
            p.transitions[a].push_back(
                {p.controls[k], pr.lhs, act, kBelowAny, p.controls[k], pr.amps[k]});
        }
    }
    p.validate();
    return p;
}

namespace detail {

inline Symbol pair_symbol(const Symbol& s, const Symbol& t) { return "(" + s + "," + t + ")"; }

// Pairwise stack encoding: s t u -> (s,t)(t,u) u.
inline Stack pair_encode(const Stack& sigma) {
    Stack out;
    for (std::size_t i = 0; i + 1 < sigma.size(); ++i) out.push_back(pair_symbol(sigma[i], sigma[i + 1]));
    if (!sigma.empty()) out.push_back(sigma.back());
    return out;
}

} // namespace detail

// Move below-symbol dependence into an enlarged stack alphabet of plain
// symbols and adjacent pairs; every output pop rule has below = any.
inline Qpda lemma11_expand(const Qpda& p) {
    p.validate();
    if (p.unitary_claimed)
        throw ModeError("lemma11_expand: defined for generalized machines only");
    Qpda out;
    out.controls = p.controls;
    out.input_alphabet = p.input_alphabet;
    out.stack_alphabet = p.stack_alphabet;
    for (const auto& s : p.stack_alphabet)
        for (const auto& t : p.stack_alphabet) out.stack_alphabet.push_back(detail::pair_symbol(s, t));
    out.accept_vectors = p.accept_vectors;
    out.acceptance = p.acceptance;
    out.unitary_claimed = false;
    out.pushes_words = true;
    for (const auto& [cfg, amp] : p.init)
        out.init[{cfg.control, detail::pair_encode(cfg.stack)}] += amp;

    for (const auto& [a, rules] : p.transitions) {
        auto& target = out.transitions[a];
        for (const auto& r : rules) {
            if (r.top == kTopEmpty) {
                StackAction act = r.action;
                if (act.kind == ActionKind::push_word) {
                    act.word = detail::pair_encode(act.word);
                    if (act.word.empty()) act = StackAction::Stay();
                }
                if (act.kind == ActionKind::pop) continue; // cannot pop the empty stack
                target.push_back({r.from, kTopEmpty, act, kBelowAny, r.to, r.amp});
                continue;
            }
            const Symbol t = r.top;
            // singleton-stack variant: plain t on top, nothing below
            if (r.action.kind != ActionKind::pop || r.below == kBelowAny || r.below == kBelowEmpty) {
                StackAction act;
                switch (r.action.kind) {
                case ActionKind::push:
                    act = StackAction::PushWord({detail::pair_symbol(r.action.word[0], t), t});
                    break;
                case ActionKind::push_word:
                    act = r.action.word.empty() ? StackAction::Pop()
                                                : StackAction::PushWord(detail::pair_encode(r.action.word));
                    break;
                case ActionKind::pop:
                    act = StackAction::Pop();
                    break;
                case ActionKind::stay:
                    act = StackAction::Stay();
                    break;
                }
                target.push_back({r.from, t, act, kBelowAny, r.to, r.amp});
            }
            // deeper-stack variants: pair (t,u) on top, one per possible u
            for (const auto& u : p.stack_alphabet) {
                if (r.action.kind == ActionKind::pop && r.below != kBelowAny && r.below != u) continue;
                StackAction act;
                switch (r.action.kind) {
                case ActionKind::push:
                    act = StackAction::PushWord({detail::pair_symbol(r.action.word[0], t),
                                                 detail::pair_symbol(t, u)});
                    break;
                case ActionKind::push_word: {
                    if (r.action.word.empty()) {
                        act = StackAction::Pop();
                        break;
                    }
                    Stack with_u = r.action.word;
                    with_u.push_back(u);
                    Stack enc = detail::pair_encode(with_u);
                    enc.pop_back(); // the plain u below is already encoded
                    act = StackAction::PushWord(std::move(enc));
                    break;
                }
                case ActionKind::pop:
                    act = StackAction::Pop();
                    break;
                case ActionKind::stay:
                    act = StackAction::Stay();
                    break;
                }
                target.push_back({r.from, detail::pair_symbol(t, u), act, kBelowAny, r.to, r.amp});
            }
        }
    }
    out.validate();
    return out;
}

namespace detail {

// lemma12 composites: a pushed word plus the resume pointer into the
// composite underneath at push time (0 when nothing is underneath).
struct Composite {
    Stack word;
    std::size_t saved = 0;

    auto operator<=>(const Composite&) const = default;

    Symbol name() const {
        Symbol s = "[";
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (i) s += ".";
            s += word[i];
        }
        return s + "|" + std::to_string(saved) + "]";
    }
};

// control (q, m, held composite): m points at the current top symbol inside
// the held composite; the variant without a composite means an empty stack.
struct LCtrl {
    std::string q;
    std::size_t m = 0;
    Composite held;
    bool empty = true;

    auto operator<=>(const LCtrl&) const = default;

    std::string name() const {
        if (empty) return q + "|-";
        return q + "|" + std::to_string(m) + "|" + held.name();
    }
};

} // namespace detail

// Replace word-pushing rules by single-symbol actions over composite stack
// symbols; the top composite is carried in the control with a read pointer,
// so a push-word step stores at most one composite on the real stack.
inline Qpda lemma12_convert(const Qpda& p) {
    p.validate();
    if (p.unitary_claimed)
        throw ModeError("lemma12_convert: defined for generalized machines only");
    for (const auto& [a, rules] : p.transitions)
        for (const auto& r : rules)
            if (r.action.kind == ActionKind::pop && r.below != kBelowAny)
                throw ModeError("lemma12_convert: below-dependent pop rules; apply lemma11_expand first");

    using detail::Composite;
    using detail::LCtrl;

    // initial configurations, chunked into singleton composites
    struct InitCfg {
        LCtrl ctrl;
        std::vector<Composite> stack;
        Complex amp;
    };
    std::vector<InitCfg> inits;
    std::set<Composite> stackable;
    for (const auto& [cfg, amp] : p.init) {
        InitCfg ic;
        ic.amp = amp;
        if (cfg.stack.empty()) {
            ic.ctrl = {cfg.control, 0, {}, true};
        } else {
            ic.ctrl = {cfg.control, 1, {{cfg.stack[0]}, cfg.stack.size() >= 2 ? 1u : 0u}, false};
            for (std::size_t i = 1; i < cfg.stack.size(); ++i) {
                Composite c{{cfg.stack[i]}, i + 1 < cfg.stack.size() ? 1u : 0u};
                stackable.insert(c);
                ic.stack.push_back(c);
            }
        }
        inits.push_back(std::move(ic));
    }

    // successors of a control under one machine rule; `pop_boundary` targets
    // depend on the composite that surfaces, so they are resolved per-top
    struct Succ {
        LCtrl to;
        enum { stay, push_held, pop_boundary } kind = stay;
    };
    auto successors = [&](const LCtrl& c, const QpdaRule& r) {
        std::vector<Succ> out;
        if (r.from != c.q) return out;
        if (c.empty) {
            if (r.top != kTopEmpty) return out;
            switch (r.action.kind) {
            case ActionKind::push:
                out.push_back({{r.to, 1, {{r.action.word[0]}, 0}, false}, Succ::stay});
                break;
            case ActionKind::push_word:
                if (r.action.word.empty())
                    out.push_back({{r.to, 0, {}, true}, Succ::stay});
                else
                    out.push_back({{r.to, 1, {r.action.word, 0}, false}, Succ::stay});
                break;
            case ActionKind::stay:
                out.push_back({{r.to, 0, {}, true}, Succ::stay});
                break;
            case ActionKind::pop:
                break;
            }
            return out;
        }
        const Symbol t = c.held.word[c.m - 1];
        if (r.top != t) return out;
        const bool last = (c.m == c.held.word.size());
        StackAction act = r.action;
        if (act.kind == ActionKind::push_word && act.word.empty()) act = StackAction::Pop();
        switch (act.kind) {
        case ActionKind::push:
            out.push_back({{r.to, 1, {{act.word[0]}, c.m}, false}, Succ::push_held});
            break;
        case ActionKind::push_word:
            if (!last)
                out.push_back({{r.to, 1, {act.word, c.m + 1}, false}, Succ::push_held});
            else
                out.push_back({{r.to, 1, {act.word, c.held.saved}, false}, Succ::stay});
            break;
        case ActionKind::pop:
            if (!last)
                out.push_back({{r.to, c.m + 1, c.held, false}, Succ::stay});
            else if (c.held.saved == 0)
                out.push_back({{r.to, 0, {}, true}, Succ::stay});
            else
                out.push_back({{r.to, 0, {}, true}, Succ::pop_boundary});
            break;
        case ActionKind::stay:
            out.push_back({{r.to, c.m, c.held, false}, Succ::stay});
            break;
        }
        return out;
    };

    // fixpoint over reachable controls and stackable composites
    std::set<LCtrl> reached;
    for (const auto& ic : inits) reached.insert(ic.ctrl);
    for (bool grown = true; grown;) {
        grown = false;
        std::vector<LCtrl> work(reached.begin(), reached.end());
        while (!work.empty()) {
            LCtrl c = work.back();
            work.pop_back();
            for (const auto& [a, rules] : p.transitions)
                for (const auto& r : rules)
                    for (const auto& s : successors(c, r)) {
                        if (s.kind == Succ::push_held) {
                            if (stackable.insert(c.held).second) grown = true;
                        }
                        if (s.kind == Succ::pop_boundary) {
                            for (const auto& c2 : stackable) {
                                if (c.held.saved > c2.word.size()) continue;
                                LCtrl t2{s.to.q, c.held.saved, c2, false};
                                if (reached.insert(t2).second) work.push_back(t2);
                            }
                        } else if (reached.insert(s.to).second) {
                            work.push_back(s.to);
                        }
                        if (reached.size() > 100'000)
                            throw ScaleError("lemma12_convert: control-space explosion");
                    }
        }
    }

    Qpda out;
    std::set<std::string> ctrl_names;
    for (const auto& c : reached) ctrl_names.insert(c.name());
    for (const auto& q : p.controls) ctrl_names.insert(LCtrl{q, 0, {}, true}.name());
    out.controls.assign(ctrl_names.begin(), ctrl_names.end());
    out.input_alphabet = p.input_alphabet;
    for (const auto& c : stackable) out.stack_alphabet.push_back(c.name());
    if (out.stack_alphabet.empty()) out.stack_alphabet.push_back("[|0]"); // placeholder symbol
    out.acceptance = p.acceptance;
    out.unitary_claimed = false;
    out.pushes_words = false;

    for (const auto& ic : inits) {
        Stack st;
        for (const auto& c : ic.stack) st.push_back(c.name());
        out.init[{ic.ctrl.name(), std::move(st)}] += ic.amp;
    }
    for (const auto& v : p.accept_vectors) {
        CVec w(out.controls.size(), 0.0);
        for (std::size_t i = 0; i < p.controls.size(); ++i) {
            if (v[i] == 0.0) continue;
            w[out.control_index(LCtrl{p.controls[i], 0, {}, true}.name())] = v[i];
        }
        out.accept_vectors.push_back(std::move(w));
    }

    std::vector<Symbol> tops{kTopEmpty};
    for (const auto& c : stackable) tops.push_back(c.name());
    for (const auto& [a, rules] : p.transitions) {
        auto& target = out.transitions[a];
        for (const auto& c : reached)
            for (const auto& r : rules)
                for (const auto& s : successors(c, r)) {
                    if (s.kind == Succ::pop_boundary) {
                        for (const auto& c2 : stackable) {
                            if (c.held.saved > c2.word.size()) continue;
                            LCtrl t2{s.to.q, c.held.saved, c2, false};
                            target.push_back({c.name(), c2.name(), StackAction::Pop(), kBelowAny,
                                              t2.name(), r.amp});
                        }
                        continue;
                    }
                    const StackAction act = (s.kind == Succ::push_held)
                                                ? StackAction::Push(c.held.name())
                                                : StackAction::Stay();
                    if (c.empty) {
                        target.push_back({c.name(), kTopEmpty, act, kBelowAny, s.to.name(), r.amp});
                    } else {
                        // the rule ignores the real stack; emit one variant per top
                        for (const auto& tp : tops)
                            target.push_back({c.name(), tp, act, kBelowAny, s.to.name(), r.amp});
                    }
                }
    }
    out.validate();
    return out;
}

// Track stack emptiness in doubled controls so acceptance can ignore the
// stack: marked controls mean the stack is empty.
inline Qpda lemma13_convert(const Qpda& p) {
    p.validate();
    if (p.acceptance != QpdaAcceptance::empty_stack_and_control)
        throw ModeError("lemma13_convert: input must use empty-stack acceptance");
    auto marked = [](const std::string& q) { return q + "~"; };
    Qpda out;
    for (const auto& q : p.controls) out.controls.push_back(q);
    for (const auto& q : p.controls) out.controls.push_back(marked(q));
    out.input_alphabet = p.input_alphabet;
    out.stack_alphabet = p.stack_alphabet;
    out.acceptance = QpdaAcceptance::control_only;
    out.unitary_claimed = p.unitary_claimed;
    out.pushes_words = p.pushes_words;
    for (const auto& [cfg, amp] : p.init)
        out.init[{cfg.stack.empty() ? marked(cfg.control) : cfg.control, cfg.stack}] += amp;
    for (const auto& v : p.accept_vectors) {
        CVec w(out.controls.size(), 0.0);
        for (std::size_t i = 0; i < p.controls.size(); ++i)
            w[out.control_index(marked(p.controls[i]))] = v[i];
        out.accept_vectors.push_back(std::move(w));
    }

    for (const auto& [a, rules] : p.transitions) {
        auto& target = out.transitions[a];
        for (const auto& r : rules) {
            if (r.top == kTopEmpty) {
                if (r.action.kind == ActionKind::pop) continue;
                const bool stays_empty = r.action.kind == ActionKind::stay ||
                                         (r.action.kind == ActionKind::push_word && r.action.word.empty());
                target.push_back({marked(r.from), kTopEmpty, r.action, kBelowAny,
                                  stays_empty ? marked(r.to) : r.to, r.amp});
                continue;
            }
            if (r.action.kind == ActionKind::pop) {
                if (r.below == kBelowEmpty) {
                    target.push_back({r.from, r.top, r.action, kBelowEmpty, marked(r.to), r.amp});
                } else if (r.below == kBelowAny) {
                    for (const auto& u : p.stack_alphabet)
                        target.push_back({r.from, r.top, r.action, u, r.to, r.amp});
                    target.push_back({r.from, r.top, r.action, kBelowEmpty, marked(r.to), r.amp});
                } else {
                    target.push_back(r);
                }
                continue;
            }
            const bool empties = r.action.kind == ActionKind::push_word && r.action.word.empty();
            target.push_back({r.from, r.top, r.action, kBelowAny,
                              empties ? marked(r.to) : r.to, r.amp});
        }
    }
    // unreachable-sector identities keep the doubled matrices unitary
    for (const auto& a : p.input_alphabet) {
        auto& target = out.transitions[a];
        for (const auto& q : p.controls) {
            target.push_back({q, kTopEmpty, StackAction::Stay(), kBelowAny, q, 1.0});
            for (const auto& t : p.stack_alphabet)
                target.push_back({marked(q), t, StackAction::Stay(), kBelowAny, marked(q), 1.0});
        }
    }
    out.validate();
    return out;
}

// QPDA to a quantum grammar over triple variables [q, t, r]: the words that
// take the machine from control q with t on top to control r having popped t.
// The extra trailing [r, empty, accept] variables cover input read after the
// stack first empties.
inline QuantumGrammar qpda_to_grammar(const Qpda& p) {
    p.validate();
    if (p.unitary_claimed) throw ModeError("qpda_to_grammar: defined for generalized machines only");
    if (p.acceptance != QpdaAcceptance::empty_stack_and_control)
        throw ModeError("qpda_to_grammar: input must use empty-stack acceptance");
    for (const auto& [a, rules] : p.transitions)
        for (const auto& r : rules)
            if (r.action.kind == ActionKind::pop && r.below != kBelowAny)
                throw ModeError("qpda_to_grammar: below-dependent pop rules; apply lemma11_expand first");
    const std::vector<std::string> accept = p.accept_control_names();
    if (accept.empty()) throw ShapeError("qpda_to_grammar: no accept controls");

    QuantumGrammar g;
    g.terminals = p.input_alphabet;
    g.dimension = accept.size();
    auto triple = [](const std::string& q, const Symbol& t, const std::string& r) {
        return "[" + q + "," + t + "," + r + "]";
    };
    g.initial = "I";
    g.variables.push_back("I");
    for (const auto& q : p.controls)
        for (const auto& r : p.controls) {
            g.variables.push_back(triple(q, "", r));
            for (const auto& t : p.stack_alphabet) g.variables.push_back(triple(q, t, r));
        }

    for (const auto& q : p.controls)
        g.productions.push_back({triple(q, "", q), {}, CVec(g.dimension, 1.0)});

    // initial productions: pop the initial stack, then continue on empty
    for (const auto& [cfg, amp] : p.init) {
        for (std::size_t k = 0; k < accept.size(); ++k) {
            CVec amps(g.dimension, 0.0);
            amps[k] = amp;
            const std::size_t m = cfg.stack.size();
            std::vector<std::size_t> mid(m, 0); // controls after each pop
            for (;;) {
                std::vector<Symbol> rhs;
                std::string from = cfg.control;
                for (std::size_t i = 0; i < m; ++i) {
                    const std::string& to = p.controls[mid[i]];
                    rhs.push_back(triple(from, cfg.stack[i], to));
                    from = to;
                }
                rhs.push_back(triple(from, "", accept[k]));
                detail::add_merged(g.productions, {"I", std::move(rhs), amps});
                std::size_t i = 0;
                while (i < m && ++mid[i] == p.controls.size()) mid[i++] = 0;
                if (i == m) break;
            }
        }
    }

    // rule productions
    for (const auto& [a, rules] : p.transitions) {
        for (const auto& r : rules) {
            // effective pushed word relative to the matched top
            std::vector<Symbol> gamma;
            switch (r.action.kind) {
            case ActionKind::push:
                gamma = {r.action.word[0]};
                if (r.top != kTopEmpty) gamma.push_back(r.top);
                break;
            case ActionKind::push_word:
                gamma = r.action.word;
                break;
            case ActionKind::pop:
                break;
            case ActionKind::stay:
                if (r.top != kTopEmpty) gamma = {r.top};
                break;
            }
            const CVec amps(g.dimension, r.amp);
            const std::size_t l = gamma.size();
            for (const auto& endc : p.controls) {
                // free intermediate controls: after each popped gamma symbol,
                // except that a nonempty-top chain must end at endc itself
                const std::size_t free = (r.top == kTopEmpty) ? l : (l ? l - 1 : 0);
                std::vector<std::size_t> mid(free, 0);
                for (;;) {
                    std::vector<Symbol> rhs{a};
                    std::string from = r.to;
                    for (std::size_t i = 0; i < l; ++i) {
                        const std::string& to = (i < free) ? p.controls[mid[i]] : endc;
                        rhs.push_back(triple(from, gamma[i], to));
                        from = to;
                    }
                    std::string lhs;
                    if (r.top == kTopEmpty) {
                        // continue from empty stack toward endc
                        rhs.push_back(triple(from, "", endc));
                        lhs = triple(r.from, "", endc);
                    } else {
                        lhs = triple(r.from, r.top, from);
                    }
                    detail::add_merged(g.productions, {lhs, std::move(rhs), amps});
                    std::size_t i = 0;
                    while (i < free && ++mid[i] == p.controls.size()) mid[i++] = 0;
                    if (i == free) break;
                }
                if (r.top != kTopEmpty && l == 0) break; // lhs does not range over endc
            }
        }
    }
    detail::drop_zero_productions(g);
    detail::prune_unreachable(g);
    g.validate();
    return g;
}

// QCFL x QRL product: controls tensor the QFA's coordinates, amplitudes
// multiply entrywise.
inline Qpda tensor_with_qfa(const Qpda& p, const Qfa& q) {
    p.validate();
    q.validate();
    std::set<Symbol> pa(p.input_alphabet.begin(), p.input_alphabet.end());
    std::set<Symbol> qa(q.alphabet.begin(), q.alphabet.end());
    if (pa != qa) throw AlphabetError("tensor_with_qfa: input alphabets differ");
    auto pair_name = [](const std::string& c, std::size_t i) {
        return "(" + c + "|" + std::to_string(i) + ")";
    };
    Qpda out;
    for (const auto& c : p.controls)
        for (std::size_t i = 0; i < q.dim; ++i) out.controls.push_back(pair_name(c, i));
    out.input_alphabet = p.input_alphabet;
    out.stack_alphabet = p.stack_alphabet;
    out.acceptance = p.acceptance;
    out.unitary_claimed = p.unitary_claimed && !q.generalized;
    out.pushes_words = p.pushes_words;
    for (const auto& [cfg, amp] : p.init)
        for (std::size_t i = 0; i < q.dim; ++i) {
            if (q.init[i] == 0.0) continue;
            out.init[{pair_name(cfg.control, i), cfg.stack}] += amp * q.init[i];
        }
    for (const auto& v : p.accept_vectors)
        for (const auto& h : q.accept.vectors) {
            CVec w(out.controls.size(), 0.0);
            for (std::size_t c = 0; c < p.controls.size(); ++c)
                for (std::size_t i = 0; i < q.dim; ++i) w[c * q.dim + i] = v[c] * h[i];
            out.accept_vectors.push_back(std::move(w));
        }
    for (const auto& [a, rules] : p.transitions) {
        const CMat& u = q.transitions.at(a);
        auto& target = out.transitions[a];
        for (const auto& r : rules)
            for (std::size_t i = 0; i < q.dim; ++i)
                for (std::size_t j = 0; j < q.dim; ++j) {
                    if (u.at(i, j) == 0.0) continue;
                    target.push_back({pair_name(r.from, i), r.top, r.action, r.below,
                                      pair_name(r.to, j), r.amp * u.at(i, j)});
                }
    }
    out.validate();
    return out;
}

struct UnitarityReport {
    bool interior_unitary = false;
    double max_deviation = 0.0;
};

namespace detail {

inline std::size_t max_stack_growth(const Qpda& p) {
    std::size_t g = 0;
    for (const auto& [a, rules] : p.transitions)
        for (const auto& r : rules) {
            std::size_t w = 0;
            if (r.action.kind == ActionKind::push) w = 1;
            if (r.action.kind == ActionKind::push_word) w = r.action.word.size();
            g = std::max(g, w);
        }
    return g;
}

inline Complex sparse_inner(const SparseState& a, const SparseState& b) {
    Complex s = 0.0;
    for (const auto& [cfg, amp] : a) {
        auto it = b.find(cfg);
        if (it != b.end()) s += std::conj(amp) * it->second;
    }
    return s;
}

} // namespace detail

// Orthonormality of rule-matrix columns on the finite basis of stacks up to
// depth d; only interior columns, whose images stay inside the window, enter
// the verdict.
inline UnitarityReport check_unitarity_truncated(const Qpda& p, std::size_t depth) {
    p.validate();
    if (depth < 1) throw ShapeError("check_unitarity_truncated: depth must be at least 1");
    const std::size_t growth = detail::max_stack_growth(p);
    const std::size_t interior = depth >= growth ? depth - growth : 0;

    std::vector<Stack> stacks{{}};
    for (std::size_t l = 0, first = 0; l < interior; ++l) {
        const std::size_t last = stacks.size();
        for (std::size_t i = first; i < last; ++i)
            for (const auto& t : p.stack_alphabet) {
                Stack s{t};
                s.insert(s.end(), stacks[i].begin(), stacks[i].end());
                stacks.push_back(std::move(s));
            }
        first = last;
        if (stacks.size() > 100'000) throw ScaleError("check_unitarity_truncated: basis too large");
    }

    UnitarityReport rep;
    for (const auto& a : p.input_alphabet) {
        std::vector<SparseState> images;
        for (const auto& q : p.controls)
            for (const auto& s : stacks) {
                SparseState one{{{q, s}, 1.0}};
                images.push_back(qpda_step(p, one, a));
            }
        for (std::size_t i = 0; i < images.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j) {
                const Complex want = (i == j) ? Complex(1.0) : Complex(0.0);
                rep.max_deviation = std::max(
                    rep.max_deviation, std::abs(detail::sparse_inner(images[i], images[j]) - want));
            }
    }
    rep.interior_unitary = rep.max_deviation < kStructuralTol;
    return rep;
}

} // namespace qag
