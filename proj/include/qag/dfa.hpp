#pragma once

// Classical deterministic finite automata, used as embedding sources and as
// oracles against the quantum machines.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "qag/errors.hpp"

namespace qag {

using Symbol = std::string;
using Word = std::vector<Symbol>;

// Single-character symbols from a plain string, e.g. "abab" -> {a,b,a,b}.
inline Word word_from_chars(const std::string& s) {
    Word w;
    w.reserve(s.size());
    for (char c : s) w.emplace_back(1, c);
    return w;
}

struct Dfa {
    std::vector<std::string> states;
    std::vector<Symbol> alphabet;
    std::map<std::pair<std::string, Symbol>, std::string> delta;
    std::string init;
    std::set<std::string> accepting;

    void validate() const {
        for (const auto& s : states)
            for (const auto& a : alphabet)
                if (!delta.count({s, a}))
                    throw ParseError("dfa: transition function not total at (" + s + "," + a + ")");
        bool found = false;
        for (const auto& s : states) found |= (s == init);
        if (!found) throw ParseError("dfa: unknown initial state " + init);
    }

    bool operator==(const Dfa&) const = default;
};

inline bool dfa_accepts(const Dfa& d, const Word& w) {
    std::string s = d.init;
    for (const auto& a : w) {
        auto it = d.delta.find({s, a});
        if (it == d.delta.end()) throw AlphabetError("dfa: unknown symbol " + a);
        s = it->second;
    }
    return d.accepting.count(s) > 0;
}

// Reachable-state removal followed by iterative partition refinement.
inline Dfa minimize(const Dfa& d) {
    d.validate();
    std::set<std::string> reach{d.init};
    std::vector<std::string> queue{d.init};
    while (!queue.empty()) {
        std::string s = queue.back();
        queue.pop_back();
        for (const auto& a : d.alphabet) {
            const std::string& t = d.delta.at({s, a});
            if (reach.insert(t).second) queue.push_back(t);
        }
    }

    std::map<std::string, int> cls;
    for (const auto& s : reach) cls[s] = d.accepting.count(s) ? 1 : 0;
    for (;;) {
        std::map<std::vector<int>, int> sig_to_cls;
        std::map<std::string, int> next;
        for (const auto& s : reach) {
            std::vector<int> sig{cls[s]};
            for (const auto& a : d.alphabet) sig.push_back(cls[d.delta.at({s, a})]);
            auto [it, fresh] = sig_to_cls.emplace(sig, static_cast<int>(sig_to_cls.size()));
            (void)fresh;
            next[s] = it->second;
        }
        if (next == cls) break;
        cls = next;
    }

    std::map<int, std::string> rep;
    for (const auto& s : reach)
        if (!rep.count(cls[s])) rep[cls[s]] = s;

    Dfa m;
    for (const auto& [c, s] : rep) {
        m.states.push_back("c" + std::to_string(c));
        if (d.accepting.count(s)) m.accepting.insert("c" + std::to_string(c));
    }
    m.alphabet = d.alphabet;
    m.init = "c" + std::to_string(cls[d.init]);
    for (const auto& [c, s] : rep)
        for (const auto& a : d.alphabet)
            m.delta[{"c" + std::to_string(c), a}] = "c" + std::to_string(cls[d.delta.at({s, a})]);
    return m;
}

// True iff the transition monoid of the minimal automaton is a group,
// i.e. every letter acts as a bijection on the minimal machine's states.
// A false result certifies the characteristic function is not a unitary QRL.
inline bool monoid_is_group(const Dfa& d) {
    const Dfa m = minimize(d);
    for (const auto& a : m.alphabet) {
        std::set<std::string> image;
        for (const auto& s : m.states) image.insert(m.delta.at({s, a}));
        if (image.size() != m.states.size()) return false;
    }
    return true;
}

} // namespace qag
