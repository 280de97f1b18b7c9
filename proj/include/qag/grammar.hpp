#pragma once

// Quantum grammars: derivation-amplitude semantics, the unit-production /
// Chomsky / left-recursion / Greibach pipeline, closure and interference
// constructions, and the regular-grammar <-> QFA correspondence.

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "qag/qfa.hpp"

namespace qag {

constexpr double kAmpZeroTol = 1e-14;

struct Production {
    std::string lhs;
    std::vector<Symbol> rhs;
    CVec amps; // one amplitude per grammar dimension

    bool operator==(const Production&) const = default;
};

enum class GrammarForm { general, chomsky, greibach, regular };

struct QuantumGrammar {
    std::vector<std::string> variables;
    std::vector<Symbol> terminals;
    std::string initial;
    std::size_t dimension = 1;
    std::vector<Production> productions;

    bool is_variable(const std::string& s) const {
        return std::find(variables.begin(), variables.end(), s) != variables.end();
    }
    bool is_terminal(const std::string& s) const {
        return std::find(terminals.begin(), terminals.end(), s) != terminals.end();
    }

    void validate() const {
        if (dimension == 0) throw GrammarError("grammar: dimensionality must be positive");
        if (!is_variable(initial)) throw GrammarError("grammar: unknown initial variable " + initial);
        for (const auto& v : variables)
            if (is_terminal(v)) throw GrammarError("grammar: symbol both variable and terminal: " + v);
        std::set<std::pair<std::string, std::vector<Symbol>>> seen;
        for (const auto& p : productions) {
            if (!is_variable(p.lhs)) throw GrammarError("grammar: production lhs not a variable: " + p.lhs);
            if (p.amps.size() != dimension)
                throw GrammarError("grammar: amplitude vector length mismatch on " + p.lhs);
            if (!all_finite(p.amps)) throw GrammarError("grammar: non-finite amplitude on " + p.lhs);
            for (const auto& s : p.rhs)
                if (!is_variable(s) && !is_terminal(s))
                    throw GrammarError("grammar: unknown symbol in production body: " + s);
            if (!seen.insert({p.lhs, p.rhs}).second)
                throw GrammarError("grammar: duplicate production for " + p.lhs);
        }
    }
};

inline bool amps_zero(const CVec& amps) {
    for (const auto& c : amps)
        if (std::abs(c) > kAmpZeroTol) return false;
    return true;
}

// Epsilon productions are admitted only from a start variable that appears
// on no right-hand side; general amplitude-weighted epsilon elimination is
// deliberately not attempted.
inline bool start_epsilon_ok(const QuantumGrammar& g) {
    bool has_eps = false;
    for (const auto& p : g.productions)
        if (p.rhs.empty()) {
            if (p.lhs != g.initial) return false;
            has_eps = true;
        }
    if (!has_eps) return true;
    for (const auto& p : g.productions)
        for (const auto& s : p.rhs)
            if (s == g.initial) return false;
    return true;
}

inline bool is_greibach(const QuantumGrammar& g) {
    if (!start_epsilon_ok(g)) return false;
    for (const auto& p : g.productions) {
        if (p.rhs.empty()) continue; // separated start epsilon
        if (!g.is_terminal(p.rhs[0])) return false;
        for (std::size_t i = 1; i < p.rhs.size(); ++i)
            if (!g.is_variable(p.rhs[i])) return false;
    }
    return true;
}

inline bool is_chomsky(const QuantumGrammar& g) {
    if (!start_epsilon_ok(g)) return false;
    for (const auto& p : g.productions) {
        if (p.rhs.empty()) continue;
        if (p.rhs.size() == 1 && g.is_terminal(p.rhs[0])) continue;
        if (p.rhs.size() == 2 && g.is_variable(p.rhs[0]) && g.is_variable(p.rhs[1])) continue;
        return false;
    }
    return true;
}

inline bool is_regular(const QuantumGrammar& g) {
    for (const auto& p : g.productions) {
        std::size_t i = 0;
        while (i < p.rhs.size() && g.is_terminal(p.rhs[i])) ++i;
        if (i + 1 < p.rhs.size()) return false; // at most one trailing symbol
        if (i + 1 == p.rhs.size() && !g.is_variable(p.rhs[i])) return false;
    }
    return true;
}

inline GrammarForm classify(const QuantumGrammar& g) {
    if (is_greibach(g)) return GrammarForm::greibach;
    if (is_chomsky(g)) return GrammarForm::chomsky;
    if (is_regular(g)) return GrammarForm::regular;
    return GrammarForm::general;
}

namespace detail {

inline std::set<std::string> nullable_variables(const QuantumGrammar& g) {
    std::set<std::string> nullable;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& p : g.productions) {
            if (amps_zero(p.amps) || nullable.count(p.lhs)) continue;
            bool all_null = true;
            for (const auto& s : p.rhs)
                if (!g.is_variable(s) || !nullable.count(s)) {
                    all_null = false;
                    break;
                }
            if (all_null) {
                nullable.insert(p.lhs);
                changed = true;
            }
        }
    }
    return nullable;
}

inline std::map<std::string, std::size_t> min_yields(const QuantumGrammar& g) {
    constexpr std::size_t INF = 1u << 20;
    std::map<std::string, std::size_t> yield;
    for (const auto& v : g.variables) yield[v] = INF;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& p : g.productions) {
            if (amps_zero(p.amps)) continue;
            std::size_t y = 0;
            for (const auto& s : p.rhs)
                y = std::min<std::size_t>(INF, y + (g.is_terminal(s) ? 1 : yield[s]));
            if (y < yield[p.lhs]) {
                yield[p.lhs] = y;
                changed = true;
            }
        }
    }
    return yield;
}

// A cycle of nonzero productions that consumes no terminal and whose side
// symbols all derive epsilon makes the derivation sum infinite; reject it.
inline void check_termination(const QuantumGrammar& g) {
    const auto nullable = nullable_variables(g);
    std::map<std::string, std::set<std::string>> edges;
    for (const auto& p : g.productions) {
        if (amps_zero(p.amps)) continue;
        bool has_terminal = false;
        for (const auto& s : p.rhs) has_terminal |= g.is_terminal(s);
        if (has_terminal) continue;
        for (std::size_t i = 0; i < p.rhs.size(); ++i) {
            bool others_nullable = true;
            for (std::size_t j = 0; j < p.rhs.size(); ++j)
                if (j != i && !nullable.count(p.rhs[j])) {
                    others_nullable = false;
                    break;
                }
            if (others_nullable) edges[p.lhs].insert(p.rhs[i]);
        }
    }
    std::map<std::string, int> color; // 0 white, 1 gray, 2 black
    std::vector<std::pair<std::string, std::size_t>> stack;
    for (const auto& v : g.variables) {
        if (color[v]) continue;
        stack.push_back({v, 0});
        color[v] = 1;
        while (!stack.empty()) {
            auto& [u, idx] = stack.back();
            const auto& succ = edges[u];
            if (idx >= succ.size()) {
                color[u] = 2;
                stack.pop_back();
                continue;
            }
            auto it = succ.begin();
            std::advance(it, idx++);
            if (color[*it] == 1)
                throw GrammarError("grammar: divergent non-producing cycle through " + *it);
            if (color[*it] == 0) {
                color[*it] = 1;
                stack.push_back({*it, 0});
            }
        }
    }
}

struct LeftmostSearch {
    const QuantumGrammar& g;
    const Word& w;
    const std::map<std::string, std::size_t> yields;
    std::map<std::string, std::vector<const Production*>> by_lhs;
    CVec result;
    std::size_t budget = 5'000'000;

    LeftmostSearch(const QuantumGrammar& grammar, const Word& word)
        : g(grammar), w(word), yields(min_yields(grammar)), result(grammar.dimension, 0.0) {
        for (const auto& p : g.productions)
            if (!amps_zero(p.amps)) by_lhs[p.lhs].push_back(&p);
    }

    std::size_t form_yield(const std::vector<Symbol>& form, std::size_t from) const {
        std::size_t y = 0;
        for (std::size_t i = from; i < form.size(); ++i)
            y += g.is_terminal(form[i]) ? 1 : yields.at(form[i]);
        return y;
    }

    void run() {
        std::vector<Symbol> form{g.initial};
        CVec amp(g.dimension, 1.0);
        dfs(0, form, 0, amp);
    }

    // pos: symbols of w already matched; at: first unprocessed index of form.
    void dfs(std::size_t pos, std::vector<Symbol>& form, std::size_t at, const CVec& amp) {
        if (budget-- == 0) throw ScaleError("derive_amplitudes: derivation search budget exceeded");
        while (at < form.size() && g.is_terminal(form[at])) {
            if (pos >= w.size() || form[at] != w[pos]) return;
            ++pos;
            ++at;
        }
        if (at == form.size()) {
            if (pos == w.size())
                for (std::size_t k = 0; k < g.dimension; ++k) result[k] += amp[k];
            return;
        }
        const std::string v = form[at];
        auto it = by_lhs.find(v);
        if (it == by_lhs.end()) return;
        for (const Production* p : it->second) {
            std::vector<Symbol> next(form.begin() + static_cast<std::ptrdiff_t>(at + 1), form.end());
            next.insert(next.begin(), p->rhs.begin(), p->rhs.end());
            if (form_yield(next, 0) > w.size() - pos) continue;
            CVec namp(g.dimension);
            bool nonzero = false;
            for (std::size_t k = 0; k < g.dimension; ++k) {
                namp[k] = amp[k] * p->amps[k];
                nonzero |= std::abs(namp[k]) > 1e-300;
            }
            if (!nonzero) continue;
            dfs(pos, next, 0, namp);
        }
    }
};

// CYK-style span dynamic program for Chomsky-form grammars.
struct SpanTable {
    const QuantumGrammar& g;
    const Word& w;
    std::map<std::tuple<std::string, std::size_t, std::size_t>, CVec> memo;

    const CVec& span(const std::string& v, std::size_t i, std::size_t j) {
        auto key = std::make_tuple(v, i, j);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        CVec out(g.dimension, 0.0);
        if (j - i == 1) {
            for (const auto& p : g.productions)
                if (p.lhs == v && p.rhs.size() == 1 && p.rhs[0] == w[i])
                    for (std::size_t k = 0; k < g.dimension; ++k) out[k] += p.amps[k];
        } else {
            for (const auto& p : g.productions) {
                if (p.lhs != v || p.rhs.size() != 2) continue;
                for (std::size_t m = i + 1; m < j; ++m) {
                    const CVec& left = span(p.rhs[0], i, m);
                    const CVec& right = span(p.rhs[1], m, j);
                    for (std::size_t k = 0; k < g.dimension; ++k)
                        out[k] += p.amps[k] * left[k] * right[k];
                }
            }
        }
        return memo.emplace(key, std::move(out)).first->second;
    }
};

inline std::string fresh_name(const QuantumGrammar& g, std::string base) {
    while (g.is_variable(base) || g.is_terminal(base)) base += "'";
    return base;
}

inline void add_merged(std::vector<Production>& out, Production p) {
    for (auto& q : out)
        if (q.lhs == p.lhs && q.rhs == p.rhs) {
            for (std::size_t k = 0; k < q.amps.size(); ++k) q.amps[k] += p.amps[k];
            return;
        }
    out.push_back(std::move(p));
}

inline void drop_zero_productions(QuantumGrammar& g) {
    std::erase_if(g.productions, [](const Production& p) { return amps_zero(p.amps); });
}

inline void prune_unreachable(QuantumGrammar& g) {
    std::set<std::string> reach{g.initial};
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& p : g.productions) {
            if (!reach.count(p.lhs)) continue;
            for (const auto& s : p.rhs)
                if (g.is_variable(s) && reach.insert(s).second) changed = true;
        }
    }
    std::erase_if(g.productions, [&](const Production& p) { return !reach.count(p.lhs); });
    std::erase_if(g.variables, [&](const std::string& v) { return !reach.count(v); });
}

} // namespace detail

// Sum over all leftmost derivations I => w of the amplitude products,
// one component per grammar dimension.
inline CVec derive_amplitudes(const QuantumGrammar& g, const Word& w) {
    g.validate();
    detail::check_termination(g);
    for (const auto& a : w)
        if (!g.is_terminal(a)) throw AlphabetError("derive_amplitudes: unknown terminal " + a);

    if (is_chomsky(g)) {
        CVec out(g.dimension, 0.0);
        if (w.empty()) {
            for (const auto& p : g.productions)
                if (p.lhs == g.initial && p.rhs.empty())
                    for (std::size_t k = 0; k < g.dimension; ++k) out[k] += p.amps[k];
            return out;
        }
        detail::SpanTable table{g, w, {}};
        return table.span(g.initial, 0, w.size());
    }
    detail::LeftmostSearch search(g, w);
    search.run();
    return search.result;
}

inline double f_of_word(const QuantumGrammar& g, const Word& w) {
    return norm2(derive_amplitudes(g, w));
}

// Resum unit-production chains through (1 - M)^{-1}, per dimension.
inline QuantumGrammar eliminate_unit_productions(const QuantumGrammar& g) {
    g.validate();
    const std::size_t m = g.variables.size();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < m; ++i) idx[g.variables[i]] = i;

    std::vector<CMat> inv;
    for (std::size_t k = 0; k < g.dimension; ++k) {
        CMat one_minus = CMat::identity(m);
        for (const auto& p : g.productions)
            if (p.rhs.size() == 1 && g.is_variable(p.rhs[0]))
                one_minus.at(idx[p.lhs], idx[p.rhs[0]]) -= p.amps[k];
        try {
            inv.push_back(inverse(one_minus, 1e-9));
        } catch (const ShapeError&) {
            throw GrammarError("eliminate_unit_productions: divergent unit-production amplitudes");
        }
    }

    QuantumGrammar out = g;
    out.productions.clear();
    for (const auto& p : g.productions) {
        if (p.rhs.size() == 1 && g.is_variable(p.rhs[0])) continue;
        for (std::size_t i = 0; i < m; ++i) {
            CVec amps(g.dimension, 0.0);
            bool nonzero = false;
            for (std::size_t k = 0; k < g.dimension; ++k) {
                amps[k] = inv[k].at(i, idx[p.lhs]) * p.amps[k];
                nonzero |= std::abs(amps[k]) > kAmpZeroTol;
            }
            if (!nonzero) continue;
            detail::add_merged(out.productions, {g.variables[i], p.rhs, std::move(amps)});
        }
    }
    detail::drop_zero_productions(out);
    out.validate();
    return out;
}

// Chomsky normal form: wrap terminals in long bodies, then binarize.
// The whole original amplitude rides on the first production of each chain.
inline QuantumGrammar to_chomsky(const QuantumGrammar& g) {
    g.validate();
    for (const auto& p : g.productions)
        if (p.rhs.size() == 1 && g.is_variable(p.rhs[0]))
            throw GrammarError("to_chomsky: eliminate unit productions first");
    if (!start_epsilon_ok(g))
        throw GrammarError("to_chomsky: epsilon production outside a separated start variable");

    QuantumGrammar out = g;
    out.productions.clear();
    const CVec ones(g.dimension, 1.0);

    std::map<Symbol, std::string> wrapper;
    auto wrap = [&](const Symbol& a) {
        auto it = wrapper.find(a);
        if (it != wrapper.end()) return it->second;
        std::string name = detail::fresh_name(out, "A_" + a);
        out.variables.push_back(name);
        out.productions.push_back({name, {a}, ones});
        wrapper[a] = name;
        return name;
    };

    for (const auto& p : g.productions) {
        if (p.rhs.size() <= 1) {
            out.productions.push_back(p);
            continue;
        }
        std::vector<std::string> body;
        for (const auto& s : p.rhs) body.push_back(g.is_terminal(s) ? wrap(s) : s);
        std::string lhs = p.lhs;
        CVec amps = p.amps;
        while (body.size() > 2) {
            std::string d = detail::fresh_name(out, p.lhs + "#");
            out.variables.push_back(d);
            out.productions.push_back({lhs, {body[0], d}, amps});
            body.erase(body.begin());
            lhs = d;
            amps = ones;
        }
        out.productions.push_back({lhs, body, amps});
    }
    out.validate();
    return out;
}

// Immediate left recursion v -> v alpha becomes right recursion through a
// fresh tail variable, amplitudes placed per the standard construction.
inline QuantumGrammar eliminate_left_recursion(const QuantumGrammar& g) {
    g.validate();
    QuantumGrammar out = g;
    for (const auto& v : g.variables) {
        std::vector<Production> rec, other, rest;
        for (const auto& p : out.productions) {
            if (p.lhs != v) {
                rest.push_back(p);
            } else if (!p.rhs.empty() && p.rhs[0] == v) {
                if (p.rhs.size() == 1)
                    throw GrammarError("eliminate_left_recursion: unit self-production on " + v);
                rec.push_back(p);
            } else {
                other.push_back(p);
            }
        }
        if (rec.empty()) continue;
        std::string b = detail::fresh_name(out, v + "~");
        out.variables.push_back(b);
        std::vector<Production> rebuilt = rest;
        for (const auto& p : other) {
            detail::add_merged(rebuilt, p);
            if (p.rhs.empty()) continue; // separated start epsilon never recurses
            auto with_tail = p.rhs;
            with_tail.push_back(b);
            detail::add_merged(rebuilt, {v, with_tail, p.amps});
        }
        for (const auto& p : rec) {
            std::vector<Symbol> alpha(p.rhs.begin() + 1, p.rhs.end());
            detail::add_merged(rebuilt, {b, alpha, p.amps});
            alpha.push_back(b);
            detail::add_merged(rebuilt, {b, alpha, p.amps});
        }
        out.productions = std::move(rebuilt);
    }
    out.validate();
    return out;
}

namespace detail {

// Replace every production of `v` whose body starts with `lead` by its
// expansions through lead's productions, multiplying amplitudes.
inline void substitute_leading(QuantumGrammar& g, const std::string& v, const std::string& lead) {
    std::vector<Production> next;
    for (const auto& p : g.productions) {
        if (p.lhs != v || p.rhs.empty() || p.rhs[0] != lead) {
            next.push_back(p);
            continue;
        }
        for (const auto& q : g.productions) {
            if (q.lhs != lead || q.rhs.empty()) continue;
            std::vector<Symbol> body = q.rhs;
            body.insert(body.end(), p.rhs.begin() + 1, p.rhs.end());
            CVec amps(g.dimension);
            for (std::size_t k = 0; k < g.dimension; ++k) amps[k] = p.amps[k] * q.amps[k];
            if (!amps_zero(amps)) add_merged(next, {v, std::move(body), std::move(amps)});
        }
    }
    g.productions = std::move(next);
}

} // namespace detail

// Full Greibach pipeline: unit elimination, Chomsky form, ordered
// substitution with left-recursion removal, then back substitution.
inline QuantumGrammar to_greibach(const QuantumGrammar& g) {
    QuantumGrammar cur = eliminate_unit_productions(g);
    detail::drop_zero_productions(cur);
    detail::prune_unreachable(cur);
    if (!start_epsilon_ok(cur))
        throw GrammarError("to_greibach: epsilon production outside a separated start variable");
    if (is_greibach(cur)) return cur;
    cur = to_chomsky(cur);

    const std::vector<std::string> order = cur.variables; // fixed processing order
    std::set<std::string> ordered(order.begin(), order.end());
    std::map<std::string, std::size_t> rank;
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

    for (std::size_t i = 0; i < order.size(); ++i) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& p : cur.productions) {
                if (p.lhs != order[i] || p.rhs.empty()) continue;
                const auto& lead = p.rhs[0];
                if (cur.is_variable(lead) && ordered.count(lead) && rank[lead] < i) {
                    detail::substitute_leading(cur, order[i], lead);
                    changed = true;
                    break;
                }
            }
        }
        cur = eliminate_left_recursion(cur);
    }

    // back substitution: higher-ranked variables are terminal-leading first
    for (std::size_t i = order.size(); i-- > 0;) {
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& p : cur.productions) {
                if (p.lhs != order[i] || p.rhs.empty()) continue;
                if (cur.is_variable(p.rhs[0])) {
                    detail::substitute_leading(cur, order[i], p.rhs[0]);
                    changed = true;
                    break;
                }
            }
        }
    }
    // tail variables introduced by left-recursion removal
    for (const auto& v : cur.variables) {
        if (ordered.count(v)) continue;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& p : cur.productions) {
                if (p.lhs != v || p.rhs.empty()) continue;
                if (cur.is_variable(p.rhs[0])) {
                    detail::substitute_leading(cur, v, p.rhs[0]);
                    changed = true;
                    break;
                }
            }
        }
    }

    detail::drop_zero_productions(cur);
    detail::prune_unreachable(cur);
    if (!is_greibach(cur)) throw GrammarError("to_greibach: pipeline failed to reach Greibach form");
    cur.validate();
    return cur;
}

namespace detail {

inline QuantumGrammar rename_variables(const QuantumGrammar& g, const std::string& suffix) {
    QuantumGrammar out = g;
    for (auto& v : out.variables) v += suffix;
    out.initial += suffix;
    for (auto& p : out.productions) {
        p.lhs += suffix;
        for (auto& s : p.rhs)
            if (g.is_variable(s)) s += suffix;
    }
    return out;
}

inline void require_same_terminals(const QuantumGrammar& a, const QuantumGrammar& b, const char* op) {
    std::set<Symbol> ta(a.terminals.begin(), a.terminals.end());
    std::set<Symbol> tb(b.terminals.begin(), b.terminals.end());
    if (ta != tb) throw AlphabetError(std::string(op) + ": terminal alphabets differ");
}

} // namespace detail

// Disjoint union with a fresh start; amplitudes live in separate coordinate
// blocks so f = f1 + f2.
inline QuantumGrammar grammar_sum(const QuantumGrammar& g1, const QuantumGrammar& g2) {
    detail::require_same_terminals(g1, g2, "grammar_sum");
    const QuantumGrammar a = detail::rename_variables(g1, ":1");
    const QuantumGrammar b = detail::rename_variables(g2, ":2");
    QuantumGrammar out;
    out.terminals = g1.terminals;
    out.dimension = g1.dimension + g2.dimension;
    out.variables = a.variables;
    out.variables.insert(out.variables.end(), b.variables.begin(), b.variables.end());
    std::string k = "K";
    while (std::find(out.variables.begin(), out.variables.end(), k) != out.variables.end() ||
           std::find(out.terminals.begin(), out.terminals.end(), k) != out.terminals.end())
        k += "'";
    out.variables.push_back(k);
    out.initial = k;
    const CVec ones(out.dimension, 1.0);
    out.productions.push_back({k, {a.initial}, ones});
    out.productions.push_back({k, {b.initial}, ones});
    for (const auto& p : a.productions) {
        CVec amps(out.dimension, 0.0);
        for (std::size_t i = 0; i < g1.dimension; ++i) amps[i] = p.amps[i];
        out.productions.push_back({p.lhs, p.rhs, std::move(amps)});
    }
    for (const auto& p : b.productions) {
        CVec amps(out.dimension, 0.0);
        for (std::size_t i = 0; i < g2.dimension; ++i) amps[g1.dimension + i] = p.amps[i];
        out.productions.push_back({p.lhs, p.rhs, std::move(amps)});
    }
    out.validate();
    return out;
}

namespace detail {

inline QuantumGrammar interference_union(const std::vector<const QuantumGrammar*>& gs,
                                         const std::vector<Complex>& weights, const char* op) {
    for (const auto* g : gs)
        if (g->dimension != 1) throw ShapeError(std::string(op) + ": grammars must have dimensionality 1");
    for (std::size_t i = 1; i < gs.size(); ++i) require_same_terminals(*gs[0], *gs[i], op);
    QuantumGrammar out;
    out.terminals = gs[0]->terminals;
    out.dimension = 1;
    std::vector<QuantumGrammar> renamed;
    for (std::size_t i = 0; i < gs.size(); ++i) {
        renamed.push_back(rename_variables(*gs[i], ":" + std::to_string(i + 1)));
        out.variables.insert(out.variables.end(), renamed.back().variables.begin(),
                             renamed.back().variables.end());
    }
    std::string root = "I";
    while (std::find(out.variables.begin(), out.variables.end(), root) != out.variables.end() ||
           std::find(out.terminals.begin(), out.terminals.end(), root) != out.terminals.end())
        root += "'";
    out.variables.push_back(root);
    out.initial = root;
    for (std::size_t i = 0; i < renamed.size(); ++i) {
        out.productions.push_back({root, {renamed[i].initial}, {weights[i]}});
        for (const auto& p : renamed[i].productions) out.productions.push_back(p);
    }
    out.validate();
    return out;
}

} // namespace detail

// Amplitudes 1 and -1: words in exactly one language keep probability 1,
// common derivations cancel.
inline QuantumGrammar symmetric_difference(const QuantumGrammar& g1, const QuantumGrammar& g2) {
    return detail::interference_union({&g1, &g2}, {Complex(1.0), Complex(-1.0)}, "symmetric_difference");
}

// Cube roots of unity: probability 1 on one-or-two membership, 0 on none/all.
inline QuantumGrammar three_way_interference(const QuantumGrammar& g1, const QuantumGrammar& g2,
                                             const QuantumGrammar& g3) {
    const double t = 2.0 * std::numbers::pi / 3.0;
    return detail::interference_union(
        {&g1, &g2, &g3},
        {Complex(1.0), std::polar(1.0, t), std::polar(1.0, 2.0 * t)}, "three_way_interference");
}

// Classical unambiguous grammar as a dimension-1 quantum grammar with all
// allowed productions at amplitude 1 (unambiguity is the caller's claim).
inline QuantumGrammar embed_unambiguous(std::vector<std::string> variables,
                                        std::vector<Symbol> terminals, std::string initial,
                                        const std::vector<std::pair<std::string, std::vector<Symbol>>>& prods) {
    QuantumGrammar g;
    g.variables = std::move(variables);
    g.terminals = std::move(terminals);
    g.initial = std::move(initial);
    g.dimension = 1;
    for (const auto& [lhs, rhs] : prods) g.productions.push_back({lhs, rhs, {Complex(1.0)}});
    g.validate();
    return g;
}

// Split multi-terminal bodies of a regular grammar into |w| = 1 chains.
inline QuantumGrammar normalize_regular(const QuantumGrammar& g) {
    g.validate();
    if (!is_regular(g)) throw GrammarError("normalize_regular: grammar is not regular");
    QuantumGrammar cur = g;
    bool has_units = false;
    for (const auto& p : cur.productions)
        has_units |= (p.rhs.size() == 1 && cur.is_variable(p.rhs[0]));
    if (has_units) cur = eliminate_unit_productions(cur);
    if (!start_epsilon_ok(cur))
        throw GrammarError("normalize_regular: epsilon production outside a separated start variable");

    QuantumGrammar out = cur;
    out.productions.clear();
    const CVec ones(cur.dimension, 1.0);
    for (const auto& p : cur.productions) {
        std::size_t nterm = 0;
        while (nterm < p.rhs.size() && cur.is_terminal(p.rhs[nterm])) ++nterm;
        if (nterm <= 1) {
            out.productions.push_back(p);
            continue;
        }
        std::string lhs = p.lhs;
        CVec amps = p.amps;
        for (std::size_t i = 0; i + 1 < nterm; ++i) {
            std::string next = detail::fresh_name(out, p.lhs + "#");
            out.variables.push_back(next);
            out.productions.push_back({lhs, {p.rhs[i], next}, amps});
            lhs = next;
            amps = ones;
        }
        std::vector<Symbol> last{p.rhs[nterm - 1]};
        if (nterm < p.rhs.size()) last.push_back(p.rhs[nterm]);
        out.productions.push_back({lhs, last, amps});
    }
    out.validate();
    return out;
}

// Regular grammar to a generalized QFA: one (m+1)-dimensional block per
// grammar dimension, acceptance on each block's last coordinate; blocks are
// direct-summed so a single machine computes sum_k |c_k(w)|^2.
inline Qfa regular_to_qfa(const QuantumGrammar& g) {
    g.validate();
    if (!is_regular(g)) throw GrammarError("regular_to_qfa: grammar is not regular");
    const std::size_t m = g.variables.size();
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < m; ++i) idx[g.variables[i]] = i;

    // admissible bodies: a v, a, epsilon, and unit productions from the start
    for (const auto& p : g.productions) {
        if (p.rhs.empty()) continue;
        if (p.rhs.size() == 1 && g.is_terminal(p.rhs[0])) continue;
        if (p.rhs.size() == 2 && g.is_terminal(p.rhs[0]) && g.is_variable(p.rhs[1])) continue;
        if (p.rhs.size() == 1 && g.is_variable(p.rhs[0]) && p.lhs == g.initial) continue;
        throw GrammarError("regular_to_qfa: normalize the grammar first (body of " + p.lhs + ")");
    }

    const std::size_t n = g.dimension;
    Qfa out;
    out.alphabet = g.terminals;
    out.dim = n * (m + 1);
    out.generalized = true;
    out.init.assign(out.dim, 0.0);
    out.accept.ambient_dim = out.dim;

    // epsilon amplitudes per variable and dimension
    auto eps_amp = [&](std::size_t j, std::size_t k) {
        Complex c = 0.0;
        for (const auto& p : g.productions)
            if (p.rhs.empty() && idx.at(p.lhs) == j) c += p.amps[k];
        return c;
    };

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t base = k * (m + 1);
        out.init[base + idx.at(g.initial)] += 1.0;
        for (const auto& p : g.productions) {
            if (p.rhs.size() == 1 && g.is_variable(p.rhs[0]) && p.lhs == g.initial) {
                const std::size_t j = idx.at(p.rhs[0]);
                out.init[base + j] += p.amps[k];
                out.init[base + m] += p.amps[k] * eps_amp(j, k);
            }
            if (p.rhs.empty() && p.lhs == g.initial) out.init[base + m] += p.amps[k];
        }
        CVec h(out.dim, 0.0);
        h[base + m] = 1.0;
        out.accept.vectors.push_back(std::move(h));
    }

    for (const auto& a : g.terminals) {
        CMat u(out.dim, out.dim);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t base = k * (m + 1);
            for (const auto& p : g.productions) {
                if (p.rhs.size() == 2 && p.rhs[0] == a) {
                    const std::size_t i = idx.at(p.lhs), j = idx.at(p.rhs[1]);
                    u.at(base + i, base + j) += p.amps[k];
                    u.at(base + i, base + m) += p.amps[k] * eps_amp(j, k);
                }
                if (p.rhs.size() == 1 && p.rhs[0] == a && g.is_terminal(p.rhs[0]))
                    u.at(base + idx.at(p.lhs), base + m) += p.amps[k];
            }
        }
        out.transitions[a] = std::move(u);
    }
    out.validate();
    return out;
}

// QFA to a regular quantum grammar; only the start and epsilon productions
// carry structure beyond the transition matrices.
inline QuantumGrammar qfa_to_regular_grammar(const Qfa& q) {
    q.validate();
    QuantumGrammar g;
    g.terminals = q.alphabet;
    const std::size_t hk = q.accept.vectors.size();
    g.dimension = std::max<std::size_t>(hk, 1);
    g.initial = "I";
    g.variables.push_back("I");
    std::vector<std::string> names;
    for (std::size_t j = 0; j < q.dim; ++j) {
        names.push_back("s" + std::to_string(j));
        g.variables.push_back(names.back());
    }
    for (std::size_t j = 0; j < q.dim; ++j) {
        if (q.init[j] == 0.0) continue;
        g.productions.push_back({"I", {names[j]}, CVec(g.dimension, q.init[j])});
    }
    for (const auto& a : q.alphabet) {
        const CMat& u = q.transitions.at(a);
        for (std::size_t i = 0; i < q.dim; ++i)
            for (std::size_t j = 0; j < q.dim; ++j) {
                if (u.at(i, j) == 0.0) continue;
                g.productions.push_back({names[i], {a, names[j]}, CVec(g.dimension, u.at(i, j))});
            }
    }
    for (std::size_t j = 0; j < q.dim; ++j) {
        CVec amps(g.dimension, 0.0);
        bool nonzero = false;
        for (std::size_t k = 0; k < hk; ++k) {
            amps[k] = q.accept.vectors[k][j];
            nonzero |= amps[k] != 0.0;
        }
        if (nonzero) g.productions.push_back({names[j], {}, std::move(amps)});
    }
    g.validate();
    return g;
}

} // namespace qag
