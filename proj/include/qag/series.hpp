#pragma once

// Truncated generating functions in one commuting variable: length-indexed
// coefficients of quantum languages via the bilinear form, Hadamard products,
// and the synchronous fixed point that sums grammar amplitudes by length.

#include <map>
#include <string>
#include <vector>

#include "qag/bilinear.hpp"
#include "qag/grammar.hpp"

namespace qag {

struct TruncatedSeries {
    CVec coeff; // index = word length / degree, 0..cutoff inclusive

    std::size_t cutoff() const { return coeff.empty() ? 0 : coeff.size() - 1; }

    bool operator==(const TruncatedSeries&) const = default;
};

// c_n = pi . (sum_a M_a)^n . eta: the total acceptance weight of length n.
inline TruncatedSeries qfa_length_coefficients(const Qfa& q, std::size_t max_len) {
    const BilinearForm b = to_bilinear(q);
    CMat total(b.dim, b.dim);
    for (const auto& [a, m] : b.matrices)
        for (std::size_t i = 0; i < b.dim * b.dim; ++i) total.a[i] += m.a[i];
    TruncatedSeries s;
    CVec v = b.pi;
    for (std::size_t n = 0; n <= max_len; ++n) {
        s.coeff.push_back(pair_bilinear(v, b.eta));
        v = apply_row(v, total);
    }
    return s;
}

// sum over all words of length n of f(w), by explicit enumeration; the
// independent oracle for qfa_length_coefficients. Works for any word
// evaluator (QFA, grammar, QPDA, DFA indicator).
template <typename Eval>
inline TruncatedSeries quantum_language_coefficients(Eval&& f, const std::vector<Symbol>& alphabet,
                                                     std::size_t max_len) {
    double count = 1.0;
    for (std::size_t i = 0; i < max_len; ++i) count *= static_cast<double>(alphabet.size());
    if (count > 1e7) throw ScaleError("quantum_language_coefficients: |A|^max_len exceeds 1e7");

    TruncatedSeries s;
    std::vector<Word> words{{}};
    for (std::size_t n = 0; n <= max_len; ++n) {
        double total = 0.0;
        for (const auto& w : words) total += f(w);
        s.coeff.push_back(total);
        if (n == max_len) break;
        std::vector<Word> next;
        next.reserve(words.size() * alphabet.size());
        for (const auto& w : words)
            for (const auto& a : alphabet) {
                Word e = w;
                e.push_back(a);
                next.push_back(std::move(e));
            }
        words = std::move(next);
    }
    return s;
}

inline TruncatedSeries quantum_language_coefficients(const Qfa& q, std::size_t max_len) {
    return quantum_language_coefficients([&](const Word& w) { return accept_probability(q, w); },
                                         q.alphabet, max_len);
}

inline TruncatedSeries hadamard_product(const TruncatedSeries& a, const TruncatedSeries& b) {
    if (a.coeff.size() != b.coeff.size())
        throw ShapeError("hadamard_product: series cutoffs differ");
    TruncatedSeries r;
    r.coeff.resize(a.coeff.size());
    for (std::size_t i = 0; i < a.coeff.size(); ++i) r.coeff[i] = a.coeff[i] * b.coeff[i];
    return r;
}

// Per-dimension variable series V_k(z) with terminals mapped to z: iterate
// V <- Phi(V) on coefficients 0..max_len until stationary. Degrees below d
// are exact once they survive a round, so a coefficient still moving after
// the full horizon of rounds certifies divergence.
inline std::map<std::string, std::vector<TruncatedSeries>> grammar_amplitude_series(
    const QuantumGrammar& g, std::size_t max_len) {
    g.validate();
    std::map<std::string, std::vector<TruncatedSeries>> cur;
    for (const auto& v : g.variables)
        cur[v] = std::vector<TruncatedSeries>(g.dimension, TruncatedSeries{CVec(max_len + 1, 0.0)});

    const std::size_t round_limit = 2 * (max_len + 1) * (g.variables.size() + 1);
    for (std::size_t round = 0; round < round_limit; ++round) {
        std::map<std::string, std::vector<TruncatedSeries>> next;
        for (const auto& v : g.variables)
            next[v] = std::vector<TruncatedSeries>(g.dimension, TruncatedSeries{CVec(max_len + 1, 0.0)});
        for (const auto& p : g.productions) {
            for (std::size_t k = 0; k < g.dimension; ++k) {
                // product over the body, truncated at max_len
                CVec prod(max_len + 1, 0.0);
                prod[0] = p.amps[k];
                for (const auto& s : p.rhs) {
                    CVec factor(max_len + 1, 0.0);
                    if (g.is_terminal(s))
                        factor[std::min<std::size_t>(1, max_len)] = (max_len >= 1) ? 1.0 : 0.0;
                    else
                        factor = cur[s][k].coeff;
                    CVec acc(max_len + 1, 0.0);
                    for (std::size_t i = 0; i <= max_len; ++i) {
                        if (prod[i] == 0.0) continue;
                        for (std::size_t j = 0; i + j <= max_len; ++j)
                            acc[i + j] += prod[i] * factor[j];
                    }
                    prod = std::move(acc);
                }
                for (std::size_t i = 0; i <= max_len; ++i) next[p.lhs][k].coeff[i] += prod[i];
            }
        }
        bool stationary = true;
        for (const auto& v : g.variables)
            for (std::size_t k = 0; k < g.dimension; ++k)
                for (std::size_t i = 0; i <= max_len; ++i)
                    if (std::abs(next[v][k].coeff[i] - cur[v][k].coeff[i]) > kStructuralTol)
                        stationary = false;
        cur = std::move(next);
        if (stationary) return cur;
    }
    throw GrammarError("grammar_amplitude_series: coefficients failed to converge (divergent grammar)");
}

// The start variable's series for one dimension.
inline TruncatedSeries grammar_initial_series(const QuantumGrammar& g, std::size_t max_len,
                                              std::size_t k) {
    if (k >= g.dimension) throw ShapeError("grammar_initial_series: dimension index out of range");
    return grammar_amplitude_series(g, max_len).at(g.initial)[k];
}

} // namespace qag
