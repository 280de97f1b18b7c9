#pragma once

// Shared helpers for the test suite: seeded randomness, random unitaries via
// Gram-Schmidt orthonormalization of random complex matrices, random machines
// and words, and exhaustive word enumeration.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "qag/dfa.hpp"
#include "qag/linalg.hpp"
#include "qag/qfa.hpp"

namespace qag::test {

using Rng = std::mt19937;

inline Complex random_complex(Rng& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    return {g(rng), g(rng)};
}

// Orthonormalize the rows of a random complex Gaussian matrix.
inline CMat random_unitary(std::size_t n, Rng& rng) {
    std::vector<CVec> rows;
    while (rows.size() < n) {
        CVec v(n);
        for (auto& x : v) x = random_complex(rng);
        for (const auto& r : rows) {
            const Complex c = inner(r, v);
            for (std::size_t i = 0; i < n; ++i) v[i] -= c * r[i];
        }
        const double nn = std::sqrt(norm2(v));
        if (nn < 1e-6) continue; // resample a degenerate draw
        for (auto& x : v) x /= nn;
        rows.push_back(std::move(v));
    }
    CMat u(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) u.at(i, j) = rows[i][j];
    return u;
}

inline CVec random_unit_vector(std::size_t n, Rng& rng) {
    CVec v(n);
    double nn = 0.0;
    do {
        for (auto& x : v) x = random_complex(rng);
        nn = std::sqrt(norm2(v));
    } while (nn < 1e-6);
    for (auto& x : v) x /= nn;
    return v;
}

// A random unitary QFA: random initial unit vector, one random unitary per
// letter, and an accept basis given by the first r rows of a random unitary.
inline Qfa random_qfa(std::size_t dim, const std::vector<Symbol>& alphabet, Rng& rng,
                      std::size_t accept_rank) {
    Qfa q;
    q.alphabet = alphabet;
    q.dim = dim;
    q.init = random_unit_vector(dim, rng);
    for (const auto& a : alphabet) q.transitions[a] = random_unitary(dim, rng);
    const CMat basis = random_unitary(dim, rng);
    q.accept.ambient_dim = dim;
    for (std::size_t r = 0; r < accept_rank; ++r) {
        CVec h(dim);
        for (std::size_t j = 0; j < dim; ++j) h[j] = basis.at(r, j);
        q.accept.vectors.push_back(std::move(h));
    }
    return q;
}

inline Qfa random_qfa(std::size_t dim, const std::vector<Symbol>& alphabet, Rng& rng) {
    std::uniform_int_distribution<std::size_t> rank(1, dim);
    return random_qfa(dim, alphabet, rng, rank(rng));
}

inline Word random_word(const std::vector<Symbol>& alphabet, std::size_t len, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
    Word w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(alphabet[pick(rng)]);
    return w;
}

inline Word random_word_upto(const std::vector<Symbol>& alphabet, std::size_t max_len, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick_len(0, max_len);
    return random_word(alphabet, pick_len(rng), rng);
}

// All words over `alphabet` of length <= max_len, in length-then-lex order.
inline std::vector<Word> all_words(const std::vector<Symbol>& alphabet, std::size_t max_len) {
    std::vector<Word> out{{}};
    std::size_t begin = 0;
    for (std::size_t n = 0; n < max_len; ++n) {
        const std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i)
            for (const auto& a : alphabet) {
                Word w = out[i];
                w.push_back(a);
                out.push_back(std::move(w));
            }
        begin = end;
    }
    return out;
}

} // namespace qag::test
