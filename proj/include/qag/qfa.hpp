#pragma once

// Quantum finite automata: word evaluation, the closure constructions over
// weighted direct sum / tensor product / complement / inverse homomorphism,
// the pumping search, and DFA embedding.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qag/dfa.hpp"
#include "qag/linalg.hpp"

namespace qag {

struct Qfa {
    std::vector<Symbol> alphabet;
    std::size_t dim = 0;
    CVec init;                          // row vector, applied on the left
    std::map<Symbol, CMat> transitions; // one square matrix per symbol
    OrthonormalBasis accept;            // spans the accepting subspace
    bool generalized = false;

    void validate() const {
        if (dim == 0) throw ShapeError("qfa: zero dimension");
        if (init.size() != dim) throw ShapeError("qfa: initial vector dimension mismatch");
        if (!all_finite(init)) throw ShapeError("qfa: non-finite initial vector");
        if (accept.ambient_dim != dim) throw ShapeError("qfa: accept basis ambient dimension mismatch");
        accept.validate();
        for (const auto& a : alphabet) {
            auto it = transitions.find(a);
            if (it == transitions.end()) throw ShapeError("qfa: missing transition for symbol " + a);
            if (it->second.rows != dim || it->second.cols != dim)
                throw ShapeError("qfa: transition matrix dimension mismatch for " + a);
            if (!all_finite(it->second)) throw ShapeError("qfa: non-finite transition for " + a);
        }
        if (!generalized) {
            if (std::abs(norm2(init) - 1.0) > kStructuralTol)
                throw ShapeError("qfa: initial state not unit norm in unitary mode");
            for (const auto& a : alphabet)
                if (!is_unitary(transitions.at(a), kStructuralTol))
                    throw ShapeError("qfa: non-unitary transition for " + a + " in unitary mode");
        }
    }
};

inline const CMat& transition_for(const Qfa& q, const Symbol& a) {
    auto it = q.transitions.find(a);
    if (it == q.transitions.end()) throw AlphabetError("qfa: unknown symbol " + a);
    return it->second;
}

inline CVec evolve(const Qfa& q, const Word& w) {
    CVec v = q.init;
    for (const auto& a : w) v = apply_row(v, transition_for(q, a));
    return v;
}

inline double projection_probability(const CVec& v, const OrthonormalBasis& accept) {
    double p = 0.0;
    for (const auto& h : accept.vectors) p += std::norm(pair_bilinear(v, h));
    return p;
}

inline double accept_probability(const Qfa& q, const Word& w) {
    return projection_probability(evolve(q, w), q.accept);
}

// Explicit sum over intermediate state sequences; the independent oracle
// for accept_probability. Guarded: dim^(|w|+1) paths must stay enumerable.
inline double path_sum_oracle(const Qfa& q, const Word& w) {
    double paths = 1.0;
    for (std::size_t i = 0; i + 1 <= w.size() + 1; ++i) paths *= static_cast<double>(q.dim);
    if (paths > 1e7) throw ScaleError("path_sum_oracle: dim^(|w|+1) exceeds 1e7");
    for (const auto& a : w) (void)transition_for(q, a);

    CVec final_amp(q.dim, 0.0);
    std::vector<std::size_t> path(w.size() + 1, 0);
    for (;;) {
        Complex amp = q.init[path[0]];
        for (std::size_t i = 0; i < w.size() && amp != 0.0; ++i)
            amp *= q.transitions.at(w[i]).at(path[i], path[i + 1]);
        final_amp[path.back()] += amp;
        std::size_t k = 0;
        while (k < path.size() && ++path[k] == q.dim) path[k++] = 0;
        if (k == path.size()) break;
    }
    return projection_probability(final_amp, q.accept);
}

inline void require_same_alphabet(const Qfa& q, const Qfa& r, const char* op) {
    if (q.alphabet != r.alphabet) throw AlphabetError(std::string(op) + ": alphabet mismatch");
}

// f = |a|^2 f_Q + |b|^2 f_R. Unitary output requires |a|^2+|b|^2 = 1.
inline Qfa weighted_direct_sum(const Qfa& q, const Qfa& r, Complex a, Complex b) {
    require_same_alphabet(q, r, "weighted_direct_sum");
    const bool unitary = !q.generalized && !r.generalized;
    if (unitary && std::abs(std::norm(a) + std::norm(b) - 1.0) > kStructuralTol)
        throw ShapeError("weighted_direct_sum: |a|^2+|b|^2 must be 1 in unitary mode");
    Qfa out;
    out.alphabet = q.alphabet;
    out.dim = q.dim + r.dim;
    out.generalized = !unitary;
    out.init = direct_sum(scale(q.init, a), scale(r.init, b));
    for (const auto& s : q.alphabet)
        out.transitions[s] = direct_sum(q.transitions.at(s), r.transitions.at(s));
    out.accept.ambient_dim = out.dim;
    const CVec zq(q.dim, 0.0), zr(r.dim, 0.0);
    for (const auto& h : q.accept.vectors) out.accept.vectors.push_back(direct_sum(h, zr));
    for (const auto& h : r.accept.vectors) out.accept.vectors.push_back(direct_sum(zq, h));
    out.validate();
    return out;
}

// f = f_Q * f_R.
inline Qfa tensor(const Qfa& q, const Qfa& r) {
    require_same_alphabet(q, r, "tensor");
    Qfa out;
    out.alphabet = q.alphabet;
    out.dim = q.dim * r.dim;
    out.generalized = q.generalized || r.generalized;
    out.init = tensor_product(q.init, r.init);
    for (const auto& s : q.alphabet)
        out.transitions[s] = tensor_product(q.transitions.at(s), r.transitions.at(s));
    out.accept.ambient_dim = out.dim;
    for (const auto& hq : q.accept.vectors)
        for (const auto& hr : r.accept.vectors)
            out.accept.vectors.push_back(tensor_product(hq, hr));
    out.validate();
    return out;
}

// The constant quantum language f(w) = c.
inline Qfa constant(double c, const std::vector<Symbol>& alphabet) {
    if (c < 0.0 || c > 1.0) throw ShapeError("constant: c outside [0,1]");
    Qfa out;
    out.alphabet = alphabet;
    out.dim = 2;
    out.init = {std::sqrt(c), std::sqrt(1.0 - c)};
    for (const auto& a : alphabet) out.transitions[a] = CMat::identity(2);
    out.accept = OrthonormalBasis{{{1.0, 0.0}}, 2, kStructuralTol};
    out.validate();
    return out;
}

// f -> 1 - f; only valid in unitary mode.
inline Qfa complement(const Qfa& q) {
    if (q.generalized) throw ModeError("complement: requires a unitary machine");
    Qfa out = q;
    out.accept = orthonormal_complement(q.accept);
    out.validate();
    return out;
}

// Replace each U_a by U_{h(a)}; the empty image gives the identity.
inline Qfa inverse_homomorphism(const Qfa& q, const std::map<Symbol, Word>& h) {
    Qfa out;
    out.dim = q.dim;
    out.init = q.init;
    out.accept = q.accept;
    out.generalized = q.generalized;
    for (const auto& [a, image] : h) {
        out.alphabet.push_back(a);
        CMat u = CMat::identity(q.dim);
        for (const auto& b : image) u = multiply(u, transition_for(q, b));
        out.transitions[a] = std::move(u);
    }
    out.validate();
    return out;
}

inline CMat word_matrix(const Qfa& q, const Word& w) {
    CMat u = CMat::identity(q.dim);
    for (const auto& a : w) u = multiply(u, transition_for(q, a));
    return u;
}

// Smallest k >= 1 for which every eigenphase of U_w satisfies |lambda^k - 1| < eps.
inline std::int64_t find_pump(const Qfa& q, const Word& w, double eps) {
    if (q.generalized) throw ModeError("find_pump: requires a unitary machine");
    if (!(eps > 0.0 && eps < 2.0)) throw ShapeError("find_pump: eps must lie in (0,2)");
    const CMat u = word_matrix(q, w);

    Eigen::MatrixXcd m(q.dim, q.dim);
    for (std::size_t i = 0; i < q.dim; ++i)
        for (std::size_t j = 0; j < q.dim; ++j) m(i, j) = u.at(i, j);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(m, false);
    std::vector<double> phases(q.dim);
    for (std::size_t i = 0; i < q.dim; ++i) phases[i] = std::arg(solver.eigenvalues()[i]);

    double cap_d = std::pow(eps / 4.0, -static_cast<double>(q.dim));
    cap_d = std::min(std::max(cap_d, 1e6), 1e8);
    const auto cap = static_cast<std::int64_t>(cap_d);
    for (std::int64_t k = 1; k <= cap; ++k) {
        double dev = 0.0;
        for (double t : phases)
            dev = std::max(dev, 2.0 * std::abs(std::sin(0.5 * static_cast<double>(k) * t)));
        if (dev < eps) return k;
    }
    throw ScaleError("find_pump: search cap exceeded");
}

// Checks |f(u w^k v) - f(uv)| < eps on the given (u,v) samples.
inline bool verify_pump(const Qfa& q, const Word& w, std::int64_t k, double eps,
                        const std::vector<std::pair<Word, Word>>& samples) {
    if (k < 1) throw ShapeError("verify_pump: k must be positive");
    for (const auto& [u, v] : samples) {
        Word pumped = u;
        for (std::int64_t i = 0; i < k; ++i) pumped.insert(pumped.end(), w.begin(), w.end());
        pumped.insert(pumped.end(), v.begin(), v.end());
        Word uv = u;
        uv.insert(uv.end(), v.begin(), v.end());
        if (std::abs(accept_probability(q, pumped) - accept_probability(q, uv)) >= eps) return false;
    }
    return true;
}

// Boolean transition matrices of a DFA as a generalized QFA; f = chi_L exactly.
inline Qfa embed_dfa(const Dfa& d) {
    d.validate();
    Qfa out;
    out.alphabet = d.alphabet;
    out.dim = d.states.size();
    out.generalized = true;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < d.states.size(); ++i) index[d.states[i]] = i;
    out.init.assign(out.dim, 0.0);
    out.init[index.at(d.init)] = 1.0;
    for (const auto& a : d.alphabet) {
        CMat u(out.dim, out.dim);
        for (const auto& s : d.states) u.at(index.at(s), index.at(d.delta.at({s, a}))) = 1.0;
        out.transitions[a] = std::move(u);
    }
    out.accept.ambient_dim = out.dim;
    for (const auto& s : d.states) {
        if (!d.accepting.count(s)) continue;
        CVec h(out.dim, 0.0);
        h[index.at(s)] = 1.0;
        out.accept.vectors.push_back(std::move(h));
    }
    out.validate();
    return out;
}

} // namespace qag
