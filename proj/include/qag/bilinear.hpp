#pragma once

// Bilinear (generalized stochastic) representation of a QFA: the quadratic
// acceptance functional becomes pi . M_w . eta of dimension n^2, and the
// 2x2 real block embedding of complex scalars turns that into a real form
// of dimension 2n^2.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "qag/qfa.hpp"

namespace qag {

enum class FormKind { complex_form, real_form };

struct BilinearForm {
    std::size_t dim = 0;
    CVec pi;
    std::map<Symbol, CMat> matrices;
    CVec eta;
    FormKind kind = FormKind::complex_form;

    void validate() const {
        if (pi.size() != dim || eta.size() != dim)
            throw ShapeError("bilinear form: vector dimension mismatch");
        for (const auto& [a, m] : matrices)
            if (m.rows != dim || m.cols != dim)
                throw ShapeError("bilinear form: matrix dimension mismatch for " + a);
        if (kind == FormKind::real_form) {
            auto check = [](const Complex& c) {
                if (c.imag() != 0.0) throw ShapeError("bilinear form: real kind with imaginary entry");
            };
            for (const auto& c : pi) check(c);
            for (const auto& c : eta) check(c);
            for (const auto& [a, m] : matrices)
                for (const auto& c : m.a) check(c);
        }
    }
};

// pi = conj(s) (x) s, M_a = conj(U_a) (x) U_a, eta = sum_i conj(h_i) (x) h_i.
inline BilinearForm to_bilinear(const Qfa& q) {
    BilinearForm f;
    f.kind = FormKind::complex_form;
    f.dim = q.dim * q.dim;
    f.pi = tensor_product(conjugate(q.init), q.init);
    for (const auto& [a, u] : q.transitions) {
        CMat cu = u;
        for (auto& c : cu.a) c = std::conj(c);
        f.matrices[a] = tensor_product(cu, u);
    }
    f.eta.assign(f.dim, 0.0);
    for (const auto& h : q.accept.vectors) {
        const CVec t = tensor_product(conjugate(h), h);
        for (std::size_t i = 0; i < f.dim; ++i) f.eta[i] += t[i];
    }
    f.validate();
    return f;
}

// 2x2 block [[a,b],[-b,a]] standing in for a+bi.
inline CMat real_block(const Complex& c) {
    CMat b(2, 2);
    b.at(0, 0) = c.real();
    b.at(0, 1) = c.imag();
    b.at(1, 0) = -c.imag();
    b.at(1, 1) = c.real();
    return b;
}

// Expand every complex entry to its 2x2 real block; pi keeps the top row of
// its expanded block and eta the left column.
inline BilinearForm to_real(const BilinearForm& b) {
    if (b.kind != FormKind::complex_form) throw ModeError("to_real: input must be a complex form");
    BilinearForm f;
    f.kind = FormKind::real_form;
    f.dim = 2 * b.dim;
    f.pi.assign(f.dim, 0.0);
    f.eta.assign(f.dim, 0.0);
    for (std::size_t i = 0; i < b.dim; ++i) {
        f.pi[2 * i] = b.pi[i].real();
        f.pi[2 * i + 1] = b.pi[i].imag();
        f.eta[2 * i] = b.eta[i].real();
        f.eta[2 * i + 1] = -b.eta[i].imag();
    }
    for (const auto& [a, m] : b.matrices) {
        CMat r(f.dim, f.dim);
        for (std::size_t i = 0; i < b.dim; ++i)
            for (std::size_t j = 0; j < b.dim; ++j) {
                const CMat blk = real_block(m.at(i, j));
                for (std::size_t x = 0; x < 2; ++x)
                    for (std::size_t y = 0; y < 2; ++y)
                        r.at(2 * i + x, 2 * j + y) = blk.at(x, y);
            }
        f.matrices[a] = std::move(r);
    }
    f.validate();
    return f;
}

// pi . M_{w_1} ... M_{w_n} . eta; complex forms must come out real.
inline double eval_bilinear(const BilinearForm& b, const Word& w) {
    CVec v = b.pi;
    for (const auto& a : w) {
        auto it = b.matrices.find(a);
        if (it == b.matrices.end()) throw AlphabetError("eval_bilinear: unknown symbol " + a);
        v = apply_row(v, it->second);
    }
    const Complex r = pair_bilinear(v, b.eta);
    if (b.kind == FormKind::complex_form && std::abs(r.imag()) >= kStructuralTol)
        throw ShapeError("eval_bilinear: complex form produced a non-real value");
    return r.real();
}

} // namespace qag
