#pragma once

// Dense complex vectors and matrices sized for small quantum machines.
// Vectors are stored as plain coordinate arrays; states act as row vectors
// and transition matrices are applied on the right, so symbols compose in
// reading order.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qag/errors.hpp"

namespace qag {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

constexpr double kStructuralTol = 1e-9;
constexpr double kProbTol = 1e-6;

struct CMat {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<Complex> a; // row-major

    CMat() = default;
    CMat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c) {}

    Complex& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    const Complex& at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static CMat identity(std::size_t n) {
        CMat m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    bool operator==(const CMat&) const = default;
};

inline bool is_finite(const Complex& c) {
    return std::isfinite(c.real()) && std::isfinite(c.imag());
}

inline bool all_finite(const CVec& v) {
    for (const auto& c : v)
        if (!is_finite(c)) return false;
    return true;
}

inline bool all_finite(const CMat& m) {
    for (const auto& c : m.a)
        if (!is_finite(c)) return false;
    return true;
}

// Sesquilinear inner product <a|b> = sum conj(a_i) b_i.
inline Complex inner(const CVec& a, const CVec& b) {
    if (a.size() != b.size()) throw ShapeError("inner: dimension mismatch");
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
    return s;
}

// Bilinear pairing sum a_i b_i; this is how a stored bra row meets an
// accepting basis ket, matching the measurement-example arithmetic.
inline Complex pair_bilinear(const CVec& a, const CVec& b) {
    if (a.size() != b.size()) throw ShapeError("pair_bilinear: dimension mismatch");
    Complex s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const CVec& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

inline CVec scale(const CVec& v, Complex c) {
    CVec r = v;
    for (auto& x : r) x *= c;
    return r;
}

inline CVec conjugate(const CVec& v) {
    CVec r = v;
    for (auto& x : r) x = std::conj(x);
    return r;
}

// Row vector times matrix: (v M)_j = sum_i v_i M_ij.
inline CVec apply_row(const CVec& v, const CMat& m) {
    if (v.size() != m.rows) throw ShapeError("apply_row: dimension mismatch");
    CVec r(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        if (v[i] == 0.0) continue;
        for (std::size_t j = 0; j < m.cols; ++j) r[j] += v[i] * m.at(i, j);
    }
    return r;
}

inline CMat multiply(const CMat& m, const CMat& n) {
    if (m.cols != n.rows) throw ShapeError("multiply: dimension mismatch");
    CMat r(m.rows, n.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t k = 0; k < m.cols; ++k) {
            const Complex v = m.at(i, k);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < n.cols; ++j) r.at(i, j) += v * n.at(k, j);
        }
    return r;
}

inline CMat conjugate_transpose(const CMat& m) {
    CMat r(m.cols, m.rows);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r.at(j, i) = std::conj(m.at(i, j));
    return r;
}

inline bool is_unitary(const CMat& m, double tol = kStructuralTol) {
    if (m.rows != m.cols) throw ShapeError("is_unitary: matrix not square");
    const CMat p = multiply(m, conjugate_transpose(m));
    double dev = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i)
        for (std::size_t j = 0; j < p.cols; ++j) {
            const Complex want = (i == j) ? Complex(1.0) : Complex(0.0);
            dev = std::max(dev, std::abs(p.at(i, j) - want));
        }
    return dev < tol;
}

inline CMat direct_sum(const CMat& m, const CMat& n) {
    CMat r(m.rows + n.rows, m.cols + n.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) r.at(i, j) = m.at(i, j);
    for (std::size_t i = 0; i < n.rows; ++i)
        for (std::size_t j = 0; j < n.cols; ++j) r.at(m.rows + i, m.cols + j) = n.at(i, j);
    return r;
}

inline CVec direct_sum(const CVec& u, const CVec& v) {
    CVec r = u;
    r.insert(r.end(), v.begin(), v.end());
    return r;
}

// Pairing <i,j> = n(i-1)+j, i.e. the right factor runs fastest.
inline CMat tensor_product(const CMat& m, const CMat& n) {
    CMat r(m.rows * n.rows, m.cols * n.cols);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t k = 0; k < n.rows; ++k)
            for (std::size_t j = 0; j < m.cols; ++j)
                for (std::size_t l = 0; l < n.cols; ++l)
                    r.at(i * n.rows + k, j * n.cols + l) = m.at(i, j) * n.at(k, l);
    return r;
}

inline CVec tensor_product(const CVec& u, const CVec& v) {
    CVec r(u.size() * v.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) r[i * v.size() + j] = u[i] * v[j];
    return r;
}

// Gauss-Jordan inverse; pivots below tol signal a singular matrix.
inline CMat inverse(const CMat& m, double tol = 1e-12) {
    if (m.rows != m.cols) throw ShapeError("inverse: matrix not square");
    const std::size_t n = m.rows;
    CMat a = m;
    CMat inv = CMat::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t i = col + 1; i < n; ++i)
            if (std::abs(a.at(i, col)) > std::abs(a.at(piv, col))) piv = i;
        if (std::abs(a.at(piv, col)) < tol) throw ShapeError("inverse: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a.at(piv, j), a.at(col, j));
                std::swap(inv.at(piv, j), inv.at(col, j));
            }
        }
        const Complex d = a.at(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a.at(col, j) /= d;
            inv.at(col, j) /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col) continue;
            const Complex f = a.at(i, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                a.at(i, j) -= f * a.at(col, j);
                inv.at(i, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

struct OrthonormalBasis {
    std::vector<CVec> vectors;
    std::size_t ambient_dim = 0;
    double tol = kStructuralTol;

    void validate() const {
        if (vectors.size() > ambient_dim)
            throw ShapeError("orthonormal basis: more vectors than ambient dimension");
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].size() != ambient_dim)
                throw ShapeError("orthonormal basis: vector of wrong dimension");
            if (!all_finite(vectors[i]))
                throw ShapeError("orthonormal basis: non-finite entry");
            if (std::abs(norm2(vectors[i]) - 1.0) > tol)
                throw ShapeError("orthonormal basis: vector not unit norm");
            for (std::size_t j = 0; j < i; ++j)
                if (std::abs(inner(vectors[i], vectors[j])) > tol)
                    throw ShapeError("orthonormal basis: vectors not orthogonal");
        }
    }

    bool operator==(const OrthonormalBasis&) const = default;
};

// Extends the given basis to a full one by Gram-Schmidt over the standard
// basis and returns the new vectors, which span the perpendicular subspace.
inline OrthonormalBasis orthonormal_complement(const OrthonormalBasis& basis) {
    basis.validate();
    const std::size_t d = basis.ambient_dim;
    std::vector<CVec> have = basis.vectors;
    OrthonormalBasis out{{}, d, basis.tol};
    for (std::size_t e = 0; e < d && have.size() < d; ++e) {
        CVec v(d, 0.0);
        v[e] = 1.0;
        for (const auto& h : have) {
            const Complex c = inner(h, v);
            for (std::size_t i = 0; i < d; ++i) v[i] -= c * h[i];
        }
        const double n2 = norm2(v);
        if (n2 < basis.tol) continue; // standard vector already in span
        const double inv_norm = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv_norm;
        // second orthogonalization pass for numerical cleanliness
        for (const auto& h : have) {
            const Complex c = inner(h, v);
            for (std::size_t i = 0; i < d; ++i) v[i] -= c * h[i];
        }
        const double m2 = norm2(v);
        if (m2 < basis.tol) continue;
        const double inv2 = 1.0 / std::sqrt(m2);
        for (auto& x : v) x *= inv2;
        have.push_back(v);
        out.vectors.push_back(std::move(v));
    }
    if (have.size() != d)
        throw ShapeError("orthonormal_complement: input basis is rank deficient");
    out.validate();
    return out;
}

} // namespace qag
