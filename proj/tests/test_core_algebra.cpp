#include <catch2/catch_amalgamated.hpp>

#include "qag/linalg.hpp"
#include "support.hpp"

using namespace qag;
using test::Rng;

TEST_CASE("inner product is sesquilinear and pair_bilinear is bilinear") {
    const CVec a{{1.0, 2.0}, {0.0, -1.0}};
    const CVec b{{3.0, 0.0}, {1.0, 1.0}};
    // <a|b> = conj(1+2i)*3 + conj(-i)*(1+i) = (3-6i) + (i-1) = 2-5i
    CHECK(std::abs(inner(a, b) - Complex(2.0, -5.0)) < 1e-15);
    // bilinear: (1+2i)*3 + (-i)(1+i) = 3+6i + (1-i) = 4+5i
    CHECK(std::abs(pair_bilinear(a, b) - Complex(4.0, 5.0)) < 1e-15);
    CHECK(std::abs(inner(a, a).imag()) < 1e-15);
    CHECK(inner(a, a).real() == Catch::Approx(norm2(a)));
    CHECK_THROWS_AS(inner(a, CVec{1.0}), ShapeError);
    CHECK_THROWS_AS(pair_bilinear(a, CVec{1.0}), ShapeError);
}

TEST_CASE("random matrices from Gram-Schmidt are unitary and preserve norms") {
    Rng rng(101);
    for (std::size_t n = 1; n <= 5; ++n) {
        const CMat u = test::random_unitary(n, rng);
        CHECK(is_unitary(u));
        const CVec v = test::random_unit_vector(n, rng);
        const CVec w = apply_row(v, u);
        CHECK(norm2(w) == Catch::Approx(1.0).margin(1e-12));
        // row application preserves all inner products
        const CVec v2 = test::random_unit_vector(n, rng);
        CHECK(std::abs(inner(apply_row(v2, u), w) - inner(v2, v)) < 1e-12);
    }
    CMat not_unitary = CMat::identity(2);
    not_unitary.at(0, 1) = 0.5;
    CHECK_FALSE(is_unitary(not_unitary));
}

TEST_CASE("direct sum and tensor product of unitaries stay unitary") {
    Rng rng(102);
    const CMat u = test::random_unitary(2, rng);
    const CMat v = test::random_unitary(3, rng);
    CHECK(is_unitary(direct_sum(u, v)));
    CHECK(is_unitary(tensor_product(u, v)));

    // direct sum places blocks without overlap
    const CMat d = direct_sum(u, v);
    REQUIRE(d.rows == 5);
    CHECK(d.at(0, 0) == u.at(0, 0));
    CHECK(d.at(2, 2) == v.at(0, 0));
    CHECK(d.at(0, 2) == Complex(0.0));
    CHECK(d.at(2, 0) == Complex(0.0));
}

TEST_CASE("tensor product uses the right-factor-fastest pairing") {
    CMat m(2, 2), n(2, 2);
    m.at(0, 0) = 1.0;
    m.at(0, 1) = 2.0;
    m.at(1, 0) = 3.0;
    m.at(1, 1) = 4.0;
    n.at(0, 0) = 0.0;
    n.at(0, 1) = 5.0;
    n.at(1, 0) = 6.0;
    n.at(1, 1) = 7.0;
    const CMat t = tensor_product(m, n);
    REQUIRE(t.rows == 4);
    // entry ((i,k),(j,l)) = m(i,j) n(k,l) at row i*2+k, col j*2+l
    CHECK(t.at(0, 1) == Complex(5.0));  // m(0,0) n(0,1)
    CHECK(t.at(2, 1) == Complex(15.0)); // m(1,0) n(0,1)
    CHECK(t.at(3, 3) == Complex(28.0)); // m(1,1) n(1,1)

    const CVec u{1.0, 2.0};
    const CVec v{3.0, 4.0};
    const CVec w = tensor_product(u, v);
    CHECK(w == CVec{3.0, 4.0, 6.0, 8.0});

    // mixed-product identity (u (x) v) (M (x) N) = (u M) (x) (v N)
    Rng rng(103);
    const CMat a = test::random_unitary(2, rng);
    const CMat b = test::random_unitary(3, rng);
    const CVec x = test::random_unit_vector(2, rng);
    const CVec y = test::random_unit_vector(3, rng);
    const CVec lhs = apply_row(tensor_product(x, y), tensor_product(a, b));
    const CVec rhs = tensor_product(apply_row(x, a), apply_row(y, b));
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(std::abs(lhs[i] - rhs[i]) < 1e-12);
}

TEST_CASE("matrix multiplication agrees with row application") {
    Rng rng(104);
    const CMat a = test::random_unitary(3, rng);
    const CMat b = test::random_unitary(3, rng);
    const CVec v = test::random_unit_vector(3, rng);
    const CVec via_product = apply_row(v, multiply(a, b));
    const CVec stepwise = apply_row(apply_row(v, a), b);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(via_product[i] - stepwise[i]) < 1e-12);
    CHECK_THROWS_AS(multiply(CMat(2, 3), CMat(2, 3)), ShapeError);
}

TEST_CASE("inverse solves back to the identity and rejects singular input") {
    Rng rng(105);
    for (std::size_t n = 1; n <= 4; ++n) {
        CMat m(n, n);
        for (auto& c : m.a) c = test::random_complex(rng);
        CMat inv_m;
        REQUIRE_NOTHROW(inv_m = inverse(m));
        const CMat p = multiply(m, inv_m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK(std::abs(p.at(i, j) - (i == j ? Complex(1.0) : Complex(0.0))) < 1e-9);
    }
    CMat sing(2, 2);
    sing.at(0, 0) = 1.0;
    sing.at(0, 1) = 2.0;
    sing.at(1, 0) = 2.0;
    sing.at(1, 1) = 4.0;
    CHECK_THROWS_AS(inverse(sing), ShapeError);
    CHECK_THROWS_AS(inverse(CMat(2, 3)), ShapeError);
}

TEST_CASE("orthonormal basis validation catches shape and geometry errors") {
    OrthonormalBasis ok{{{1.0, 0.0}, {0.0, 1.0}}, 2, kStructuralTol};
    CHECK_NOTHROW(ok.validate());

    OrthonormalBasis bad_norm{{{0.5, 0.0}}, 2, kStructuralTol};
    CHECK_THROWS_AS(bad_norm.validate(), ShapeError);

    const double r = 1.0 / std::sqrt(2.0);
    OrthonormalBasis not_orth{{{1.0, 0.0}, {r, r}}, 2, kStructuralTol};
    CHECK_THROWS_AS(not_orth.validate(), ShapeError);

    OrthonormalBasis too_many{{{1.0}, {1.0}}, 1, kStructuralTol};
    CHECK_THROWS_AS(too_many.validate(), ShapeError);
}

TEST_CASE("orthonormal_complement spans the perpendicular subspace") {
    SECTION("axis vector in C^2") {
        OrthonormalBasis b{{{1.0, 0.0}}, 2, kStructuralTol};
        const OrthonormalBasis c = orthonormal_complement(b);
        REQUIRE(c.vectors.size() == 1);
        CHECK(std::abs(c.vectors[0][0]) < 1e-12);
        CHECK(std::abs(std::abs(c.vectors[0][1]) - 1.0) < 1e-12);
    }
    SECTION("random partial bases in C^4") {
        Rng rng(106);
        for (std::size_t r = 0; r <= 4; ++r) {
            const CMat u = test::random_unitary(4, rng);
            OrthonormalBasis b{{}, 4, kStructuralTol};
            for (std::size_t i = 0; i < r; ++i) {
                CVec row(4);
                for (std::size_t j = 0; j < 4; ++j) row[j] = u.at(i, j);
                b.vectors.push_back(std::move(row));
            }
            const OrthonormalBasis c = orthonormal_complement(b);
            REQUIRE(c.vectors.size() == 4 - r);
            CHECK_NOTHROW(c.validate());
            for (const auto& v : c.vectors)
                for (const auto& h : b.vectors) CHECK(std::abs(inner(h, v)) < 1e-9);
        }
    }
    SECTION("full basis has empty complement") {
        OrthonormalBasis b{{{1.0, 0.0}, {0.0, 1.0}}, 2, kStructuralTol};
        CHECK(orthonormal_complement(b).vectors.empty());
    }
}

TEST_CASE("projection onto a basis plus its complement exhausts the norm") {
    // |<v, h_i>|^2 summed over a full orthonormal set of kets equals |v|^2
    // when the pairing conjugates the stored bra, i.e. with conjugated rows.
    Rng rng(107);
    const CMat u = test::random_unitary(3, rng);
    OrthonormalBasis b{{}, 3, kStructuralTol};
    for (std::size_t i = 0; i < 2; ++i) {
        CVec row(3);
        for (std::size_t j = 0; j < 3; ++j) row[j] = u.at(i, j);
        b.vectors.push_back(std::move(row));
    }
    const OrthonormalBasis c = orthonormal_complement(b);
    const CVec v = test::random_unit_vector(3, rng);
    double total = 0.0;
    for (const auto& h : b.vectors) total += std::norm(inner(h, v));
    for (const auto& h : c.vectors) total += std::norm(inner(h, v));
    CHECK(total == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("finite checks reject NaN and infinity") {
    CHECK(all_finite(CVec{1.0, {0.0, 2.0}}));
    CHECK_FALSE(all_finite(CVec{{std::nan(""), 0.0}}));
    CMat m(1, 1);
    m.at(0, 0) = {1.0, std::numeric_limits<double>::infinity()};
    CHECK_FALSE(all_finite(m));
}

TEST_CASE("conjugate_transpose is an involution compatible with products") {
    Rng rng(108);
    const CMat a = test::random_unitary(3, rng);
    const CMat b = test::random_unitary(3, rng);
    const CMat lhs = conjugate_transpose(multiply(a, b));
    const CMat rhs = multiply(conjugate_transpose(b), conjugate_transpose(a));
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(lhs.at(i, j) - rhs.at(i, j)) < 1e-12);
    const CMat back = conjugate_transpose(conjugate_transpose(a));
    CHECK(back == a);
}
