#include <cmath>
#include <random>
#include <stdexcept>

#include <doctest.h>

#include "nhl/matrix.hpp"
#include "test_util.hpp"

using nhl::Matrix;
using testutil::random_matrix;

TEST_CASE("matmul basics") {
    Matrix id(2, 2);
    id.at(0, 0) = id.at(1, 1) = 1.0;
    Matrix a(2, 2);
    a.data = {5.0, -1.0, 2.0, 3.0};
    const Matrix ia = nhl::matmul(id, a);
    CHECK(ia.data == a.data);

    Matrix b(2, 2);
    b.data = {1.0, 2.0, 3.0, 4.0};
    Matrix ones(2, 1, 1.0);
    const Matrix prod = nhl::matmul(b, ones);
    CHECK(prod.rows == 2);
    CHECK(prod.cols == 1);
    CHECK(prod.at(0, 0) == 3.0);
    CHECK(prod.at(1, 0) == 7.0);

    std::mt19937_64 rng(1);
    const Matrix z = nhl::matmul(Matrix(2, 3), random_matrix(3, 4, rng));
    for (double v : z.data) CHECK(v == 0.0);

    CHECK_THROWS_AS(nhl::matmul(Matrix(2, 3), Matrix(4, 2)), std::invalid_argument);
}

TEST_CASE("matmul associativity on random triples") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 10; ++t) {
        const Matrix a = random_matrix(3, 4, rng);
        const Matrix b = random_matrix(4, 5, rng);
        const Matrix c = random_matrix(5, 2, rng);
        const Matrix left = nhl::matmul(nhl::matmul(a, b), c);
        const Matrix right = nhl::matmul(a, nhl::matmul(b, c));
        for (std::size_t i = 0; i < left.data.size(); ++i) {
            CHECK(testutil::close_rel(left.data[i], right.data[i], 1e-9, 1e-12));
        }
    }
}

TEST_CASE("transpose product variants agree with explicit transposes") {
    std::mt19937_64 rng(11);
    const Matrix a = random_matrix(4, 6, rng);
    const Matrix b = random_matrix(5, 6, rng);
    Matrix bt(6, 5);
    for (std::size_t i = 0; i < b.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j) bt.at(j, i) = b.at(i, j);
    const Matrix expect_nt = nhl::matmul(a, bt);
    const Matrix got_nt = nhl::matmul_nt(a, b);
    for (std::size_t i = 0; i < expect_nt.data.size(); ++i) {
        CHECK(testutil::close_rel(expect_nt.data[i], got_nt.data[i], 1e-12, 1e-14));
    }

    const Matrix c = random_matrix(4, 3, rng);
    Matrix at(6, 4);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) at.at(j, i) = a.at(i, j);
    const Matrix expect_tn = nhl::matmul(at, c);
    const Matrix got_tn = nhl::matmul_tn(a, c);
    for (std::size_t i = 0; i < expect_tn.data.size(); ++i) {
        CHECK(testutil::close_rel(expect_tn.data[i], got_tn.data[i], 1e-12, 1e-14));
    }
}

TEST_CASE("frobenius norm") {
    CHECK(nhl::frobenius_norm(Matrix(3, 4)) == 0.0);
    Matrix t(1, 2);
    t.data = {3.0, 4.0};
    CHECK(nhl::frobenius_norm(t) == doctest::Approx(5.0).epsilon(1e-15));

    std::mt19937_64 rng(3);
    const Matrix a = random_matrix(5, 7, rng);
    const double n = nhl::frobenius_norm(a);
    CHECK(testutil::close_rel(n, std::sqrt(nhl::flat_inner(a, a)), 1e-12, 1e-15));
}

TEST_CASE("flat inner product") {
    std::mt19937_64 rng(5);
    const Matrix a = random_matrix(3, 3, rng);
    Matrix neg = a;
    for (double& v : neg.data) v = -v;
    const double n2 = nhl::frobenius_norm(a) * nhl::frobenius_norm(a);
    CHECK(testutil::close_rel(nhl::flat_inner(a, a), n2, 1e-12));
    CHECK(testutil::close_rel(nhl::flat_inner(a, neg), -n2, 1e-12));

    Matrix e1(2, 2), e2(2, 2);
    e1.data = {1.0, 0.0, 0.0, 1.0};
    e2.data = {0.0, 1.0, 1.0, 0.0};
    CHECK(nhl::flat_inner(e1, e2) == 0.0);
    CHECK_THROWS_AS(nhl::flat_inner(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("tanh forward and derivative") {
    const Matrix z = nhl::tanh_map(Matrix(2, 2));
    for (double v : z.data) CHECK(v == 0.0);
    const Matrix d = nhl::tanh_deriv(Matrix(2, 2));
    for (double v : d.data) CHECK(v == 1.0);

    // derivative from the forward output at x = 0.5
    const double y = std::tanh(0.5);
    const double h = 1e-6;
    const double fd = (std::tanh(0.5 + h) - std::tanh(0.5 - h)) / (2.0 * h);
    CHECK(std::abs((1.0 - y * y) - fd) < 1e-8);

    std::mt19937_64 rng(9);
    Matrix x = random_matrix(4, 4, rng, -2.0, 2.0);
    const Matrix fwd = nhl::tanh_map(x);
    const Matrix deriv = nhl::tanh_deriv(fwd);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double up = std::tanh(x.data[i] + h);
        const double down = std::tanh(x.data[i] - h);
        CHECK(std::abs(deriv.data[i] - (up - down) / (2.0 * h)) < 1e-7);
    }
}

TEST_CASE("log sigmoid stability") {
    CHECK(nhl::log_sigmoid(0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    const double big = nhl::log_sigmoid(1000.0);
    CHECK(std::isfinite(big));
    CHECK(big <= 0.0);
    CHECK(std::abs(big) < 1e-300);
    CHECK(std::abs(nhl::log_sigmoid(-50.0) + 50.0) < 1e-9);
    CHECK(std::isfinite(nhl::log_sigmoid(-1000.0)));
}

TEST_CASE("row and column slices") {
    std::mt19937_64 rng(13);
    const Matrix a = random_matrix(4, 5, rng);
    const Matrix r = nhl::slice_rows(a, 2);
    CHECK(r.rows == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 5; ++j) CHECK(r.at(i, j) == a.at(i, j));
    const Matrix c = nhl::slice_cols(a, 3);
    CHECK(c.cols == 3);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(c.at(i, j) == a.at(i, j));
    CHECK_THROWS_AS(nhl::slice_rows(a, 5), std::invalid_argument);
    CHECK_THROWS_AS(nhl::slice_cols(a, 6), std::invalid_argument);
}
