#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "nhl/errors.hpp"
#include "nhl/objectives.hpp"
#include "test_util.hpp"

using nhl::Matrix;
using testutil::random_matrix;

namespace {

std::size_t hamming_pm1(const double* a, const double* b, std::size_t n) {
    std::size_t d = 0;
    for (std::size_t i = 0; i < n; ++i) d += a[i] != b[i];
    return d;
}

// naive reference: normalize rows of U U^T against the teacher's, mean of
// (1/B)||difference||^2
double naive_lcs_value(const Matrix& u_k, const Matrix& u_next) {
    const std::size_t n = u_k.rows;
    const Matrix rk = nhl::matmul_nt(u_k, u_k);
    const Matrix rn = nhl::matmul_nt(u_next, u_next);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            a += rk.at(i, j) * rk.at(i, j);
            b += rn.at(i, j) * rn.at(i, j);
        }
        a = std::max(std::sqrt(a), 1e-12);
        b = std::max(std::sqrt(b), 1e-12);
        double err = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double e = rk.at(i, j) / a - rn.at(i, j) / b;
            err += e * e;
        }
        total += err / static_cast<double>(n);
    }
    return total / static_cast<double>(n * n) * static_cast<double>(n);
}

}  // namespace

TEST_CASE("hash centers from the Hadamard construction") {
    const Matrix c4 = nhl::gen_hash_centers(4, 4, 0);
    REQUIRE(c4.rows == 4);
    // first row of the Sylvester matrix is all ones
    for (std::size_t j = 0; j < 4; ++j) CHECK(c4.at(0, j) == 1.0);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) {
            CHECK(hamming_pm1(c4.row(a), c4.row(b), 4) == 2);
        }
    }

    // negated block kicks in past b rows
    const Matrix c12 = nhl::gen_hash_centers(12, 8, 0);
    for (std::size_t j = 0; j < 8; ++j) CHECK(c12.at(8, j) == -c12.at(0, j));
    for (std::size_t a = 0; a < 12; ++a)
        for (std::size_t b = a + 1; b < 12; ++b) CHECK(hamming_pm1(c12.row(a), c12.row(b), 8) > 0);
}

TEST_CASE("hash centers fall back to Bernoulli sampling") {
    const Matrix c = nhl::gen_hash_centers(3, 6, 5);
    REQUIRE(c.rows == 3);
    for (double v : c.data) CHECK((v == 1.0 || v == -1.0));
    for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t b = a + 1; b < 3; ++b) CHECK(hamming_pm1(c.row(a), c.row(b), 6) > 0);

    const Matrix again = nhl::gen_hash_centers(3, 6, 5);
    CHECK(c.data == again.data);

    // 2 bits admit only 4 distinct codes (b=2 is a power of two, so force
    // the Bernoulli path with b=3: 8 codes, 9 classes cannot fit)
    CHECK_THROWS_AS(nhl::gen_hash_centers(9, 3, 1), nhl::config_error);
}

TEST_CASE("central loss at its optimum and at the entropy point") {
    const Matrix centers = nhl::gen_hash_centers(4, 8, 0);
    std::vector<std::uint32_t> labels{0, 3, 1};
    Matrix u(3, 8);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 8; ++j) u.at(i, j) = centers.at(labels[i], j);

    const nhl::LossResult at_opt = nhl::central_loss(u, labels, centers, 0.5);
    CHECK(at_opt.value < 1e-6);  // clamp floor only
    for (double g : at_opt.grad.data) CHECK(g == 0.0);

    const nhl::LossResult mid = nhl::central_loss(Matrix(3, 8, 0.0), labels, centers, 0.0);
    CHECK(mid.value == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    std::vector<std::uint32_t> bad{0, 9, 1};
    CHECK_THROWS_AS(nhl::central_loss(u, bad, centers, 0.0), nhl::data_error);
}

TEST_CASE("central loss gradient matches finite differences") {
    std::mt19937_64 rng(3);
    const Matrix centers = nhl::gen_hash_centers(5, 8, 2);
    std::vector<std::uint32_t> labels{0, 2, 4, 1};
    Matrix u = random_matrix(4, 8, rng, -0.9, 0.9);
    const auto loss = [&]() { return nhl::central_loss(u, labels, centers, 0.3).value; };
    const nhl::LossResult res = nhl::central_loss(u, labels, centers, 0.3);
    CHECK(res.value >= 0.0);
    CHECK(testutil::fd_mismatches(u, loss, res.grad) == 0);
}

TEST_CASE("pairwise loss degenerate cases") {
    Matrix same(3, 4, 0.5);
    std::vector<std::uint32_t> eq{1, 1, 1};
    const nhl::LossResult r = nhl::pairwise_loss(same, eq, 2.0, 0.0);
    CHECK(r.value == 0.0);

    // two far-apart dissimilar samples satisfy the hinge
    Matrix far(2, 2);
    far.data = {5.0, 5.0, -5.0, -5.0};  // squared distance 400 >= 2*2
    const nhl::LossResult h = nhl::pairwise_loss(far, {0, 1}, 2.0, 0.0);
    CHECK(h.value == 0.0);
    for (double g : h.grad.data) CHECK(g == 0.0);

    CHECK_THROWS_AS(nhl::pairwise_loss(Matrix(1, 4), {0}, 2.0, 0.0), std::invalid_argument);
}

TEST_CASE("pairwise loss gradient matches finite differences") {
    std::mt19937_64 rng(7);
    std::vector<std::uint32_t> labels{0, 1, 0, 2, 1};
    Matrix u = random_matrix(5, 6, rng, -0.8, 0.8);
    const double margin = 0.9;
    // keep every dissimilar pair clear of the hinge boundary
    const double threshold = margin * 6.0;
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            double d = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                const double diff = u.at(i, c) - u.at(j, c);
                d += diff * diff;
            }
            REQUIRE(std::abs(d - threshold) > 1e-2);
        }
    }
    const auto loss = [&]() { return nhl::pairwise_loss(u, labels, margin, 0.2).value; };
    const nhl::LossResult res = nhl::pairwise_loss(u, labels, margin, 0.2);
    CHECK(res.value >= 0.0);
    CHECK(testutil::fd_mismatches(u, loss, res.grad) == 0);
}

TEST_CASE("cascade distillation vanishes when the teacher adds nothing") {
    std::mt19937_64 rng(11);
    const Matrix u_k = random_matrix(4, 3, rng);
    Matrix u_next(4, 5, 0.0);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) u_next.at(i, j) = u_k.at(i, j);
    const nhl::LossResult r = nhl::lcs_loss(u_k, u_next);
    CHECK(r.value == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("cascade distillation equals the naive evaluation") {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 5; ++t) {
        const Matrix u_k = random_matrix(6, 4, rng);
        const Matrix u_next = random_matrix(6, 9, rng);
        const nhl::LossResult r = nhl::lcs_loss(u_k, u_next);
        CHECK(r.value == doctest::Approx(naive_lcs_value(u_k, u_next)).epsilon(1e-12));
        CHECK(r.value >= 0.0);
    }

    // two-sample instance small enough to follow by hand
    Matrix a(2, 1);
    a.data = {1.0, 0.5};
    Matrix b(2, 2);
    b.data = {1.0, 0.0, 0.0, 1.0};
    // student rows of a a^T: (1, .5) and (.5, .25); both normalize to
    // (2/sqrt5, 1/sqrt5). teacher rows of b b^T: (1,0) and (0,1).
    const double inv5 = 1.0 / std::sqrt(5.0);
    const double err1 = (2 * inv5 - 1) * (2 * inv5 - 1) + inv5 * inv5;
    const double err2 = (2 * inv5) * (2 * inv5) + (inv5 - 1) * (inv5 - 1);
    const double expected = 0.5 * (err1 / 2.0 + err2 / 2.0);
    const nhl::LossResult r = nhl::lcs_loss(a, b);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cascade distillation gradient: finite differences and stop-gradient") {
    std::mt19937_64 rng(17);
    Matrix u_k = random_matrix(5, 3, rng);
    const Matrix u_next = random_matrix(5, 7, rng);

    const auto loss = [&]() { return nhl::lcs_loss(u_k, u_next).value; };
    const nhl::LossResult r = nhl::lcs_loss(u_k, u_next);
    CHECK(r.grad.rows == u_k.rows);
    CHECK(r.grad.cols == u_k.cols);
    CHECK(testutil::fd_mismatches(u_k, loss, r.grad) == 0);

    // teacher is stop-gradiented: scaling it changes nothing, and no teacher
    // gradient exists in the result at all
    Matrix scaled = u_next;
    for (double& v : scaled.data) v *= 3.75;
    const nhl::LossResult rs = nhl::lcs_loss(u_k, scaled);
    CHECK(rs.value == doctest::Approx(r.value).epsilon(1e-12));
    for (std::size_t i = 0; i < r.grad.data.size(); ++i) {
        CHECK(rs.grad.data[i] == doctest::Approx(r.grad.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("nested similarity matrices match direct products") {
    std::mt19937_64 rng(19);
    const Matrix u = random_matrix(6, 10, rng);
    const std::vector<std::uint32_t> lengths{2, 5, 10};
    const std::vector<Matrix> sims = nhl::nested_similarities(u, lengths);
    REQUIRE(sims.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const Matrix uk = nhl::slice_cols(u, lengths[k]);
        const Matrix direct = nhl::matmul_nt(uk, uk);
        for (std::size_t i = 0; i < direct.data.size(); ++i) {
            CHECK(testutil::close_rel(sims[k].data[i], direct.data[i], 1e-12, 1e-12));
        }
    }
}
