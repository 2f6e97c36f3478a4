#include <cmath>
#include <tuple>
#include <utility>

#include "doctest.h"
#include "lra/kernels.hpp"
#include "lra/matrix.hpp"
#include "lra/rng.hpp"
#include "lra/spectral.hpp"
#include "lra/svd.hpp"

using namespace lra;

namespace {

DenseMatrix random_matrix(int m, int n, Rng& rng) {
    DenseMatrix a(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.gaussian();
    return a;
}

double orthonormality_residual(const DenseMatrix& q) {
    DenseMatrix g = matmul_tn(q, q);
    DenseMatrix i = DenseMatrix::identity(q.cols());
    return max_abs(sub(g, i));
}

DenseMatrix reconstruct(const SvdResult& f) {
    DenseMatrix us(f.left.rows(), static_cast<int>(f.singular_values.size()));
    for (int i = 0; i < us.rows(); ++i)
        for (int j = 0; j < us.cols(); ++j) us(i, j) = f.left(i, j) * f.singular_values[j];
    return matmul_nt(us, f.right);
}

}  // namespace

TEST_CASE("rng determinism and substreams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    Rng s1 = c.substream("trial", 0);
    Rng s2 = c.substream("trial", 1);
    CHECK(s1.next_u64() != s2.next_u64());
    // substream derivation does not consume parent state
    Rng d(42);
    (void)d.substream("x");
    Rng e(42);
    CHECK(d.next_u64() == e.next_u64());
}

TEST_CASE("rng gaussian moments") {
    Rng rng(7);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    CHECK(std::fabs(sum / n) < 0.03);
    CHECK(std::fabs(sq / n - 1.0) < 0.05);
}

TEST_CASE("matrix invariants") {
    DenseMatrix a(2, 3);
    a(0, 0) = 1.0;
    CHECK(a.all_finite());
    a(1, 2) = std::nan("");
    CHECK(!a.all_finite());
    CHECK_THROWS_AS(require_finite(a, "op"), std::invalid_argument);
    CHECK_THROWS_AS(DenseMatrix(2, 2, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("parallel kernels match serial reference bitwise") {
    Rng rng(3);
    for (auto [m, k, n] : {std::tuple{33, 17, 29}, std::tuple{64, 64, 64}, std::tuple{5, 40, 3}}) {
        DenseMatrix a = random_matrix(m, k, rng);
        DenseMatrix b = random_matrix(k, n, rng);
        DenseMatrix c1 = matmul(a, b);
        DenseMatrix c2 = ref::matmul(a, b);
        CHECK(max_abs(sub(c1, c2)) == 0.0);
        DenseMatrix at = random_matrix(k, m, rng);
        CHECK(max_abs(sub(matmul_tn(at, b), ref::matmul_tn(at, b))) == 0.0);
        DenseMatrix bt = random_matrix(n, k, rng);
        CHECK(max_abs(sub(matmul_nt(a, bt), ref::matmul_nt(a, bt))) == 0.0);
    }
}

TEST_CASE("svd identity and diagonal") {
    SvdResult f = svd(DenseMatrix::identity(3));
    for (double s : f.singular_values) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

    SvdResult g = svd(DenseMatrix::diag({3.0, 2.0, 1.0}));
    CHECK(g.singular_values[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(g.singular_values[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g.singular_values[2] == doctest::Approx(1.0).epsilon(1e-12));
    // singular vectors are signed unit basis vectors
    for (int j = 0; j < 3; ++j) {
        int nz = 0;
        for (int i = 0; i < 3; ++i)
            if (std::fabs(g.left(i, j)) > 1e-12) ++nz;
        CHECK(nz == 1);
    }
}

TEST_CASE("svd reconstructs seeded gaussian 8x12") {
    Rng rng(11);
    DenseMatrix a = random_matrix(8, 12, rng);
    SvdResult f = svd(a);
    CHECK(orthonormality_residual(f.left) <= 1e-10);
    CHECK(orthonormality_residual(f.right) <= 1e-10);
    double rel = frobenius_norm(sub(reconstruct(f), a)) / frobenius_norm(a);
    CHECK(rel <= 1e-9);
    // descending order
    for (size_t j = 1; j < f.singular_values.size(); ++j)
        CHECK(f.singular_values[j] <= f.singular_values[j - 1]);
}

TEST_CASE("svd parallel and serial agree on spectra") {
    Rng rng(5);
    for (auto [m, n] : {std::pair{40, 25}, std::pair{25, 40}, std::pair{30, 30}}) {
        DenseMatrix a = random_matrix(m, n, rng);
        SvdResult f1 = svd(a);
        SvdResult f2 = ref::svd(a);
        REQUIRE(f1.singular_values.size() == f2.singular_values.size());
        for (size_t j = 0; j < f1.singular_values.size(); ++j)
            CHECK(f1.singular_values[j] == doctest::Approx(f2.singular_values[j]).epsilon(1e-10));
        double rel = frobenius_norm(sub(reconstruct(f1), a)) / frobenius_norm(a);
        CHECK(rel <= 1e-9);
    }
}

TEST_CASE("svd zero matrix") {
    SvdResult f = svd(DenseMatrix(5, 4));
    for (double s : f.singular_values) CHECK(s == 0.0);
    CHECK(orthonormality_residual(f.left) <= 1e-12);
}

TEST_CASE("eps_rank counts and conventions") {
    CHECK(eps_rank(DenseMatrix::diag({1.0, 0.1, 0.01}), 0.05) == 2);
    CHECK(eps_rank(DenseMatrix::identity(4), 0.5) == 4);
    CHECK(eps_rank(DenseMatrix(5, 5), 0.1) == 0);
    CHECK_THROWS_AS(eps_rank(DenseMatrix::identity(2), 0.0), std::invalid_argument);
    // strict inequality at the threshold
    CHECK(eps_rank(std::vector<double>{1.0, 0.5}, 0.5) == 1);
}

TEST_CASE("eps_rank monotone in eps") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        Rng t = rng.substream("trial", trial);
        DenseMatrix a = random_matrix(10, 14, t);
        double e1 = t.uniform(1e-4, 0.5);
        double e2 = e1 * t.uniform(1.0, 10.0);
        CHECK(eps_rank(a, e1) >= eps_rank(a, e2));
    }
}

TEST_CASE("truncate_to_rank") {
    // rank-2 matrix truncated at 2 is exact
    Rng rng(23);
    DenseMatrix u = random_matrix(8, 2, rng);
    DenseMatrix v = random_matrix(6, 2, rng);
    DenseMatrix a = matmul_nt(u, v);
    DenseMatrix t2 = truncate_to_rank(a, 2);
    CHECK(spectral_norm(sub(a, t2)) <= 1e-10 * spectral_norm(a));

    DenseMatrix d = DenseMatrix::diag({3.0, 2.0, 1.0});
    DenseMatrix t1 = truncate_to_rank(d, 1);
    CHECK(t1(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::fabs(t1(1, 1)) <= 1e-12);
    CHECK(spectral_norm(sub(d, t1)) == doctest::Approx(2.0).epsilon(1e-10));

    CHECK_THROWS_AS(truncate_to_rank(d, 4), std::invalid_argument);
}

TEST_CASE("truncate_to_rank spectral error equals tail singular value") {
    Rng rng(29);
    SpectrumSpec spec = SpectrumSpec::log_spaced(16, -4.0, 0.0);
    DenseMatrix a = matrix_with_spectrum(16, 16, spec, rng);
    DenseMatrix t = truncate_to_rank(a, 8);
    CHECK(spectral_norm(sub(a, t)) == doctest::Approx(spec[8]).epsilon(1e-9));
}

TEST_CASE("truncate_to_rank frobenius identity") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        Rng t = rng.substream("frob", trial);
        DenseMatrix a = random_matrix(12, 9, t);
        std::vector<double> s = singular_values(a);
        int r = 1 + t.uniform_int(8);
        double tail = 0.0;
        for (size_t j = r; j < s.size(); ++j) tail += s[j] * s[j];
        double err = frobenius_norm(sub(a, truncate_to_rank(a, r)));
        CHECK(err * err == doctest::Approx(tail).epsilon(1e-8));
    }
}

TEST_CASE("truncate_to_tolerance") {
    auto [t, kept] = truncate_to_tolerance(DenseMatrix::diag({1.0, 0.1, 0.01}), 0.05);
    CHECK(kept == 2);
    CHECK(spectral_norm(sub(DenseMatrix::diag({1.0, 0.1, 0.01}), t)) == doctest::Approx(0.01).epsilon(1e-9));

    auto [z, k0] = truncate_to_tolerance(DenseMatrix::identity(3), 1.0);
    CHECK(k0 == 0);
    CHECK(max_abs(z) == 0.0);

    Rng rng(37);
    DenseMatrix a = random_matrix(10, 20, rng);
    double eps = 0.2;
    auto [tr, kr] = truncate_to_tolerance(a, eps);
    CHECK(spectral_norm(sub(a, tr)) <= eps * spectral_norm(a) * (1.0 + 1e-9));
    CHECK(kr == eps_rank(a, eps));
}

TEST_CASE("random_orthogonal haar properties") {
    Rng rng(41);
    DenseMatrix q1 = random_orthogonal(1, rng);
    CHECK(std::fabs(std::fabs(q1(0, 0)) - 1.0) <= 1e-14);

    DenseMatrix q = random_orthogonal(8, rng);
    CHECK(orthonormality_residual(q) <= 1e-10);
    // |det| = 1 via the product of R diagonals of its own QR
    QrResult f = qr_decompose(q);
    double logdet = 0.0;
    for (int j = 0; j < 8; ++j) logdet += std::log(std::fabs(f.r(j, j)));
    CHECK(std::fabs(std::exp(logdet) - 1.0) <= 1e-8);
}

TEST_CASE("matrix_with_spectrum round-trips the spectrum") {
    Rng rng(43);
    SpectrumSpec s2({2.0, 1.0});
    DenseMatrix x = matrix_with_spectrum(2, 6, s2, rng);
    std::vector<double> sv = singular_values(x);
    CHECK(sv[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sv[1] == doctest::Approx(1.0).epsilon(1e-9));

    SpectrumSpec s1({1.0});
    DenseMatrix y = matrix_with_spectrum(1, 4, s1, rng);
    CHECK(frobenius_norm(y) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(matrix_with_spectrum(4, 2, SpectrumSpec::log_spaced(4, -1, 0), rng), std::invalid_argument);
}

TEST_CASE("matrix_with_spectrum property: 100 seeded trials") {
    Rng rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        Rng t = rng.substream("spec", trial);
        int d = 2 + t.uniform_int(10);
        int L = d + t.uniform_int(20);
        std::vector<double> v(d);
        double cur = t.uniform(0.5, 2.0);
        for (int j = 0; j < d; ++j) {
            v[j] = cur;
            cur *= t.uniform(0.2, 1.0);
        }
        DenseMatrix x = matrix_with_spectrum(d, L, SpectrumSpec(v), t);
        std::vector<double> sv = singular_values(x);
        for (int j = 0; j < d; ++j) CHECK(sv[j] == doctest::Approx(v[j]).epsilon(1e-9));
    }
}

TEST_CASE("angle_matrix basics") {
    // duplicate columns -> 0; orthogonal columns -> pi/2; (1,0) vs (1,1)/sqrt2 -> pi/4
    DenseMatrix x(2, 3);
    x(0, 0) = 1.0;
    x(0, 1) = 1.0;
    x(0, 2) = 1.0;
    x(1, 2) = 1.0;
    DenseMatrix t = angle_matrix(x);
    CHECK(t(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t(0, 2) == doctest::Approx(std::acos(1.0 / std::sqrt(2.0))).epsilon(1e-12));

    DenseMatrix o(2, 2);
    o(0, 0) = 1.0;
    o(1, 1) = 1.0;
    CHECK(angle_matrix(o)(0, 1) == doctest::Approx(std::acos(0.0)).epsilon(1e-12));

    DenseMatrix z(2, 2);
    z(0, 0) = 1.0;
    CHECK_THROWS_WITH_AS(angle_matrix(z), doctest::Contains("column 1"), std::invalid_argument);
}

TEST_CASE("angle_matrix invariant under positive column rescale") {
    Rng rng(53);
    DenseMatrix x = random_matrix(6, 10, rng);
    DenseMatrix y = x;
    for (int j = 0; j < y.cols(); ++j) {
        double s = rng.uniform(0.1, 10.0);
        for (int i = 0; i < y.rows(); ++i) y(i, j) *= s;
    }
    CHECK(max_abs(sub(angle_matrix(x), angle_matrix(y))) <= 1e-10);
}

TEST_CASE("rowspace_distance on exact spans") {
    Rng rng(59);
    DenseMatrix x = random_matrix(8, 20, rng);
    CHECK(rowspace_distance(x, x) <= 1e-9);

    // rank-2 X, sketch with its first two (independent) rows
    DenseMatrix u = random_matrix(8, 2, rng);
    DenseMatrix v = random_matrix(20, 2, rng);
    DenseMatrix x2 = matmul_nt(u, v);
    CHECK(rowspace_distance(x2, x2.row_block(0, 2)) <= 1e-9);

    // all-zero sketch projects onto the trivial space
    DenseMatrix z(3, 20);
    CHECK(rowspace_distance(x, z) == doctest::Approx(spectral_norm(x)).epsilon(1e-12));
}

TEST_CASE("rowspace_distance lower bound via Eckart-Young") {
    Rng rng(61);
    SpectrumSpec spec = SpectrumSpec::exponential(12, 5.0);
    for (int trial = 0; trial < 10; ++trial) {
        Rng t = rng.substream("rsd", trial);
        DenseMatrix x = matrix_with_spectrum(12, 24, spec, t);
        int rows = 1 + t.uniform_int(6);
        DenseMatrix w = random_matrix(rows, 12, t);
        double dist = rowspace_distance(x, matmul(w, x));
        CHECK(dist >= spec[rows] - 1e-9);
    }
}

TEST_CASE("rowspace_distance gaussian sketch lands in the tail band") {
    Rng rng(67);
    SpectrumSpec spec = SpectrumSpec::exponential(24, 6.0);
    DenseMatrix x = matrix_with_spectrum(24, 48, spec, rng);
    int dt = 6;
    DenseMatrix w = random_matrix(dt, 24, rng);
    double dist = rowspace_distance(x, matmul(w, x));
    // the brute-force definition puts the distance between sigma_{dt+1} and a
    // modest multiple of it for a dense gaussian sketch
    CHECK(dist >= spec[dt] - 1e-9);
    CHECK(dist <= 40.0 * spec[dt]);
}

TEST_CASE("spectral_norm exact vs power iteration") {
    Rng rng(71);
    for (int trial = 0; trial < 12; ++trial) {
        Rng t = rng.substream("norm", trial);
        DenseMatrix a = random_matrix(3 + t.uniform_int(20), 3 + t.uniform_int(20), t);
        double exact = spectral_norm(a);
        double est = spectral_norm_power(a);
        CHECK(est == doctest::Approx(exact).epsilon(1e-8));
    }
}

TEST_CASE("orth drops numerically dead directions") {
    Rng rng(73);
    DenseMatrix u = random_matrix(10, 3, rng);
    DenseMatrix v = random_matrix(7, 3, rng);
    DenseMatrix a = matmul_nt(u, v);
    DenseMatrix q = orth(a);
    CHECK(q.cols() == 3);
    CHECK(orthonormality_residual(q) <= 1e-10);
    CHECK(orth(DenseMatrix(4, 4)).cols() == 0);
}
