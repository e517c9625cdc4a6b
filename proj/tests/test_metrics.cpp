// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "helpers.hpp"
#include "swae/metrics.hpp"

using namespace swae;

namespace {

// Gauss-Jordan inverse, test-only support for the Denman-Beavers oracle.
std::vector<double> invert(std::vector<double> a, int d) {
    std::vector<double> inv(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) inv[static_cast<std::size_t>(i) * d + i] = 1.0;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r)
            if (std::abs(a[static_cast<std::size_t>(r) * d + col]) >
                std::abs(a[static_cast<std::size_t>(pivot) * d + col]))
                pivot = r;
        for (int j = 0; j < d; ++j) {
            std::swap(a[static_cast<std::size_t>(col) * d + j],
                      a[static_cast<std::size_t>(pivot) * d + j]);
            std::swap(inv[static_cast<std::size_t>(col) * d + j],
                      inv[static_cast<std::size_t>(pivot) * d + j]);
        }
        const double p = a[static_cast<std::size_t>(col) * d + col];
        REQUIRE(std::abs(p) > 1e-12);
        for (int j = 0; j < d; ++j) {
            a[static_cast<std::size_t>(col) * d + j] /= p;
            inv[static_cast<std::size_t>(col) * d + j] /= p;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            const double f = a[static_cast<std::size_t>(r) * d + col];
            for (int j = 0; j < d; ++j) {
                a[static_cast<std::size_t>(r) * d + j] -=
                    f * a[static_cast<std::size_t>(col) * d + j];
                inv[static_cast<std::size_t>(r) * d + j] -=
                    f * inv[static_cast<std::size_t>(col) * d + j];
            }
        }
    }
    return inv;
}

std::vector<double> matmul_sq(const std::vector<double>& a, const std::vector<double>& b, int d) {
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k)
            for (int j = 0; j < d; ++j)
                c[static_cast<std::size_t>(i) * d + j] +=
                    a[static_cast<std::size_t>(i) * d + k] * b[static_cast<std::size_t>(k) * d + j];
    return c;
}

// Denman-Beavers iteration: Y -> A^{1/2} for well-conditioned SPD A.
std::vector<double> db_sqrt(const std::vector<double>& a, int d) {
    std::vector<double> y = a, z(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) z[static_cast<std::size_t>(i) * d + i] = 1.0;
    for (int it = 0; it < 60; ++it) {
        const std::vector<double> yi = invert(y, d), zi = invert(z, d);
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double ny = 0.5 * (y[i] + zi[i]);
            const double nz = 0.5 * (z[i] + yi[i]);
            y[i] = ny;
            z[i] = nz;
        }
    }
    return y;
}

std::vector<double> random_spd(int d, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> m(static_cast<std::size_t>(d) * d);
    for (double& v : m) v = rng.uniform(-1.0, 1.0);
    std::vector<double> a(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            for (int k = 0; k < d; ++k)
                a[static_cast<std::size_t>(i) * d + j] +=
                    m[static_cast<std::size_t>(i) * d + k] * m[static_cast<std::size_t>(j) * d + k];
            if (i == j) a[static_cast<std::size_t>(i) * d + j] += 0.5;
        }
    return a;
}

}  // namespace

TEST_CASE("jacobi eigensolver solves a known 2x2 and reconstructs random matrices") {
    std::vector<double> w, v;
    detail::jacobi_eig({2, 1, 1, 2}, 2, w, v);
    std::sort(w.begin(), w.end());
    REQUIRE(w[0] == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(w[1] == Catch::Approx(3.0).margin(1e-12));

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const int d = 8;
        const auto a = random_spd(d, seed);
        detail::jacobi_eig(a, d, w, v);
        // Rebuild V diag(w) V^T and compare entrywise.
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k)
                    s += v[static_cast<std::size_t>(i) * d + k] * w[k] *
                         v[static_cast<std::size_t>(j) * d + k];
                REQUIRE(s == Catch::Approx(a[static_cast<std::size_t>(i) * d + j]).margin(1e-9));
            }
    }
}

TEST_CASE("matrix square root agrees with the Denman-Beavers oracle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const int d = 4;
        const auto a = random_spd(d, seed);
        const auto want = db_sqrt(a, d);
        const auto got = detail::sqrt_psd(a, d, "test");
        // Oracle self-check: the iterate must actually square back to A.
        const auto sq = matmul_sq(want, want, d);
        for (std::size_t i = 0; i < a.size(); ++i)
            REQUIRE(sq[i] == Catch::Approx(a[i]).margin(1e-10));
        for (std::size_t i = 0; i < a.size(); ++i)
            REQUIRE(got[i] == Catch::Approx(want[i]).margin(1e-10));
    }
}

TEST_CASE("fid matches the closed form for 1-d Gaussians") {
    FeatureMoments a{1, {0.0}, {1.0}};
    FeatureMoments b{1, {1.0}, {1.0}};
    REQUIRE(fid(a, b) == Catch::Approx(1.0).margin(1e-8));

    // Equal means, variances 4 and 9: 4 + 9 - 2*6 = 1.
    FeatureMoments c{1, {0.5}, {4.0}};
    FeatureMoments d{1, {0.5}, {9.0}};
    REQUIRE(fid(c, d) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("fid of a distribution with itself is zero") {
    Rng rng(3);
    TensorPtr x = zeros({500, 6});
    for (double& v : x->data) v = rng.normal();
    REQUIRE(fid(x, x) < 1e-6);
}

TEST_CASE("fid is symmetric and shifts by ||v||^2 under translation of one side") {
    Rng rng(4);
    TensorPtr x = zeros({400, 3});
    TensorPtr y = zeros({400, 3});
    for (double& v : x->data) v = rng.normal();
    for (double& v : y->data) v = 0.7 * rng.normal() + 0.2;
    const double fxy = fid(x, y);
    REQUIRE(fxy == Catch::Approx(fid(y, x)).margin(1e-9));

    // Shift both: invariant. Shift one by v: means part moves accordingly.
    TensorPtr xs = zeros({400, 3});
    TensorPtr ys = zeros({400, 3});
    for (int i = 0; i < 400 * 3; ++i) {
        xs->data[i] = x->data[i] + 5.0;
        ys->data[i] = y->data[i] + 5.0;
    }
    REQUIRE(fid(xs, ys) == Catch::Approx(fxy).margin(1e-7));
}

TEST_CASE("fid rejects matrices with genuinely negative eigenvalues") {
    FeatureMoments a{2, {0.0, 0.0}, {1.0, 0.0, 0.0, -1.0}};
    FeatureMoments b{2, {0.0, 0.0}, {1.0, 0.0, 0.0, 1.0}};
    REQUIRE_THROWS_MATCHES(fid(a, b), MetricError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("eigenvalue")));
}

TEST_CASE("moments_of recovers known mean and covariance from samples") {
    // x = mu + L z with known L L^T.
    const double mu0 = 0.3, mu1 = -0.2;
    const double l00 = 1.0, l10 = 0.3, l11 = std::sqrt(0.5 - 0.09);
    Rng rng(9);
    const int n = 100000;
    TensorPtr x = zeros({n, 2});
    for (int i = 0; i < n; ++i) {
        const double z0 = rng.normal(), z1 = rng.normal();
        x->data[i * 2] = mu0 + l00 * z0;
        x->data[i * 2 + 1] = mu1 + l10 * z0 + l11 * z1;
    }
    const FeatureMoments mo = moments_of(x);
    REQUIRE(mo.mean[0] == Catch::Approx(mu0).margin(0.02));
    REQUIRE(mo.mean[1] == Catch::Approx(mu1).margin(0.02));
    REQUIRE(mo.cov[0] == Catch::Approx(1.0).margin(0.05));
    REQUIRE(mo.cov[1] == Catch::Approx(0.3).margin(0.05));
    REQUIRE(mo.cov[2] == Catch::Approx(0.3).margin(0.05));
    REQUIRE(mo.cov[3] == Catch::Approx(0.5).margin(0.05));
}

TEST_CASE("icp of one-hot rows covering every class equals the class count") {
    TensorPtr p = zeros({10, 10});
    for (int i = 0; i < 10; ++i) p->data[i * 10 + i] = 1.0;
    REQUIRE(icp(p) == Catch::Approx(10.0).margin(1e-9));
}

TEST_CASE("icp of identical rows is exactly 1") {
    TensorPtr p = zeros({32, 5});
    for (int i = 0; i < 32; ++i)
        for (int j = 0; j < 5; ++j) p->data[i * 5 + j] = 0.2;
    REQUIRE(icp(p) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("icp agrees with a brute-force double loop and stays in [1, C]") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 40, c = 7;
        TensorPtr p = zeros({n, c});
        for (int i = 0; i < n; ++i) {
            double sum = 0.0;
            for (int j = 0; j < c; ++j) {
                p->data[i * c + j] = std::exp(2.0 * rng.normal());
                sum += p->data[i * c + j];
            }
            for (int j = 0; j < c; ++j) p->data[i * c + j] /= sum;
        }
        // Independent accumulation: marginal first, then KL row by row.
        std::vector<double> pbar(c, 0.0);
        for (int j = 0; j < c; ++j) {
            for (int i = 0; i < n; ++i) pbar[j] += p->data[i * c + j];
            pbar[j] /= n;
        }
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double kl = 0.0;
            for (int j = 0; j < c; ++j) {
                const double v = p->data[i * c + j];
                if (v > 0) kl += v * std::log(v) - v * std::log(pbar[j]);
            }
            total += kl;
        }
        const double want = std::exp(total / n);
        const double got = icp(p);
        REQUIRE(got == Catch::Approx(want).epsilon(1e-10));
        REQUIRE(got >= 1.0 - 1e-12);
        REQUIRE(got <= c + 1e-12);
    }
}

TEST_CASE("icp validates its input rows") {
    TensorPtr bad = tensor({1, 2}, {0.7, 0.7});
    REQUIRE_THROWS_AS(icp(bad), MetricError);
    TensorPtr neg = tensor({1, 2}, {1.5, -0.5});
    REQUIRE_THROWS_AS(icp(neg), MetricError);
}

TEST_CASE("paired icp: hand case, identity case, and zero-mass error") {
    TensorPtr p = tensor({1, 2}, {1.0, 0.0});
    TensorPtr q = tensor({1, 2}, {0.5, 0.5});
    REQUIRE(icp_paired(p, q) == Catch::Approx(2.0).epsilon(1e-12));
    REQUIRE(icp_paired(q, q) == Catch::Approx(1.0).margin(1e-12));
    TensorPtr z = tensor({1, 2}, {0.0, 1.0});
    REQUIRE_THROWS_AS(icp_paired(p, z), MetricError);
}

TEST_CASE("mode coverage follows the 3-sigma geometry") {
    const RingInfo ring = gauss_ring_info(8, 2.0, 0.05);
    // One sample exactly on each of 6 centers, plus two far outliers.
    TensorPtr s = zeros({8, 2});
    for (int m = 0; m < 6; ++m) {
        s->data[m * 2] = ring.centers[m][0];
        s->data[m * 2 + 1] = ring.centers[m][1];
    }
    s->data[12] = 0.0;
    s->data[13] = 0.0;  // center of the ring: > 3 sigma from everything
    s->data[14] = 0.99;
    s->data[15] = 0.99;
    const CoverageReport rep = mode_coverage(s, ring);
    REQUIRE(rep.modes_hit == 6);
    REQUIRE(rep.hq_fraction == Catch::Approx(6.0 / 8.0).margin(1e-12));

    // Radial displacement just inside vs just outside the 3-sigma shell.
    TensorPtr t = zeros({2, 2});
    const double r = std::hypot(ring.centers[0][0], ring.centers[0][1]);
    t->data[0] = ring.centers[0][0] * (1.0 + 2.9 * ring.sigma / r);
    t->data[1] = ring.centers[0][1] * (1.0 + 2.9 * ring.sigma / r);
    t->data[2] = ring.centers[1][0] * (1.0 + 3.1 * ring.sigma / r);
    t->data[3] = ring.centers[1][1] * (1.0 + 3.1 * ring.sigma / r);
    const CoverageReport rep2 = mode_coverage(t, ring);
    REQUIRE(rep2.modes_hit == 1);
    REQUIRE(rep2.hq_fraction == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("toy classifier reaches the accuracy floor and exposes probs/features") {
    Dataset ds = gen_glyphs(600, 31, Split::Train);
    Classifier clf = train_toy_classifier(ds, 31);
    REQUIRE(classifier_accuracy(clf, ds) >= 0.95);

    TensorPtr probs = classifier_probs(clf, ds.samples);
    REQUIRE(probs->shape == std::vector<int>{600, 10});
    for (int i = 0; i < 5; ++i) {
        double sum = 0.0;
        for (int j = 0; j < 10; ++j) sum += probs->data[i * 10 + j];
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-9));
    }

    TensorPtr feats = classifier_features(clf, ds.samples);
    REQUIRE(feats->shape == std::vector<int>{600, 32});
    // Real-vs-real FID over classifier features is tiny; a disjoint draw from
    // the same generator must look the same through the feature map.
    Dataset ds2 = gen_glyphs(600, 77, Split::Val);
    const double f = fid(feats, classifier_features(clf, ds2.samples));
    REQUIRE(f < 1.0);
}

TEST_CASE("metrics csv has the pinned header and one line per row") {
    std::vector<MetricsRow> rows(2);
    rows[0].step = 100;
    rows[0].head = "g0";
    rows[0].mse = 0.5;
    rows[1].step = 200;
    rows[1].head = "u0";
    rows[1].modes_hit = 7;
    rows[1].hq_fraction = 0.875;
    std::ostringstream os;
    write_metrics_csv(os, rows);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    REQUIRE(line == "step,head,mse,fid,icp,modes_hit,hq_fraction");
    std::getline(is, line);
    REQUIRE(line.substr(0, 11) == "100,g0,0.5,");
    std::getline(is, line);
    REQUIRE(line.find(",7,0.875") != std::string::npos);
    REQUIRE_FALSE(std::getline(is, line));
}
