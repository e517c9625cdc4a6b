// Copyright (c) 2026 SWAE Authors
// SPDX-License-Identifier: Apache-2.0
//
// Evaluation metrics: Frechet distance between feature moments (FID), the
// inception-style conditional-prior score (ICP), mode coverage for the
// Gaussian ring, and the small glyph classifier that supplies features and
// class posteriors for the image metrics.
//
// All linear algebra is dense and symmetric-only (feature dims stay <= 64),
// so a cyclic Jacobi eigensolver is sufficient and keeps the library free of
// external dependencies.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "swae/data.hpp"
#include "swae/io.hpp"
#include "swae/nn.hpp"
#include "swae/tensor.hpp"

namespace swae {

struct MetricError : std::runtime_error {
    explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// Sample mean and unbiased (N-1) covariance of row-vector features.
struct FeatureMoments {
    int dim = 0;
    std::vector<double> mean;  // [dim]
    std::vector<double> cov;   // [dim * dim], row-major, symmetric
};

inline FeatureMoments moments_of(const TensorPtr& samples) {
    if (samples->shape.size() != 2) throw MetricError("moments_of: expects a (n, d) matrix");
    const int n = samples->shape[0], d = samples->shape[1];
    if (n < 2) throw MetricError("moments_of: need at least 2 samples");
    FeatureMoments mo;
    mo.dim = d;
    mo.mean.assign(d, 0.0);
    mo.cov.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) mo.mean[j] += samples->data[i * d + j];
    for (double& v : mo.mean) v /= n;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const double cj = samples->data[i * d + j] - mo.mean[j];
            for (int k = j; k < d; ++k) {
                const double ck = samples->data[i * d + k] - mo.mean[k];
                mo.cov[static_cast<std::size_t>(j) * d + k] += cj * ck;
            }
        }
    }
    for (int j = 0; j < d; ++j)
        for (int k = j; k < d; ++k) {
            const double v = mo.cov[static_cast<std::size_t>(j) * d + k] / (n - 1);
            mo.cov[static_cast<std::size_t>(j) * d + k] = v;
            mo.cov[static_cast<std::size_t>(k) * d + j] = v;
        }
    return mo;
}

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix: A = V diag(w) V^T.
// Plenty for the d <= 64 covariance matrices used here.
inline void jacobi_eig(std::vector<double> a, int d, std::vector<double>& w,
                       std::vector<double>& v) {
    auto at = [&](std::vector<double>& m, int i, int j) -> double& {
        return m[static_cast<std::size_t>(i) * d + j];
    };
    v.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) at(v, i, i) = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += at(a, p, q) * at(a, p, q);
        if (off < 1e-26 * d * d) break;
        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = at(a, p, q);
                if (apq == 0.0) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < d; ++i) {
                    const double aip = at(a, i, p), aiq = at(a, i, q);
                    at(a, i, p) = c * aip - s * aiq;
                    at(a, i, q) = s * aip + c * aiq;
                }
                for (int i = 0; i < d; ++i) {
                    const double api = at(a, p, i), aqi = at(a, q, i);
                    at(a, p, i) = c * api - s * aqi;
                    at(a, q, i) = s * api + c * aqi;
                }
                for (int i = 0; i < d; ++i) {
                    const double vip = at(v, i, p), viq = at(v, i, q);
                    at(v, i, p) = c * vip - s * viq;
                    at(v, i, q) = s * vip + c * viq;
                }
            }
        }
    }
    w.resize(d);
    for (int i = 0; i < d; ++i) w[i] = at(a, i, i);
}

// Covariances are PSD up to round-off: eigenvalues in [-1e-8, 0) are treated
// as zero, anything more negative means the input was not a covariance.
inline double clamp_psd_eigenvalue(double lambda, const char* context) {
    if (lambda >= 0.0) return lambda;
    if (lambda >= -1e-8) return 0.0;
    throw MetricError(std::string(context) + ": matrix is not PSD (eigenvalue " +
                      format_double(lambda) + ")");
}

inline std::vector<double> matmul_square(const std::vector<double>& a,
                                         const std::vector<double>& b, int d) {
    std::vector<double> c(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            const double aik = a[static_cast<std::size_t>(i) * d + k];
            if (aik == 0.0) continue;
            for (int j = 0; j < d; ++j)
                c[static_cast<std::size_t>(i) * d + j] +=
                    aik * b[static_cast<std::size_t>(k) * d + j];
        }
    return c;
}

inline std::vector<double> sqrt_psd(const std::vector<double>& a, int d, const char* context) {
    std::vector<double> w, v;
    jacobi_eig(a, d, w, v);
    for (double& lam : w) lam = std::sqrt(clamp_psd_eigenvalue(lam, context));
    // V diag(sqrt w) V^T
    std::vector<double> out(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            double s = 0.0;
            for (int k = 0; k < d; ++k)
                s += v[static_cast<std::size_t>(i) * d + k] * w[k] *
                     v[static_cast<std::size_t>(j) * d + k];
            out[static_cast<std::size_t>(i) * d + j] = s;
            out[static_cast<std::size_t>(j) * d + i] = s;
        }
    return out;
}

}  // namespace detail

// Frechet distance between two Gaussians fitted to feature sets:
//   ||m_a - m_b||^2 + tr(A) + tr(B) - 2 tr((A B)^{1/2}).
// The cross term is computed through the symmetrized product
// S = A^{1/2} B A^{1/2}, whose eigenvalues match those of A B but which is
// symmetric PSD, so the Jacobi solver applies.
inline double fid(const FeatureMoments& a, const FeatureMoments& b) {
    if (a.dim != b.dim) throw MetricError("fid: feature dimensions differ");
    const int d = a.dim;
    double dist = 0.0;
    for (int i = 0; i < d; ++i) {
        const double dm = a.mean[i] - b.mean[i];
        dist += dm * dm;
    }
    for (int i = 0; i < d; ++i)
        dist += a.cov[static_cast<std::size_t>(i) * d + i] +
                b.cov[static_cast<std::size_t>(i) * d + i];

    const std::vector<double> ra = detail::sqrt_psd(a.cov, d, "fid");
    std::vector<double> s = detail::matmul_square(detail::matmul_square(ra, b.cov, d), ra, d);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double sym = 0.5 * (s[static_cast<std::size_t>(i) * d + j] +
                                      s[static_cast<std::size_t>(j) * d + i]);
            s[static_cast<std::size_t>(i) * d + j] = sym;
            s[static_cast<std::size_t>(j) * d + i] = sym;
        }
    std::vector<double> w, v;
    detail::jacobi_eig(s, d, w, v);
    double tr_sqrt = 0.0;
    for (double lam : w) tr_sqrt += std::sqrt(detail::clamp_psd_eigenvalue(lam, "fid"));
    return dist - 2.0 * tr_sqrt;
}

inline double fid(const TensorPtr& a, const TensorPtr& b) {
    return fid(moments_of(a), moments_of(b));
}

namespace detail {

inline void check_distribution_rows(const TensorPtr& p, const char* context) {
    if (p->shape.size() != 2) throw MetricError(std::string(context) + ": expects (n, c) rows");
    const int n = p->shape[0], c = p->shape[1];
    for (int i = 0; i < n; ++i) {
        double sum = 0.0;
        for (int j = 0; j < c; ++j) {
            const double v = p->data[static_cast<std::size_t>(i) * c + j];
            if (v < 0.0) throw MetricError(std::string(context) + ": negative probability");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw MetricError(std::string(context) + ": row " + std::to_string(i) +
                              " sums to " + format_double(sum));
    }
}

}  // namespace detail

// exp(E_i KL(p_i || p_bar)) over class posteriors p_i, with p_bar the mean
// posterior. Sharp, diverse posteriors push the score toward the class
// count; a collapsed generator pins it near 1.
inline double icp(const TensorPtr& probs) {
    detail::check_distribution_rows(probs, "icp");
    const int n = probs->shape[0], c = probs->shape[1];
    std::vector<double> pbar(c, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) pbar[j] += probs->data[static_cast<std::size_t>(i) * c + j];
    for (double& v : pbar) v /= n;
    double kl_sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            const double pij = probs->data[static_cast<std::size_t>(i) * c + j];
            if (pij > 0.0) kl_sum += pij * std::log(pij / pbar[j]);
        }
    return std::exp(kl_sum / n);
}

// Literal paired variant: exp(E_i KL(p_real_i || p_gen_i)) over equally sized
// batches. Kept separate because it measures row-by-row divergence rather
// than diversity; a zero in a generated posterior where the real one has mass
// makes the divergence infinite, which is reported as an error.
inline double icp_paired(const TensorPtr& p_real, const TensorPtr& p_gen) {
    detail::check_distribution_rows(p_real, "icp_paired");
    detail::check_distribution_rows(p_gen, "icp_paired");
    if (p_real->shape != p_gen->shape) throw MetricError("icp_paired: shapes differ");
    const int n = p_real->shape[0], c = p_real->shape[1];
    double kl_sum = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) {
            const double p = p_real->data[static_cast<std::size_t>(i) * c + j];
            if (p == 0.0) continue;
            const double q = p_gen->data[static_cast<std::size_t>(i) * c + j];
            if (q <= 0.0)
                throw MetricError("icp_paired: generated posterior has zero mass where the "
                                  "real one does not (row " + std::to_string(i) + ")");
            kl_sum += p * std::log(p / q);
        }
    return std::exp(kl_sum / n);
}

// Ring-specific sample quality: each sample is assigned to its nearest mode
// center; it is high quality if it lies within 3 sigma of that center. A mode
// counts as hit when at least one high-quality sample lands on it.
struct CoverageReport {
    int modes_hit = 0;
    double hq_fraction = 0.0;
};

inline CoverageReport mode_coverage(const TensorPtr& samples, const RingInfo& ring) {
    if (samples->shape.size() != 2 || samples->shape[1] != 2)
        throw MetricError("mode_coverage: expects (n, 2) samples");
    const int n = samples->shape[0];
    const int modes = static_cast<int>(ring.centers.size());
    const double r2 = 9.0 * ring.sigma * ring.sigma;
    std::vector<char> hit(modes, 0);
    int hq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = samples->data[i * 2], y = samples->data[i * 2 + 1];
        int best = 0;
        double best_d2 = std::numeric_limits<double>::infinity();
        for (int m = 0; m < modes; ++m) {
            const double dx = x - ring.centers[m][0], dy = y - ring.centers[m][1];
            const double d2 = dx * dx + dy * dy;
            if (d2 < best_d2) {
                best_d2 = d2;
                best = m;
            }
        }
        if (best_d2 <= r2) {
            ++hq;
            hit[best] = 1;
        }
    }
    CoverageReport rep;
    for (char h : hit) rep.modes_hit += h;
    rep.hq_fraction = static_cast<double>(hq) / n;
    return rep;
}

// Small MLP classifier for the glyph set. Its class posteriors feed the ICP
// score and its penultimate activations are the feature space for FID.
struct Classifier {
    MlpSpec spec;
    ParamSet params;
};

inline int class_count(const Dataset& ds) {
    int c = 0;
    for (int lab : ds.labels) c = std::max(c, lab + 1);
    return c;
}

inline double classifier_accuracy(const Classifier& clf, const Dataset& ds) {
    TensorPtr logits = mlp_forward(nullptr, clf.params, clf.spec, ds.samples);
    const int n = ds.n(), c = clf.spec.output_dim();
    int correct = 0;
    for (int i = 0; i < n; ++i) {
        int arg = 0;
        for (int j = 1; j < c; ++j)
            if (logits->data[static_cast<std::size_t>(i) * c + j] >
                logits->data[static_cast<std::size_t>(i) * c + arg])
                arg = j;
        if (arg == ds.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / n;
}

inline Classifier train_toy_classifier(const Dataset& ds, std::uint64_t seed,
                                       int max_epochs = 200) {
    if (!ds.has_labels()) throw MetricError("train_toy_classifier: dataset has no labels");
    const int c = class_count(ds);
    Classifier clf;
    clf.spec = MlpSpec{{ds.dim(), 64, 32, c}, Activation::LeakyRelu, Activation::Identity};
    clf.params = init_params(clf.spec, Rng::derive(seed, "classifier/init"));
    AdamState opt = AdamState::for_params(clf.params, 1e-3);
    opt.beta1 = 0.9;

    const int batch = std::min(64, ds.n());
    const std::uint64_t shuffle_seed = Rng::derive(seed, "classifier/shuffle");
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        for (const auto& idx : batch_indices(ds.n(), batch, shuffle_seed, epoch)) {
            TensorPtr x = gather_rows(ds.samples, idx);
            std::vector<int> labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = ds.labels[idx[i]];
            Tape tape;
            clf.params.zero_grad();
            TensorPtr loss = softmax_cross_entropy(&tape, mlp_forward(&tape, clf.params,
                                                                       clf.spec, x), labels);
            tape.backward(loss);
            adam_step(opt, clf.params);
        }
        if (epoch % 10 == 9 && classifier_accuracy(clf, ds) >= 0.99) break;
    }
    const double acc = classifier_accuracy(clf, ds);
    if (acc < 0.95)
        throw MetricError("train_toy_classifier: training accuracy " + format_double(acc) +
                          " is below the 0.95 floor; metrics over its features would be noise");
    return clf;
}

inline TensorPtr classifier_probs(const Classifier& clf, const TensorPtr& x) {
    return softmax_rows(mlp_forward(nullptr, clf.params, clf.spec, x));
}

// Penultimate hidden activations (the width-32 layer), used as FID features.
inline TensorPtr classifier_features(const Classifier& clf, const TensorPtr& x) {
    TensorPtr h = x;
    for (int l = 0; l + 1 < clf.spec.layer_count(); ++l) {
        h = matmul(nullptr, h, clf.params.layers[l].weight, false, true);
        h = add_bias(nullptr, h, clf.params.layers[l].bias);
        h = apply_activation(nullptr, h, clf.spec.hidden_activation, clf.spec.leaky_slope);
    }
    return h;
}

// One evaluation row. Fields that do not apply to a dataset (fid/icp on the
// ring, coverage on glyphs) are NaN / -1 and serialize as such.
struct MetricsRow {
    long long step = 0;
    std::string head;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double fid = std::numeric_limits<double>::quiet_NaN();
    double icp = std::numeric_limits<double>::quiet_NaN();
    int modes_hit = -1;
    double hq_fraction = std::numeric_limits<double>::quiet_NaN();
};

inline void write_metrics_csv(std::ostream& os, const std::vector<MetricsRow>& rows) {
    os << "step,head,mse,fid,icp,modes_hit,hq_fraction\n";
    for (const auto& r : rows) {
        os << r.step << ',' << r.head << ',' << format_double(r.mse) << ','
           << format_double(r.fid) << ',' << format_double(r.icp) << ',' << r.modes_hit << ','
           << format_double(r.hq_fraction) << '\n';
    }
}

}  // namespace swae
