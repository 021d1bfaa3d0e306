#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/matrix.hpp"
#include "hybridface/pca.hpp"

namespace hybridface {

struct IcaConfig {
    double learn_rate = 0.001;
    std::size_t max_passes = 512;
    double convergence_cos = 0.999999; // stop once old/new W point this nearly alike
    std::size_t block_size = 0;        // samples per update; 0 = whole batch
    std::uint32_t seed = 0;            // reserved for stochastic variants
    std::size_t pca_prewhiten_dims = 0; // dimensions kept before ICA; 0 = follow the
                                        // eigenface branch's component count
};

// Independent-component basis fitted on (optionally dimension-reduced)
// training data. Row i of `basis` is the coefficient vector of training
// face i; probes get the matching treatment in project_ica.
struct IcaModel {
    Matrix whitening;    // maps centered data to unit covariance
    Matrix learned;      // separating matrix found on the whitened data
    Matrix unmixing;     // learned * whitening, the full separating map
    Matrix unmixing_inv; // cached inverse of `unmixing`
    Matrix basis;        // training count x dims, rows = per-face coefficients
    std::vector<double> row_means; // per-variable centering offsets
    std::optional<EigenModel> pre_projection; // dimension reduction applied to probes
};

struct SphereResult {
    Matrix centered;            // data minus per-variable means
    Matrix w_z;                 // whitening matrix
    std::vector<double> means;  // the subtracted per-variable means
};

namespace detail {

inline void validate_ica_config(const IcaConfig& cfg) {
    if (!(cfg.learn_rate > 0.0))
        throw ParamError("learn rate must be positive, got " + std::to_string(cfg.learn_rate));
    if (!(cfg.convergence_cos > 0.0) || cfg.convergence_cos > 1.0)
        throw ParamError("convergence cosine must lie in (0,1], got " +
                         std::to_string(cfg.convergence_cos));
    if (cfg.max_passes == 0) throw ParamError("need at least one learning pass");
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace detail

// Centers each variable and builds the whitening map from the eigen
// decomposition of the sample covariance (normalized by the sample count):
// w_z = E^{-1/2} * U^T, so centered * w_z^T has identity covariance.
inline SphereResult sphere(const Matrix& data) {
    if (data.rows < 2)
        throw ParamError("sphering needs at least two observations, got " +
                         std::to_string(data.rows));
    const std::size_t m = data.rows;
    const std::size_t d = data.cols;

    SphereResult out;
    out.means.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < m; ++i) out.means[j] += data(i, j);
        out.means[j] /= static_cast<double>(m);
    }
    out.centered = Matrix(m, d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < d; ++j) out.centered(i, j) = data(i, j) - out.means[j];

    Matrix cov = matmul(transpose(out.centered), out.centered);
    for (double& v : cov.data) v /= static_cast<double>(m);
    const EigenPairs eig = eig_symmetric(cov);
    if (eig.values[0] <= 0.0 || eig.values[d - 1] <= 1e-12 * eig.values[0])
        throw RankError("covariance is singular; reduce dimensions first, e.g. by an "
                        "eigenface pre-projection");

    out.w_z = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        const double scale = 1.0 / std::sqrt(eig.values[i]);
        for (std::size_t j = 0; j < d; ++j) out.w_z(i, j) = scale * eig.vectors(j, i);
    }
    return out;
}

// Natural-gradient infomax on sphered data (rows = observations). Blocks of
// samples feed delta = learn_rate * (I + (1 - 2*logistic(u)) * u^T / n) * W
// with u = W * X; passes stop early once the old and new W, read as flat
// vectors, agree in direction up to convergence_cos. W starts at identity and
// the data order is fixed, so the result is reproducible.
inline Matrix learn_unmixing(const Matrix& white, const IcaConfig& cfg) {
    detail::validate_ica_config(cfg);
    if (white.rows == 0 || white.cols == 0)
        throw ShapeError("cannot learn from an empty matrix");
    const std::size_t m = white.rows;
    const std::size_t d = white.cols;
    const std::size_t block = cfg.block_size == 0 ? m : std::min(cfg.block_size, m);

    Matrix w = Matrix::identity(d);
    for (std::size_t pass = 0; pass < cfg.max_passes; ++pass) {
        const Matrix old = w;
        for (std::size_t start = 0; start < m; start += block) {
            const std::size_t n = std::min(block, m - start);

            Matrix u(d, n);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    double s = 0.0;
                    for (std::size_t k = 0; k < d; ++k) s += w(i, k) * white(start + j, k);
                    u(i, j) = s;
                }

            Matrix phi = Matrix::identity(d);
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t k = 0; k < d; ++k) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j)
                        s += (1.0 - 2.0 * detail::logistic(u(i, j))) * u(k, j);
                    phi(i, k) += s / static_cast<double>(n);
                }

            const Matrix delta = matmul(phi, w);
            for (std::size_t i = 0; i < w.data.size(); ++i) {
                w.data[i] += cfg.learn_rate * delta.data[i];
                if (!std::isfinite(w.data[i]) || std::abs(w.data[i]) > 1e6)
                    throw DivergenceError("separating matrix blew up; reduce the learn rate");
            }
        }

        double dot = 0.0, n_old = 0.0, n_new = 0.0;
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            dot += old.data[i] * w.data[i];
            n_old += old.data[i] * old.data[i];
            n_new += w.data[i] * w.data[i];
        }
        if (dot / std::sqrt(n_old * n_new) >= cfg.convergence_cos) break;
    }
    return w;
}

// Full fit: sphere, learn the separating matrix on the whitened data, compose
// the two, and keep the per-face coefficient rows basis = centered *
// unmixing^-1 (so basis * unmixing reproduces the centered data). `r` must
// already be dimension-reduced when `pre_projection` is given; the model keeps
// that reduction so probes can follow the same path.
inline IcaModel fit_ica(const Matrix& r, const IcaConfig& cfg,
                        std::optional<EigenModel> pre_projection = std::nullopt) {
    if (pre_projection && r.cols != pre_projection->m_prime)
        throw ShapeError("data has " + std::to_string(r.cols) +
                         " variables but the pre-projection keeps " +
                         std::to_string(pre_projection->m_prime));
    IcaModel model;
    SphereResult sph = sphere(r);
    model.row_means = std::move(sph.means);
    model.whitening = std::move(sph.w_z);
    model.learned = learn_unmixing(matmul(sph.centered, transpose(model.whitening)), cfg);
    model.unmixing = matmul(model.learned, model.whitening);
    model.unmixing_inv = invert(model.unmixing);
    model.basis = matmul(sph.centered, model.unmixing_inv);
    model.pre_projection = std::move(pre_projection);
    return model;
}

// Coefficients of a probe face: apply the stored dimension reduction if any,
// subtract the training means, and map through the inverse separating matrix.
// A probe equal to training face i reproduces row i of the basis.
inline FeatureVector project_ica(const IcaModel& model, const FaceVector& probe) {
    std::vector<double> rep;
    if (model.pre_projection) {
        rep = project_pca(*model.pre_projection, probe).weights;
    } else {
        rep = probe.values;
    }
    if (rep.size() != model.row_means.size())
        throw ShapeError("probe reduces to length " + std::to_string(rep.size()) +
                         " but the model expects " + std::to_string(model.row_means.size()));
    for (std::size_t i = 0; i < rep.size(); ++i) rep[i] -= model.row_means[i];

    FeatureVector out;
    out.branch = Branch::ica;
    out.weights.assign(rep.size(), 0.0);
    for (std::size_t j = 0; j < rep.size(); ++j)
        for (std::size_t i = 0; i < rep.size(); ++i)
            out.weights[j] += rep[i] * model.unmixing_inv(i, j);
    return out;
}

} // namespace hybridface
