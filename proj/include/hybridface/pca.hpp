#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/matrix.hpp"
#include "hybridface/preprocess.hpp"

namespace hybridface {

// Which feature branch produced a weight vector.
enum class Branch { pca, ica };

inline const char* branch_name(Branch b) { return b == Branch::pca ? "pca" : "ica"; }

struct FeatureVector {
    std::vector<double> weights;
    Branch branch = Branch::pca;
};

// Eigenface basis fitted on a training set: the mean face, unit-norm basis
// columns, and the strength (gram-matrix eigenvalue) of each component.
struct EigenModel {
    std::vector<double> mean;
    Matrix eigenfaces;               // pixel count x m_prime, unit-norm columns
    std::vector<double> eigenvalues; // descending, one per retained column
    std::size_t m_prime = 0;
    std::size_t n_train = 0;
};

inline std::vector<double> compute_mean(const std::vector<FaceVector>& faces) {
    if (faces.empty()) throw ParamError("compute_mean needs at least one face");
    const std::size_t dim = faces[0].values.size();
    std::vector<double> mean(dim, 0.0);
    for (const FaceVector& f : faces) {
        if (f.values.size() != dim)
            throw ShapeError("face length " + std::to_string(f.values.size()) +
                             " differs from first face length " + std::to_string(dim));
        for (std::size_t i = 0; i < dim; ++i) mean[i] += f.values[i];
    }
    for (double& v : mean) v /= static_cast<double>(faces.size());
    return mean;
}

// Stacks the mean-subtracted faces as columns: column i holds face i - mean.
inline Matrix center(const std::vector<FaceVector>& faces, const std::vector<double>& mean) {
    if (faces.empty()) throw ParamError("center needs at least one face");
    const std::size_t dim = mean.size();
    Matrix a(dim, faces.size());
    for (std::size_t j = 0; j < faces.size(); ++j) {
        if (faces[j].values.size() != dim)
            throw ShapeError("face length " + std::to_string(faces[j].values.size()) +
                             " differs from mean length " + std::to_string(dim));
        for (std::size_t i = 0; i < dim; ++i) a(i, j) = faces[j].values[i] - mean[i];
    }
    return a;
}

// Smallest component count whose eigenvalues cover `energy` of the total.
inline std::size_t choose_component_count(const std::vector<double>& eigenvalues,
                                          double energy = 0.95) {
    double total = 0.0;
    for (double v : eigenvalues) total += std::max(v, 0.0);
    if (total <= 0.0) return 0;
    double cum = 0.0;
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        cum += std::max(eigenvalues[i], 0.0);
        if (cum >= energy * total) return i + 1;
    }
    return eigenvalues.size();
}

// Fits the eigenface basis from centered data `a` (one training face per
// column) without ever forming the full pixel-by-pixel covariance: the
// M x M gram matrix a^T a shares its nonzero eigenvalues, and each gram
// eigenvector v maps back to a basis column a*v, renormalized to unit norm.
// m_prime = 0 keeps the smallest count covering 95% of the spectrum. Columns
// weaker than 1e-12 of the strongest are dropped regardless, and at most
// M - 1 columns survive (centering removes one degree of freedom).
inline EigenModel fit_pca(const Matrix& a, std::vector<double> mean, std::size_t m_prime = 0) {
    if (a.rows != mean.size())
        throw ShapeError("centered matrix has " + std::to_string(a.rows) +
                         " rows but mean has length " + std::to_string(mean.size()));
    const std::size_t m = a.cols;
    if (m < 2) throw DegenerateDataError("need at least two training faces, got " +
                                         std::to_string(m));
    if (m_prime > m - 1)
        throw ParamError("component count " + std::to_string(m_prime) +
                         " exceeds limit " + std::to_string(m - 1) + " for " +
                         std::to_string(m) + " faces");
    if (max_abs(a) == 0.0)
        throw DegenerateDataError("training faces are all identical");

    const EigenPairs gram = eig_symmetric(matmul(transpose(a), a));
    const double floor = 1e-12 * std::max(gram.values[0], 0.0);
    std::size_t usable = 0;
    while (usable < m && gram.values[usable] >= floor && gram.values[usable] > 0.0) ++usable;
    usable = std::min(usable, m - 1);
    if (usable == 0) throw DegenerateDataError("no component rises above numerical noise");

    std::size_t keep = m_prime == 0 ? choose_component_count(gram.values) : m_prime;
    keep = std::min(keep, usable);

    EigenModel model;
    model.mean = std::move(mean);
    model.n_train = m;
    model.m_prime = keep;
    model.eigenvalues.assign(gram.values.begin(), gram.values.begin() + keep);
    model.eigenfaces = Matrix(a.rows, keep);
    for (std::size_t j = 0; j < keep; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < a.rows; ++i) {
            double u = 0.0;
            for (std::size_t k = 0; k < m; ++k) u += a(i, k) * gram.vectors(k, j);
            model.eigenfaces(i, j) = u;
            norm += u * u;
        }
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < a.rows; ++i) model.eigenfaces(i, j) /= norm;
    }
    return model;
}

// Weight of each basis column in the mean-subtracted face.
inline FeatureVector project_pca(const EigenModel& model, const FaceVector& face) {
    if (face.values.size() != model.mean.size())
        throw ShapeError("face length " + std::to_string(face.values.size()) +
                         " does not match model dimension " + std::to_string(model.mean.size()));
    FeatureVector out;
    out.branch = Branch::pca;
    out.weights.resize(model.m_prime);
    for (std::size_t k = 0; k < model.m_prime; ++k) {
        double w = 0.0;
        for (std::size_t i = 0; i < model.mean.size(); ++i)
            w += model.eigenfaces(i, k) * (face.values[i] - model.mean[i]);
        out.weights[k] = w;
    }
    return out;
}

// Mean face plus the weighted basis columns; inverts project_pca on anything
// inside the span.
inline std::vector<double> reconstruct_pca(const EigenModel& model, const FeatureVector& omega) {
    if (omega.branch != Branch::pca)
        throw ParamError("reconstruct_pca got a feature vector from the " +
                         std::string(branch_name(omega.branch)) + " branch");
    if (omega.weights.size() != model.m_prime)
        throw ShapeError("weight count " + std::to_string(omega.weights.size()) +
                         " does not match component count " + std::to_string(model.m_prime));
    std::vector<double> face = model.mean;
    for (std::size_t k = 0; k < model.m_prime; ++k)
        for (std::size_t i = 0; i < face.size(); ++i)
            face[i] += omega.weights[k] * model.eigenfaces(i, k);
    return face;
}

} // namespace hybridface
