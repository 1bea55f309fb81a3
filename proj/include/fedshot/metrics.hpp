#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fedshot/embed.hpp"

namespace fedshot {

/// C x C count matrix, rows = true class, columns = predicted class.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes)
        : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    void add(int true_class, int predicted_class, std::uint64_t count = 1);

    std::size_t n_classes() const { return n_; }
    std::uint64_t at(std::size_t t, std::size_t p) const {
        return counts_[t * n_ + p];
    }
    std::uint64_t row_sum(std::size_t t) const;
    std::uint64_t col_sum(std::size_t p) const;
    std::uint64_t total() const;

private:
    std::size_t n_;
    std::vector<std::uint64_t> counts_;
};

/// Mean per-class recall over classes that actually occur in the truth;
/// absent classes are excluded from the mean.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Chance-corrected agreement. When expected agreement equals 1 (a single
/// class in both truth and prediction) the value is defined as 0.0 and
/// *degenerate, when supplied, is set.
double cohens_kappa(const ConfusionMatrix& cm, bool* degenerate = nullptr);

/// Support-weighted mean of per-class F1; a class with zero precision and
/// recall contributes 0.
double weighted_f1(const ConfusionMatrix& cm);

struct Pca2Result {
    std::vector<std::array<double, 2>> points;
    std::array<double, 2> explained_variance{};  // fraction of total variance
    std::array<double, 2> eigenvalues{};
    std::vector<std::vector<double>> components;  // two unit vectors
};

/// Project rows onto the top-2 principal directions (power iteration with
/// deflation, tolerance 1e-10, at most 10000 iterations, seeded start).
/// Sign convention: the first loading of each component with magnitude
/// above 1e-12 is positive.
Pca2Result pca2(const std::vector<std::vector<double>>& rows,
                std::uint64_t seed = 0);

/// Convenience overload over embedding values.
Pca2Result pca2_embeddings(const std::vector<Embedding>& embeddings,
                           std::uint64_t seed = 0);

} // namespace fedshot
