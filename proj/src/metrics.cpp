#include "fedshot/metrics.hpp"

#include <cmath>

#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

void ConfusionMatrix::add(int true_class, int predicted_class,
                          std::uint64_t count) {
    if (true_class < 0 || static_cast<std::size_t>(true_class) >= n_ ||
        predicted_class < 0 || static_cast<std::size_t>(predicted_class) >= n_)
        throw LabelOutOfRange("confusion matrix has " + std::to_string(n_) +
                              " classes");
    counts_[static_cast<std::size_t>(true_class) * n_ +
            static_cast<std::size_t>(predicted_class)] += count;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t t) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < n_; ++p)
        s += at(t, p);
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t p) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < n_; ++t)
        s += at(t, p);
    return s;
}

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < n_; ++t)
        s += row_sum(t);
    return s;
}

double balanced_accuracy(const ConfusionMatrix& cm) {
    double recall_sum = 0.0;
    std::size_t present = 0;
    for (std::size_t t = 0; t < cm.n_classes(); ++t) {
        const std::uint64_t support = cm.row_sum(t);
        if (support == 0)
            continue;
        recall_sum += static_cast<double>(cm.at(t, t)) /
                      static_cast<double>(support);
        ++present;
    }
    if (present == 0)
        throw EmptyMatrix("balanced_accuracy: no class has support");
    return recall_sum / static_cast<double>(present);
}

double cohens_kappa(const ConfusionMatrix& cm, bool* degenerate) {
    if (degenerate)
        *degenerate = false;
    const std::uint64_t total = cm.total();
    if (total == 0)
        throw EmptyMatrix("cohens_kappa: empty matrix");

    std::uint64_t trace = 0;
    unsigned __int128 marginal = 0;  // sum_k rowsum_k * colsum_k
    for (std::size_t k = 0; k < cm.n_classes(); ++k) {
        trace += cm.at(k, k);
        marginal += static_cast<unsigned __int128>(cm.row_sum(k)) * cm.col_sum(k);
    }
    const unsigned __int128 total_sq =
        static_cast<unsigned __int128>(total) * total;
    if (marginal == total_sq) {
        // p_e == 1 exactly; agreement is chance by definition
        if (degenerate)
            *degenerate = true;
        return 0.0;
    }
    const double p_o = static_cast<double>(trace) / static_cast<double>(total);
    const double p_e = static_cast<double>(marginal) / static_cast<double>(total_sq);
    return (p_o - p_e) / (1.0 - p_e);
}

double weighted_f1(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0)
        throw EmptyMatrix("weighted_f1: empty matrix");

    double acc = 0.0;
    for (std::size_t k = 0; k < cm.n_classes(); ++k) {
        const std::uint64_t support = cm.row_sum(k);
        if (support == 0)
            continue;
        const std::uint64_t predicted = cm.col_sum(k);
        const double tp = static_cast<double>(cm.at(k, k));
        const double precision =
            predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
        const double recall = tp / static_cast<double>(support);
        const double f1 = precision + recall == 0.0
                              ? 0.0
                              : 2.0 * precision * recall / (precision + recall);
        acc += f1 * static_cast<double>(support) / static_cast<double>(total);
    }
    return acc;
}

namespace {

constexpr double kPcaTolerance = 1e-10;
constexpr int kPcaMaxIterations = 10000;

// Power iteration for the dominant eigenpair of the symmetric matrix m.
std::pair<double, std::vector<double>> dominant_eigenpair(
    const std::vector<double>& m, std::size_t d, std::mt19937_64& rng) {
    std::vector<double> v(d);
    double norm = 0.0;
    for (auto& x : v) {
        x = gaussian(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v)
        x /= norm;

    std::vector<double> next(d);
    double eigenvalue = 0.0;
    for (int it = 0; it < kPcaMaxIterations; ++it) {
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                acc += m[i * d + j] * v[j];
            next[i] = acc;
        }
        eigenvalue = 0.0;  // Rayleigh quotient with unit v
        for (std::size_t i = 0; i < d; ++i)
            eigenvalue += next[i] * v[i];

        norm = 0.0;
        for (double x : next)
            norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0)
            break;  // v lies in the null space; eigenvalue 0
        double drift = 0.0;
        const double flip = eigenvalue < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < d; ++i) {
            next[i] /= norm;
            drift = std::max(drift, std::abs(flip * next[i] - v[i]));
        }
        v.swap(next);
        if (drift < kPcaTolerance)
            break;
    }
    return {eigenvalue, v};
}

void apply_sign_convention(std::vector<double>& v) {
    for (double x : v) {
        if (std::abs(x) > 1e-12) {
            if (x < 0.0)
                for (auto& y : v)
                    y = -y;
            return;
        }
    }
}

} // namespace

Pca2Result pca2(const std::vector<std::vector<double>>& rows,
                std::uint64_t seed) {
    if (rows.size() < 3)
        throw InvalidArgument("pca2: need at least 3 points");
    const std::size_t d = rows.front().size();
    if (d < 2)
        throw InvalidArgument("pca2: need dimension >= 2");
    for (const auto& r : rows)
        if (r.size() != d)
            throw DimensionMismatch("pca2: ragged input");

    const std::size_t n = rows.size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (std::size_t j = 0; j < d; ++j)
            mean[j] += r[j];
    for (auto& m : mean)
        m /= static_cast<double>(n);

    std::vector<std::vector<double>> centered(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            centered[i][j] = rows[i][j] - mean[j];

    // sample covariance, denominator n-1
    std::vector<double> cov(d * d, 0.0);
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (const auto& r : centered)
        for (std::size_t i = 0; i < d; ++i) {
            if (r[i] == 0.0)
                continue;
            for (std::size_t j = i; j < d; ++j)
                cov[i * d + j] += r[i] * r[j];
        }
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            cov[i * d + j] *= inv;
            cov[j * d + i] = cov[i * d + j];
        }

    double total_variance = 0.0;
    for (std::size_t i = 0; i < d; ++i)
        total_variance += cov[i * d + i];
    if (total_variance <= 0.0)
        throw RankDeficient("pca2: data has zero variance");

    auto rng = make_rng(mix_seed(seed, 0x706361ULL));  // "pca"
    Pca2Result result;
    std::vector<double> deflated = cov;
    for (int comp = 0; comp < 2; ++comp) {
        auto [lambda, v] = dominant_eigenpair(deflated, d, rng);
        apply_sign_convention(v);
        result.eigenvalues[comp] = lambda;
        result.explained_variance[comp] = lambda / total_variance;
        result.components.push_back(v);
        // deflate: A <- A - lambda v v^T
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                deflated[i * d + j] -= lambda * v[i] * v[j];
    }

    result.points.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        for (int comp = 0; comp < 2; ++comp) {
            double acc = 0.0;
            for (std::size_t j = 0; j < d; ++j)
                acc += centered[i][j] * result.components[comp][j];
            result.points[i][comp] = acc;
        }
    return result;
}

Pca2Result pca2_embeddings(const std::vector<Embedding>& embeddings,
                           std::uint64_t seed) {
    std::vector<std::vector<double>> rows;
    rows.reserve(embeddings.size());
    for (const auto& e : embeddings)
        rows.push_back(e.values);
    return pca2(rows, seed);
}

} // namespace fedshot
