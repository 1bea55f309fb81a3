#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedshot {

/// Shape of one named tensor inside a flat parameter vector.
struct TensorSpec {
    std::string name;
    std::vector<std::uint32_t> dims;

    std::size_t size() const {
        std::size_t n = 1;
        for (auto d : dims)
            n *= d;
        return n;
    }
    bool operator==(const TensorSpec&) const = default;
};

/// Slice layout of a ParamVector: tensors in declared order, each mapped to
/// a contiguous slice.
struct ParamLayout {
    std::vector<TensorSpec> tensors;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& t : tensors)
            n += t.size();
        return n;
    }
    /// Offset of the named tensor; throws LayoutMismatch if absent.
    std::size_t offset_of(const std::string& name) const;
    const TensorSpec& spec_of(const std::string& name) const;
    bool operator==(const ParamLayout&) const = default;
};

/// Flat vector of all trainable parameters, the unit of federation.
struct ParamVector {
    ParamLayout layout;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    /// Throws LayoutMismatch when values.size() != layout.total().
    void check_consistent() const;
};

/// Throws LayoutMismatch unless the two vectors share an identical layout.
void require_same_layout(const ParamVector& a, const ParamVector& b,
                         const char* op);

/// out = params - lr * grad.
ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr);

/// Concatenate several param vectors into one (layouts appended in order).
ParamVector concat_params(const std::vector<ParamVector>& parts);

/// Extract the tensors whose names carry the given prefix into a new
/// vector, preserving declared order.
ParamVector slice_params(const ParamVector& pv, const std::string& prefix);

} // namespace fedshot
