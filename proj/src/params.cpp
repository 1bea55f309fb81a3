#include "fedshot/params.hpp"

#include "fedshot/errors.hpp"

namespace fedshot {

std::size_t ParamLayout::offset_of(const std::string& name) const {
    std::size_t off = 0;
    for (const auto& t : tensors) {
        if (t.name == name)
            return off;
        off += t.size();
    }
    throw LayoutMismatch("no tensor named '" + name + "' in layout");
}

const TensorSpec& ParamLayout::spec_of(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name)
            return t;
    throw LayoutMismatch("no tensor named '" + name + "' in layout");
}

void ParamVector::check_consistent() const {
    if (values.size() != layout.total())
        throw LayoutMismatch("param vector holds " +
                             std::to_string(values.size()) +
                             " values, layout declares " +
                             std::to_string(layout.total()));
}

void require_same_layout(const ParamVector& a, const ParamVector& b,
                         const char* op) {
    if (!(a.layout == b.layout))
        throw LayoutMismatch(std::string(op) + ": layouts differ");
    a.check_consistent();
    b.check_consistent();
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad,
                     double lr) {
    require_same_layout(params, grad, "sgd_step");
    ParamVector out = params;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= lr * grad.values[i];
    return out;
}

ParamVector concat_params(const std::vector<ParamVector>& parts) {
    ParamVector out;
    for (const auto& p : parts) {
        p.check_consistent();
        for (const auto& t : p.layout.tensors)
            out.layout.tensors.push_back(t);
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
    }
    return out;
}

ParamVector slice_params(const ParamVector& pv, const std::string& prefix) {
    pv.check_consistent();
    ParamVector out;
    std::size_t off = 0;
    for (const auto& t : pv.layout.tensors) {
        const std::size_t n = t.size();
        if (t.name.rfind(prefix, 0) == 0) {
            out.layout.tensors.push_back(t);
            out.values.insert(out.values.end(), pv.values.begin() + static_cast<std::ptrdiff_t>(off),
                              pv.values.begin() + static_cast<std::ptrdiff_t>(off + n));
        }
        off += n;
    }
    if (out.layout.tensors.empty())
        throw LayoutMismatch("no tensors with prefix '" + prefix + "'");
    return out;
}

} // namespace fedshot
