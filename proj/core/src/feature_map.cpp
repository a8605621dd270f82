#include "splatfeat/feature_map.hpp"

#include <string>

namespace splatfeat {

template <class T>
Tensor stack_to_tensor(std::span<const FeatureMap<T>> maps) {
    if (maps.empty()) return Tensor({0, 0, 0, 0}, std::vector<T>{});
    const auto& first = maps.front();
    std::vector<T> values;
    values.reserve(maps.size() * first.data.size());
    for (const auto& m : maps) {
        if (!m.same_shape(first)) throw PreconditionError("feature stack: maps differ in shape");
        values.insert(values.end(), m.data.begin(), m.data.end());
    }
    return Tensor({maps.size(), static_cast<std::uint64_t>(first.height),
                   static_cast<std::uint64_t>(first.width),
                   static_cast<std::uint64_t>(first.channels)},
                  std::move(values));
}

template <class T>
std::vector<FeatureMap<T>> tensor_to_stack(const Tensor& tensor, int downsample) {
    std::vector<std::uint64_t> shape = tensor.shape;
    if (shape.size() == 3) shape.insert(shape.begin(), 1);
    if (shape.size() != 4)
        throw PreconditionError("feature stack: expected rank 3 or 4 tensor, got rank " +
                                std::to_string(tensor.rank()));
    const auto all = tensor.as<T>();
    std::vector<FeatureMap<T>> maps;
    const std::size_t per = static_cast<std::size_t>(shape[1] * shape[2] * shape[3]);
    for (std::uint64_t p = 0; p < shape[0]; ++p) {
        FeatureMap<T> m(static_cast<int>(shape[1]), static_cast<int>(shape[2]),
                        static_cast<int>(shape[3]));
        m.view_id = std::to_string(p);
        m.downsample = downsample;
        std::copy(all.begin() + static_cast<std::ptrdiff_t>(p * per),
                  all.begin() + static_cast<std::ptrdiff_t>((p + 1) * per), m.data.begin());
        maps.push_back(std::move(m));
    }
    return maps;
}

template Tensor stack_to_tensor<float>(std::span<const FeatureMap<float>>);
template Tensor stack_to_tensor<double>(std::span<const FeatureMap<double>>);
template std::vector<FeatureMap<float>> tensor_to_stack<float>(const Tensor&, int);
template std::vector<FeatureMap<double>> tensor_to_stack<double>(const Tensor&, int);

}  // namespace splatfeat
