#include "splatfeat/dataprep/voxel_prune.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>

#include "splatfeat/error.hpp"

namespace splatfeat::prep {

PruneResult voxel_prune(const GaussianScene& scene, double voxel_size) {
    if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
        throw PreconditionError("voxel_prune: voxel size must be positive and finite");
    using Key = std::array<std::int64_t, 3>;
    std::map<Key, std::size_t> best;
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const auto& g = scene[i];
        Key k;
        for (int a = 0; a < 3; ++a)
            k[a] = static_cast<std::int64_t>(std::floor(static_cast<double>(g.position[a]) / voxel_size));
        auto [it, inserted] = best.try_emplace(k, i);
        if (!inserted && g.opacity > scene[it->second].opacity) it->second = i;
    }
    PruneResult r;
    r.kept.reserve(best.size());
    for (const auto& [k, i] : best) r.kept.push_back(i);
    std::sort(r.kept.begin(), r.kept.end());
    r.scene = scene.subset(r.kept);
    r.prune_rate = scene.size() == 0
                       ? 0.0
                       : 1.0 - static_cast<double>(r.kept.size()) / static_cast<double>(scene.size());
    return r;
}

}  // namespace splatfeat::prep
