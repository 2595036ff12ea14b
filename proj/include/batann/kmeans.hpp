#pragma once

#include <cstdint>
#include <vector>

#include "batann/common.hpp"

namespace batann {

struct KMeansResult {
  std::vector<float> centroids;        // k x d
  std::vector<std::uint32_t> assign;   // n
  std::vector<double> objective;       // sum of squared dists, one per iteration
};

/// Lloyd's algorithm with k-means++ seeding. Deterministic for a fixed seed.
/// Empty clusters are repaired by re-seeding them with the farthest member
/// of the largest cluster, which keeps the objective non-increasing.
KMeansResult kmeans(const float* points, std::uint64_t n, std::uint32_t d,
                    std::uint32_t k, std::uint32_t iters, std::uint64_t seed);

}  // namespace batann
