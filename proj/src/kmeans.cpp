#include "batann/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "batann/dataset.hpp"

namespace batann {

namespace {

void plus_plus_init(const float* pts, std::uint64_t n, std::uint32_t d, std::uint32_t k,
                    Rng& rng, float* centroids) {
  std::vector<double> best(n, std::numeric_limits<double>::max());
  std::uint64_t first = rng.below(n);
  std::memcpy(centroids, pts + first * d, d * sizeof(float));

  for (std::uint32_t c = 1; c < k; ++c) {
    const float* last = centroids + (c - 1) * d;
    double total = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      double dist = sq_l2_f32(pts + i * d, last, d);
      if (dist < best[i]) best[i] = dist;
      total += best[i];
    }
    std::uint64_t pick;
    if (total <= 0.0) {
      pick = rng.below(n);  // all points coincide with chosen centroids
    } else {
      double r = rng.unit() * total;
      double run = 0.0;
      pick = n - 1;
      for (std::uint64_t i = 0; i < n; ++i) {
        run += best[i];
        if (run >= r) { pick = i; break; }
      }
    }
    std::memcpy(centroids + c * d, pts + pick * d, d * sizeof(float));
  }
}

}  // namespace

KMeansResult kmeans(const float* pts, std::uint64_t n, std::uint32_t d, std::uint32_t k,
                    std::uint32_t iters, std::uint64_t seed) {
  if (n == 0 || k == 0) throw std::runtime_error("kmeans: empty input");
  if (k > n) throw std::runtime_error("kmeans: k > n");

  KMeansResult r;
  r.centroids.resize(std::size_t(k) * d);
  r.assign.resize(n);

  Rng rng(seed);
  plus_plus_init(pts, n, d, k, rng, r.centroids.data());

  std::vector<double> sums(std::size_t(k) * d);
  std::vector<std::uint64_t> counts(k);

  for (std::uint32_t iter = 0; iter < iters; ++iter) {
    double obj = 0.0;
    std::fill(counts.begin(), counts.end(), 0);

    for (std::uint64_t i = 0; i < n; ++i) {
      float best = std::numeric_limits<float>::max();
      std::uint32_t arg = 0;
      for (std::uint32_t c = 0; c < k; ++c) {
        float dist = sq_l2_f32(pts + i * d, r.centroids.data() + std::size_t(c) * d, d);
        if (dist < best) { best = dist; arg = c; }
      }
      r.assign[i] = arg;
      counts[arg]++;
      obj += best;
    }
    r.objective.push_back(obj);

    // repair empty clusters before the centroid update: grab the farthest
    // current member of the largest cluster
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::uint32_t largest = 0;
      for (std::uint32_t c2 = 1; c2 < k; ++c2)
        if (counts[c2] > counts[largest]) largest = c2;
      if (counts[largest] <= 1) continue;
      const float* cent = r.centroids.data() + std::size_t(largest) * d;
      float far_dist = -1.0f;
      std::uint64_t victim = 0;
      for (std::uint64_t i = 0; i < n; ++i) {
        if (r.assign[i] != largest) continue;
        float dist = sq_l2_f32(pts + i * d, cent, d);
        if (dist > far_dist) { far_dist = dist; victim = i; }
      }
      r.assign[victim] = c;
      counts[largest]--;
      counts[c] = 1;
    }

    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::uint64_t i = 0; i < n; ++i) {
      double* s = sums.data() + std::size_t(r.assign[i]) * d;
      const float* p = pts + i * d;
      for (std::uint32_t j = 0; j < d; ++j) s[j] += p[j];
    }
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      float* cent = r.centroids.data() + std::size_t(c) * d;
      const double* s = sums.data() + std::size_t(c) * d;
      for (std::uint32_t j = 0; j < d; ++j)
        cent[j] = static_cast<float>(s[j] / double(counts[c]));
    }
  }
  return r;
}

}  // namespace batann
