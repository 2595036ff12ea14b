#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batann/dataset.hpp"

namespace batann {

/// Per-subspace centroid tables. Subspaces are contiguous dimension blocks
/// whose widths differ by at most one.
struct PQCodebook {
  std::uint32_t m = 0;     // number of subspaces
  std::uint32_t b = 0;     // bits per subspace; 2^b centroids
  std::uint32_t dim = 0;
  std::vector<std::uint32_t> offsets;  // m+1 slice boundaries
  std::vector<float> centroids;        // subspace-major: m x 2^b x width(s)

  std::vector<std::size_t> block_base;  // float offset of each subspace block

  std::uint32_t ncentroids() const { return 1u << b; }
  std::uint32_t width(std::uint32_t s) const { return offsets[s + 1] - offsets[s]; }
  const float* centroid(std::uint32_t s, std::uint32_t c) const {
    return centroids.data() + block_base[s] + std::size_t(c) * width(s);
  }
  void rebuild_bases() {
    block_base.resize(m);
    std::size_t off = 0;
    for (std::uint32_t s = 0; s < m; ++s) {
      block_base[s] = off;
      off += std::size_t(ncentroids()) * width(s);
    }
  }
};

struct PQCodes {
  std::uint64_t num_points = 0;
  std::uint32_t m = 0;
  std::vector<std::uint8_t> codes;  // num_points x m

  const std::uint8_t* row(std::uint64_t i) const { return codes.data() + i * m; }
};

struct PQTrainStats {
  std::vector<std::vector<double>> objective;  // per subspace, per k-means iteration
};

PQCodebook train_pq(const VectorDataset& dataset, std::uint32_t m, std::uint32_t b,
                    std::uint64_t train_sample_size, std::uint32_t kmeans_iters,
                    std::uint64_t seed, PQTrainStats* stats = nullptr);

/// Nearest-centroid assignment per subspace, ties to the lowest index.
PQCodes pq_encode(const PQCodebook& cb, const VectorDataset& dataset, unsigned num_threads = 0);

/// Reconstruction: concatenated assigned centroids.
void pq_reconstruct(const PQCodebook& cb, const std::uint8_t* code_row, float* out);

/// Query lookup table: lut[s * 2^b + c] = sq_l2(query slice s, centroid c).
/// The query is widened to float before slicing.
std::vector<float> build_query_lut(const PQCodebook& cb, const std::uint8_t* query, ElemKind kind);
void build_query_lut(const PQCodebook& cb, const float* query_f32, float* lut_out);

inline float pq_approx_dist(const float* lut, std::uint32_t ncentroids,
                            const std::uint8_t* code_row, std::uint32_t m) {
  float acc = 0.0f;
  for (std::uint32_t s = 0; s < m; ++s) acc += lut[std::size_t(s) * ncentroids + code_row[s]];
  return acc;
}

// Codebook file: u32 m, u32 b, u32 dim, centroids f32.
// Codes file: u32 num_points, u32 m, raw bytes.
void save_codebook(const PQCodebook& cb, const std::string& path);
PQCodebook load_codebook(const std::string& path);
void save_codes(const PQCodes& codes, const std::string& path);
PQCodes load_codes(const std::string& path);

}  // namespace batann
