#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batann/common.hpp"

namespace batann {

/// Dense row-major vector collection. Rows are raw bytes in the declared
/// element kind; all distance kernels operate on the raw representation.
class VectorDataset {
 public:
  VectorDataset() = default;
  VectorDataset(std::uint64_t num_points, std::uint32_t dim, ElemKind kind)
      : num_points_(num_points), dim_(dim), kind_(kind),
        data_(num_points * dim * elem_size(kind)) {
    if (dim == 0) throw std::runtime_error("dataset dim must be positive");
  }

  std::uint64_t num_points() const { return num_points_; }
  std::uint32_t dim() const { return dim_; }
  ElemKind kind() const { return kind_; }
  std::size_t row_bytes() const { return dim_ * elem_size(kind_); }

  const std::uint8_t* row(std::uint64_t i) const { return data_.data() + i * row_bytes(); }
  std::uint8_t* row(std::uint64_t i) { return data_.data() + i * row_bytes(); }
  const std::uint8_t* raw() const { return data_.data(); }
  std::uint8_t* raw() { return data_.data(); }

  // row i widened to float, written into out[0..dim)
  void row_as_float(std::uint64_t i, float* out) const;

 private:
  std::uint64_t num_points_ = 0;
  std::uint32_t dim_ = 0;
  ElemKind kind_ = ElemKind::u8;
  std::vector<std::uint8_t> data_;
};

/// Exact k-nearest neighbors per query, distances ascending within a row.
struct GroundTruth {
  std::uint32_t k = 0;
  std::uint64_t num_queries = 0;
  std::vector<std::int32_t> ids;   // num_queries x k
  std::vector<float> dists;        // num_queries x k, non-decreasing per row

  const std::int32_t* ids_row(std::uint64_t q) const { return ids.data() + q * k; }
  const float* dists_row(std::uint64_t q) const { return dists.data() + q * k; }
};

// ---- distance kernels ----
// Integer element kinds accumulate in 32-bit integers (exact), float in
// 32-bit float. Dimension is capped at load time so the integer
// accumulator cannot overflow.

float sq_l2_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t dim);
float sq_l2_i8(const std::int8_t* a, const std::int8_t* b, std::size_t dim);
float sq_l2_f32(const float* a, const float* b, std::size_t dim);
float sq_l2_raw(ElemKind kind, const std::uint8_t* a, const std::uint8_t* b, std::size_t dim);

inline float sq_l2(const VectorDataset& d, std::uint64_t i, std::uint64_t j) {
  return sq_l2_raw(d.kind(), d.row(i), d.row(j), d.dim());
}

// ---- file I/O ----
// .bin layout: u32 num_points, u32 dim, then row-major payload.

VectorDataset load_dataset(const std::string& path, ElemKind kind);
void save_dataset(const VectorDataset& d, const std::string& path);

// Ground-truth file: u32 num_queries, u32 k, all ids (i32), all dists (f32).
GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);

// ---- oracle / evaluation ----

/// Exact k-NN by full scan; ties broken by ascending id. Parallelizes over
/// queries; output independent of thread count.
GroundTruth brute_force_knn(const VectorDataset& dataset, const VectorDataset& queries,
                            std::uint32_t k, unsigned num_threads = 0);

/// Distance-threshold recall: a returned id counts if its true distance is
/// <= the true k-th neighbor distance (ties beyond position k count, which
/// is why GroundTruth rows should be built deeper than the evaluated k).
double recall_at_k(const std::vector<std::vector<NodeId>>& results, const GroundTruth& gt,
                   std::uint32_t k);

}  // namespace batann
