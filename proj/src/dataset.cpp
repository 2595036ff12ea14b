#include "batann/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <thread>

namespace batann {

namespace {
// 255^2 * 33000 is the edge of int32; stay well below it.
constexpr std::uint32_t kMaxIntDim = 30000;
}  // namespace

void VectorDataset::row_as_float(std::uint64_t i, float* out) const {
  const std::uint8_t* r = row(i);
  switch (kind_) {
    case ElemKind::u8:
      for (std::uint32_t j = 0; j < dim_; ++j) out[j] = static_cast<float>(r[j]);
      break;
    case ElemKind::i8: {
      const std::int8_t* s = reinterpret_cast<const std::int8_t*>(r);
      for (std::uint32_t j = 0; j < dim_; ++j) out[j] = static_cast<float>(s[j]);
      break;
    }
    case ElemKind::f32:
      std::memcpy(out, r, dim_ * 4);
      break;
  }
}

float sq_l2_u8(const std::uint8_t* a, const std::uint8_t* b, std::size_t dim) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    std::int32_t d = static_cast<std::int32_t>(a[i]) - static_cast<std::int32_t>(b[i]);
    acc += d * d;
  }
  return static_cast<float>(acc);
}

float sq_l2_i8(const std::int8_t* a, const std::int8_t* b, std::size_t dim) {
  std::int32_t acc = 0;
  for (std::size_t i = 0; i < dim; ++i) {
    std::int32_t d = static_cast<std::int32_t>(a[i]) - static_cast<std::int32_t>(b[i]);
    acc += d * d;
  }
  return static_cast<float>(acc);
}

float sq_l2_f32(const float* a, const float* b, std::size_t dim) {
  float acc = 0.0f;
  for (std::size_t i = 0; i < dim; ++i) {
    float d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

float sq_l2_raw(ElemKind kind, const std::uint8_t* a, const std::uint8_t* b, std::size_t dim) {
  switch (kind) {
    case ElemKind::u8: return sq_l2_u8(a, b, dim);
    case ElemKind::i8:
      return sq_l2_i8(reinterpret_cast<const std::int8_t*>(a),
                      reinterpret_cast<const std::int8_t*>(b), dim);
    case ElemKind::f32:
      return sq_l2_f32(reinterpret_cast<const float*>(a),
                       reinterpret_cast<const float*>(b), dim);
  }
  return 0.0f;
}

VectorDataset load_dataset(const std::string& path, ElemKind kind) {
  BinReader in(path);
  if (in.size() < 8) throw std::runtime_error("dataset header truncated: " + path);
  std::uint32_t n = in.u32();
  std::uint32_t dim = in.u32();
  if (dim == 0) throw std::runtime_error("dataset dim is zero: " + path);
  if (kind != ElemKind::f32 && dim > kMaxIntDim)
    throw std::runtime_error("integer dataset dim too large: " + path);
  std::uint64_t payload = static_cast<std::uint64_t>(n) * dim * elem_size(kind);
  if (in.size() != 8 + payload)
    throw std::runtime_error("dataset size mismatch (header vs file length): " + path);
  VectorDataset d(n, dim, kind);
  in.read(d.raw(), payload);
  return d;
}

void save_dataset(const VectorDataset& d, const std::string& path) {
  BinWriter out(path);
  out.u32(static_cast<std::uint32_t>(d.num_points()));
  out.u32(d.dim());
  out.write(d.raw(), d.num_points() * d.row_bytes());
  out.close();
}

GroundTruth load_ground_truth(const std::string& path) {
  BinReader in(path);
  GroundTruth gt;
  std::uint32_t nq = in.u32();
  gt.num_queries = nq;
  gt.k = in.u32();
  std::uint64_t cells = static_cast<std::uint64_t>(nq) * gt.k;
  if (in.size() != 8 + cells * 8)
    throw std::runtime_error("ground-truth size mismatch: " + path);
  gt.ids.resize(cells);
  gt.dists.resize(cells);
  in.read(gt.ids.data(), cells * 4);
  in.read(gt.dists.data(), cells * 4);
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  BinWriter out(path);
  out.u32(static_cast<std::uint32_t>(gt.num_queries));
  out.u32(gt.k);
  out.write(gt.ids.data(), gt.ids.size() * 4);
  out.write(gt.dists.data(), gt.dists.size() * 4);
  out.close();
}

GroundTruth brute_force_knn(const VectorDataset& dataset, const VectorDataset& queries,
                            std::uint32_t k, unsigned num_threads) {
  if (k == 0 || k > dataset.num_points())
    throw std::runtime_error("brute_force_knn: k out of range");
  if (dataset.dim() != queries.dim() || dataset.kind() != queries.kind())
    throw std::runtime_error("brute_force_knn: dataset/query mismatch");

  GroundTruth gt;
  gt.k = k;
  gt.num_queries = queries.num_points();
  gt.ids.resize(gt.num_queries * k);
  gt.dists.resize(gt.num_queries * k);

  if (num_threads == 0)
    num_threads = std::max(1u, std::thread::hardware_concurrency());

  auto run = [&](std::uint64_t q_begin, std::uint64_t q_end) {
    std::vector<std::pair<float, NodeId>> heap;  // max-heap of k best
    for (std::uint64_t q = q_begin; q < q_end; ++q) {
      heap.clear();
      const std::uint8_t* qv = queries.row(q);
      for (std::uint64_t i = 0; i < dataset.num_points(); ++i) {
        float d = sq_l2_raw(dataset.kind(), qv, dataset.row(i), dataset.dim());
        std::pair<float, NodeId> cand{d, static_cast<NodeId>(i)};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
          std::pop_heap(heap.begin(), heap.end());
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end());
        }
      }
      std::sort_heap(heap.begin(), heap.end());
      for (std::uint32_t j = 0; j < k; ++j) {
        gt.ids[q * k + j] = static_cast<std::int32_t>(heap[j].second);
        gt.dists[q * k + j] = heap[j].first;
      }
    }
  };

  if (num_threads <= 1 || gt.num_queries < 2) {
    run(0, gt.num_queries);
  } else {
    std::vector<std::thread> workers;
    std::uint64_t chunk = (gt.num_queries + num_threads - 1) / num_threads;
    for (unsigned t = 0; t < num_threads; ++t) {
      std::uint64_t b = t * chunk;
      std::uint64_t e = std::min<std::uint64_t>(b + chunk, gt.num_queries);
      if (b >= e) break;
      workers.emplace_back(run, b, e);
    }
    for (auto& w : workers) w.join();
  }
  return gt;
}

double recall_at_k(const std::vector<std::vector<NodeId>>& results, const GroundTruth& gt,
                   std::uint32_t k) {
  if (results.size() != gt.num_queries)
    throw std::runtime_error("recall_at_k: result rows != ground-truth rows");
  if (k == 0 || k > gt.k)
    throw std::runtime_error("recall_at_k: k exceeds ground-truth depth");

  double total = 0.0;
  for (std::uint64_t q = 0; q < gt.num_queries; ++q) {
    float threshold = gt.dists_row(q)[k - 1];
    const std::int32_t* row_ids = gt.ids_row(q);
    const float* row_dists = gt.dists_row(q);
    std::uint32_t hits = 0;
    std::uint32_t len = std::min<std::uint32_t>(k, static_cast<std::uint32_t>(results[q].size()));
    for (std::uint32_t j = 0; j < len; ++j) {
      NodeId id = results[q][j];
      for (std::uint32_t g = 0; g < gt.k; ++g) {
        if (row_dists[g] > threshold) break;  // rows are sorted
        if (static_cast<NodeId>(row_ids[g]) == id) { ++hits; break; }
      }
    }
    total += static_cast<double>(hits) / k;
  }
  return total / static_cast<double>(gt.num_queries);
}

}  // namespace batann
