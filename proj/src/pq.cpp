#include "batann/pq.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <thread>

#include "batann/kmeans.hpp"

namespace batann {

namespace {

std::vector<std::uint32_t> make_offsets(std::uint32_t dim, std::uint32_t m) {
  std::vector<std::uint32_t> off(m + 1);
  std::uint32_t base = dim / m, rem = dim % m;
  off[0] = 0;
  for (std::uint32_t s = 0; s < m; ++s) off[s + 1] = off[s] + base + (s < rem ? 1 : 0);
  return off;
}

}  // namespace

PQCodebook train_pq(const VectorDataset& dataset, std::uint32_t m, std::uint32_t b,
                    std::uint64_t train_sample_size, std::uint32_t kmeans_iters,
                    std::uint64_t seed, PQTrainStats* stats) {
  if (dataset.num_points() == 0) throw std::runtime_error("train_pq: empty dataset");
  if (m == 0 || m > dataset.dim()) throw std::runtime_error("train_pq: m out of range");
  if (b == 0 || b > 8) throw std::runtime_error("train_pq: b out of range (codes are bytes)");
  if (train_sample_size == 0)
    train_sample_size = std::min<std::uint64_t>(256ull << b, dataset.num_points());
  train_sample_size = std::min(train_sample_size, dataset.num_points());

  PQCodebook cb;
  cb.m = m;
  cb.b = b;
  cb.dim = dataset.dim();
  cb.offsets = make_offsets(cb.dim, m);
  cb.rebuild_bases();
  std::size_t total = cb.block_base[m - 1] + std::size_t(cb.ncentroids()) * cb.width(m - 1);
  cb.centroids.resize(total);

  Rng rng(seed);
  auto sample_ids = rng.sample_indices(dataset.num_points(), train_sample_size);
  std::uint64_t ns = sample_ids.size();

  // sample widened to float once, row-major
  std::vector<float> sample(ns * dataset.dim());
  for (std::uint64_t i = 0; i < ns; ++i)
    dataset.row_as_float(sample_ids[i], sample.data() + i * dataset.dim());

  if (stats) stats->objective.assign(m, {});

  std::uint32_t k = cb.ncentroids();
  std::uint32_t nthreads =
      std::min<std::uint32_t>(m, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  std::atomic<std::uint32_t> next_s{0};
  std::exception_ptr err;
  std::mutex err_mu;

  auto work = [&]() {
    try {
      for (;;) {
        std::uint32_t s = next_s.fetch_add(1);
        if (s >= m) break;
        std::uint32_t w = cb.width(s);
        std::vector<float> slice(ns * w);
        for (std::uint64_t i = 0; i < ns; ++i)
          std::memcpy(slice.data() + i * w, sample.data() + i * dataset.dim() + cb.offsets[s],
                      w * sizeof(float));
        std::uint32_t kk = static_cast<std::uint32_t>(std::min<std::uint64_t>(k, ns));
        auto res = kmeans(slice.data(), ns, w, kk, kmeans_iters, seed * 1315423911u + s);
        float* dst = cb.centroids.data() + cb.block_base[s];
        std::memcpy(dst, res.centroids.data(), std::size_t(kk) * w * sizeof(float));
        // fewer sample points than centroids: fill the tail with copies so
        // every slot is a valid finite centroid
        for (std::uint32_t c = kk; c < k; ++c)
          std::memcpy(dst + std::size_t(c) * w, res.centroids.data(), w * sizeof(float));
        if (stats) stats->objective[s] = std::move(res.objective);
      }
    } catch (...) {
      std::lock_guard<std::mutex> g(err_mu);
      if (!err) err = std::current_exception();
    }
  };
  for (std::uint32_t t = 0; t < nthreads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return cb;
}

PQCodes pq_encode(const PQCodebook& cb, const VectorDataset& dataset, unsigned num_threads) {
  if (dataset.num_points() > 0 && dataset.dim() != cb.dim)
    throw std::runtime_error("pq_encode: dim mismatch");
  PQCodes out;
  out.num_points = dataset.num_points();
  out.m = cb.m;
  out.codes.resize(out.num_points * cb.m);
  if (out.num_points == 0) return out;

  if (num_threads == 0) num_threads = std::max(1u, std::thread::hardware_concurrency());
  std::uint32_t k = cb.ncentroids();

  auto run = [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<float> fp(cb.dim);
    for (std::uint64_t i = begin; i < end; ++i) {
      dataset.row_as_float(i, fp.data());
      std::uint8_t* code = out.codes.data() + i * cb.m;
      for (std::uint32_t s = 0; s < cb.m; ++s) {
        const float* q = fp.data() + cb.offsets[s];
        std::uint32_t w = cb.width(s);
        float best = std::numeric_limits<float>::max();
        std::uint32_t arg = 0;
        for (std::uint32_t c = 0; c < k; ++c) {
          float d = sq_l2_f32(q, cb.centroid(s, c), w);
          if (d < best) { best = d; arg = c; }
        }
        code[s] = static_cast<std::uint8_t>(arg);
      }
    }
  };

  if (num_threads <= 1 || out.num_points < 1024) {
    run(0, out.num_points);
  } else {
    std::vector<std::thread> pool;
    std::uint64_t chunk = (out.num_points + num_threads - 1) / num_threads;
    for (unsigned t = 0; t < num_threads; ++t) {
      std::uint64_t b = t * chunk, e = std::min<std::uint64_t>(b + chunk, out.num_points);
      if (b >= e) break;
      pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

void pq_reconstruct(const PQCodebook& cb, const std::uint8_t* code_row, float* out) {
  for (std::uint32_t s = 0; s < cb.m; ++s)
    std::memcpy(out + cb.offsets[s], cb.centroid(s, code_row[s]), cb.width(s) * sizeof(float));
}

void build_query_lut(const PQCodebook& cb, const float* query, float* lut) {
  std::uint32_t k = cb.ncentroids();
  for (std::uint32_t s = 0; s < cb.m; ++s) {
    const float* q = query + cb.offsets[s];
    std::uint32_t w = cb.width(s);
    float* row = lut + std::size_t(s) * k;
    for (std::uint32_t c = 0; c < k; ++c) row[c] = sq_l2_f32(q, cb.centroid(s, c), w);
  }
}

std::vector<float> build_query_lut(const PQCodebook& cb, const std::uint8_t* query,
                                   ElemKind kind) {
  std::vector<float> fp(cb.dim);
  switch (kind) {
    case ElemKind::u8:
      for (std::uint32_t j = 0; j < cb.dim; ++j) fp[j] = static_cast<float>(query[j]);
      break;
    case ElemKind::i8: {
      const std::int8_t* s = reinterpret_cast<const std::int8_t*>(query);
      for (std::uint32_t j = 0; j < cb.dim; ++j) fp[j] = static_cast<float>(s[j]);
      break;
    }
    case ElemKind::f32:
      std::memcpy(fp.data(), query, std::size_t(cb.dim) * 4);
      break;
  }
  std::vector<float> lut(std::size_t(cb.m) * cb.ncentroids());
  build_query_lut(cb, fp.data(), lut.data());
  return lut;
}

void save_codebook(const PQCodebook& cb, const std::string& path) {
  BinWriter out(path);
  out.u32(cb.m);
  out.u32(cb.b);
  out.u32(cb.dim);
  out.write(cb.centroids.data(), cb.centroids.size() * sizeof(float));
  out.close();
}

PQCodebook load_codebook(const std::string& path) {
  BinReader in(path);
  PQCodebook cb;
  cb.m = in.u32();
  cb.b = in.u32();
  cb.dim = in.u32();
  if (cb.m == 0 || cb.m > cb.dim || cb.b == 0 || cb.b > 8)
    throw std::runtime_error("codebook header invalid: " + path);
  cb.offsets = make_offsets(cb.dim, cb.m);
  cb.rebuild_bases();
  std::size_t total = std::size_t(cb.ncentroids()) * cb.dim;
  if (in.size() != 12 + total * 4)
    throw std::runtime_error("codebook size mismatch: " + path);
  cb.centroids.resize(total);
  in.read(cb.centroids.data(), total * 4);
  for (float v : cb.centroids)
    if (!std::isfinite(v)) throw std::runtime_error("codebook has non-finite centroid: " + path);
  return cb;
}

void save_codes(const PQCodes& codes, const std::string& path) {
  BinWriter out(path);
  out.u32(static_cast<std::uint32_t>(codes.num_points));
  out.u32(codes.m);
  out.write(codes.codes.data(), codes.codes.size());
  out.close();
}

PQCodes load_codes(const std::string& path) {
  BinReader in(path);
  PQCodes c;
  c.num_points = in.u32();
  c.m = in.u32();
  if (in.size() != 8 + c.num_points * c.m)
    throw std::runtime_error("codes size mismatch: " + path);
  c.codes.resize(c.num_points * c.m);
  in.read(c.codes.data(), c.codes.size());
  return c;
}

}  // namespace batann
