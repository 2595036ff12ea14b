#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "batann/pq.hpp"

using namespace batann;

namespace {

VectorDataset random_f32(std::uint64_t n, std::uint32_t dim, std::uint64_t seed, float scale) {
  VectorDataset d(n, dim, ElemKind::f32);
  Rng rng(seed);
  float* p = reinterpret_cast<float*>(d.raw());
  for (std::uint64_t i = 0; i < n * dim; ++i)
    p[i] = static_cast<float>(rng.unit()) * scale;
  return d;
}

VectorDataset random_u8(std::uint64_t n, std::uint32_t dim, std::uint64_t seed) {
  VectorDataset d(n, dim, ElemKind::u8);
  Rng rng(seed);
  for (std::uint64_t i = 0; i < n * dim; ++i)
    d.raw()[i] = static_cast<std::uint8_t>(rng.below(256));
  return d;
}

// codebook with hand-placed distinct centroids (m=4, b=2, dim=8)
PQCodebook handmade_codebook() {
  PQCodebook cb;
  cb.m = 4;
  cb.b = 2;
  cb.dim = 8;
  cb.offsets = {0, 2, 4, 6, 8};
  cb.rebuild_bases();
  cb.centroids.resize(4 * 4 * 2);
  for (std::uint32_t s = 0; s < 4; ++s)
    for (std::uint32_t c = 0; c < 4; ++c) {
      float* cent = cb.centroids.data() + cb.block_base[s] + c * 2;
      cent[0] = static_cast<float>(10 * s + c);
      cent[1] = static_cast<float>(100 * s + 7 * c);
    }
  return cb;
}

}  // namespace

TEST_CASE("train_pq on one repeated vector collapses all centroids") {
  VectorDataset d(64, 16, ElemKind::f32);
  float proto[16];
  for (int j = 0; j < 16; ++j) proto[j] = 3.25f * j - 7.0f;
  for (std::uint64_t i = 0; i < 64; ++i)
    std::memcpy(d.row(i), proto, sizeof proto);

  auto cb = train_pq(d, 4, 3, 64, 6, 42);
  for (std::uint32_t s = 0; s < 4; ++s)
    for (std::uint32_t c = 0; c < cb.ncentroids(); ++c)
      for (std::uint32_t j = 0; j < cb.width(s); ++j)
        CHECK(cb.centroid(s, c)[j] == proto[cb.offsets[s] + j]);

  auto codes = pq_encode(cb, d);
  std::vector<float> rec(16);
  pq_reconstruct(cb, codes.row(0), rec.data());
  for (int j = 0; j < 16; ++j) CHECK(rec[j] == proto[j]);  // zero quantization error
}

TEST_CASE("m=32 b=8 dim=128 gives 32-byte codes") {
  auto d = random_u8(2000, 128, 1);
  auto cb = train_pq(d, 32, 8, 2000, 4, 7);
  auto codes = pq_encode(cb, d);
  CHECK(codes.m == 32);
  CHECK(codes.codes.size() == 2000u * 32u);  // 32 bytes per vector
}

TEST_CASE("b=1 k-means recovers two well-separated cluster means") {
  // per subspace, half the points sit near A and half near B; the oracle is
  // the closed-form labeled group mean
  const std::uint32_t n = 512, dim = 8, m = 4;
  VectorDataset d(n, dim, ElemKind::f32);
  Rng rng(99);
  float* p = reinterpret_cast<float*>(d.raw());
  std::vector<int> label(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    label[i] = static_cast<int>(rng.below(2));
    for (std::uint32_t j = 0; j < dim; ++j) {
      float base = label[i] ? 100.0f : -100.0f;
      p[i * dim + j] = base + static_cast<float>(rng.gaussian());
    }
  }
  auto cb = train_pq(d, m, 1, n, 25, 3);

  for (std::uint32_t s = 0; s < m; ++s) {
    std::uint32_t w = cb.width(s);
    std::vector<double> mean0(w, 0), mean1(w, 0);
    std::uint32_t n0 = 0, n1 = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = 0; j < w; ++j) {
        double v = p[i * dim + cb.offsets[s] + j];
        if (label[i]) mean1[j] += v; else mean0[j] += v;
      }
      (label[i] ? n1 : n0)++;
    }
    for (std::uint32_t j = 0; j < w; ++j) { mean0[j] /= n0; mean1[j] /= n1; }

    // match each centroid to the closer true mean
    for (std::uint32_t c = 0; c < 2; ++c) {
      const float* cent = cb.centroid(s, c);
      double e0 = 0, e1 = 0;
      for (std::uint32_t j = 0; j < w; ++j) {
        e0 += (cent[j] - mean0[j]) * (cent[j] - mean0[j]);
        e1 += (cent[j] - mean1[j]) * (cent[j] - mean1[j]);
      }
      CHECK(std::min(e0, e1) < 1e-6);
    }
    // and the two centroids must not land on the same mean
    CHECK(sq_l2_f32(cb.centroid(s, 0), cb.centroid(s, 1), w) > 1.0f);
  }
}

TEST_CASE("encode maps centroid concatenation to exact indices") {
  auto cb = handmade_codebook();
  VectorDataset d(1, 8, ElemKind::f32);
  float* v = reinterpret_cast<float*>(d.raw());
  std::uint8_t want[4] = {2, 1, 3, 0};
  for (std::uint32_t s = 0; s < 4; ++s)
    std::memcpy(v + cb.offsets[s], cb.centroid(s, want[s]), 2 * sizeof(float));
  auto codes = pq_encode(cb, d);
  for (std::uint32_t s = 0; s < 4; ++s) CHECK(codes.row(0)[s] == want[s]);
}

TEST_CASE("encode is optimal per subspace (exhaustive check)") {
  auto d = random_u8(400, 32, 21);
  auto cb = train_pq(d, 8, 8, 400, 8, 22);
  auto codes = pq_encode(cb, d);
  Rng rng(23);
  std::vector<float> fp(32);
  for (int rep = 0; rep < 10; ++rep) {
    std::uint64_t i = rng.below(400);
    d.row_as_float(i, fp.data());
    for (std::uint32_t s = 0; s < cb.m; ++s) {
      float assigned = sq_l2_f32(fp.data() + cb.offsets[s],
                                 cb.centroid(s, codes.row(i)[s]), cb.width(s));
      for (std::uint32_t c = 0; c < cb.ncentroids(); ++c) {
        float other = sq_l2_f32(fp.data() + cb.offsets[s], cb.centroid(s, c), cb.width(s));
        CHECK(assigned <= other);
      }
    }
  }
}

TEST_CASE("encode empty dataset") {
  auto d = random_u8(300, 16, 31);
  auto cb = train_pq(d, 4, 4, 300, 4, 32);
  VectorDataset empty(0, 16, ElemKind::u8);
  auto codes = pq_encode(cb, empty);
  CHECK(codes.num_points == 0);
  CHECK(codes.codes.empty());
}

TEST_CASE("train_pq rejects m > dim and empty dataset") {
  auto d = random_u8(10, 4, 1);
  CHECK_THROWS(train_pq(d, 8, 8, 10, 2, 1));
  VectorDataset empty(0, 4, ElemKind::u8);
  CHECK_THROWS(train_pq(empty, 2, 8, 0, 2, 1));
}

TEST_CASE("lut zero at matching centroid, zero everywhere for zeros") {
  auto cb = handmade_codebook();
  // query assembled from centroid 1 of each subspace
  std::vector<float> q(8);
  for (std::uint32_t s = 0; s < 4; ++s)
    std::memcpy(q.data() + cb.offsets[s], cb.centroid(s, 1), 2 * sizeof(float));
  std::vector<float> lut(4 * 4);
  build_query_lut(cb, q.data(), lut.data());
  for (std::uint32_t s = 0; s < 4; ++s) CHECK(lut[s * 4 + 1] == 0.0f);

  PQCodebook zeros = cb;
  std::fill(zeros.centroids.begin(), zeros.centroids.end(), 0.0f);
  std::vector<float> zq(8, 0.0f), zlut(16, 1.0f);
  build_query_lut(zeros, zq.data(), zlut.data());
  for (float v : zlut) CHECK(v == 0.0f);
}

TEST_CASE("approx_dist equals structured reconstruction distance exactly") {
  auto d = random_f32(500, 24, 41, 10.0f);
  auto cb = train_pq(d, 6, 5, 500, 8, 42);
  auto codes = pq_encode(cb, d);
  auto queries = random_f32(20, 24, 43, 10.0f);

  for (std::uint64_t q = 0; q < queries.num_points(); ++q) {
    auto lut = build_query_lut(cb, queries.row(q), ElemKind::f32);
    const float* qf = reinterpret_cast<const float*>(queries.row(q));
    for (std::uint64_t i = 0; i < 50; ++i) {
      float got = pq_approx_dist(lut.data(), cb.ncentroids(), codes.row(i), cb.m);
      // oracle: per-subspace exact distances summed in subspace order
      float structured = 0.0f;
      for (std::uint32_t s = 0; s < cb.m; ++s)
        structured += sq_l2_f32(qf + cb.offsets[s], cb.centroid(s, codes.row(i)[s]), cb.width(s));
      CHECK(got == structured);

      // flat reconstruction oracle agrees to 1e-3 relative
      std::vector<float> rec(24);
      pq_reconstruct(cb, codes.row(i), rec.data());
      float flat = sq_l2_f32(qf, rec.data(), 24);
      CHECK(got == doctest::Approx(flat).epsilon(1e-3));
    }
  }
}

TEST_CASE("approx_dist with m=1 reads the single table entry") {
  PQCodebook cb;
  cb.m = 1;
  cb.b = 2;
  cb.dim = 3;
  cb.offsets = {0, 3};
  cb.rebuild_bases();
  cb.centroids = {0, 0, 0, 1, 1, 1, 2, 2, 2, 3, 3, 3};
  std::vector<float> q = {1, 1, 1};
  std::vector<float> lut(4);
  build_query_lut(cb, q.data(), lut.data());
  std::uint8_t code = 3;
  CHECK(pq_approx_dist(lut.data(), 4, &code, 1) == lut[3]);
  CHECK(lut[3] == 12.0f);
}

TEST_CASE("quantization is idempotent") {
  auto d = random_f32(300, 16, 51, 5.0f);
  auto cb = train_pq(d, 4, 6, 300, 10, 52);
  auto codes = pq_encode(cb, d);

  VectorDataset rec(300, 16, ElemKind::f32);
  for (std::uint64_t i = 0; i < 300; ++i)
    pq_reconstruct(cb, codes.row(i), reinterpret_cast<float*>(rec.row(i)));
  auto codes2 = pq_encode(cb, rec);
  CHECK(codes2.codes == codes.codes);
}

TEST_CASE("k-means objective is non-increasing") {
  auto d = random_u8(2000, 32, 61);
  PQTrainStats stats;
  train_pq(d, 4, 6, 2000, 12, 62, &stats);
  REQUIRE(stats.objective.size() == 4);
  for (const auto& obj : stats.objective) {
    REQUIRE(obj.size() == 12);
    for (std::size_t i = 1; i < obj.size(); ++i)
      CHECK(obj[i] <= obj[i - 1] + 1e-6 * std::abs(obj[i - 1]));
  }
}

TEST_CASE("codebook and codes file round trip") {
  auto d = random_u8(128, 20, 71);
  auto cb = train_pq(d, 5, 4, 128, 6, 72);
  auto codes = pq_encode(cb, d);

  auto dir = std::filesystem::temp_directory_path() / "batann_pq_tests";
  std::filesystem::create_directories(dir);
  auto cb_path = (dir / "cb.bin").string();
  auto codes_path = (dir / "codes.bin").string();
  save_codebook(cb, cb_path);
  save_codes(codes, codes_path);

  auto cb2 = load_codebook(cb_path);
  CHECK(cb2.m == cb.m);
  CHECK(cb2.b == cb.b);
  CHECK(cb2.dim == cb.dim);
  CHECK(cb2.centroids == cb.centroids);
  CHECK(cb2.offsets == cb.offsets);

  auto codes2 = load_codes(codes_path);
  CHECK(codes2.num_points == codes.num_points);
  CHECK(codes2.codes == codes.codes);
}
