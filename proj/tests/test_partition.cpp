#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "batann/partition.hpp"

using namespace batann;

namespace {

VectorDataset random_u8(std::uint64_t n, std::uint32_t dim, std::uint64_t seed) {
  VectorDataset d(n, dim, ElemKind::u8);
  Rng rng(seed);
  for (std::uint64_t i = 0; i < n * dim; ++i)
    d.raw()[i] = static_cast<std::uint8_t>(rng.below(256));
  return d;
}

}  // namespace

TEST_CASE("P=1 assigns everything to zero") {
  auto d = random_u8(100, 4, 1);
  auto m1 = partition_balanced_kmeans(d, 1, 0.05, 2);
  auto m2 = partition_random(100, 1, 3);
  for (std::uint64_t i = 0; i < 100; ++i) {
    CHECK(m1.assign[i] == 0);
    CHECK(m2.assign[i] == 0);
  }
}

TEST_CASE("four well-separated clusters split cleanly at P=4") {
  const std::uint32_t per = 50;
  VectorDataset d(4 * per, 2, ElemKind::f32);
  Rng rng(7);
  std::vector<int> label(4 * per);
  float centers[4][2] = {{0, 0}, {1000, 0}, {0, 1000}, {1000, 1000}};
  for (std::uint32_t i = 0; i < 4 * per; ++i) {
    label[i] = i / per;
    float* p = reinterpret_cast<float*>(d.row(i));
    p[0] = centers[label[i]][0] + static_cast<float>(rng.gaussian());
    p[1] = centers[label[i]][1] + static_cast<float>(rng.gaussian());
  }
  auto map = partition_balanced_kmeans(d, 4, 0.0, 11);
  // every partition's members share one generated label
  for (std::uint32_t p = 0; p < 4; ++p) {
    int seen = -1;
    for (std::uint32_t i = 0; i < 4 * per; ++i) {
      if (map.assign[i] != p) continue;
      if (seen < 0) seen = label[i];
      CHECK(label[i] == seen);
    }
  }
  auto counts = map.counts();
  for (auto c : counts) CHECK(c == per);
}

TEST_CASE("balance bound holds at P=10, eps=0.05") {
  auto d = random_u8(10000, 8, 13);
  auto map = partition_balanced_kmeans(d, 10, 0.05, 14);
  auto counts = map.counts();
  for (auto c : counts) CHECK(c <= 1050);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  CHECK(total == 10000);
}

TEST_CASE("partition rejects P out of range") {
  auto d = random_u8(10, 4, 15);
  CHECK_THROWS(partition_balanced_kmeans(d, 0, 0.05, 1));
  CHECK_THROWS(partition_balanced_kmeans(d, 11, 0.05, 1));  // P > n
  CHECK_THROWS(partition_random(10, 257, 1));
}

TEST_CASE("graph_aware with zero edges equals the k-means seed") {
  auto d = random_u8(200, 4, 21);
  VamanaGraph g;
  g.num_points = 200;
  g.R = 4;
  g.degree.assign(200, 0);
  g.adj.assign(800, 0);
  auto seed_map = partition_balanced_kmeans(d, 3, 0.05, 22);
  auto refined = partition_graph_aware(g, d, 3, 0.05, 22);
  CHECK(refined.assign == seed_map.assign);
}

TEST_CASE("ring graph of 100 nodes splits into two arcs with cut 2") {
  // nodes on a circle, ring adjacency (i -> i±1)
  const std::uint32_t n = 100;
  VectorDataset d(n, 2, ElemKind::f32);
  for (std::uint32_t i = 0; i < n; ++i) {
    float a = 2.0f * 3.14159265f * i / n;
    float* p = reinterpret_cast<float*>(d.row(i));
    p[0] = 100.0f * std::cos(a);
    p[1] = 100.0f * std::sin(a);
  }
  VamanaGraph g;
  g.num_points = n;
  g.R = 2;
  g.degree.assign(n, 2);
  g.adj.resize(2 * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    g.adj[2 * i] = (i + 1) % n;
    g.adj[2 * i + 1] = (i + n - 1) % n;
  }

  // oracle: among balanced contiguous-arc bipartitions the directed cut is
  // always 4 (two boundaries, two directed edges each); verify exhaustively
  std::uint64_t best_arc_cut = UINT64_MAX;
  for (std::uint32_t start = 0; start < n; ++start) {
    PartitionMap arc;
    arc.P = 2;
    arc.assign.assign(n, 0);
    for (std::uint32_t j = 0; j < n / 2; ++j) arc.assign[(start + j) % n] = 1;
    best_arc_cut = std::min(best_arc_cut, partition_cut(g, arc));
  }
  CHECK(best_arc_cut == 4);  // 2 undirected cut edges

  auto map = partition_graph_aware(g, d, 2, 0.0, 5);
  auto counts = map.counts();
  CHECK(counts[0] == 50);
  CHECK(counts[1] == 50);
  CHECK(partition_cut(g, map) == best_arc_cut);
}

TEST_CASE("graph_aware beats random on a real graph") {
  auto d = random_u8(10000, 16, 31);
  VamanaBuildParams bp;
  bp.R = 32;
  bp.L_build = 64;
  bp.seed = 32;
  auto g = build_vamana(d, bp);

  for (std::uint32_t P : {3u, 5u}) {
    auto smart = partition_graph_aware(g, d, P, 0.05, 33);
    auto rand_map = partition_random(10000, P, 34);
    std::uint64_t smart_cut = partition_cut(g, smart);
    std::uint64_t rand_cut = partition_cut(g, rand_map);
    CHECK(smart_cut < rand_cut);
    // refinement itself must not be worse than its k-means seed
    auto seed_map = partition_balanced_kmeans(d, P, 0.05, 33);
    CHECK(smart_cut <= partition_cut(g, seed_map));
    // balance bound
    auto cap = partition_cap(10000, P, 0.05);
    for (auto c : smart.counts()) CHECK(c <= cap);
  }
}

TEST_CASE("partition_random round robin counts and determinism") {
  auto m = partition_random(10, 3, 55);
  auto counts = m.counts();
  std::sort(counts.begin(), counts.end(), std::greater<>());
  CHECK(counts[0] == 4);
  CHECK(counts[1] == 3);
  CHECK(counts[2] == 3);

  auto m2 = partition_random(10, 3, 55);
  CHECK(m.assign == m2.assign);
  auto m3 = partition_random(10, 3, 56);
  CHECK(m3.assign != m.assign);  // different seed, different permutation
}

TEST_CASE("partition map file round trip") {
  auto d = random_u8(777, 4, 61);
  auto map = partition_balanced_kmeans(d, 7, 0.05, 62);
  auto dir = std::filesystem::temp_directory_path() / "batann_partition_tests";
  std::filesystem::create_directories(dir);
  auto path = (dir / "p.map").string();
  save_partition_map(map, path);
  auto map2 = load_partition_map(path);
  CHECK(map2.P == map.P);
  CHECK(map2.assign == map.assign);
}
