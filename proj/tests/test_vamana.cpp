#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "batann/vamana.hpp"

using namespace batann;

namespace {

VectorDataset random_u8(std::uint64_t n, std::uint32_t dim, std::uint64_t seed) {
  VectorDataset d(n, dim, ElemKind::u8);
  Rng rng(seed);
  for (std::uint64_t i = 0; i < n * dim; ++i)
    d.raw()[i] = static_cast<std::uint8_t>(rng.below(256));
  return d;
}

VectorDataset points_f32(const std::vector<std::vector<float>>& pts) {
  VectorDataset d(pts.size(), static_cast<std::uint32_t>(pts[0].size()), ElemKind::f32);
  for (std::size_t i = 0; i < pts.size(); ++i)
    std::memcpy(d.row(i), pts[i].data(), pts[i].size() * 4);
  return d;
}

// independent re-implementation of the pruning rule, structured around a
// "removed" flag array instead of survivor lists
std::vector<NodeId> prune_oracle(const VectorDataset& data, NodeId node,
                                 std::vector<std::pair<float, NodeId>> cand,
                                 std::uint32_t R, float alpha) {
  std::vector<NodeId> keep;
  std::vector<bool> dead(cand.size(), false);
  for (std::size_t i = 0; i < cand.size(); ++i)
    if (cand[i].second == node) dead[i] = true;
  while (keep.size() < R) {
    std::size_t first = cand.size();
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (!dead[i]) { first = i; break; }
    if (first == cand.size()) break;
    NodeId c = cand[first].second;
    keep.push_back(c);
    dead[first] = true;
    for (std::size_t i = first + 1; i < cand.size(); ++i) {
      if (dead[i]) continue;
      if (cand[i].second == c) { dead[i] = true; continue; }
      if (alpha * sq_l2(data, c, cand[i].second) <= cand[i].first) dead[i] = true;
    }
  }
  return keep;
}

void check_graph_invariants(const VamanaGraph& g) {
  for (NodeId u = 0; u < g.num_points; ++u) {
    REQUIRE(g.degree[u] <= g.R);
    std::set<NodeId> seen;
    for (NodeId v : g.neighbors(u)) {
      CHECK(v != u);
      CHECK(v < g.num_points);
      CHECK(seen.insert(v).second);  // no duplicates
    }
  }
}

double mem_recall_at_10(const VamanaGraph& g, const VectorDataset& data,
                        const VectorDataset& queries, const GroundTruth& gt, std::uint32_t L) {
  MemSearchScratch scratch;
  MemSearchResult res;
  std::vector<std::vector<NodeId>> results(queries.num_points());
  for (std::uint64_t q = 0; q < queries.num_points(); ++q) {
    mem_best_first_search(g, data, queries.row(q), L, g.medoid, scratch, res);
    for (std::size_t j = 0; j < std::min<std::size_t>(10, res.beam.size()); ++j)
      results[q].push_back(res.beam[j].second);
  }
  return recall_at_k(results, gt, 10);
}

}  // namespace

TEST_CASE("medoid of one point is 0") {
  auto d = random_u8(1, 4, 1);
  CHECK(medoid_point(d) == 0);
}

TEST_CASE("medoid of symmetric cross is the center") {
  auto d = points_f32({{0, 0}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}});
  CHECK(medoid_point(d) == 0);
}

TEST_CASE("medoid matches exhaustive centroid-nearest scan") {
  auto d = random_u8(10000, 12, 33);
  std::vector<double> acc(12, 0);
  for (std::uint64_t i = 0; i < d.num_points(); ++i)
    for (int j = 0; j < 12; ++j) acc[j] += d.row(i)[j];
  std::vector<float> cent(12);
  for (int j = 0; j < 12; ++j) cent[j] = static_cast<float>(acc[j] / double(d.num_points()));
  float best = 1e30f;
  NodeId arg = 0;
  std::vector<float> fp(12);
  for (std::uint64_t i = 0; i < d.num_points(); ++i) {
    d.row_as_float(i, fp.data());
    float dist = sq_l2_f32(fp.data(), cent.data(), 12);
    if (dist < best) { best = dist; arg = static_cast<NodeId>(i); }
  }
  CHECK(medoid_point(d) == arg);
}

TEST_CASE("robust_prune keeps first R when candidates are equidistant and mutually far") {
  // candidates at exactly radius 10, 90 degrees apart: identical distance to
  // the node, and alpha * pairwise distance always exceeds that distance
  auto d = points_f32({{0, 0}, {10, 0}, {0, 10}, {-10, 0}, {0, -10}});
  std::vector<std::pair<float, NodeId>> cand;
  for (NodeId i = 1; i <= 4; ++i) cand.emplace_back(sq_l2(d, 0, i), i);
  for (const auto& c : cand) CHECK(c.first == 100.0f);
  std::sort(cand.begin(), cand.end());
  auto kept = robust_prune(d, 0, cand, 3, 1.2f);
  REQUIRE(kept.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(kept[i] == cand[i].second);
}

TEST_CASE("large alpha keeps one survivor per co-located group") {
  // node at origin; three copies at (1,0); three at (2,0)
  auto d = points_f32({{0, 0}, {1, 0}, {1, 0}, {1, 0}, {2, 0}, {2, 0}, {2, 0}});
  std::vector<std::pair<float, NodeId>> cand;
  for (NodeId i = 1; i <= 6; ++i) cand.emplace_back(sq_l2(d, 0, i), i);
  std::sort(cand.begin(), cand.end());

  auto kept = robust_prune(d, 0, cand, 6, 1e30f);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0] == 1);
  CHECK(kept[1] == 4);

  // contrast: alpha = 1 prunes the farther group entirely
  auto tight = robust_prune(d, 0, cand, 6, 1.0f);
  REQUIRE(tight.size() == 1);
  CHECK(tight[0] == 1);
}

TEST_CASE("robust_prune matches independent oracle on planar points") {
  Rng rng(77);
  std::vector<std::vector<float>> pts;
  for (int i = 0; i < 21; ++i)
    pts.push_back({static_cast<float>(rng.unit() * 100.0),
                   static_cast<float>(rng.unit() * 100.0)});
  auto d = points_f32(pts);
  for (NodeId node = 0; node < 21; ++node) {
    std::vector<std::pair<float, NodeId>> cand;
    for (NodeId i = 0; i < 21; ++i)
      if (i != node) cand.emplace_back(sq_l2(d, node, i), i);
    std::sort(cand.begin(), cand.end());
    CHECK(robust_prune(d, node, cand, 4, 1.2f) == prune_oracle(d, node, cand, 4, 1.2f));
  }
}

TEST_CASE("build_vamana single point") {
  auto d = random_u8(1, 8, 5);
  VamanaBuildParams p;
  p.R = 4;
  p.L_build = 8;
  auto g = build_vamana(d, p);
  CHECK(g.num_points == 1);
  CHECK(g.medoid == 0);
  CHECK(g.degree[0] == 0);
}

TEST_CASE("build_vamana rejects bad parameters") {
  auto d = random_u8(10, 8, 6);
  VamanaBuildParams p;
  p.R = 1;
  p.L_build = 8;
  CHECK_THROWS(build_vamana(d, p));
  p.R = 8;
  p.L_build = 4;
  CHECK_THROWS(build_vamana(d, p));
}

TEST_CASE("three collinear points: endpoints hang off the middle") {
  auto d = points_f32({{0}, {1}, {2}});
  VamanaBuildParams p;
  p.R = 2;
  p.L_build = 3;
  p.alpha = 1.2f;
  p.num_threads = 1;
  auto g = build_vamana(d, p);
  CHECK(g.medoid == 1);

  // derived by exhaustively applying the pruning rule to all three nodes:
  // 0 -> {1}, 1 -> {0, 2}, 2 -> {1}
  auto has = [&](NodeId u, NodeId v) {
    for (NodeId x : g.neighbors(u)) if (x == v) return true;
    return false;
  };
  CHECK(has(0, 1));
  CHECK(has(2, 1));
  CHECK(has(1, 0));
  CHECK(has(1, 2));
  CHECK_FALSE(has(0, 2));
  CHECK_FALSE(has(2, 0));
  CHECK(count_reachable(g, g.medoid) == 3);
}

TEST_CASE("10K random points reach recall@10 >= 0.95 at L=64") {
  auto d = random_u8(10000, 16, 71);
  auto q = random_u8(500, 16, 72);
  auto gt = brute_force_knn(d, q, 10);

  VamanaBuildParams p;
  p.R = 32;
  p.L_build = 64;
  p.alpha = 1.2f;
  p.seed = 9;
  auto g = build_vamana(d, p);
  check_graph_invariants(g);
  CHECK(count_reachable(g, g.medoid) == g.num_points);

  double rec = mem_recall_at_10(g, d, q, gt, 64);
  CHECK(rec >= 0.95);
}

TEST_CASE("recall is monotone-ish in L (L=128 vs L=20)") {
  auto d = random_u8(10000, 16, 81);
  auto q = random_u8(500, 16, 82);
  auto gt = brute_force_knn(d, q, 10);
  VamanaBuildParams p;
  p.R = 32;
  p.L_build = 64;
  p.seed = 10;
  auto g = build_vamana(d, p);
  double lo = mem_recall_at_10(g, d, q, gt, 20);
  double hi = mem_recall_at_10(g, d, q, gt, 128);
  CHECK(hi >= lo - 0.001);
}

TEST_CASE("single-threaded build is deterministic") {
  auto d = random_u8(2000, 8, 91);
  VamanaBuildParams p;
  p.R = 16;
  p.L_build = 32;
  p.seed = 4;
  p.num_threads = 1;
  auto g1 = build_vamana(d, p);
  auto g2 = build_vamana(d, p);
  CHECK(g1.medoid == g2.medoid);
  CHECK(g1.degree == g2.degree);
  CHECK(g1.adj == g2.adj);
}

TEST_CASE("graph file round trip") {
  auto d = random_u8(500, 8, 95);
  VamanaBuildParams p;
  p.R = 8;
  p.L_build = 16;
  auto g = build_vamana(d, p);

  auto dir = std::filesystem::temp_directory_path() / "batann_vamana_tests";
  std::filesystem::create_directories(dir);
  auto path = (dir / "g.bin").string();
  save_graph(g, path);
  auto g2 = load_graph(path);
  CHECK(g2.num_points == g.num_points);
  CHECK(g2.R == g.R);
  CHECK(g2.medoid == g.medoid);
  CHECK(g2.degree == g.degree);
  for (NodeId u = 0; u < g.num_points; ++u)
    for (std::uint32_t i = 0; i < g.degree[u]; ++i)
      CHECK(g2.adj[std::size_t(u) * g.R + i] == g.adj[std::size_t(u) * g.R + i]);
}
