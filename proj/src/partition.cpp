#include "batann/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "batann/kmeans.hpp"

namespace batann {

std::uint64_t partition_cap(std::uint64_t num_points, std::uint32_t P, double epsilon) {
  std::uint64_t ideal = (num_points + P - 1) / P;
  return static_cast<std::uint64_t>((1.0 + epsilon) * double(ideal));
}

namespace {

void check_p(std::uint64_t num_points, std::uint32_t P) {
  if (P == 0) throw std::runtime_error("partition: P must be >= 1");
  if (P > 256) throw std::runtime_error("partition: P > 256 (ids are uint8)");
  if (P > num_points) throw std::runtime_error("partition: P > num_points");
}

}  // namespace

PartitionMap partition_balanced_kmeans(const VectorDataset& dataset, std::uint32_t P,
                                       double epsilon, std::uint64_t seed) {
  check_p(dataset.num_points(), P);
  const std::uint64_t n = dataset.num_points();
  const std::uint32_t d = dataset.dim();

  PartitionMap map;
  map.P = P;
  map.assign.assign(n, 0);
  if (P == 1) return map;

  std::vector<float> pts(n * d);
  for (std::uint64_t i = 0; i < n; ++i) dataset.row_as_float(i, pts.data() + i * d);

  auto km = kmeans(pts.data(), n, d, P, 15, seed);
  for (std::uint64_t i = 0; i < n; ++i) map.assign[i] = static_cast<std::uint8_t>(km.assign[i]);

  // balance repair
  const std::uint64_t cap = partition_cap(n, P, epsilon);
  auto counts = map.counts();
  auto cent = [&](std::uint32_t c) { return km.centroids.data() + std::size_t(c) * d; };

  for (std::uint32_t c = 0; c < P; ++c) {
    if (counts[c] <= cap) continue;
    // members of c, farthest first
    std::vector<std::pair<float, std::uint64_t>> members;
    for (std::uint64_t i = 0; i < n; ++i)
      if (map.assign[i] == c)
        members.emplace_back(sq_l2_f32(pts.data() + i * d, cent(c), d), i);
    std::sort(members.begin(), members.end(), std::greater<>());

    std::size_t mi = 0;
    while (counts[c] > cap && mi < members.size()) {
      std::uint64_t i = members[mi++].second;
      float best = std::numeric_limits<float>::max();
      std::uint32_t dest = P;
      for (std::uint32_t c2 = 0; c2 < P; ++c2) {
        if (c2 == c || counts[c2] >= cap) continue;
        float dist = sq_l2_f32(pts.data() + i * d, cent(c2), d);
        if (dist < best) { best = dist; dest = c2; }
      }
      if (dest == P) break;  // nothing underfull; cap infeasible
      map.assign[i] = static_cast<std::uint8_t>(dest);
      counts[c]--;
      counts[dest]++;
    }
  }
  return map;
}

std::uint64_t partition_cut(const VamanaGraph& graph, const PartitionMap& map) {
  std::uint64_t cut = 0;
  for (NodeId u = 0; u < graph.num_points; ++u)
    for (NodeId v : graph.neighbors(u))
      if (map.assign[u] != map.assign[v]) ++cut;
  return cut;
}

PartitionMap partition_graph_aware(const VamanaGraph& graph, const VectorDataset& dataset,
                                   std::uint32_t P, double epsilon, std::uint64_t seed,
                                   std::uint32_t max_passes) {
  PartitionMap map = partition_balanced_kmeans(dataset, P, epsilon, seed);
  if (P == 1) return map;
  const std::uint64_t n = map.num_points();
  const std::uint64_t cap = partition_cap(n, P, epsilon);

  // symmetrized adjacency in CSR form; a directed edge contributes weight 1
  // in each direction
  std::vector<std::uint32_t> deg(n + 1, 0);
  for (NodeId u = 0; u < graph.num_points; ++u)
    for (NodeId v : graph.neighbors(u)) { deg[u + 1]++; deg[v + 1]++; }
  for (std::uint64_t i = 0; i < n; ++i) deg[i + 1] += deg[i];
  std::vector<NodeId> nbr(deg[n]);
  {
    std::vector<std::uint32_t> fill(deg.begin(), deg.end() - 1);
    for (NodeId u = 0; u < graph.num_points; ++u)
      for (NodeId v : graph.neighbors(u)) {
        nbr[fill[u]++] = v;
        nbr[fill[v]++] = u;
      }
  }

  auto counts = map.counts();
  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);

  std::uint64_t prev_cut = partition_cut(graph, map);
  std::vector<std::uint32_t> tally(P);

  for (std::uint32_t pass = 0; pass < max_passes; ++pass) {
    rng.shuffle(order);
    for (NodeId u : order) {
      std::fill(tally.begin(), tally.end(), 0);
      for (std::uint32_t e = deg[u]; e < deg[u + 1]; ++e) tally[map.assign[nbr[e]]]++;
      std::uint8_t cur = map.assign[u];
      std::uint32_t best_p = cur;
      std::uint32_t best_t = tally[cur];
      for (std::uint32_t c = 0; c < P; ++c) {
        if (c == cur || tally[c] <= best_t) continue;
        if (counts[c] + 1 > cap) continue;
        best_t = tally[c];
        best_p = c;
      }
      if (best_p != cur) {
        map.assign[u] = static_cast<std::uint8_t>(best_p);
        counts[cur]--;
        counts[best_p]++;
      }
    }
    std::uint64_t cut = partition_cut(graph, map);
    if (prev_cut == 0 || double(prev_cut - cut) < 0.001 * double(prev_cut)) break;
    prev_cut = cut;
  }
  return map;
}

PartitionMap partition_random(std::uint64_t num_points, std::uint32_t P, std::uint64_t seed) {
  check_p(num_points, P);
  PartitionMap map;
  map.P = P;
  map.assign.assign(num_points, 0);
  std::vector<std::uint32_t> perm(num_points);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  for (std::uint64_t i = 0; i < num_points; ++i)
    map.assign[perm[i]] = static_cast<std::uint8_t>(i % P);
  return map;
}

void save_partition_map(const PartitionMap& map, const std::string& path) {
  BinWriter out(path);
  out.u32(static_cast<std::uint32_t>(map.assign.size()));
  out.u32(map.P);
  out.write(map.assign.data(), map.assign.size());
  out.close();
}

PartitionMap load_partition_map(const std::string& path) {
  BinReader in(path);
  PartitionMap map;
  std::uint32_t n = in.u32();
  map.P = in.u32();
  if (map.P == 0 || map.P > 256) throw std::runtime_error("partition map bad P: " + path);
  if (in.size() != 8 + std::uint64_t(n)) throw std::runtime_error("partition map size mismatch: " + path);
  map.assign.resize(n);
  in.read(map.assign.data(), n);
  for (std::uint8_t a : map.assign)
    if (a >= map.P) throw std::runtime_error("partition id out of range: " + path);
  return map;
}

}  // namespace batann
