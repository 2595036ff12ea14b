#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "batann/dataset.hpp"

namespace batann {

/// Directed search graph with a fixed per-node degree cap. Adjacency is a
/// dense num_points x R table plus a degree array.
struct VamanaGraph {
  std::uint32_t num_points = 0;
  std::uint32_t R = 0;
  NodeId medoid = 0;
  std::vector<std::uint32_t> degree;
  std::vector<NodeId> adj;

  std::span<const NodeId> neighbors(NodeId u) const {
    return {adj.data() + std::size_t(u) * R, degree[u]};
  }
};

struct VamanaBuildParams {
  std::uint32_t R = 64;
  std::uint32_t L_build = 128;
  float alpha = 1.2f;
  std::uint64_t seed = 0;
  unsigned num_threads = 0;  // 0 = hardware concurrency; 1 = deterministic
};

/// Point nearest the dataset centroid (centroid estimated on a <=100K
/// sample for large datasets), ties to the lowest id.
NodeId medoid_point(const VectorDataset& dataset);

/// Candidates must be sorted ascending by (distance to node, id) and must
/// not contain the node itself. Keeps the nearest survivor, drops every
/// candidate x with alpha * d(kept, x) <= d(node, x), repeats up to R keeps.
std::vector<NodeId> robust_prune(const VectorDataset& dataset, NodeId node,
                                 const std::vector<std::pair<float, NodeId>>& candidates,
                                 std::uint32_t R, float alpha);

/// Two-pass incremental construction (first pass alpha = 1, second with the
/// given alpha), reverse edges re-pruned on overflow, followed by a
/// reachability repair so every node is reachable from the medoid.
VamanaGraph build_vamana(const VectorDataset& dataset, const VamanaBuildParams& params);

// Graph file: u32 num_points, u32 R, u32 medoid, then per node
// u32 degree + degree x u32 neighbor ids.
void save_graph(const VamanaGraph& g, const std::string& path);
VamanaGraph load_graph(const std::string& path);

// ---- in-memory best-first search ----
// Used during construction, by the head index, and as the memory-resident
// reference in tests. Pool of L candidates, one exploration per step.

struct MemSearchScratch {
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  void reset(std::size_t n) {
    if (stamp.size() < n) stamp.assign(n, 0);
    ++epoch;
  }
  bool mark(NodeId id) {  // returns true if newly marked
    if (stamp[id] == epoch) return false;
    stamp[id] = epoch;
    return true;
  }
};

struct MemSearchResult {
  std::vector<std::pair<float, NodeId>> beam;     // ascending (dist, id)
  std::vector<std::pair<float, NodeId>> visited;  // exploration order
};

void mem_best_first_search(const VamanaGraph& g, const VectorDataset& dataset,
                           const std::uint8_t* query, std::uint32_t L, NodeId entry,
                           MemSearchScratch& scratch, MemSearchResult& out);

/// Nodes reachable from `from` by directed edges.
std::size_t count_reachable(const VamanaGraph& g, NodeId from);

}  // namespace batann
