#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batann/dataset.hpp"
#include "batann/vamana.hpp"

namespace batann {

/// Node -> server assignment. Ids are 8-bit in files and on the wire, so
/// P is capped at 256.
struct PartitionMap {
  std::uint32_t P = 1;
  std::vector<std::uint8_t> assign;

  std::uint64_t num_points() const { return assign.size(); }
  std::vector<std::uint64_t> counts() const {
    std::vector<std::uint64_t> c(P, 0);
    for (std::uint8_t a : assign) c[a]++;
    return c;
  }
};

/// Max points any partition may hold: (1 + epsilon) * ceil(n / P).
std::uint64_t partition_cap(std::uint64_t num_points, std::uint32_t P, double epsilon);

/// k-means into P clusters followed by balance repair: overfull clusters
/// shed their farthest members to the nearest underfull cluster.
PartitionMap partition_balanced_kmeans(const VectorDataset& dataset, std::uint32_t P,
                                       double epsilon, std::uint64_t seed);

/// Balanced k-means seed plus passes of single-node moves that reduce the
/// number of graph edges crossing partitions, subject to the balance cap.
/// Stops when a pass improves the cut by < 0.1% or after max_passes.
PartitionMap partition_graph_aware(const VamanaGraph& graph, const VectorDataset& dataset,
                                   std::uint32_t P, double epsilon, std::uint64_t seed,
                                   std::uint32_t max_passes = 10);

/// Round-robin over a seeded permutation; perfectly balanced.
PartitionMap partition_random(std::uint64_t num_points, std::uint32_t P, std::uint64_t seed);

/// Edges (u, v) with assign[u] != assign[v], counted over the symmetrized
/// multigraph (each directed edge contributes one unit).
std::uint64_t partition_cut(const VamanaGraph& graph, const PartitionMap& map);

// Partition map file: u32 num_points, u32 P, then raw bytes.
void save_partition_map(const PartitionMap& map, const std::string& path);
PartitionMap load_partition_map(const std::string& path);

}  // namespace batann
