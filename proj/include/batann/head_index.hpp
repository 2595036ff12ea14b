#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batann/dataset.hpp"
#include "batann/vamana.hpp"

namespace batann {

/// Small in-memory routing index over a uniform sample of the corpus,
/// replicated on every server and searched to pick beam entry points.
struct HeadIndex {
  std::vector<NodeId> sample_ids;  // sample position -> global id
  VectorDataset sample_vectors;
  VamanaGraph graph;               // over sample positions
};

struct HeadBuildParams {
  double fraction = 0.01;
  std::uint32_t R_head = 32;
  std::uint32_t L_head = 64;
  float alpha = 1.2f;
  std::uint64_t seed = 0;
  unsigned num_threads = 0;
};

HeadIndex build_head_index(const VectorDataset& dataset, const HeadBuildParams& params);

/// Best-first search of the head graph with pool max(2 * num_entry_points,
/// 16); returns up to num_entry_points global ids, ascending distance.
std::vector<NodeId> route(const HeadIndex& head, const std::uint8_t* query,
                          std::uint32_t num_entry_points, MemSearchScratch& scratch);

// Single-file container with a section table: sample ids, sample vectors,
// and the embedded graph.
void save_head_index(const HeadIndex& head, const std::string& path);
HeadIndex load_head_index(const std::string& path);

}  // namespace batann
