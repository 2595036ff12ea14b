#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "batann/dataset.hpp"
#include "batann/io_engine.hpp"
#include "batann/partition.hpp"
#include "batann/vamana.hpp"

namespace batann {

inline constexpr std::uint32_t kDiskIndexMagic = 0x584e4142;  // "BANX"

/// A node's on-disk record, viewed inside a sector buffer:
/// node_id u32 | embedding dim*elem | degree u32 | neighbor ids R x u32.
/// Records are fixed size, so several pack into one 4096-byte sector.
struct DiskNodeRecord {
  NodeId id = kInvalidNode;
  const std::uint8_t* embedding = nullptr;
  std::uint32_t degree = 0;
  const std::uint8_t* neighbors = nullptr;  // degree x u32, little-endian

  NodeId neighbor(std::uint32_t i) const { return load_u32(neighbors + std::size_t(i) * 4); }
};

struct SectorRef {
  std::uint32_t sector = 0;
  std::uint32_t offset = 0;
};

std::size_t disk_record_size(std::uint32_t dim, ElemKind kind, std::uint32_t R);

/// Packs the nodes of one partition into `out_path` (pass a P=1 map, or an
/// empty map pointer, to pack the whole graph). Neighbor lists keep global
/// ids. Writes the node->sector sidecar to out_path + ".smap".
/// Returns the number of data sectors written.
std::uint64_t build_disk_index(const VamanaGraph& graph, const VectorDataset& dataset,
                               const PartitionMap* partition_map, std::uint8_t partition_id,
                               const std::string& out_path);

/// Read-side view of one partition's index file: header, node->sector map,
/// record geometry, and engine factories bound to this file.
class DiskIndexReader {
 public:
  explicit DiskIndexReader(const std::string& path);

  std::uint32_t num_local_nodes() const { return num_local_; }
  std::uint32_t dim() const { return dim_; }
  ElemKind elem_kind() const { return kind_; }
  std::uint32_t max_degree() const { return R_; }
  std::uint32_t num_sectors() const { return num_sectors_; }
  std::size_t record_size() const { return record_size_; }
  std::uint32_t records_per_sector() const { return records_per_sector_; }

  bool is_local(NodeId id) const { return sector_map_.count(id) != 0; }
  SectorRef sector_of(NodeId id) const;

  /// Parse the record of `id` out of a completed sector buffer.
  DiskNodeRecord record_in(const std::uint8_t* sector_buf, NodeId id) const;

  std::unique_ptr<IoEngine> make_file_engine(std::uint32_t queue_depth = 128,
                                             bool use_direct = false) const;
  /// Loads every sector into memory; reads complete after latency_us.
  std::unique_ptr<IoEngine> make_fake_engine(std::uint32_t latency_us) const;

  /// Synchronous convenience used by tests and tooling: coalesces duplicate
  /// sectors, waits for all completions, and returns owned records in input
  /// order. io_delta, if given, receives the number of sector reads issued.
  struct OwnedRecord {
    NodeId id;
    std::vector<std::uint8_t> embedding;
    std::vector<NodeId> neighbors;
  };
  std::vector<OwnedRecord> read_nodes_sync(IoEngine& engine, const std::vector<NodeId>& ids,
                                           std::uint64_t* io_delta = nullptr) const;

 private:
  std::string path_;
  std::uint32_t num_local_ = 0;
  std::uint32_t dim_ = 0;
  ElemKind kind_ = ElemKind::u8;
  std::uint32_t R_ = 0;
  std::uint32_t num_sectors_ = 0;
  std::size_t record_size_ = 0;
  std::uint32_t records_per_sector_ = 0;
  std::unordered_map<NodeId, SectorRef> sector_map_;
  mutable std::shared_ptr<const std::vector<std::uint8_t>> cached_sectors_;
};

}  // namespace batann
