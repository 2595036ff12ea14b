#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <span>
#include <string_view>
#include <vector>

#include "batann/common.hpp"

namespace batann {

inline constexpr std::uint32_t kMaxL = 512;
inline constexpr std::uint32_t kMaxW = 64;
inline constexpr std::uint32_t kMaxResultEntries = 8192;
inline constexpr std::uint32_t kMaxAddrLen = 63;
inline constexpr std::uint32_t kExploredSlots = 32768;  // power of two, > 2x results

struct SearchParams {
  std::uint16_t k = 10;
  std::uint16_t L = 128;
  std::uint16_t W = 8;

  void validate() const {
    if (k == 0 || L == 0 || W == 0) throw std::runtime_error("params: k, L, W must be >= 1");
    if (k > L) throw std::runtime_error("params: k must be <= L");
    if (W > L) throw std::runtime_error("params: W must be <= L");
    if (L > kMaxL) throw std::runtime_error("params: L exceeds limit");
    if (W > kMaxW) throw std::runtime_error("params: W exceeds limit");
  }
};

/// Per-query counters carried in the state and reported in RESULT frames.
struct MetricsRecord {
  std::uint32_t hops = 0;
  std::uint32_t inter_partition_hops = 0;
  std::uint32_t cmps = 0;   // PQ neighbor evaluations + exact evaluations
  std::uint32_t ios = 0;    // coalesced sector reads

  bool operator==(const MetricsRecord&) const = default;
};

/// Bounded candidate pool sorted ascending by (distance, id). Storage is
/// reserved up front so steady-state insertion never allocates.
class Beam {
 public:
  Beam() {
    ids_.reserve(kMaxL);
    dists_.reserve(kMaxL);
    explored_.reserve(kMaxL);
  }

  void reset(std::uint32_t limit) {
    limit_ = limit;
    ids_.clear();
    dists_.clear();
    explored_.clear();
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(ids_.size()); }
  std::uint32_t limit() const { return limit_; }
  NodeId id(std::uint32_t i) const { return ids_[i]; }
  float dist(std::uint32_t i) const { return dists_[i]; }
  bool explored(std::uint32_t i) const { return explored_[i] != 0; }

  bool contains(NodeId id) const {
    for (NodeId x : ids_)
      if (x == id) return true;
    return false;
  }

  /// Sorted insert; rejects when the entry would fall off the end of a full
  /// beam. Caller is responsible for duplicate suppression.
  bool insert(NodeId id, float dist, std::uint8_t explored_flag = 0) {
    std::uint32_t n = size();
    if (n == limit_ && (dist > dists_[n - 1] ||
                        (dist == dists_[n - 1] && id >= ids_[n - 1])))
      return false;
    std::uint32_t pos = n;
    while (pos > 0 && (dists_[pos - 1] > dist ||
                       (dists_[pos - 1] == dist && ids_[pos - 1] > id)))
      --pos;
    if (n == limit_) {
      ids_.pop_back();
      dists_.pop_back();
      explored_.pop_back();
      --n;
    }
    ids_.insert(ids_.begin() + pos, id);
    dists_.insert(dists_.begin() + pos, dist);
    explored_.insert(explored_.begin() + pos, explored_flag);
    return true;
  }

  void mark_explored(NodeId id) {
    for (std::uint32_t i = 0; i < size(); ++i)
      if (ids_[i] == id) { explored_[i] = 1; return; }
    // entry may have been evicted mid-batch; nothing to mark
  }

  /// Up to W best unexplored ids, in beam order.
  std::uint32_t collect_unexplored(std::uint32_t W, NodeId* out) const {
    std::uint32_t n = 0;
    for (std::uint32_t i = 0; i < size() && n < W; ++i)
      if (!explored_[i]) out[n++] = ids_[i];
    return n;
  }

 private:
  std::uint32_t limit_ = kMaxL;
  std::vector<NodeId> ids_;
  std::vector<float> dists_;
  std::vector<std::uint8_t> explored_;
};

/// Open-addressed id set sized for the result-list cap; doubles as the
/// re-exploration filter. Insert-only between resets.
class ExploredSet {
 public:
  ExploredSet() : slots_(kExploredSlots, kInvalidNode) {}

  void clear() { std::fill(slots_.begin(), slots_.end(), kInvalidNode); }

  bool contains(NodeId id) const {
    std::uint32_t i = hash(id);
    while (slots_[i] != kInvalidNode) {
      if (slots_[i] == id) return true;
      i = (i + 1) & (kExploredSlots - 1);
    }
    return false;
  }

  void insert(NodeId id) {
    std::uint32_t i = hash(id);
    while (slots_[i] != kInvalidNode) {
      if (slots_[i] == id) return;
      i = (i + 1) & (kExploredSlots - 1);
    }
    slots_[i] = id;
  }

 private:
  static std::uint32_t hash(NodeId id) {
    std::uint64_t h = std::uint64_t(id) * 0x9e3779b97f4a7c15ull;
    return static_cast<std::uint32_t>(h >> 40) & (kExploredSlots - 1);
  }
  std::vector<NodeId> slots_;
};

struct SectorHold {
  std::uint32_t sector = 0;
  std::uint32_t buf_id = 0;
  const std::uint8_t* data = nullptr;
};

/// The traveling baton: beam, full-precision result list, parameters,
/// counters, and routing metadata. Pool-allocated on servers; deserialize
/// writes into reserved storage without allocating.
struct QueryState {
  std::uint64_t query_id = 0;
  std::uint8_t addr_len = 0;
  char client_addr[kMaxAddrLen + 1] = {};
  SearchParams params;
  MetricsRecord counters;
  std::array<std::uint8_t, 32> servers_seen{};
  bool hop_charged = false;  // current step was already counted at handoff

  Beam beam;
  std::vector<NodeId> result_ids;     // exploration order; the explored trace
  std::vector<float> result_dists;
  ExploredSet explored;

  // embedding: owned in library mode, borrowed from the server cache when
  // running inside a node process
  std::vector<std::uint8_t> embedding_storage;
  const std::uint8_t* embedding = nullptr;
  const float* lut = nullptr;

  // in-flight read bookkeeping; never serialized
  std::uint32_t batch_size = 0;
  std::array<NodeId, kMaxW> batch_ids{};
  std::uint32_t pending_reads = 0;
  std::uint32_t sectors_held = 0;
  std::array<SectorHold, kMaxW> held{};
  bool failed = false;

  QueryState() {
    result_ids.reserve(kMaxResultEntries);
    result_dists.reserve(kMaxResultEntries);
    embedding_storage.reserve(4096);
  }

  void reset() {
    query_id = 0;
    addr_len = 0;
    counters = {};
    servers_seen.fill(0);
    hop_charged = false;
    beam.reset(kMaxL);
    result_ids.clear();
    result_dists.clear();
    explored.clear();
    embedding = nullptr;
    lut = nullptr;
    batch_size = 0;
    pending_reads = 0;
    sectors_held = 0;
    failed = false;
  }

  void set_client_addr(std::string_view addr) {
    if (addr.size() > kMaxAddrLen) throw std::runtime_error("client address too long");
    addr_len = static_cast<std::uint8_t>(addr.size());
    std::memcpy(client_addr, addr.data(), addr.size());
    client_addr[addr.size()] = '\0';
  }
  std::string_view client_addr_view() const { return {client_addr, addr_len}; }

  bool seen(std::uint8_t server) const {
    return (servers_seen[server >> 3] >> (server & 7)) & 1;
  }
  void mark_seen(std::uint8_t server) {
    servers_seen[server >> 3] |= std::uint8_t(1u << (server & 7));
  }

  void push_result(NodeId id, float dist) {
    if (result_ids.size() >= kMaxResultEntries) { failed = true; return; }
    result_ids.push_back(id);
    result_dists.push_back(dist);
  }
};

// ---- wire codec ----
// STATE payload, little-endian:
//   u64 query_id | u16 addr_len + addr | u16 k, u16 L, u16 W
//   u32 hops, u32 inter_partition_hops, u32 cmps, u32 ios
//   32B servers_seen | u8 flags (bit0 embedding, bit1 hop_charged)
//   u16 beam_count, u16 result_count
//   beam entries (u32 id, f32 dist, u8 flags) | result entries (u32 id, f32 dist)
//   [u16 dim, u8 elem_kind, embedding bytes]

struct StateDecodeInfo {
  bool ok = false;
  bool had_embedding = false;
  std::uint16_t dim = 0;
  ElemKind kind = ElemKind::u8;
};

std::size_t serialized_state_size(const QueryState& st, bool with_embedding,
                                  std::uint16_t dim, ElemKind kind);

/// Appends the encoded state to `out`.
void serialize_state(const QueryState& st, bool with_embedding, std::uint16_t dim,
                     ElemKind kind, std::vector<std::uint8_t>& out);

/// Overwrites `st` from the payload; embedding, when present, lands in
/// st.embedding_storage. Does not allocate when the frame respects the
/// documented limits and `st` came from a warmed pool.
StateDecodeInfo deserialize_state(std::span<const std::uint8_t> payload, QueryState& st);

}  // namespace batann
