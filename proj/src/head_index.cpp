#include "batann/head_index.hpp"

#include <cmath>
#include <cstring>

namespace batann {

namespace {
constexpr std::uint32_t kHeadMagic = 0x44484142;  // "BAHD"
constexpr std::uint32_t kSectionIds = 1;
constexpr std::uint32_t kSectionVectors = 2;
constexpr std::uint32_t kSectionGraph = 3;
}  // namespace

HeadIndex build_head_index(const VectorDataset& dataset, const HeadBuildParams& params) {
  if (dataset.num_points() == 0) throw std::runtime_error("build_head_index: empty dataset");
  if (params.fraction <= 0.0 || params.fraction > 1.0)
    throw std::runtime_error("build_head_index: fraction must be in (0, 1]");

  std::uint64_t sample_size = static_cast<std::uint64_t>(
      std::ceil(params.fraction * double(dataset.num_points())));
  sample_size = std::min(std::max<std::uint64_t>(sample_size, 1), dataset.num_points());

  HeadIndex head;
  Rng rng(params.seed ^ 0x48454144ull);
  head.sample_ids = rng.sample_indices(dataset.num_points(), sample_size);

  head.sample_vectors = VectorDataset(sample_size, dataset.dim(), dataset.kind());
  for (std::uint64_t i = 0; i < sample_size; ++i)
    std::memcpy(head.sample_vectors.row(i), dataset.row(head.sample_ids[i]),
                dataset.row_bytes());

  VamanaBuildParams bp;
  bp.R = std::min<std::uint32_t>(params.R_head, std::max<std::uint32_t>(2, sample_size - 1));
  if (sample_size <= 2) bp.R = 2;
  bp.L_build = std::max(params.L_head, bp.R);
  bp.alpha = params.alpha;
  bp.seed = params.seed;
  bp.num_threads = params.num_threads;
  head.graph = build_vamana(head.sample_vectors, bp);
  return head;
}

std::vector<NodeId> route(const HeadIndex& head, const std::uint8_t* query,
                          std::uint32_t num_entry_points, MemSearchScratch& scratch) {
  if (num_entry_points == 0) num_entry_points = 1;
  std::uint32_t L = std::max(2 * num_entry_points, 16u);
  MemSearchResult res;
  mem_best_first_search(head.graph, head.sample_vectors, query, L, head.graph.medoid,
                        scratch, res);
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < res.beam.size() && out.size() < num_entry_points; ++i)
    out.push_back(head.sample_ids[res.beam[i].second]);
  return out;
}

void save_head_index(const HeadIndex& head, const std::string& path) {
  // serialize sections into memory first so the table can carry offsets
  std::vector<std::uint8_t> ids_sec(4 + head.sample_ids.size() * 4);
  store_u32(ids_sec.data(), static_cast<std::uint32_t>(head.sample_ids.size()));
  for (std::size_t i = 0; i < head.sample_ids.size(); ++i)
    store_u32(ids_sec.data() + 4 + i * 4, head.sample_ids[i]);

  const auto& sv = head.sample_vectors;
  std::vector<std::uint8_t> vec_sec(9 + sv.num_points() * sv.row_bytes());
  store_u32(vec_sec.data(), static_cast<std::uint32_t>(sv.num_points()));
  store_u32(vec_sec.data() + 4, sv.dim());
  vec_sec[8] = static_cast<std::uint8_t>(sv.kind());
  std::memcpy(vec_sec.data() + 9, sv.raw(), sv.num_points() * sv.row_bytes());

  std::vector<std::uint8_t> graph_sec;
  {
    const auto& g = head.graph;
    std::size_t bytes = 12;
    for (NodeId u = 0; u < g.num_points; ++u) bytes += 4 + std::size_t(g.degree[u]) * 4;
    graph_sec.resize(bytes);
    std::uint8_t* p = graph_sec.data();
    store_u32(p, g.num_points); p += 4;
    store_u32(p, g.R); p += 4;
    store_u32(p, g.medoid); p += 4;
    for (NodeId u = 0; u < g.num_points; ++u) {
      store_u32(p, g.degree[u]); p += 4;
      for (std::uint32_t i = 0; i < g.degree[u]; ++i) {
        store_u32(p, g.adj[std::size_t(u) * g.R + i]);
        p += 4;
      }
    }
  }

  BinWriter out(path);
  out.u32(kHeadMagic);
  out.u32(3);
  std::uint64_t off = 8 + 3 * 20;  // table entries: id u32, offset u64, size u64
  const std::pair<std::uint32_t, const std::vector<std::uint8_t>*> sections[3] = {
      {kSectionIds, &ids_sec}, {kSectionVectors, &vec_sec}, {kSectionGraph, &graph_sec}};
  for (const auto& [id, sec] : sections) {
    out.u32(id);
    out.u64(off);
    out.u64(sec->size());
    off += sec->size();
  }
  for (const auto& [id, sec] : sections) out.write(sec->data(), sec->size());
  out.close();
}

HeadIndex load_head_index(const std::string& path) {
  BinReader in(path);
  if (in.u32() != kHeadMagic) throw std::runtime_error("head index bad magic: " + path);
  std::uint32_t nsec = in.u32();
  struct Section { std::uint32_t id; std::uint64_t off, size; };
  std::vector<Section> table(nsec);
  for (auto& s : table) { s.id = in.u32(); s.off = in.u64(); s.size = in.u64(); }

  auto read_section = [&](std::uint32_t id) {
    for (const auto& s : table)
      if (s.id == id) {
        std::vector<std::uint8_t> buf(s.size);
        in.seek(s.off);
        in.read(buf.data(), buf.size());
        return buf;
      }
    throw std::runtime_error("head index missing section: " + path);
  };

  HeadIndex head;
  {
    auto buf = read_section(kSectionIds);
    std::uint32_t n = load_u32(buf.data());
    if (buf.size() != 4 + std::size_t(n) * 4)
      throw std::runtime_error("head index ids section corrupt: " + path);
    head.sample_ids.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) head.sample_ids[i] = load_u32(buf.data() + 4 + i * 4);
  }
  {
    auto buf = read_section(kSectionVectors);
    std::uint32_t n = load_u32(buf.data());
    std::uint32_t dim = load_u32(buf.data() + 4);
    ElemKind kind = elem_kind_from_byte(buf[8]);
    head.sample_vectors = VectorDataset(n, dim, kind);
    if (buf.size() != 9 + head.sample_vectors.num_points() * head.sample_vectors.row_bytes())
      throw std::runtime_error("head index vector section corrupt: " + path);
    std::memcpy(head.sample_vectors.raw(), buf.data() + 9, buf.size() - 9);
  }
  {
    auto buf = read_section(kSectionGraph);
    const std::uint8_t* p = buf.data();
    auto& g = head.graph;
    g.num_points = load_u32(p); p += 4;
    g.R = load_u32(p); p += 4;
    g.medoid = load_u32(p); p += 4;
    g.degree.assign(g.num_points, 0);
    g.adj.assign(std::size_t(g.num_points) * g.R, 0);
    for (NodeId u = 0; u < g.num_points; ++u) {
      g.degree[u] = load_u32(p); p += 4;
      if (g.degree[u] > g.R) throw std::runtime_error("head graph corrupt: " + path);
      for (std::uint32_t i = 0; i < g.degree[u]; ++i) {
        g.adj[std::size_t(u) * g.R + i] = load_u32(p);
        p += 4;
      }
    }
    if (static_cast<std::size_t>(p - buf.data()) != buf.size())
      throw std::runtime_error("head graph section size mismatch: " + path);
  }
  if (head.sample_ids.size() != head.sample_vectors.num_points() ||
      head.sample_ids.size() != head.graph.num_points)
    throw std::runtime_error("head index sections inconsistent: " + path);
  return head;
}

}  // namespace batann
