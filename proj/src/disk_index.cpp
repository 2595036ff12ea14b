#include "batann/disk_index.hpp"

#include <algorithm>
#include <cstring>

namespace batann {

std::size_t disk_record_size(std::uint32_t dim, ElemKind kind, std::uint32_t R) {
  return 4 + std::size_t(dim) * elem_size(kind) + 4 + std::size_t(R) * 4;
}

std::uint64_t build_disk_index(const VamanaGraph& graph, const VectorDataset& dataset,
                               const PartitionMap* partition_map, std::uint8_t partition_id,
                               const std::string& out_path) {
  if (graph.num_points != dataset.num_points())
    throw std::runtime_error("build_disk_index: graph/dataset size mismatch");
  std::size_t rec = disk_record_size(dataset.dim(), dataset.kind(), graph.R);
  if (rec > kSectorSize)
    throw std::runtime_error("build_disk_index: record exceeds sector size");
  std::uint32_t per_sector = static_cast<std::uint32_t>(kSectorSize / rec);

  std::vector<NodeId> local;
  for (NodeId u = 0; u < graph.num_points; ++u)
    if (!partition_map || partition_map->assign[u] == partition_id) local.push_back(u);
  if (local.empty()) throw std::runtime_error("build_disk_index: partition is empty");

  BinWriter out(out_path);
  std::vector<std::uint8_t> header(kSectorSize, 0);
  std::uint64_t num_sectors = (local.size() + per_sector - 1) / per_sector;
  store_u32(header.data() + 0, kDiskIndexMagic);
  store_u32(header.data() + 4, static_cast<std::uint32_t>(local.size()));
  store_u32(header.data() + 8, dataset.dim());
  store_u32(header.data() + 12, static_cast<std::uint32_t>(dataset.kind()));
  store_u32(header.data() + 16, graph.R);
  store_u32(header.data() + 20, static_cast<std::uint32_t>(num_sectors));
  out.write(header.data(), header.size());

  BinWriter smap(out_path + ".smap");
  smap.u32(static_cast<std::uint32_t>(local.size()));

  std::vector<std::uint8_t> sector(kSectorSize);
  std::size_t in_sector = 0;
  std::uint32_t sector_idx = 0;
  std::fill(sector.begin(), sector.end(), 0);
  for (NodeId u : local) {
    std::uint8_t* p = sector.data() + in_sector * rec;
    store_u32(p, u);
    p += 4;
    std::memcpy(p, dataset.row(u), dataset.row_bytes());
    p += dataset.row_bytes();
    store_u32(p, graph.degree[u]);
    p += 4;
    auto nbrs = graph.neighbors(u);
    for (std::size_t i = 0; i < nbrs.size(); ++i) store_u32(p + i * 4, nbrs[i]);

    smap.u32(u);
    smap.u32(sector_idx);
    smap.u32(static_cast<std::uint32_t>(in_sector * rec));

    if (++in_sector == per_sector) {
      out.write(sector.data(), kSectorSize);
      std::fill(sector.begin(), sector.end(), 0);
      in_sector = 0;
      ++sector_idx;
    }
  }
  if (in_sector > 0) out.write(sector.data(), kSectorSize);
  out.close();
  smap.close();
  return num_sectors;
}

DiskIndexReader::DiskIndexReader(const std::string& path) : path_(path) {
  BinReader in(path);
  if (in.size() < kSectorSize) throw std::runtime_error("disk index truncated: " + path);
  std::vector<std::uint8_t> header(kSectorSize);
  in.read(header.data(), header.size());
  if (load_u32(header.data()) != kDiskIndexMagic)
    throw std::runtime_error("disk index bad magic: " + path);
  num_local_ = load_u32(header.data() + 4);
  dim_ = load_u32(header.data() + 8);
  kind_ = elem_kind_from_byte(static_cast<std::uint8_t>(load_u32(header.data() + 12)));
  R_ = load_u32(header.data() + 16);
  num_sectors_ = load_u32(header.data() + 20);
  record_size_ = disk_record_size(dim_, kind_, R_);
  records_per_sector_ = static_cast<std::uint32_t>(kSectorSize / record_size_);
  if (in.size() != kSectorSize + std::uint64_t(num_sectors_) * kSectorSize)
    throw std::runtime_error("disk index size mismatch: " + path);

  BinReader sm(path + ".smap");
  std::uint32_t count = sm.u32();
  if (count != num_local_)
    throw std::runtime_error("sector map count mismatch: " + path);
  sector_map_.reserve(count * 2);
  for (std::uint32_t i = 0; i < count; ++i) {
    NodeId id = sm.u32();
    SectorRef ref;
    ref.sector = sm.u32();
    ref.offset = sm.u32();
    if (ref.sector >= num_sectors_ || ref.offset + record_size_ > kSectorSize)
      throw std::runtime_error("sector map entry out of range: " + path);
    if (!sector_map_.emplace(id, ref).second)
      throw std::runtime_error("sector map duplicate node: " + path);
  }
}

SectorRef DiskIndexReader::sector_of(NodeId id) const {
  auto it = sector_map_.find(id);
  if (it == sector_map_.end())
    throw std::runtime_error("sector_of: node " + std::to_string(id) + " is not local");
  return it->second;
}

DiskNodeRecord DiskIndexReader::record_in(const std::uint8_t* sector_buf, NodeId id) const {
  SectorRef ref = sector_of(id);
  const std::uint8_t* p = sector_buf + ref.offset;
  DiskNodeRecord rec;
  rec.id = load_u32(p);
  if (rec.id != id)
    throw std::runtime_error("record_in: sector does not contain node " + std::to_string(id));
  p += 4;
  rec.embedding = p;
  p += std::size_t(dim_) * elem_size(kind_);
  rec.degree = load_u32(p);
  if (rec.degree > R_) throw std::runtime_error("record_in: corrupt degree");
  rec.neighbors = p + 4;
  return rec;
}

std::unique_ptr<IoEngine> DiskIndexReader::make_file_engine(std::uint32_t queue_depth,
                                                            bool use_direct) const {
  return std::make_unique<ThreadIoEngine>(path_, kSectorSize, queue_depth, use_direct);
}

std::unique_ptr<IoEngine> DiskIndexReader::make_fake_engine(std::uint32_t latency_us) const {
  if (!cached_sectors_) {
    BinReader in(path_);
    auto sectors = std::make_shared<std::vector<std::uint8_t>>(
        std::size_t(num_sectors_) * kSectorSize);
    in.seek(kSectorSize);
    in.read(sectors->data(), sectors->size());
    cached_sectors_ = std::move(sectors);
  }
  return std::make_unique<FakeIoEngine>(cached_sectors_, latency_us);
}

std::vector<DiskIndexReader::OwnedRecord> DiskIndexReader::read_nodes_sync(
    IoEngine& engine, const std::vector<NodeId>& ids, std::uint64_t* io_delta) const {
  std::uint64_t before = engine.reads_issued();
  std::vector<std::uint32_t> sectors;
  for (NodeId id : ids) {
    std::uint32_t s = sector_of(id).sector;
    if (std::find(sectors.begin(), sectors.end(), s) == sectors.end()) sectors.push_back(s);
  }
  for (std::size_t i = 0; i < sectors.size(); ++i) engine.submit(sectors[i], i);

  std::unordered_map<std::uint32_t, std::vector<std::uint8_t>> sector_data;
  std::vector<IoCompletion> comps;
  while (sector_data.size() < sectors.size()) {
    comps.clear();
    engine.poll(comps);
    for (const auto& c : comps) {
      if (c.status != 0)
        throw std::runtime_error("read_nodes_sync: device error " + std::to_string(c.status));
      sector_data[c.sector] = std::vector<std::uint8_t>(c.data, c.data + kSectorSize);
      engine.release(c.buf_id);
    }
  }

  std::vector<OwnedRecord> out;
  out.reserve(ids.size());
  for (NodeId id : ids) {
    const auto& buf = sector_data.at(sector_of(id).sector);
    DiskNodeRecord rec = record_in(buf.data(), id);
    OwnedRecord o;
    o.id = rec.id;
    o.embedding.assign(rec.embedding, rec.embedding + std::size_t(dim_) * elem_size(kind_));
    o.neighbors.resize(rec.degree);
    for (std::uint32_t i = 0; i < rec.degree; ++i) o.neighbors[i] = rec.neighbor(i);
    out.push_back(std::move(o));
  }
  if (io_delta) *io_delta = engine.reads_issued() - before;
  return out;
}

}  // namespace batann
