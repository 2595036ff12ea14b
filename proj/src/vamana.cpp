#include "batann/vamana.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <mutex>
#include <numeric>
#include <thread>

namespace batann {

namespace {

constexpr std::size_t kLockStripes = 8192;

struct StripedLocks {
  std::vector<std::mutex> mu{kLockStripes};
  std::mutex& of(NodeId u) { return mu[u & (kLockStripes - 1)]; }
};

}  // namespace

NodeId medoid_point(const VectorDataset& dataset) {
  if (dataset.num_points() == 0) throw std::runtime_error("medoid: empty dataset");
  const std::uint64_t n = dataset.num_points();
  const std::uint32_t dim = dataset.dim();

  std::vector<double> acc(dim, 0.0);
  std::vector<float> fp(dim);
  std::uint64_t sample_n;
  std::vector<std::uint32_t> sample;
  if (n > 100000) {
    Rng rng(0x5eed);
    sample = rng.sample_indices(n, 100000);
    sample_n = sample.size();
  } else {
    sample_n = n;
  }
  for (std::uint64_t i = 0; i < sample_n; ++i) {
    dataset.row_as_float(sample.empty() ? i : sample[i], fp.data());
    for (std::uint32_t j = 0; j < dim; ++j) acc[j] += fp[j];
  }
  std::vector<float> centroid(dim);
  for (std::uint32_t j = 0; j < dim; ++j)
    centroid[j] = static_cast<float>(acc[j] / double(sample_n));

  float best = std::numeric_limits<float>::max();
  NodeId arg = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    dataset.row_as_float(i, fp.data());
    float d = sq_l2_f32(fp.data(), centroid.data(), dim);
    if (d < best) { best = d; arg = static_cast<NodeId>(i); }
  }
  return arg;
}

std::vector<NodeId> robust_prune(const VectorDataset& dataset, NodeId node,
                                 const std::vector<std::pair<float, NodeId>>& candidates,
                                 std::uint32_t R, float alpha) {
  std::vector<NodeId> result;
  result.reserve(R);
  std::vector<std::pair<float, NodeId>> alive;
  alive.reserve(candidates.size());
  for (const auto& c : candidates)
    if (c.second != node) alive.push_back(c);

  std::vector<std::pair<float, NodeId>> next;
  next.reserve(alive.size());
  while (!alive.empty() && result.size() < R) {
    NodeId kept = alive.front().second;
    result.push_back(kept);
    next.clear();
    for (std::size_t i = 1; i < alive.size(); ++i) {
      const auto& x = alive[i];
      if (x.second == kept) continue;
      if (alpha * sq_l2(dataset, kept, x.second) <= x.first) continue;  // pruned
      next.push_back(x);
    }
    alive.swap(next);
  }
  return result;
}

void mem_best_first_search(const VamanaGraph& g, const VectorDataset& dataset,
                           const std::uint8_t* query, std::uint32_t L, NodeId entry,
                           MemSearchScratch& scratch, MemSearchResult& out) {
  out.beam.clear();
  out.visited.clear();
  scratch.reset(g.num_points);

  auto dist_to = [&](NodeId id) {
    return sq_l2_raw(dataset.kind(), query, dataset.row(id), dataset.dim());
  };

  std::vector<std::uint8_t> explored;
  explored.reserve(L + 1);

  auto insert = [&](float d, NodeId id) {
    std::pair<float, NodeId> e{d, id};
    if (out.beam.size() == L && e >= out.beam.back()) return;
    auto pos = std::lower_bound(out.beam.begin(), out.beam.end(), e);
    std::size_t idx = static_cast<std::size_t>(pos - out.beam.begin());
    out.beam.insert(pos, e);
    explored.insert(explored.begin() + idx, 0);
    if (out.beam.size() > L) { out.beam.pop_back(); explored.pop_back(); }
  };

  scratch.mark(entry);
  insert(dist_to(entry), entry);

  for (;;) {
    std::size_t pick = out.beam.size();
    for (std::size_t i = 0; i < out.beam.size(); ++i)
      if (!explored[i]) { pick = i; break; }
    if (pick == out.beam.size()) break;

    explored[pick] = 1;
    auto [d, u] = out.beam[pick];
    out.visited.emplace_back(d, u);
    for (NodeId v : g.neighbors(u)) {
      if (!scratch.mark(v)) continue;
      insert(dist_to(v), v);
    }
  }
}

namespace {

// search + merge-with-current-neighbors + prune for one node
void insert_point(const VectorDataset& dataset, VamanaGraph& g, StripedLocks& locks,
                  NodeId p, std::uint32_t L_build, float alpha, MemSearchScratch& scratch,
                  MemSearchResult& res) {
  mem_best_first_search(g, dataset, dataset.row(p), L_build, g.medoid, scratch, res);

  std::vector<std::pair<float, NodeId>> cand = std::move(res.visited);
  {
    std::lock_guard<std::mutex> lk(locks.of(p));
    for (NodeId v : g.neighbors(p)) cand.emplace_back(sq_l2(dataset, p, v), v);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end(),
                         [](const auto& a, const auto& b) { return a.second == b.second; }),
             cand.end());

  auto nbrs = robust_prune(dataset, p, cand, g.R, alpha);
  {
    std::lock_guard<std::mutex> lk(locks.of(p));
    g.degree[p] = static_cast<std::uint32_t>(nbrs.size());
    std::copy(nbrs.begin(), nbrs.end(), g.adj.begin() + std::size_t(p) * g.R);
  }

  // reverse edges, re-pruning on overflow
  for (NodeId q : nbrs) {
    std::lock_guard<std::mutex> lk(locks.of(q));
    NodeId* list = g.adj.data() + std::size_t(q) * g.R;
    std::uint32_t deg = g.degree[q];
    bool present = false;
    for (std::uint32_t i = 0; i < deg; ++i)
      if (list[i] == p) { present = true; break; }
    if (present) continue;
    if (deg < g.R) {
      list[deg] = p;
      g.degree[q] = deg + 1;
      continue;
    }
    std::vector<std::pair<float, NodeId>> qc;
    qc.reserve(deg + 1);
    for (std::uint32_t i = 0; i < deg; ++i) qc.emplace_back(sq_l2(dataset, q, list[i]), list[i]);
    qc.emplace_back(sq_l2(dataset, q, p), p);
    std::sort(qc.begin(), qc.end());
    auto pruned = robust_prune(dataset, q, qc, g.R, alpha);
    g.degree[q] = static_cast<std::uint32_t>(pruned.size());
    std::copy(pruned.begin(), pruned.end(), list);
  }
}

void run_pass(const VectorDataset& dataset, VamanaGraph& g, StripedLocks& locks,
              const std::vector<NodeId>& order, std::uint32_t L_build, float alpha,
              unsigned num_threads) {
  if (num_threads <= 1) {
    MemSearchScratch scratch;
    MemSearchResult res;
    for (NodeId p : order) insert_point(dataset, g, locks, p, L_build, alpha, scratch, res);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < num_threads; ++t) {
    pool.emplace_back([&]() {
      MemSearchScratch scratch;
      MemSearchResult res;
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= order.size()) break;
        insert_point(dataset, g, locks, order[i], L_build, alpha, scratch, res);
      }
    });
  }
  for (auto& t : pool) t.join();
}

void repair_reachability(const VectorDataset& dataset, VamanaGraph& g) {
  MemSearchScratch scratch;
  MemSearchResult res;
  std::vector<std::uint8_t> reached(g.num_points);
  std::vector<NodeId> stack;

  for (int round = 0; round < 8; ++round) {
    std::fill(reached.begin(), reached.end(), 0);
    stack.clear();
    stack.push_back(g.medoid);
    reached[g.medoid] = 1;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      for (NodeId v : g.neighbors(u))
        if (!reached[v]) { reached[v] = 1; stack.push_back(v); }
    }
    bool any = false;
    for (NodeId u = 0; u < g.num_points; ++u) {
      if (reached[u]) continue;
      any = true;
      mem_best_first_search(g, dataset, dataset.row(u), 16, g.medoid, scratch, res);
      NodeId v = res.beam.empty() ? g.medoid : res.beam.front().second;
      if (v == u) v = g.medoid;
      NodeId* list = g.adj.data() + std::size_t(v) * g.R;
      std::uint32_t deg = g.degree[v];
      bool present = false;
      for (std::uint32_t i = 0; i < deg; ++i)
        if (list[i] == u) { present = true; break; }
      if (present) continue;
      if (deg < g.R) {
        list[deg] = u;
        g.degree[v] = deg + 1;
      } else {
        // replace v's farthest neighbor
        std::uint32_t far_i = 0;
        float far_d = -1.0f;
        for (std::uint32_t i = 0; i < deg; ++i) {
          float d = sq_l2(dataset, v, list[i]);
          if (d > far_d) { far_d = d; far_i = i; }
        }
        list[far_i] = u;
      }
      reached[u] = 1;  // provisional; the next round re-checks
    }
    if (!any) break;
  }
}

}  // namespace

VamanaGraph build_vamana(const VectorDataset& dataset, const VamanaBuildParams& params) {
  if (dataset.num_points() == 0) throw std::runtime_error("build_vamana: empty dataset");
  if (params.R < 2) throw std::runtime_error("build_vamana: R must be >= 2");
  if (params.L_build < params.R) throw std::runtime_error("build_vamana: L_build must be >= R");

  VamanaGraph g;
  g.num_points = static_cast<std::uint32_t>(dataset.num_points());
  g.R = params.R;
  g.degree.assign(g.num_points, 0);
  g.adj.assign(std::size_t(g.num_points) * g.R, 0);
  g.medoid = medoid_point(dataset);

  if (g.num_points == 1) return g;

  std::vector<NodeId> order(g.num_points);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(params.seed);
  rng.shuffle(order);

  unsigned threads = params.num_threads
                         ? params.num_threads
                         : std::max(1u, std::thread::hardware_concurrency());
  StripedLocks locks;
  run_pass(dataset, g, locks, order, params.L_build, 1.0f, threads);
  run_pass(dataset, g, locks, order, params.L_build, params.alpha, threads);
  repair_reachability(dataset, g);
  return g;
}

void save_graph(const VamanaGraph& g, const std::string& path) {
  BinWriter out(path);
  out.u32(g.num_points);
  out.u32(g.R);
  out.u32(g.medoid);
  for (NodeId u = 0; u < g.num_points; ++u) {
    out.u32(g.degree[u]);
    out.write(g.adj.data() + std::size_t(u) * g.R, std::size_t(g.degree[u]) * 4);
  }
  out.close();
}

VamanaGraph load_graph(const std::string& path) {
  BinReader in(path);
  VamanaGraph g;
  g.num_points = in.u32();
  g.R = in.u32();
  g.medoid = in.u32();
  if (g.num_points > 0 && g.medoid >= g.num_points)
    throw std::runtime_error("graph medoid out of range: " + path);
  g.degree.assign(g.num_points, 0);
  g.adj.assign(std::size_t(g.num_points) * g.R, 0);
  for (NodeId u = 0; u < g.num_points; ++u) {
    std::uint32_t deg = in.u32();
    if (deg > g.R) throw std::runtime_error("graph degree exceeds R: " + path);
    g.degree[u] = deg;
    in.read(g.adj.data() + std::size_t(u) * g.R, std::size_t(deg) * 4);
    for (std::uint32_t i = 0; i < deg; ++i)
      if (g.adj[std::size_t(u) * g.R + i] >= g.num_points)
        throw std::runtime_error("graph neighbor id out of range: " + path);
  }
  return g;
}

std::size_t count_reachable(const VamanaGraph& g, NodeId from) {
  std::vector<std::uint8_t> reached(g.num_points, 0);
  std::vector<NodeId> stack{from};
  reached[from] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u))
      if (!reached[v]) { reached[v] = 1; ++count; stack.push_back(v); }
  }
  return count;
}

}  // namespace batann
