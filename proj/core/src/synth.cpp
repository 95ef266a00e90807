#include "layoutgen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>

namespace layoutgen {

void GenConfig::validate() const {
  if (min_size < 2) throw GenError("min_size must be >= 2 bins");
  if (count_min < (mode == LayoutMode::FloorPlan ? 1 : 0) || count_max < count_min)
    throw GenError("invalid element count range");
  if (n_layouts < 0) throw GenError("n_layouts must be >= 0");
  if (mode == LayoutMode::FloorPlan) {
    if (outer_min > outer_max || outer_max > 62)
      throw GenError("outer box range must satisfy outer_min <= outer_max <= 62");
    int interior = outer_min - 2 * (min_size + 2);
    if (interior < min_size) throw GenError("outer_min too small for frame + interior");
    int capacity = (interior / min_size) * (interior / min_size);
    if (capacity < count_min)
      throw GenError("count_min unreachable with this min_size/outer_min");
  } else {
    if (piece_max < min_size) throw GenError("piece_max must be >= min_size");
  }
}

namespace {

struct IRect {
  int x, y, w, h;
};

// Guillotine partition of `interior` into up to `target` leaves, all sides
// >= min_size. Splits the largest splittable leaf at a random grid line.
std::vector<IRect> guillotine(IRect interior, int target, int min_size, Rng& rng) {
  std::vector<IRect> leaves{interior};
  while (static_cast<int>(leaves.size()) < target) {
    int best = -1;
    long best_area = -1;
    for (size_t i = 0; i < leaves.size(); ++i) {
      const IRect& r = leaves[i];
      if (r.w < 2 * min_size && r.h < 2 * min_size) continue;
      long area = static_cast<long>(r.w) * r.h;
      if (area > best_area) {
        best_area = area;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    IRect r = leaves[best];
    bool split_x = r.w >= 2 * min_size && (r.h < 2 * min_size || rng.bernoulli(r.w >= r.h ? 0.7 : 0.3));
    if (split_x) {
      int cut = static_cast<int>(rng.uniform_int(min_size, r.w - min_size));
      leaves[best] = {r.x, r.y, cut, r.h};
      leaves.push_back({r.x + cut, r.y, r.w - cut, r.h});
    } else {
      int cut = static_cast<int>(rng.uniform_int(min_size, r.h - min_size));
      leaves[best] = {r.x, r.y, r.w, cut};
      leaves.push_back({r.x, r.y + cut, r.w, r.h - cut});
    }
  }
  return leaves;
}

void sort_canonical(std::vector<Element>& elems) {
  std::stable_sort(elems.begin(), elems.end(), [](const Element& a, const Element& b) {
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    if (a.w != b.w) return a.w < b.w;
    if (a.h != b.h) return a.h < b.h;
    return a.type < b.type;
  });
}

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
    if (a.src != b.src) return a.src < b.src;
    return a.dst < b.dst;
  });
}

std::vector<double> effective_weights(const GenConfig& cfg, const TypeSchema& schema) {
  std::vector<double> w = cfg.type_weights;
  if (w.empty()) {
    w.assign(schema.count(), 1.0);
    auto set = [&](const char* name, double v) {
      int id = schema.id_of(name);
      if (id >= 0) w[id] = v;
    };
    set("bedroom", 3);
    set("bathroom", 2);
    set("kitchen", 2);
    set("living", 2);
    set("balcony", 1);
    set("corridor", 2);
  }
  w.resize(schema.count(), 1.0);
  if (schema.exterior_id >= 0) w[schema.exterior_id] = 0.0;
  return w;
}

}  // namespace

Layout generate_floorplan(const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  Layout layout;
  layout.mode = LayoutMode::FloorPlan;
  layout.schema = TypeSchema::default_floorplan();
  const int ext = layout.schema.exterior_id;

  const int target = static_cast<int>(rng.uniform_int(cfg.count_min, cfg.count_max));

  // Outer box and frame; retry the guillotine until the target count is met.
  std::vector<IRect> cells;
  IRect outer{}, interior{};
  int tl = 0, tr = 0, tt = 0, tb = 0;
  for (int attempt = 0; attempt < 32; ++attempt) {
    int W = static_cast<int>(rng.uniform_int(cfg.outer_min, cfg.outer_max));
    int H = static_cast<int>(rng.uniform_int(cfg.outer_min, cfg.outer_max));
    int x0 = static_cast<int>(rng.uniform_int(0, 64 - W));
    int y0 = static_cast<int>(rng.uniform_int(0, 64 - H));
    tl = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.min_size + 2));
    tr = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.min_size + 2));
    tt = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.min_size + 2));
    tb = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.min_size + 2));
    outer = {x0, y0, W, H};
    interior = {x0 + tl, y0 + tb, W - tl - tr, H - tb - tt};
    if (interior.w < cfg.min_size || interior.h < cfg.min_size) continue;
    cells = guillotine(interior, target, cfg.min_size, rng);
    if (static_cast<int>(cells.size()) >= std::min(target, cfg.count_min)) break;
    cells.clear();
  }
  if (static_cast<int>(cells.size()) < cfg.count_min)
    throw GenError("could not partition interior into the requested cell count");

  // Exterior frame: bottom and top strips span the full width, side strips
  // fill the gap between them.
  layout.elements.push_back({ext, double(outer.x), double(outer.y), double(outer.w), double(tb), {}});
  layout.elements.push_back({ext, double(outer.x), double(outer.y + outer.h - tt), double(outer.w), double(tt), {}});
  layout.elements.push_back({ext, double(outer.x), double(outer.y + tb), double(tl), double(outer.h - tb - tt), {}});
  layout.elements.push_back({ext, double(outer.x + outer.w - tr), double(outer.y + tb), double(tr), double(outer.h - tb - tt), {}});

  // Interior cells with weighted, area-conditioned types.
  std::vector<double> weights = effective_weights(cfg, layout.schema);
  size_t largest = 0;
  for (size_t i = 1; i < cells.size(); ++i)
    if (static_cast<long>(cells[i].w) * cells[i].h >
        static_cast<long>(cells[largest].w) * cells[largest].h)
      largest = i;
  const int living = layout.schema.id_of("living");
  for (size_t i = 0; i < cells.size(); ++i) {
    int type;
    if (i == largest && living >= 0) {
      type = living;
    } else {
      std::vector<double> w = weights;
      long area = static_cast<long>(cells[i].w) * cells[i].h;
      if (area <= static_cast<long>(cfg.min_size + 1) * (cfg.min_size + 1)) {
        auto boost = [&](const char* name, double f) {
          int id = layout.schema.id_of(name);
          if (id >= 0) w[id] *= f;
        };
        boost("bathroom", 3);
        boost("corridor", 2);
        boost("living", 0.25);
      }
      type = static_cast<int>(rng.choice_weighted(w));
    }
    layout.elements.push_back({type, double(cells[i].x), double(cells[i].y),
                               double(cells[i].w), double(cells[i].h), {}});
  }

  sort_canonical(layout.elements);
  const int n = static_cast<int>(layout.elements.size());

  // Adjacency edges are exactly the geometric adjacency relation.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const Element& a = layout.elements[i];
      const Element& b = layout.elements[j];
      if (touches_horizontally(a, b))
        layout.edges.push_back({i, j, EdgeKind::HorizontalAdjacency});
      if (touches_vertically(a, b))
        layout.edges.push_back({i, j, EdgeKind::VerticalAdjacency});
    }

  // Walls: always between different types, sampled between same-type
  // neighbors, never between exterior strips.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Element& a = layout.elements[i];
      const Element& b = layout.elements[j];
      if (!shares_boundary(a, b)) continue;
      bool both_ext = a.type == ext && b.type == ext;
      if (both_ext) continue;
      if (a.type == b.type && !rng.bernoulli(cfg.wall_prob)) continue;
      layout.edges.push_back({i, j, EdgeKind::Wall});
    }

  // Doors along a randomized spanning tree of the room graph rooted at the
  // exterior room, plus optional extras.
  auto rooms = merge_rooms(layout);
  const int nrooms = static_cast<int>(rooms.size());
  std::vector<int> room_of(n, -1);
  int ext_room = -1;
  for (int r = 0; r < nrooms; ++r) {
    for (int idx : rooms[r]) room_of[idx] = r;
    if (layout.elements[rooms[r][0]].type == ext) ext_room = r;
  }
  std::vector<std::vector<std::pair<int, int>>> pair_candidates(
      static_cast<size_t>(nrooms) * nrooms);
  std::vector<std::vector<int>> room_adj(nrooms);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (room_of[i] == room_of[j]) continue;
      if (!shares_boundary(layout.elements[i], layout.elements[j])) continue;
      int ra = room_of[i], rb = room_of[j];
      if (pair_candidates[ra * nrooms + rb].empty()) {
        room_adj[ra].push_back(rb);
        room_adj[rb].push_back(ra);
      }
      pair_candidates[ra * nrooms + rb].emplace_back(i, j);
      pair_candidates[rb * nrooms + ra].emplace_back(i, j);
    }

  std::vector<int> tree_parent(nrooms, -1);
  std::vector<int> tree_children(nrooms, 0);
  if (ext_room >= 0) {
    std::vector<uint8_t> seen(nrooms, 0);
    std::deque<int> queue{ext_room};
    seen[ext_room] = 1;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      std::vector<int> nbrs = room_adj[u];
      rng.shuffle(nbrs);
      for (int v : nbrs)
        if (!seen[v]) {
          seen[v] = 1;
          tree_parent[v] = u;
          ++tree_children[u];
          queue.push_back(v);
        }
    }
  }
  std::vector<Edge> doors;
  for (int r = 0; r < nrooms; ++r) {
    if (tree_parent[r] < 0) continue;
    bool leaf = tree_children[r] == 0;
    if (leaf && rng.bernoulli(cfg.inaccessible_prob)) continue;
    const auto& cands = pair_candidates[r * nrooms + tree_parent[r]];
    auto [i, j] = cands[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cands.size()) - 1))];
    doors.push_back({std::min(i, j), std::max(i, j), EdgeKind::Door});
  }
  for (int ra = 0; ra < nrooms; ++ra)
    for (int rb : room_adj[ra]) {
      if (rb <= ra) continue;
      if (tree_parent[ra] == rb || tree_parent[rb] == ra) continue;
      if (ra == ext_room || rb == ext_room) continue;
      if (!rng.bernoulli(cfg.door_extra_prob)) continue;
      const auto& cands = pair_candidates[ra * nrooms + rb];
      auto [i, j] = cands[static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(cands.size()) - 1))];
      doors.push_back({std::min(i, j), std::max(i, j), EdgeKind::Door});
    }
  for (const Edge& d : doors) {
    bool dup = false;
    for (const Edge& e : layout.edges)
      if (e.kind == EdgeKind::Door && e.src == d.src && e.dst == d.dst) dup = true;
    if (!dup) layout.edges.push_back(d);
  }

  sort_edges(layout.edges);
  return layout;
}

Layout generate_furniture(const GenConfig& cfg, Rng& rng) {
  cfg.validate();
  Layout layout;
  layout.mode = LayoutMode::Furniture;
  layout.schema = TypeSchema::default_furniture();

  int rw = static_cast<int>(rng.uniform_int(24, 56));
  int rh = static_cast<int>(rng.uniform_int(24, 56));
  int rx = static_cast<int>(rng.uniform_int(0, 64 - rw));
  int ry = static_cast<int>(rng.uniform_int(0, 64 - rh));

  std::vector<double> weights = effective_weights(cfg, layout.schema);
  const Quantizer aq = Quantizer::angle();
  const int n = static_cast<int>(rng.uniform_int(cfg.count_min, cfg.count_max));
  for (int k = 0; k < n; ++k) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      int w = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.piece_max));
      int h = static_cast<int>(rng.uniform_int(cfg.min_size, cfg.piece_max));
      if (w > rw || h > rh) continue;
      int x = static_cast<int>(rng.uniform_int(rx, rx + rw - w));
      int y = static_cast<int>(rng.uniform_int(ry, ry + rh - h));
      Element e{static_cast<int>(rng.choice_weighted(weights)),
                double(x), double(y), double(w), double(h),
                aq.dequantize(static_cast<int>(rng.uniform_int(0, aq.levels() - 1)))};
      bool clash = false;
      for (const Element& o : layout.elements)
        if (interval_overlap(e.x, e.x2(), o.x, o.x2()) > 0 &&
            interval_overlap(e.y, e.y2(), o.y, o.y2()) > 0)
          clash = true;
      if (clash) continue;
      layout.elements.push_back(e);
      break;
    }
  }
  sort_canonical(layout.elements);
  return layout;
}

std::vector<Layout> generate_corpus(const GenConfig& cfg, int threads) {
  cfg.validate();
  std::vector<Layout> corpus(cfg.n_layouts);
  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      Rng rng = Rng::stream(cfg.seed, static_cast<uint64_t>(i));
      corpus[i] = cfg.mode == LayoutMode::FloorPlan ? generate_floorplan(cfg, rng)
                                                    : generate_furniture(cfg, rng);
    }
  };
  threads = std::max(1, std::min(threads, cfg.n_layouts));
  if (threads <= 1) {
    work(0, cfg.n_layouts);
  } else {
    std::vector<std::thread> pool;
    int chunk = (cfg.n_layouts + threads - 1) / threads;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, t * chunk, std::min(cfg.n_layouts, (t + 1) * chunk));
    for (auto& th : pool) th.join();
  }
  return corpus;
}

CorpusSplits split_corpus(const std::vector<Layout>& corpus) {
  CorpusSplits s;
  const size_t n = corpus.size();
  size_t n_val = n / 20, n_test = n / 20;
  size_t n_train = n - n_val - n_test;
  s.train.assign(corpus.begin(), corpus.begin() + n_train);
  s.val.assign(corpus.begin() + n_train, corpus.begin() + n_train + n_val);
  s.test.assign(corpus.begin() + n_train + n_val, corpus.end());
  return s;
}

GenConfig parse_gen_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GenError("cannot open config file '" + path + "'");
  GenConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw GenError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "n_layouts") cfg.n_layouts = std::stoi(val);
      else if (key == "mode") {
        if (val == "floorplan") cfg.mode = LayoutMode::FloorPlan;
        else if (val == "furniture") cfg.mode = LayoutMode::Furniture;
        else throw GenError("mode must be floorplan or furniture");
      } else if (key == "count_min") cfg.count_min = std::stoi(val);
      else if (key == "count_max") cfg.count_max = std::stoi(val);
      else if (key == "min_size") cfg.min_size = std::stoi(val);
      else if (key == "wall_prob") cfg.wall_prob = std::stod(val);
      else if (key == "door_extra_prob") cfg.door_extra_prob = std::stod(val);
      else if (key == "inaccessible_prob") cfg.inaccessible_prob = std::stod(val);
      else if (key == "outer_min") cfg.outer_min = std::stoi(val);
      else if (key == "outer_max") cfg.outer_max = std::stoi(val);
      else if (key == "piece_max") cfg.piece_max = std::stoi(val);
      else if (key == "type_weights") {
        cfg.type_weights.clear();
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) cfg.type_weights.push_back(std::stod(tok));
      } else {
        throw GenError("unknown config key '" + key + "'");
      }
    } catch (const GenError&) {
      throw;
    } catch (const std::exception&) {
      throw GenError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace layoutgen
