#include "layoutgen/layout.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace layoutgen {

int TypeSchema::id_of(const std::string& n) const {
  for (const auto& t : types)
    if (t.name == n) return t.id;
  return -1;
}

TypeSchema TypeSchema::default_floorplan() {
  TypeSchema s;
  s.mode = LayoutMode::FloorPlan;
  const char* names[] = {"exterior", "bedroom",  "bathroom", "kitchen",
                         "living",   "balcony",  "corridor"};
  int id = 0;
  for (const char* n : names) s.types.push_back({id++, n});
  s.exterior_id = 0;
  return s;
}

TypeSchema TypeSchema::default_furniture() {
  TypeSchema s;
  s.mode = LayoutMode::Furniture;
  const char* names[] = {"bed", "sofa", "table", "chair", "wardrobe", "desk"};
  int id = 0;
  for (const char* n : names) s.types.push_back({id++, n});
  s.exterior_id = -1;
  return s;
}

const char* edge_kind_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::HorizontalAdjacency: return "hadj";
    case EdgeKind::VerticalAdjacency: return "vadj";
    case EdgeKind::Wall: return "wall";
    case EdgeKind::Door: return "door";
  }
  return "?";
}

EdgeKind edge_kind_from_name(const std::string& s) {
  if (s == "hadj") return EdgeKind::HorizontalAdjacency;
  if (s == "vadj") return EdgeKind::VerticalAdjacency;
  if (s == "wall") return EdgeKind::Wall;
  if (s == "door") return EdgeKind::Door;
  throw RangeError("unknown edge kind '" + s + "'");
}

bool Layout::operator==(const Layout& o) const {
  if (mode != o.mode || elements.size() != o.elements.size() || edges.size() != o.edges.size())
    return false;
  for (size_t i = 0; i < elements.size(); ++i) {
    const Element &a = elements[i], &b = o.elements[i];
    if (a.type != b.type || a.x != b.x || a.y != b.y || a.w != b.w || a.h != b.h ||
        a.alpha != b.alpha)
      return false;
  }
  for (size_t i = 0; i < edges.size(); ++i)
    if (!(edges[i] == o.edges[i])) return false;
  return true;
}

int Quantizer::quantize(double v) const {
  if (!(v >= lo && v <= hi))
    throw RangeError("value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                     ", " + std::to_string(hi) + "]");
  int bin = static_cast<int>(std::floor((v - lo) / (hi - lo) * levels()));
  return std::min(bin, levels() - 1);
}

double Quantizer::dequantize(int bin) const {
  if (bin < 0 || bin >= levels())
    throw RangeError("bin " + std::to_string(bin) + " outside [0, " +
                     std::to_string(levels()) + ")");
  return lo + (bin + 0.5) * (hi - lo) / levels();
}

bool touches_horizontally(const Element& i, const Element& j, double tol) {
  return std::abs(i.x2() - j.x) <= tol &&
         interval_overlap(i.y, i.y2(), j.y, j.y2()) > tol;
}

bool touches_vertically(const Element& i, const Element& j, double tol) {
  return std::abs(i.y2() - j.y) <= tol &&
         interval_overlap(i.x, i.x2(), j.x, j.x2()) > tol;
}

bool shares_boundary(const Element& a, const Element& b, double tol) {
  return touches_horizontally(a, b, tol) || touches_horizontally(b, a, tol) ||
         touches_vertically(a, b, tol) || touches_vertically(b, a, tol);
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<std::vector<int>> merge_rooms(const Layout& layout) {
  const int n = static_cast<int>(layout.elements.size());
  UnionFind uf(n);

  auto has_wall = [&](int i, int j) {
    for (const Edge& e : layout.edges)
      if (e.kind == EdgeKind::Wall &&
          ((e.src == i && e.dst == j) || (e.src == j && e.dst == i)))
        return true;
    return false;
  };

  for (const Edge& e : layout.edges) {
    if (edge_group(e.kind) != EdgeGroup::Constraining) continue;
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) continue;
    if (layout.elements[e.src].type != layout.elements[e.dst].type) continue;
    if (has_wall(e.src, e.dst)) continue;
    uf.unite(e.src, e.dst);
  }

  std::vector<std::vector<int>> rooms;
  std::vector<int> root_to_room(n, -1);
  for (int i = 0; i < n; ++i) {
    int r = uf.find(i);
    if (root_to_room[r] < 0) {
      root_to_room[r] = static_cast<int>(rooms.size());
      rooms.emplace_back();
    }
    rooms[root_to_room[r]].push_back(i);
  }
  return rooms;
}

const char* violation_kind_name(Violation::Kind k) {
  switch (k) {
    case Violation::Kind::InvalidAdjacency: return "invalid-adjacency";
    case Violation::Kind::InvalidDescriptiveEdge: return "invalid-descriptive-edge";
    case Violation::Kind::Overlap: return "overlap";
    case Violation::Kind::Hole: return "hole";
    case Violation::Kind::BadIndex: return "bad-index";
    case Violation::Kind::OutOfBounds: return "out-of-bounds";
  }
  return "?";
}

namespace {

// Flood fill the uncovered cells of `covered` starting from the border of the
// sub-grid [gx0,gx1) x [gy0,gy1); anything uncovered and unreached afterwards
// is an interior hole.
int count_holes(const std::vector<uint8_t>& covered, int gx0, int gy0, int gx1, int gy1) {
  const int W = gx1 - gx0, H = gy1 - gy0;
  if (W <= 0 || H <= 0) return 0;
  auto at = [&](int x, int y) -> uint8_t { return covered[(gy0 + y) * 64 + (gx0 + x)]; };
  std::vector<uint8_t> reached(static_cast<size_t>(W) * H, 0);
  std::deque<std::pair<int, int>> queue;
  auto push = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= W || y >= H) return;
    if (reached[y * W + x] || at(x, y)) return;
    reached[y * W + x] = 1;
    queue.emplace_back(x, y);
  };
  for (int x = 0; x < W; ++x) { push(x, 0); push(x, H - 1); }
  for (int y = 0; y < H; ++y) { push(0, y); push(W - 1, y); }
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    push(x - 1, y); push(x + 1, y); push(x, y - 1); push(x, y + 1);
  }
  int holes = 0;
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (!at(x, y) && !reached[y * W + x]) ++holes;
  return holes;
}

}  // namespace

std::vector<Violation> validate_layout(const Layout& layout) {
  std::vector<Violation> out;
  const int n = static_cast<int>(layout.elements.size());

  for (int i = 0; i < n; ++i) {
    const Element& e = layout.elements[i];
    if (e.w <= 0 || e.h <= 0 || e.x < kWorldLo - kGeomTol || e.y < kWorldLo - kGeomTol ||
        e.x2() > kWorldHi + kGeomTol || e.y2() > kWorldHi + kGeomTol)
      out.push_back({Violation::Kind::OutOfBounds, i, -1, "element outside world bounds"});
  }

  for (const Edge& e : layout.edges) {
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n || e.src == e.dst) {
      out.push_back({Violation::Kind::BadIndex, e.src, e.dst, edge_kind_name(e.kind)});
      continue;
    }
    const Element& a = layout.elements[e.src];
    const Element& b = layout.elements[e.dst];
    switch (e.kind) {
      case EdgeKind::HorizontalAdjacency:
        if (!touches_horizontally(a, b))
          out.push_back({Violation::Kind::InvalidAdjacency, e.src, e.dst, "hadj"});
        break;
      case EdgeKind::VerticalAdjacency:
        if (!touches_vertically(a, b))
          out.push_back({Violation::Kind::InvalidAdjacency, e.src, e.dst, "vadj"});
        break;
      case EdgeKind::Wall:
      case EdgeKind::Door:
        if (!shares_boundary(a, b))
          out.push_back({Violation::Kind::InvalidDescriptiveEdge, e.src, e.dst,
                         edge_kind_name(e.kind)});
        break;
    }
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Element& a = layout.elements[i];
      const Element& b = layout.elements[j];
      if (interval_overlap(a.x, a.x2(), b.x, b.x2()) > kGeomTol &&
          interval_overlap(a.y, a.y2(), b.y, b.y2()) > kGeomTol)
        out.push_back({Violation::Kind::Overlap, i, j, ""});
    }

  if (layout.mode == LayoutMode::FloorPlan && n > 0) {
    std::vector<uint8_t> covered(64 * 64, 0);
    double bx0 = kWorldHi, by0 = kWorldHi, bx1 = kWorldLo, by1 = kWorldLo;
    for (const Element& e : layout.elements) {
      bx0 = std::min(bx0, e.x); by0 = std::min(by0, e.y);
      bx1 = std::max(bx1, e.x2()); by1 = std::max(by1, e.y2());
      for (int gy = 0; gy < 64; ++gy)
        for (int gx = 0; gx < 64; ++gx) {
          double cx = gx + 0.5, cy = gy + 0.5;
          if (cx > e.x && cx < e.x2() && cy > e.y && cy < e.y2()) covered[gy * 64 + gx] = 1;
        }
    }
    int gx0 = std::clamp(static_cast<int>(std::floor(bx0)), 0, 63);
    int gy0 = std::clamp(static_cast<int>(std::floor(by0)), 0, 63);
    int gx1 = std::clamp(static_cast<int>(std::ceil(bx1)), 1, 64);
    int gy1 = std::clamp(static_cast<int>(std::ceil(by1)), 1, 64);
    int holes = count_holes(covered, gx0, gy0, gx1, gy1);
    if (holes > 0)
      out.push_back({Violation::Kind::Hole, -1, -1,
                     std::to_string(holes) + " uncovered interior cells"});
  }

  return out;
}

DoorGraph door_graph(const Layout& layout) {
  DoorGraph g;
  g.rooms = merge_rooms(layout);
  const int nrooms = static_cast<int>(g.rooms.size());
  g.exterior_node = nrooms;
  g.adj.assign(nrooms + 1, {});

  std::vector<int> room_of(layout.elements.size(), -1);
  for (int r = 0; r < nrooms; ++r)
    for (int i : g.rooms[r]) room_of[i] = r;

  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    for (int x : g.adj[a])
      if (x == b) return;
    g.adj[a].push_back(b);
    g.adj[b].push_back(a);
  };

  // Rooms made of exterior-type elements belong to the exterior.
  if (layout.schema.exterior_id >= 0) {
    for (int r = 0; r < nrooms; ++r)
      if (!g.rooms[r].empty() &&
          layout.elements[g.rooms[r][0]].type == layout.schema.exterior_id)
        add_edge(r, g.exterior_node);
  }

  const int n = static_cast<int>(layout.elements.size());
  for (const Edge& e : layout.edges) {
    if (e.kind != EdgeKind::Door) continue;
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n) continue;
    int ra = room_of[e.src], rb = room_of[e.dst];
    add_edge(ra, rb);
    if (layout.schema.exterior_id >= 0) {
      if (layout.elements[e.src].type == layout.schema.exterior_id)
        add_edge(g.exterior_node, rb);
      if (layout.elements[e.dst].type == layout.schema.exterior_id)
        add_edge(g.exterior_node, ra);
    }
  }
  return g;
}

std::vector<int> DoorGraph::distances_from(int from) const {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> queue;
  dist[from] = 0;
  queue.push_back(from);
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : adj[u])
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
  }
  return dist;
}

}  // namespace layoutgen
