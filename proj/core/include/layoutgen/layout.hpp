#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "layoutgen/errors.hpp"

namespace layoutgen {

// World coordinates live in [0, 64] in both axes; all geometry below assumes
// axis-aligned rectangles with w, h > 0.
inline constexpr double kWorldLo = 0.0;
inline constexpr double kWorldHi = 64.0;

// Tolerance for "touching" tests on float-valued (optimized) layouts.
// Ground-truth layouts are grid-aligned, so this only matters downstream of
// the solver.
inline constexpr double kGeomTol = 1e-6;

struct ElementType {
  int id = 0;
  std::string name;
};

enum class LayoutMode { FloorPlan, Furniture };

// Dense list of element types; in floor-plan mode exactly one of them is the
// designated exterior type.
struct TypeSchema {
  LayoutMode mode = LayoutMode::FloorPlan;
  std::vector<ElementType> types;
  int exterior_id = -1;  // valid in floor-plan mode only

  int count() const { return static_cast<int>(types.size()); }
  bool is_exterior(int type_id) const { return type_id == exterior_id; }
  const std::string& name(int type_id) const { return types.at(type_id).name; }
  int id_of(const std::string& name) const;

  static TypeSchema default_floorplan();
  static TypeSchema default_furniture();
};

struct Element {
  int type = 0;
  double x = 0, y = 0, w = 0, h = 0;
  // Orientation in [0, 2*pi); present iff the layout is in furniture mode.
  std::optional<double> alpha;

  double cx() const { return x + w / 2; }
  double cy() const { return y + h / 2; }
  double area() const { return w * h; }
  double x2() const { return x + w; }
  double y2() const { return y + h; }
};

enum class EdgeKind : uint8_t { HorizontalAdjacency, VerticalAdjacency, Wall, Door };
enum class EdgeGroup : uint8_t { Constraining, Descriptive };

inline EdgeGroup edge_group(EdgeKind k) {
  return (k == EdgeKind::HorizontalAdjacency || k == EdgeKind::VerticalAdjacency)
             ? EdgeGroup::Constraining
             : EdgeGroup::Descriptive;
}

const char* edge_kind_name(EdgeKind k);
EdgeKind edge_kind_from_name(const std::string& s);

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::HorizontalAdjacency;

  bool operator==(const Edge&) const = default;
};

struct Layout {
  LayoutMode mode = LayoutMode::FloorPlan;
  TypeSchema schema;
  std::vector<Element> elements;
  std::vector<Edge> edges;

  bool operator==(const Layout& o) const;
};

// Uniform quantizer over [lo, hi] with 2^bits levels. quantize() maps world
// values to bin indices, dequantize() returns the bin center.
struct Quantizer {
  int bits = 6;
  double lo = kWorldLo;
  double hi = kWorldHi;

  int levels() const { return 1 << bits; }
  int quantize(double v) const;
  double dequantize(int bin) const;

  static Quantizer coords() { return Quantizer{6, kWorldLo, kWorldHi}; }
  static Quantizer angle() { return Quantizer{5, 0.0, 2.0 * 3.14159265358979323846}; }
};

// --- Structural queries -----------------------------------------------------

// Length of the overlap of [a0,a1] and [b0,b1]; negative when separated.
inline double interval_overlap(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) - std::max(a0, b0);
}

// True if i's right edge touches j's left edge with positive vertical overlap.
bool touches_horizontally(const Element& i, const Element& j, double tol = kGeomTol);
// True if i's top edge touches j's bottom edge with positive horizontal overlap.
bool touches_vertically(const Element& i, const Element& j, double tol = kGeomTol);
// True if the two rectangles share a boundary segment of positive length
// (either orientation, either order).
bool shares_boundary(const Element& a, const Element& b, double tol = kGeomTol);

// Union-find partition of element indices into rooms: two elements join the
// same room iff they are connected by an adjacency edge, have the same type,
// and carry no Wall edge between them. The returned sets are disjoint and
// cover all element indices.
std::vector<std::vector<int>> merge_rooms(const Layout& layout);

struct Violation {
  enum class Kind {
    InvalidAdjacency,        // adjacency edge whose geometry fails the touch test
    InvalidDescriptiveEdge,  // wall/door edge between non-touching elements
    Overlap,                 // two element interiors intersect
    Hole,                    // uncovered cells inside the covered region (floor plan)
    BadIndex,                // edge referencing a non-existent element
    OutOfBounds,             // element outside [0, 64]^2
  };
  Kind kind;
  int a = -1;
  int b = -1;
  std::string detail;
};

const char* violation_kind_name(Violation::Kind k);

// Structural validation. Violations are data, not errors; an empty result
// means the layout is structurally sound. Hole detection rasterizes onto the
// 64x64 quantization grid.
std::vector<Violation> validate_layout(const Layout& layout);

// Door connectivity graph over the rooms of a floor plan. Nodes 0..R-1 are
// the rooms from merge_rooms(), node R is the exterior. Rooms made of
// exterior-type elements link to the exterior node, as does any room with a
// door to an exterior-type element.
struct DoorGraph {
  std::vector<std::vector<int>> rooms;  // merge_rooms output
  std::vector<std::vector<int>> adj;    // size rooms.size() + 1
  int exterior_node = 0;                // == rooms.size()

  int node_count() const { return static_cast<int>(adj.size()); }
  // BFS distances from `from`; unreachable nodes get -1.
  std::vector<int> distances_from(int from) const;
};

DoorGraph door_graph(const Layout& layout);

}  // namespace layoutgen
