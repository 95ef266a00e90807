#pragma once

#include <string>
#include <utility>
#include <vector>

#include "layoutgen/layout.hpp"
#include "layoutgen/lp.hpp"
#include "layoutgen/seq_codec.hpp"

namespace layoutgen {

// Continuous soft target tuple for one element. Floor plan: values = (w, h);
// furniture: values = (x, y, w, h, alpha). Model output bins are dequantized
// to bin centers when a set is built; file-provided sets may carry arbitrary
// continuous targets.
struct ElementTarget {
  int type = 0;
  std::vector<double> values;

  bool operator==(const ElementTarget&) const = default;
};

using IndexPair = std::pair<int, int>;

struct ConstraintSet {
  LayoutMode mode = LayoutMode::FloorPlan;
  TypeSchema schema;
  std::vector<ElementTarget> constraints;
  std::vector<IndexPair> hadj, vadj;  // constraining edges
  std::vector<IndexPair> wall, door;  // descriptive edges, carried through
  double epsilon = 0.1;
  double bound_lo = kWorldLo;
  double bound_hi = kWorldHi;
  std::vector<Element> boundary;  // fixed exterior rectangles (boundary mode)

  int size() const { return static_cast<int>(constraints.size()); }
};

// Dequantizes constraint tuples to bin centers.
ConstraintSet constraint_set_from_bins(const TypeSchema& schema, LayoutMode mode,
                                       const std::vector<ElementConstraint>& bins);

// Reconstruction path: quantize-dequantize the layout's element dimensions
// and carry its exact edges.
ConstraintSet extract_constraints(const Layout& layout);

std::string constraint_set_to_json(const ConstraintSet& cs);
ConstraintSet constraint_set_from_json(const std::string& text);

// LP variable layout: per element i the block (x,y,w,h) at 4i, then W and H.
struct VarMap {
  int n_elements = 0;
  int x(int i) const { return 4 * i; }
  int y(int i) const { return 4 * i + 1; }
  int w(int i) const { return 4 * i + 2; }
  int h(int i) const { return 4 * i + 3; }
  int W() const { return 4 * n_elements; }
  int H() const { return 4 * n_elements + 1; }
  int count() const { return 4 * n_elements + 2; }
};

// One linearized non-overlap row between a generated element and a fixed
// boundary rectangle: the element is pinned to one side of the rectangle.
struct SeparationRow {
  enum class Side { LeftOf, RightOf, Below, Above };
  int element = 0;
  int rect = 0;  // index into ConstraintSet::boundary
  Side side = Side::LeftOf;
};

// Compiles the constraint set into the layout LP: box bounds on every
// variable, eps-range rows per target value, equality rows per adjacency
// edge, world rows x+w <= hi and y+h <= hi per element, W/H defined from the
// last element of a deterministic Kahn topological order (smallest-index
// tie-break) of each adjacency subgraph, objective min W + H.
lp::LinearProgram formulate(const ConstraintSet& cs,
                            const std::vector<SeparationRow>& separations = {});

// Filtering applied to model samples: drops self edges, duplicates,
// out-of-range indices, and adjacency edges that close a cycle (scanning in
// generation order, so the newest offender of each cycle goes). Idempotent.
struct RemovedEdge {
  EdgeKind kind;
  IndexPair edge;
  std::string reason;
};
std::pair<ConstraintSet, std::vector<RemovedEdge>> filter_constraints(const ConstraintSet& cs);

enum class RejectReason {
  None,
  EmptyConstraintSet,
  Infeasible,
  Stalled,
  DegenerateWidth,
  DegenerateHeight,
  PostViolation,
  BoundaryOverlap,
};
const char* reject_reason_name(RejectReason r);

struct OptimizeResult {
  bool accepted = false;
  RejectReason reason = RejectReason::None;
  Layout layout;        // valid iff accepted
  double W = 0, H = 0;  // solved bounding extents (floor plan)
  lp::Solution solution;
};

// formulate -> solve -> post-validate. Furniture sets skip the LP and use
// the targets directly as elements. Boundary sets get per-pair separation
// rows chosen from a draft solve, then a re-solve.
OptimizeResult optimize(const ConstraintSet& cs);

}  // namespace layoutgen
