#include "layoutgen/layout_opt.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "json.hpp"

namespace layoutgen {

using nlohmann::json;

ConstraintSet constraint_set_from_bins(const TypeSchema& schema, LayoutMode mode,
                                       const std::vector<ElementConstraint>& bins) {
  const Quantizer cq = Quantizer::coords();
  const Quantizer aq = Quantizer::angle();
  ConstraintSet cs;
  cs.mode = mode;
  cs.schema = schema;
  for (const ElementConstraint& c : bins) {
    ElementTarget t;
    t.type = c.type;
    for (size_t s = 0; s < c.geom.size(); ++s) {
      bool is_alpha = mode == LayoutMode::Furniture && s == c.geom.size() - 1;
      t.values.push_back(is_alpha ? aq.dequantize(c.geom[s]) : cq.dequantize(c.geom[s]));
    }
    cs.constraints.push_back(std::move(t));
  }
  return cs;
}

ConstraintSet extract_constraints(const Layout& layout) {
  ConstraintSet cs = constraint_set_from_bins(layout.schema, layout.mode,
                                              constraints_of(layout));
  // constraints_of() walks elements in canonical order; remap edges the same way.
  std::vector<int> order = order_elements(layout);
  std::vector<int> rank(order.size());
  for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
  for (const Edge& e : layout.edges) {
    IndexPair p{rank[e.src], rank[e.dst]};
    switch (e.kind) {
      case EdgeKind::HorizontalAdjacency: cs.hadj.push_back(p); break;
      case EdgeKind::VerticalAdjacency: cs.vadj.push_back(p); break;
      case EdgeKind::Wall: cs.wall.push_back(p); break;
      case EdgeKind::Door: cs.door.push_back(p); break;
    }
  }
  auto sort_pairs = [](std::vector<IndexPair>& v) { std::sort(v.begin(), v.end()); };
  sort_pairs(cs.hadj);
  sort_pairs(cs.vadj);
  sort_pairs(cs.wall);
  sort_pairs(cs.door);
  return cs;
}

std::string constraint_set_to_json(const ConstraintSet& cs) {
  json j;
  j["mode"] = cs.mode == LayoutMode::FloorPlan ? "floorplan" : "furniture";
  json types = json::array();
  for (const auto& t : cs.schema.types) types.push_back(t.name);
  j["types"] = types;
  json cons = json::array();
  for (const ElementTarget& t : cs.constraints)
    cons.push_back({{"t", t.type}, {"v", t.values}});
  j["constraints"] = std::move(cons);
  auto pairs = [](const std::vector<IndexPair>& v) {
    json a = json::array();
    for (const auto& [i, k] : v) a.push_back({i, k});
    return a;
  };
  j["hadj"] = pairs(cs.hadj);
  j["vadj"] = pairs(cs.vadj);
  j["wall"] = pairs(cs.wall);
  j["door"] = pairs(cs.door);
  j["epsilon"] = cs.epsilon;
  if (!cs.boundary.empty()) {
    json b = json::array();
    for (const Element& e : cs.boundary)
      b.push_back({{"t", e.type}, {"x", e.x}, {"y", e.y}, {"w", e.w}, {"h", e.h}});
    j["boundary"] = std::move(b);
  }
  return j.dump();
}

ConstraintSet constraint_set_from_json(const std::string& text) {
  json j = json::parse(text);
  ConstraintSet cs;
  const std::string mode = j.at("mode").get<std::string>();
  cs.mode = mode == "furniture" ? LayoutMode::Furniture : LayoutMode::FloorPlan;
  cs.schema.mode = cs.mode;
  int id = 0;
  for (const auto& name : j.at("types"))
    cs.schema.types.push_back({id++, name.get<std::string>()});
  cs.schema.exterior_id =
      cs.mode == LayoutMode::FloorPlan ? cs.schema.id_of("exterior") : -1;
  for (const auto& jc : j.at("constraints")) {
    ElementTarget t;
    t.type = jc.at("t").get<int>();
    for (const auto& v : jc.at("v")) t.values.push_back(v.get<double>());
    cs.constraints.push_back(std::move(t));
  }
  auto pairs = [&](const char* key, std::vector<IndexPair>& out) {
    if (!j.contains(key)) return;
    for (const auto& p : j.at(key)) out.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
  };
  pairs("hadj", cs.hadj);
  pairs("vadj", cs.vadj);
  pairs("wall", cs.wall);
  pairs("door", cs.door);
  if (j.contains("epsilon")) cs.epsilon = j.at("epsilon").get<double>();
  if (j.contains("boundary"))
    for (const auto& jb : j.at("boundary")) {
      Element e;
      e.type = jb.at("t").get<int>();
      e.x = jb.at("x").get<double>();
      e.y = jb.at("y").get<double>();
      e.w = jb.at("w").get<double>();
      e.h = jb.at("h").get<double>();
      cs.boundary.push_back(e);
    }
  return cs;
}

namespace {

// Kahn topological order with a smallest-index tie-break; throws on cycles.
// Every element is a node, including isolated ones.
std::vector<int> topo_order(int n, const std::vector<IndexPair>& edges) {
  std::vector<std::vector<int>> succ(n);
  std::vector<int> indeg(n, 0);
  for (const auto& [i, j] : edges) {
    succ[i].push_back(j);
    ++indeg[j];
  }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    int u = ready.top();
    ready.pop();
    order.push_back(u);
    for (int v : succ[u])
      if (--indeg[v] == 0) ready.push(v);
  }
  if (static_cast<int>(order.size()) != n)
    throw FormulationError(FormulationError::Kind::CyclicAdjacency,
                           "adjacency edges contain a cycle");
  return order;
}

void check_edges(const std::vector<IndexPair>& edges, int n, const char* what) {
  for (const auto& [i, j] : edges)
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw RangeError(std::string(what) + " edge references an invalid element index");
}

}  // namespace

lp::LinearProgram formulate(const ConstraintSet& cs,
                            const std::vector<SeparationRow>& separations) {
  if (cs.constraints.empty())
    throw FormulationError(FormulationError::Kind::EmptyConstraintSet,
                           "constraint set has no elements");
  const int n = cs.size();
  check_edges(cs.hadj, n, "horizontal adjacency");
  check_edges(cs.vadj, n, "vertical adjacency");

  VarMap vm{n};
  lp::LinearProgram lp;
  lp.n_vars = vm.count();
  lp.objective.assign(lp.n_vars, 0.0);
  lp.objective[vm.W()] = 1.0;
  lp.objective[vm.H()] = 1.0;
  lp.lo.assign(lp.n_vars, cs.bound_lo);
  lp.hi.assign(lp.n_vars, cs.bound_hi);

  auto row = [&](lp::Relation rel, double rhs) {
    lp.rows.push_back({std::vector<double>(lp.n_vars, 0.0), rel, rhs});
    return &lp.rows.back();
  };

  // eps-range rows per target value: v^C (1 - eps) <= v <= v^C (1 + eps).
  for (int i = 0; i < n; ++i) {
    const ElementTarget& t = cs.constraints[i];
    if (t.values.size() != 2)
      throw RangeError("floor-plan target tuple must carry (w, h)");
    const int var[2] = {vm.w(i), vm.h(i)};
    for (int s = 0; s < 2; ++s) {
      lp::Row* r = row(lp::Relation::GE, t.values[s] * (1.0 - cs.epsilon));
      r->coeffs[var[s]] = 1.0;
      r = row(lp::Relation::LE, t.values[s] * (1.0 + cs.epsilon));
      r->coeffs[var[s]] = 1.0;
    }
  }

  // Adjacency equalities.
  for (const auto& [i, j] : cs.hadj) {
    lp::Row* r = row(lp::Relation::EQ, 0.0);
    r->coeffs[vm.x(i)] = 1.0;
    r->coeffs[vm.w(i)] = 1.0;
    r->coeffs[vm.x(j)] = -1.0;
  }
  for (const auto& [i, j] : cs.vadj) {
    lp::Row* r = row(lp::Relation::EQ, 0.0);
    r->coeffs[vm.y(i)] = 1.0;
    r->coeffs[vm.h(i)] = 1.0;
    r->coeffs[vm.y(j)] = -1.0;
  }

  // World rows keep element extents inside the box.
  for (int i = 0; i < n; ++i) {
    lp::Row* r = row(lp::Relation::LE, cs.bound_hi);
    r->coeffs[vm.x(i)] = 1.0;
    r->coeffs[vm.w(i)] = 1.0;
    r = row(lp::Relation::LE, cs.bound_hi);
    r->coeffs[vm.y(i)] = 1.0;
    r->coeffs[vm.h(i)] = 1.0;
  }

  // W := x_m + w_m for the last element of the horizontal topological order;
  // H analogously.
  {
    const int m = topo_order(n, cs.hadj).back();
    lp::Row* r = row(lp::Relation::EQ, 0.0);
    r->coeffs[vm.W()] = 1.0;
    r->coeffs[vm.x(m)] = -1.0;
    r->coeffs[vm.w(m)] = -1.0;
  }
  {
    const int m = topo_order(n, cs.vadj).back();
    lp::Row* r = row(lp::Relation::EQ, 0.0);
    r->coeffs[vm.H()] = 1.0;
    r->coeffs[vm.y(m)] = -1.0;
    r->coeffs[vm.h(m)] = -1.0;
  }

  // Boundary separation rows, one pre-chosen direction per pair.
  for (const SeparationRow& s : separations) {
    const Element& b = cs.boundary.at(s.rect);
    lp::Row* r = nullptr;
    switch (s.side) {
      case SeparationRow::Side::LeftOf:  // x_i + w_i <= b.x
        r = row(lp::Relation::LE, b.x);
        r->coeffs[vm.x(s.element)] = 1.0;
        r->coeffs[vm.w(s.element)] = 1.0;
        break;
      case SeparationRow::Side::RightOf:  // x_i >= b.x + b.w
        r = row(lp::Relation::GE, b.x2());
        r->coeffs[vm.x(s.element)] = 1.0;
        break;
      case SeparationRow::Side::Below:  // y_i + h_i <= b.y
        r = row(lp::Relation::LE, b.y);
        r->coeffs[vm.y(s.element)] = 1.0;
        r->coeffs[vm.h(s.element)] = 1.0;
        break;
      case SeparationRow::Side::Above:  // y_i >= b.y + b.h
        r = row(lp::Relation::GE, b.y2());
        r->coeffs[vm.y(s.element)] = 1.0;
        break;
    }
  }

  return lp;
}

std::pair<ConstraintSet, std::vector<RemovedEdge>> filter_constraints(const ConstraintSet& cs) {
  ConstraintSet out = cs;
  std::vector<RemovedEdge> removed;
  const int n = cs.size();

  auto basic_filter = [&](std::vector<IndexPair>& edges, EdgeKind kind) {
    std::vector<IndexPair> kept;
    std::set<IndexPair> seen;
    for (const IndexPair& e : edges) {
      if (e.first < 0 || e.second < 0 || e.first >= n || e.second >= n) {
        removed.push_back({kind, e, "index out of range"});
        continue;
      }
      if (e.first == e.second) {
        removed.push_back({kind, e, "self-edge"});
        continue;
      }
      if (!seen.insert(e).second) {
        removed.push_back({kind, e, "duplicate"});
        continue;
      }
      kept.push_back(e);
    }
    edges = std::move(kept);
  };
  basic_filter(out.hadj, EdgeKind::HorizontalAdjacency);
  basic_filter(out.vadj, EdgeKind::VerticalAdjacency);
  basic_filter(out.wall, EdgeKind::Wall);
  basic_filter(out.door, EdgeKind::Door);

  // Cycle breaking in generation order: an edge whose destination already
  // reaches its source is the newest edge of the cycle and is dropped.
  auto acyclic_filter = [&](std::vector<IndexPair>& edges, EdgeKind kind) {
    std::vector<std::vector<int>> succ(n);
    auto reaches = [&](int from, int to) {
      std::vector<int> stack{from};
      std::vector<uint8_t> seen(n, 0);
      seen[from] = 1;
      while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        if (u == to) return true;
        for (int v : succ[u])
          if (!seen[v]) {
            seen[v] = 1;
            stack.push_back(v);
          }
      }
      return false;
    };
    std::vector<IndexPair> kept;
    for (const IndexPair& e : edges) {
      if (reaches(e.second, e.first)) {
        removed.push_back({kind, e, "closes a cycle"});
        continue;
      }
      succ[e.first].push_back(e.second);
      kept.push_back(e);
    }
    edges = std::move(kept);
  };
  acyclic_filter(out.hadj, EdgeKind::HorizontalAdjacency);
  acyclic_filter(out.vadj, EdgeKind::VerticalAdjacency);

  return {std::move(out), std::move(removed)};
}

const char* reject_reason_name(RejectReason r) {
  switch (r) {
    case RejectReason::None: return "none";
    case RejectReason::EmptyConstraintSet: return "empty-constraint-set";
    case RejectReason::Infeasible: return "infeasible";
    case RejectReason::Stalled: return "solver-stalled";
    case RejectReason::DegenerateWidth: return "degenerate-width";
    case RejectReason::DegenerateHeight: return "degenerate-height";
    case RejectReason::PostViolation: return "post-violation";
    case RejectReason::BoundaryOverlap: return "boundary-overlap";
  }
  return "?";
}

namespace {

OptimizeResult rejected(RejectReason r) {
  OptimizeResult res;
  res.accepted = false;
  res.reason = r;
  return res;
}

OptimizeResult furniture_passthrough(const ConstraintSet& cs) {
  OptimizeResult res;
  res.accepted = true;
  res.layout.mode = LayoutMode::Furniture;
  res.layout.schema = cs.schema;
  for (const ElementTarget& t : cs.constraints) {
    if (t.values.size() != 5) return rejected(RejectReason::PostViolation);
    res.layout.elements.push_back(
        {t.type, t.values[0], t.values[1], t.values[2], t.values[3], t.values[4]});
  }
  return res;
}

double pair_overlap(const Element& a, const Element& b) {
  return std::min(interval_overlap(a.x, a.x2(), b.x, b.x2()),
                  interval_overlap(a.y, a.y2(), b.y, b.y2()));
}

}  // namespace

OptimizeResult optimize(const ConstraintSet& cs) {
  if (cs.constraints.empty()) return rejected(RejectReason::EmptyConstraintSet);
  if (cs.mode == LayoutMode::Furniture) return furniture_passthrough(cs);

  lp::LinearProgram prog;
  try {
    prog = formulate(cs);
  } catch (const FormulationError&) {
    return rejected(RejectReason::Infeasible);
  }

  const VarMap vm{cs.size()};
  std::vector<SeparationRow> separations;
  if (!cs.boundary.empty()) {
    // Draft solve chooses the least-violated separation side per pair; the
    // final solve enforces it. Disjunctive non-overlap is not linear, so this
    // per-pair fixed direction is a heuristic.
    lp::Solution draft = lp::solve(prog);
    if (draft.status == lp::Status::Stalled) return rejected(RejectReason::Stalled);
    if (draft.status != lp::Status::Optimal) return rejected(RejectReason::Infeasible);
    for (int i = 0; i < cs.size(); ++i) {
      Element e{0, draft.values[vm.x(i)], draft.values[vm.y(i)], draft.values[vm.w(i)],
                draft.values[vm.h(i)], {}};
      for (size_t r = 0; r < cs.boundary.size(); ++r) {
        const Element& b = cs.boundary[r];
        // Signed clearance per side; the largest is the cheapest to enforce.
        const double left = b.x - e.x2();
        const double right = e.x - b.x2();
        const double below = b.y - e.y2();
        const double above = e.y - b.y2();
        SeparationRow s{i, static_cast<int>(r), SeparationRow::Side::LeftOf};
        double best = left;
        if (right > best) { best = right; s.side = SeparationRow::Side::RightOf; }
        if (below > best) { best = below; s.side = SeparationRow::Side::Below; }
        if (above > best) { best = above; s.side = SeparationRow::Side::Above; }
        separations.push_back(s);
      }
    }
    prog = formulate(cs, separations);
  }

  lp::Solution sol = lp::solve(prog);
  if (sol.status == lp::Status::Stalled) return rejected(RejectReason::Stalled);
  if (sol.status != lp::Status::Optimal) return rejected(RejectReason::Infeasible);

  OptimizeResult res;
  res.solution = sol;
  res.W = sol.values[vm.W()];
  res.H = sol.values[vm.H()];
  res.layout.mode = LayoutMode::FloorPlan;
  res.layout.schema = cs.schema;
  for (int i = 0; i < cs.size(); ++i)
    res.layout.elements.push_back({cs.constraints[i].type, sol.values[vm.x(i)],
                                   sol.values[vm.y(i)], sol.values[vm.w(i)],
                                   sol.values[vm.h(i)], {}});
  for (const auto& [i, j] : cs.hadj)
    res.layout.edges.push_back({i, j, EdgeKind::HorizontalAdjacency});
  for (const auto& [i, j] : cs.vadj)
    res.layout.edges.push_back({i, j, EdgeKind::VerticalAdjacency});
  for (const auto& [i, j] : cs.wall) res.layout.edges.push_back({i, j, EdgeKind::Wall});
  for (const auto& [i, j] : cs.door) res.layout.edges.push_back({i, j, EdgeKind::Door});

  // Post-validation, independent of solver internals.
  const double tol = 1e-6;
  for (const auto& [i, j] : cs.hadj) {
    const Element& a = res.layout.elements[i];
    const Element& b = res.layout.elements[j];
    if (std::abs(a.x2() - b.x) > tol) return rejected(RejectReason::PostViolation);
  }
  for (const auto& [i, j] : cs.vadj) {
    const Element& a = res.layout.elements[i];
    const Element& b = res.layout.elements[j];
    if (std::abs(a.y2() - b.y) > tol) return rejected(RejectReason::PostViolation);
  }
  for (int i = 0; i < cs.size(); ++i) {
    const ElementTarget& t = cs.constraints[i];
    const Element& e = res.layout.elements[i];
    const double dims[2] = {e.w, e.h};
    for (int s = 0; s < 2; ++s)
      if (dims[s] < t.values[s] * (1.0 - cs.epsilon) - tol ||
          dims[s] > t.values[s] * (1.0 + cs.epsilon) + tol)
        return rejected(RejectReason::PostViolation);
  }
  // The topological-sort W/H only bound one chain; a wider chain elsewhere
  // means the sample degenerated.
  for (const Element& e : res.layout.elements) {
    if (e.x2() > res.W + tol) return rejected(RejectReason::DegenerateWidth);
    if (e.y2() > res.H + tol) return rejected(RejectReason::DegenerateHeight);
  }
  if (!cs.boundary.empty()) {
    for (const Element& e : res.layout.elements)
      for (const Element& b : cs.boundary)
        if (pair_overlap(e, b) > tol) return rejected(RejectReason::BoundaryOverlap);
    // The fixed exterior becomes part of the accepted layout.
    for (const Element& b : cs.boundary) res.layout.elements.push_back(b);
  }
  res.accepted = true;
  return res;
}

}  // namespace layoutgen
