#include "layoutgen/layout_json.hpp"

#include <fstream>

#include "json.hpp"

namespace layoutgen {

using nlohmann::json;

std::string layout_to_json(const Layout& layout) {
  json j;
  j["mode"] = layout.mode == LayoutMode::FloorPlan ? "floorplan" : "furniture";
  json types = json::array();
  for (const auto& t : layout.schema.types) types.push_back(t.name);
  j["types"] = types;
  json elems = json::array();
  for (const Element& e : layout.elements) {
    json je = {{"t", e.type}, {"x", e.x}, {"y", e.y}, {"w", e.w}, {"h", e.h}};
    if (e.alpha) je["a"] = *e.alpha;
    elems.push_back(std::move(je));
  }
  j["elements"] = std::move(elems);
  json edges = json::array();
  for (const Edge& e : layout.edges)
    edges.push_back({{"i", e.src}, {"j", e.dst}, {"k", edge_kind_name(e.kind)}});
  j["edges"] = std::move(edges);
  return j.dump();
}

namespace {

Layout parse_layout(const json& j) {
  Layout layout;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode == "floorplan")
    layout.mode = LayoutMode::FloorPlan;
  else if (mode == "furniture")
    layout.mode = LayoutMode::Furniture;
  else
    throw RangeError("unknown layout mode '" + mode + "'");

  layout.schema.mode = layout.mode;
  int id = 0;
  for (const auto& name : j.at("types"))
    layout.schema.types.push_back({id++, name.get<std::string>()});
  layout.schema.exterior_id =
      layout.mode == LayoutMode::FloorPlan ? layout.schema.id_of("exterior") : -1;

  for (const auto& je : j.at("elements")) {
    Element e;
    e.type = je.at("t").get<int>();
    if (e.type < 0 || e.type >= layout.schema.count())
      throw RangeError("element type id out of schema range");
    e.x = je.at("x").get<double>();
    e.y = je.at("y").get<double>();
    e.w = je.at("w").get<double>();
    e.h = je.at("h").get<double>();
    if (je.contains("a")) e.alpha = je.at("a").get<double>();
    if (layout.mode == LayoutMode::Furniture && !e.alpha)
      throw RangeError("furniture element missing alpha");
    if (layout.mode == LayoutMode::FloorPlan && e.alpha)
      throw RangeError("floor-plan element carries alpha");
    layout.elements.push_back(e);
  }
  const int n = static_cast<int>(layout.elements.size());
  for (const auto& je : j.at("edges")) {
    Edge e;
    e.src = je.at("i").get<int>();
    e.dst = je.at("j").get<int>();
    e.kind = edge_kind_from_name(je.at("k").get<std::string>());
    if (e.src < 0 || e.src >= n || e.dst < 0 || e.dst >= n || e.src == e.dst)
      throw RangeError("edge references invalid element index");
    layout.edges.push_back(e);
  }
  return layout;
}

}  // namespace

Layout layout_from_json(const std::string& text) {
  return parse_layout(json::parse(text));
}

void save_corpus(const std::vector<Layout>& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open '" + path + "' for writing", 0);
  for (const Layout& l : corpus) out << layout_to_json(l) << "\n";
}

std::vector<Layout> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'", 0);
  std::vector<Layout> corpus;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      corpus.push_back(layout_from_json(line));
    } catch (const std::exception& e) {
      throw LoadError(std::string("malformed layout record: ") + e.what(), lineno);
    }
  }
  return corpus;
}

}  // namespace layoutgen
