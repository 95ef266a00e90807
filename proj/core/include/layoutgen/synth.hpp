#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutgen/layout.hpp"
#include "layoutgen/rng.hpp"

namespace layoutgen {

// Procedural corpus generator configuration. Floor plans are guillotine
// partitions of a grid-aligned interior rectangle, framed by four
// exterior-type strips; furniture layouts are non-overlapping boxes inside a
// room rectangle. All coordinates are integers on the 64-grid.
struct GenConfig {
  uint64_t seed = 0;
  int n_layouts = 100;
  LayoutMode mode = LayoutMode::FloorPlan;

  int count_min = 4;   // interior cells (floor plan) or pieces (furniture)
  int count_max = 10;
  // Minimum element side length in quantized units. The default of 5 keeps
  // reconstruction LPs feasible: with bin-center targets v^C = w + 0.5 and
  // eps = 0.1, an element can shrink below its original size only when
  // 0.9 * (w + 0.5) <= w, i.e. w >= 4.5.
  int min_size = 5;

  std::vector<double> type_weights;  // per schema type; exterior entry ignored
  double wall_prob = 0.35;           // wall between same-type neighbors
  double door_extra_prob = 0.15;     // doors beyond the spanning tree
  double inaccessible_prob = 0.0;    // drop the door of a leaf room

  int outer_min = 40;  // outer bounding box side length range; <= 60 keeps
  int outer_max = 58;  // optimized layouts inside [0, 64]

  int piece_max = 12;  // furniture only: max piece side length

  void validate() const;  // throws GenError on unsatisfiable combinations
};

GenConfig parse_gen_config(const std::string& path);  // documented key = value file

Layout generate_floorplan(const GenConfig& cfg, Rng& rng);
Layout generate_furniture(const GenConfig& cfg, Rng& rng);

// n_layouts layouts from per-index RNG streams split off cfg.seed.
std::vector<Layout> generate_corpus(const GenConfig& cfg, int threads = 1);

struct CorpusSplits {
  std::vector<Layout> train, val, test;  // 90/5/5 by index
};
CorpusSplits split_corpus(const std::vector<Layout>& corpus);

}  // namespace layoutgen
