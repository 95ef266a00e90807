#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "layoutgen/layout.hpp"

namespace layoutgen {

// Soft target tuple for one element: the type id plus quantized geometry
// bins. Floor plan: (tau, w, h); furniture: (tau, x, y, w, h, alpha).
struct ElementConstraint {
  int type = 0;
  std::vector<int> geom;  // arity() - 1 quantized bins

  bool operator==(const ElementConstraint&) const = default;
};

// Flattened token stream with per-token position (1-based) and type channels.
struct TokenSequence {
  std::vector<int> values;
  std::vector<int> positions;
  std::vector<int> types;

  size_t size() const { return values.size(); }
  void push(int value, int type) {
    values.push_back(value);
    types.push_back(type);
    positions.push_back(static_cast<int>(values.size()));
  }
  bool operator==(const TokenSequence&) const = default;
};

// One shared token id space: value bins [0, 64), then type ids, then the
// special tokens. Edge sequences use a separate pointer id space (see below).
struct CodecConfig {
  LayoutMode mode = LayoutMode::FloorPlan;
  int n_types = 7;
  int max_element_tokens = 256;
  int max_edge_tokens = 512;

  static CodecConfig for_layout(const Layout& l) {
    return CodecConfig{l.mode, l.schema.count(), 256, 512};
  }
  static CodecConfig for_schema(const TypeSchema& s) {
    return CodecConfig{s.mode, s.count(), 256, 512};
  }

  int arity() const { return mode == LayoutMode::FloorPlan ? 3 : 6; }
  int value_levels() const { return 64; }
  int type_token(int type_id) const { return value_levels() + type_id; }
  int type_from_token(int token) const { return token - value_levels(); }
  bool is_type_token(int token) const {
    return token >= value_levels() && token < value_levels() + n_types;
  }
  int start_id() const { return value_levels() + n_types; }
  int stop_id() const { return value_levels() + n_types + 1; }
  int group_id() const { return value_levels() + n_types + 2; }
  int pad_id() const { return value_levels() + n_types + 3; }
  int vocab_size() const { return value_levels() + n_types + 4; }

  // Valid bin count for a geometry slot (1-based within the tuple); the
  // furniture alpha slot is 5-bit.
  int slot_levels(int slot) const {
    return (mode == LayoutMode::Furniture && slot == 5) ? 32 : 64;
  }
};

// Pointer id space of an edge sequence over M elements: ids 0..M-1 point at
// elements, M is STOP and M+1 is GROUP_END, matching the pointer softmax
// support of M + 2 candidates.
struct EdgeVocab {
  int n_elements = 0;
  int stop_id() const { return n_elements; }
  int group_id() const { return n_elements + 1; }
  int support() const { return n_elements + 2; }
};

// Stable canonical element order: by (x, y, w, h, type id). Returns the
// permutation `order` with order[rank] = original index.
std::vector<int> order_elements(const Layout& layout);

// Quantized constraint tuples of a layout's elements, in canonical order.
std::vector<ElementConstraint> constraints_of(const Layout& layout);

// Element sequence: per element a type token then geometry bins, terminated
// by STOP. Length is arity * M + 1; types cycle 0..arity-1 with STOP at 0.
TokenSequence encode_constraints(const std::vector<ElementConstraint>& cs,
                                 const CodecConfig& codec);
TokenSequence encode_elements(const Layout& layout, const CodecConfig& codec);
std::vector<ElementConstraint> decode_elements(const TokenSequence& seq,
                                               const CodecConfig& codec);

// Edge sequences in the pointer id space. Plain style emits (src, dst) pairs;
// shortened style emits each source once followed by its targets and a
// GROUP_END. Both are terminated by STOP. Adjacency edges use the shortened
// style in production.
TokenSequence encode_edges(const Layout& layout, EdgeKind kind, bool shortened);
TokenSequence encode_edge_list(std::vector<Edge> edges, EdgeKind kind, bool shortened,
                               int n_elements, int max_tokens = 512);
std::vector<Edge> decode_edges(const std::vector<int>& tokens, EdgeKind kind,
                               bool shortened, int n_elements);

inline bool edge_kind_shortened(EdgeKind k) {
  return edge_group(k) == EdgeGroup::Constraining;
}

// Generic tuple encoding used for condition sequences (e.g. boundary
// rectangles as (tau, x, y, w, h) 5-tuples).
TokenSequence encode_tuples(const std::vector<std::pair<int, std::vector<int>>>& tuples,
                            int arity, const CodecConfig& codec);

// Token cache file: "LGSQ", u32 version, u32 record count, then per record a
// u32 length followed by length x (u16 value, u16 position, u16 type),
// little-endian throughout.
void write_token_cache(const std::string& path, const std::vector<TokenSequence>& seqs);
std::vector<TokenSequence> read_token_cache(const std::string& path);

}  // namespace layoutgen
