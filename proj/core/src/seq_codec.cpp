#include "layoutgen/seq_codec.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

namespace layoutgen {

std::vector<int> order_elements(const Layout& layout) {
  std::vector<int> order(layout.elements.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const Element& ea = layout.elements[a];
    const Element& eb = layout.elements[b];
    if (ea.x != eb.x) return ea.x < eb.x;
    if (ea.y != eb.y) return ea.y < eb.y;
    if (ea.w != eb.w) return ea.w < eb.w;
    if (ea.h != eb.h) return ea.h < eb.h;
    return ea.type < eb.type;
  });
  return order;
}

std::vector<ElementConstraint> constraints_of(const Layout& layout) {
  const Quantizer cq = Quantizer::coords();
  const Quantizer aq = Quantizer::angle();
  std::vector<ElementConstraint> cs;
  for (int idx : order_elements(layout)) {
    const Element& e = layout.elements[idx];
    ElementConstraint c;
    c.type = e.type;
    if (layout.mode == LayoutMode::FloorPlan) {
      c.geom = {cq.quantize(e.w), cq.quantize(e.h)};
    } else {
      c.geom = {cq.quantize(e.x), cq.quantize(e.y), cq.quantize(e.w), cq.quantize(e.h),
                aq.quantize(e.alpha.value_or(0.0))};
    }
    cs.push_back(std::move(c));
  }
  return cs;
}

TokenSequence encode_constraints(const std::vector<ElementConstraint>& cs,
                                 const CodecConfig& codec) {
  const int k = codec.arity();
  const size_t len = cs.size() * k + 1;
  if (len > static_cast<size_t>(codec.max_element_tokens))
    throw CapacityError("element sequence of " + std::to_string(len) +
                        " tokens exceeds the cap of " +
                        std::to_string(codec.max_element_tokens));
  TokenSequence seq;
  for (const ElementConstraint& c : cs) {
    if (c.type < 0 || c.type >= codec.n_types)
      throw RangeError("constraint type id outside the schema");
    if (static_cast<int>(c.geom.size()) != k - 1)
      throw RangeError("constraint tuple arity mismatch");
    seq.push(codec.type_token(c.type), 0);
    for (int slot = 1; slot < k; ++slot) {
      int bin = c.geom[slot - 1];
      if (bin < 0 || bin >= codec.slot_levels(slot))
        throw RangeError("quantized value outside slot range");
      seq.push(bin, slot);
    }
  }
  seq.push(codec.stop_id(), 0);
  return seq;
}

TokenSequence encode_elements(const Layout& layout, const CodecConfig& codec) {
  return encode_constraints(constraints_of(layout), codec);
}

std::vector<ElementConstraint> decode_elements(const TokenSequence& seq,
                                               const CodecConfig& codec) {
  const int k = codec.arity();
  std::vector<ElementConstraint> cs;
  ElementConstraint cur;
  int slot = 0;
  for (size_t i = 0; i < seq.values.size(); ++i) {
    const int tok = seq.values[i];
    if (tok == codec.stop_id()) {
      if (slot != 0)
        throw DecodeError("stop token inside a constraint tuple", i);
      if (i + 1 != seq.values.size())
        throw DecodeError("tokens after stop", i + 1);
      return cs;
    }
    if (slot == 0) {
      if (!codec.is_type_token(tok))
        throw DecodeError("expected a type token", i);
      cur = ElementConstraint{codec.type_from_token(tok), {}};
    } else {
      if (tok < 0 || tok >= codec.slot_levels(slot))
        throw DecodeError("value bin outside slot range", i);
      cur.geom.push_back(tok);
    }
    if (++slot == k) {
      cs.push_back(std::move(cur));
      slot = 0;
    }
  }
  throw DecodeError("sequence missing stop token", seq.values.size());
}

TokenSequence encode_edge_list(std::vector<Edge> edges, EdgeKind kind, bool shortened,
                               int n_elements, int max_tokens) {
  const EdgeVocab ev{n_elements};
  std::erase_if(edges, [&](const Edge& e) { return e.kind != kind; });
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.src != b.src) return a.src < b.src;
    return a.dst < b.dst;
  });
  for (const Edge& e : edges)
    if (e.src < 0 || e.src >= n_elements || e.dst < 0 || e.dst >= n_elements)
      throw RangeError("edge index outside the element list");

  TokenSequence seq;
  if (!shortened) {
    for (const Edge& e : edges) {
      seq.push(e.src, 0);
      seq.push(e.dst, 1);
    }
  } else {
    size_t i = 0;
    while (i < edges.size()) {
      const int src = edges[i].src;
      seq.push(src, 0);
      while (i < edges.size() && edges[i].src == src) {
        seq.push(edges[i].dst, 1);
        ++i;
      }
      seq.push(ev.group_id(), 0);
    }
  }
  seq.push(ev.stop_id(), 0);
  if (seq.size() > static_cast<size_t>(max_tokens))
    throw CapacityError("edge sequence of " + std::to_string(seq.size()) +
                        " tokens exceeds the cap of " + std::to_string(max_tokens));
  return seq;
}

TokenSequence encode_edges(const Layout& layout, EdgeKind kind, bool shortened) {
  return encode_edge_list(layout.edges, kind, shortened,
                          static_cast<int>(layout.elements.size()));
}

std::vector<Edge> decode_edges(const std::vector<int>& tokens, EdgeKind kind,
                               bool shortened, int n_elements) {
  const EdgeVocab ev{n_elements};
  std::vector<Edge> edges;

  if (!shortened) {
    int src = -1;
    for (size_t i = 0; i < tokens.size(); ++i) {
      const int tok = tokens[i];
      if (tok == ev.stop_id()) {
        if (src >= 0) throw DecodeError("dangling source before stop", i);
        if (i + 1 != tokens.size()) throw DecodeError("tokens after stop", i + 1);
        return edges;
      }
      if (tok == ev.group_id())
        throw DecodeError("group token in a plain edge sequence", i);
      if (tok < 0 || tok >= n_elements)
        throw DecodeError("element index out of range", i);
      if (src < 0) {
        src = tok;
      } else {
        if (tok == src) throw DecodeError("self-edge", i);
        edges.push_back({src, tok, kind});
        src = -1;
      }
    }
    throw DecodeError("sequence missing stop token", tokens.size());
  }

  int src = -1;
  int group_targets = 0;
  for (size_t i = 0; i < tokens.size(); ++i) {
    const int tok = tokens[i];
    if (tok == ev.stop_id()) {
      if (src >= 0) throw DecodeError("unterminated group before stop", i);
      if (i + 1 != tokens.size()) throw DecodeError("tokens after stop", i + 1);
      return edges;
    }
    if (tok == ev.group_id()) {
      if (src < 0) throw DecodeError("group end without an open group", i);
      if (group_targets == 0) throw DecodeError("dangling source with no targets", i);
      src = -1;
      continue;
    }
    if (tok < 0 || tok >= n_elements)
      throw DecodeError("element index out of range", i);
    if (src < 0) {
      src = tok;
      group_targets = 0;
    } else {
      if (tok == src) throw DecodeError("self-edge", i);
      edges.push_back({src, tok, kind});
      ++group_targets;
    }
  }
  throw DecodeError("sequence missing stop token", tokens.size());
}

TokenSequence encode_tuples(const std::vector<std::pair<int, std::vector<int>>>& tuples,
                            int arity, const CodecConfig& codec) {
  TokenSequence seq;
  for (const auto& [type, geom] : tuples) {
    if (type < 0 || type >= codec.n_types)
      throw RangeError("tuple type id outside the schema");
    if (static_cast<int>(geom.size()) != arity - 1)
      throw RangeError("tuple arity mismatch");
    seq.push(codec.type_token(type), 0);
    for (int slot = 1; slot < arity; ++slot) {
      if (geom[slot - 1] < 0 || geom[slot - 1] >= codec.value_levels())
        throw RangeError("tuple bin outside value range");
      seq.push(geom[slot - 1], slot);
    }
  }
  seq.push(codec.stop_id(), 0);
  return seq;
}

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void put_u16(std::ofstream& out, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<char*>(b), 2);
}

uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t get_u16(std::ifstream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

}  // namespace

void write_token_cache(const std::string& path, const std::vector<TokenSequence>& seqs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open '" + path + "' for writing", 0);
  out.write("LGSQ", 4);
  put_u32(out, 1);
  put_u32(out, static_cast<uint32_t>(seqs.size()));
  for (const TokenSequence& s : seqs) {
    put_u32(out, static_cast<uint32_t>(s.size()));
    for (size_t i = 0; i < s.size(); ++i) {
      put_u16(out, static_cast<uint16_t>(s.values[i]));
      put_u16(out, static_cast<uint16_t>(s.positions[i]));
      put_u16(out, static_cast<uint16_t>(s.types[i]));
    }
  }
}

std::vector<TokenSequence> read_token_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'", 0);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "LGSQ") throw LoadError("bad token cache magic", 0);
  if (get_u32(in) != 1) throw LoadError("unsupported token cache version", 0);
  const uint32_t n = get_u32(in);
  std::vector<TokenSequence> seqs(n);
  for (uint32_t r = 0; r < n; ++r) {
    const uint32_t len = get_u32(in);
    for (uint32_t i = 0; i < len; ++i) {
      int v = get_u16(in);
      int p = get_u16(in);
      int t = get_u16(in);
      seqs[r].values.push_back(v);
      seqs[r].positions.push_back(p);
      seqs[r].types.push_back(t);
    }
    if (!in) throw LoadError("truncated token cache", r + 1);
  }
  return seqs;
}

}  // namespace layoutgen
