#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "layoutgen/layout.hpp"

namespace layoutgen {

// Normative single-layout document:
//   { "mode": "floorplan"|"furniture",
//     "types": ["exterior", ...],
//     "elements": [{"t":int,"x":f,"y":f,"w":f,"h":f,"a":f?}, ...],
//     "edges": [{"i":int,"j":int,"k":"hadj"|"vadj"|"wall"|"door"}, ...] }
// Corpora are newline-delimited records of this document.
std::string layout_to_json(const Layout& layout);
Layout layout_from_json(const std::string& text);

// Newline-delimited corpus IO. load_corpus throws LoadError with the 1-based
// line number of the first malformed record. An empty file is an empty corpus.
void save_corpus(const std::vector<Layout>& corpus, const std::string& path);
std::vector<Layout> load_corpus(const std::string& path);

}  // namespace layoutgen
