#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cdg.hpp"
#include "structure.hpp"

namespace gi {

// Integer reading of a field's bytes: ASCII decimal when every byte is a
// digit, otherwise little-endian binary (up to 8 bytes).
std::optional<int64_t> int_value(const std::string& bytes);

// Per-field dependence sources from the projected ICDG (direct or
// transitive), using each field's instruction addresses.
std::vector<std::vector<uint32_t>> semantic_sources(const StructureDoc& doc,
                                                    const Icdg& icdg,
                                                    const CfgPackage& cfg,
                                                    const TaintTrace& trace);

// Mines size/terminator/count/offset/record_type/modulus/product relations
// against the witness instance tree, stores them in doc.relations and
// attaches them to the owning nodes' constraints.
void mine_relations(StructureDoc& doc, const std::string& input,
                    const std::vector<std::vector<uint32_t>>& dep_sources);

// Re-evaluates every relation in the document against the witness tree.
bool verify_relations(const StructureDoc& doc, const std::string& input);

}  // namespace gi
