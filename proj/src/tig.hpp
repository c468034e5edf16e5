#pragma once

#include <functional>
#include <string>
#include <vector>

#include "field_partition.hpp"
#include "trace_model.hpp"

namespace gi {

struct TigNode {
    ByteInterval iv;
    std::vector<UsePair> uses;   // empty for gap nodes and (usually) the root
    bool gap = false;
    std::vector<uint32_t> kids;  // ordered, disjoint, tile the node exactly
};

struct TigTree {
    std::vector<TigNode> nodes;
    uint32_t root = 0;

    const TigNode& at(uint32_t i) const { return nodes[i]; }
};

// A gap-free, overlap-free cover of the whole input, as ordered node ids.
using Frontier = std::vector<uint32_t>;

struct FrontierEntry {
    std::string key;  // "ROOT" or the repeating SI's rendering
    uint32_t depth;
    uint32_t leftmost;  // start offset of the repeating node (tie-break)
    Frontier nodes;
};

struct FrontierMap {
    std::vector<FrontierEntry> entries;
};

// Containment tree over the distinct intervals: transitive reduction of the
// subset order, gap-filled and overlap-split, rooted at [0, input_length).
TigTree build_tig(const std::vector<Value>& values, uint32_t input_length);

// All frontiers with repeating SIs at every level, topmost first. The
// optional projection maps a node's use set to the grouping key used for
// repetition detection (identity for SI, class-union for New_SI).
using SiProjection = std::function<std::string(const std::vector<UsePair>&)>;
FrontierMap frontiers(const TigTree& tree, const SiProjection& project = nullptr);

// Topmost frontier exposing repetition; coarsest frontier when none does.
Frontier select_frontier(const TigTree& tree, const FrontierMap& map);

std::string tig_dot(const TigTree& tree, const TaintTrace& trace);

}  // namespace gi
