#pragma once

#include <map>
#include <string>
#include <vector>

#include "trace_model.hpp"

namespace gi {

// Interprocedural control-dependence graph over basic blocks. deps[b] lists
// the guard blocks whose branch decides whether b executes.
struct Icdg {
    std::vector<std::string> blocks;
    std::map<std::string, uint32_t> index;
    std::vector<std::vector<uint32_t>> deps;

    uint32_t index_of(const std::string& id) const;
};

// Immediate post-dominators for one function, against a virtual exit (the
// empty string). Blocks unreachable from the entry are omitted.
std::map<std::string, std::string> immediate_postdominators(const CfgPackage& cfg,
                                                            const std::string& function);

// Intra-procedural control dependence per function, plus call-site splicing:
// a callee block with no intra-procedural guards inherits the guards of the
// call sites reaching it (to a fixpoint across call chains).
Icdg compute_icdg(const CfgPackage& cfg);

// Blocks annotated with each field: the blocks whose instruction lists
// intersect the field's instruction addresses (context-free).
std::vector<std::vector<uint32_t>> annotate_fields(
    const Icdg& g, const CfgPackage& cfg,
    const std::vector<std::vector<std::string>>& field_addrs);

// Projection to fields: sources[f] = fields annotating any block reachable
// from f's blocks along dependence edges (direct or transitive).
std::vector<std::vector<uint32_t>> project_graph(
    const Icdg& g, const std::vector<std::vector<uint32_t>>& field_blocks,
    size_t field_count);

std::string icdg_dot(const Icdg& g, const std::vector<std::vector<uint32_t>>* field_blocks,
                     const std::vector<std::string>* field_ids);

}  // namespace gi
