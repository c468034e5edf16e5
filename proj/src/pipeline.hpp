#pragma once

#include <string>
#include <vector>

#include "cdg.hpp"
#include "semantics.hpp"
#include "structure.hpp"
#include "tig.hpp"

namespace gi {

// Frontier nodes turned into the working field set: non-gap nodes grouped by
// use-set equality, gap nodes grouped by length.
struct FrontierFields {
    std::vector<Field> fields;
    std::vector<std::vector<std::string>> values;
    std::vector<Token> tokens;
    std::vector<uint32_t> seq;
    std::vector<ByteInterval> intervals;
};

FrontierFields fields_from_frontier(const TigTree& tree, const Frontier& frontier,
                                    const TaintTrace& trace);

struct StageTimes {
    std::vector<std::pair<std::string, double>> stages;  // name, seconds

    double of(const std::string& name) const;
};

struct AnalysisResult {
    TigTree tig;
    StructureDoc doc;
    Icdg icdg;
    std::vector<std::vector<uint32_t>> field_blocks;
    StageTimes times;
};

// Full pipeline: partition (values, TIG, frontier, fields), structure
// (tokens, folding, repair), dependence (ICDG), semantics (relations).
AnalysisResult analyze(const TaintTrace& trace, const CfgPackage& cfg);

}  // namespace gi
