#pragma once

#include <cstdint>
#include <string>

#include "structure.hpp"

namespace gi {

struct GenConfig {
    uint64_t seed = 0;
    uint32_t max_array_count = 16;
    uint32_t max_varlen = 64;
    bool use_relations = true;  // false: ignore constraints (ablation mode)
};

// Draws one input from the grammar. Free counts and lengths are chosen first
// (restricted to what their control fields can encode), then control-field
// bytes are back-filled from the relations. The result is self-checked
// against the grammar before being returned; throws if no valid input can be
// produced.
std::string generate(const StructureDoc& doc, const GenConfig& cfg);

}  // namespace gi
