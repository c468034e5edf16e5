#pragma once

#include <map>
#include <string>
#include <vector>

#include "trace_model.hpp"

namespace gi {

// A distinct taint interval together with every (instruction, context) pair
// that consumed it.
struct Value {
    ByteInterval iv;
    std::vector<UsePair> uses;  // sorted, unique
};

// Values whose use sets are set-equal. The use set is the field's source
// index (SI); id numbering follows first-occurrence offset order.
struct Field {
    std::string id;
    std::vector<UsePair> si;
    std::vector<ByteInterval> values;  // sorted by (start, longer-first)
    bool gap = false;                  // synthetic field for never-used bytes
};

struct FieldTraceEntry {
    uint32_t addr;
    uint32_t ctx;
    uint32_t field;  // index into the field list
};

std::vector<Value> extract_values(const TaintTrace& trace);
std::vector<Field> group_fields(const std::vector<Value>& values);

// Sequence of field indices for a flat tiling of [0, input_length) by the
// fields' own value intervals. Throws on gaps or overlaps.
std::vector<uint32_t> field_sequence(const std::vector<Field>& fields, uint32_t input_length);

std::vector<FieldTraceEntry> make_field_trace(const TaintTrace& trace,
                                              const std::vector<Field>& fields);

// Transitive co-occurrence closure: fields sharing at least one instruction
// address fall into one class; each field maps to the union of its class's
// SIs. Returned vector is indexed like `fields`.
std::vector<std::vector<UsePair>> compute_new_si(const std::vector<Field>& fields);

// Class representative per field under the same closure (index of the
// smallest member), for grouping decisions.
std::vector<uint32_t> co_occurrence_classes(const std::vector<Field>& fields);

std::string field_bytes(const TaintTrace& trace, const ByteInterval& iv);
std::string dump_fields(const TaintTrace& trace, const std::vector<Field>& fields);

}  // namespace gi
