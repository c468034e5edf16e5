#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "field_partition.hpp"
#include "tokens.hpp"

namespace gi {

enum class NodeKind { ATOMIC, RECORD, ARRAY, OPTION };

enum class RelKind { SIZE, TERMINATOR, COUNT, OFFSET, RECORD_TYPE, MODULUS, PRODUCT };

struct Relation {
    RelKind kind;
    std::string target;                // structure node id (A*, S*, F*)
    std::vector<std::string> sources;  // field ids; PRODUCT takes several
    int adjust = 0;                    // 0, -1 or +1 where the equations allow it

    bool operator==(const Relation& o) const = default;
    auto operator<=>(const Relation& o) const = default;
};

struct StructureNode {
    NodeKind kind = NodeKind::ATOMIC;
    std::string id;                 // F* for atomics, else S*/A*/O*
    uint32_t field = 0;             // ATOMIC: index into StructureDoc::fields
    std::vector<uint32_t> kids;     // RECORD/OPTION children; ARRAY: single body
    std::vector<Relation> constraints;
};

// Witness parse tree: how the observed input instantiates the structure.
struct Instance {
    uint32_t node = 0;  // structure node index
    ByteInterval iv{0, 0};
    std::vector<uint32_t> kids;
    int variant = -1;  // chosen alternative when node is an OPTION
};

struct InstanceTree {
    std::vector<Instance> insts;
    uint32_t root = 0;
};

struct StructureDoc {
    std::vector<StructureNode> nodes;
    uint32_t root = 0;
    std::vector<Field> fields;                         // from the selected frontier
    std::vector<Token> tokens;                         // per field
    std::vector<std::vector<std::string>> field_values;  // observed bytes per field
    std::vector<uint32_t> seq;                         // witness frontier sequence
    InstanceTree witness;
    std::vector<Relation> relations;

    const StructureNode* find(const std::string& id) const;
    uint32_t node_index(const std::string& id) const;
    std::optional<uint32_t> parent_of(uint32_t node) const;
};

// Extra per-field evidence enabling variant (option) detection and boundary
// repair; pure sequence folding works without it.
struct FieldEvidence {
    std::vector<uint32_t> co_class;              // co-occurrence class per field
    std::vector<bool> constant;                  // single distinct value
    std::vector<std::string> const_bytes;        // that value, when constant
    std::vector<std::vector<uint32_t>> si_addrs;  // sorted instruction ids per field
};

FieldEvidence make_evidence(const std::vector<Field>& fields);

// Folds a frontier field sequence into the structure AST. `evidence` enables
// the variant pre-pass; `intervals` (parallel to seq) populates the witness
// instance tree.
StructureDoc build_structure(const std::vector<uint32_t>& seq,
                             const std::vector<Field>& fields,
                             const std::vector<std::vector<std::string>>& field_values,
                             const std::vector<Token>& tokens,
                             const FieldEvidence* evidence,
                             const std::vector<ByteInterval>* intervals);

// Spec-level convenience: fold a bare symbol sequence (no variant evidence).
StructureDoc sequence_to_structure(const std::vector<uint32_t>& seq, uint32_t alphabet);

// New_SI-driven boundary repair: absorbs an array's sibling run whose fields
// are the body's fields parsed at extra/other instructions. Identity when no
// candidate exists.
StructureDoc repair_array_boundaries(const StructureDoc& doc);

// True iff `seq` is in the language of the structure (arrays one-or-more).
bool structure_matches(const StructureDoc& doc, const std::vector<uint32_t>& seq);

// Witness tree for a sequence known to match; throws otherwise.
InstanceTree match_sequence(const StructureDoc& doc, const std::vector<uint32_t>& seq,
                            const std::vector<ByteInterval>* intervals);

std::string render(const StructureDoc& doc);
StructureDoc parse_grammar(const std::string& text);
std::string doc_to_json(const StructureDoc& doc);
StructureDoc doc_from_json(const std::string& text);

std::string render_relation(const Relation& r);

}  // namespace gi
