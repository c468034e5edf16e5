#include "structure.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>
#include <sstream>

namespace gi {

// ---------------------------------------------------------------------------
// Shape store: hash-consed structural shapes used during folding.

namespace {

struct Shape {
    NodeKind kind;
    uint32_t field = 0;           // ATOMIC
    std::vector<uint32_t> kids;   // shape ids
};

struct ShapeStore {
    std::vector<Shape> shapes;
    std::map<std::tuple<int, uint32_t, std::vector<uint32_t>>, uint32_t> ids;

    uint32_t intern(NodeKind k, uint32_t field, std::vector<uint32_t> kids) {
        auto key = std::make_tuple(int(k), field, kids);
        auto it = ids.find(key);
        if (it != ids.end()) return it->second;
        uint32_t id = uint32_t(shapes.size());
        shapes.push_back(Shape{k, field, std::move(kids)});
        ids.emplace(std::move(key), id);
        return id;
    }
    uint32_t atomic(uint32_t field) { return intern(NodeKind::ATOMIC, field, {}); }
};

constexpr size_t kMaxPeriod = 64;

// One tandem-folding step: leftmost position first, then smallest period.
// Returns true if a fold happened.
bool fold_step(ShapeStore& store, std::vector<uint32_t>& items) {
    size_t n = items.size();
    for (size_t pos = 0; pos < n; ++pos) {
        size_t maxp = std::min(kMaxPeriod, (n - pos) / 2);
        for (size_t p = 1; p <= maxp; ++p) {
            bool eq = true;
            for (size_t i = 0; i < p && eq; ++i) eq = items[pos + i] == items[pos + p + i];
            if (!eq) continue;
            size_t m = 2;
            while (pos + (m + 1) * p <= n) {
                bool more = true;
                for (size_t i = 0; i < p && more; ++i)
                    more = items[pos + i] == items[pos + m * p + i];
                if (!more) break;
                ++m;
            }
            uint32_t body;
            if (p == 1) {
                uint32_t s = items[pos];
                if (store.shapes[s].kind == NodeKind::ARRAY) {
                    // Adjacent equal arrays merge rather than nest.
                    items.erase(items.begin() + pos + 1, items.begin() + pos + m);
                    return true;
                }
                body = s;
            } else {
                std::vector<uint32_t> kids(items.begin() + pos, items.begin() + pos + p);
                body = store.intern(NodeKind::RECORD, 0, std::move(kids));
            }
            uint32_t arr = store.intern(NodeKind::ARRAY, 0, {body});
            items.erase(items.begin() + pos, items.begin() + pos + m * p);
            items.insert(items.begin() + pos, arr);
            return true;
        }
    }
    return false;
}

void collect_array_shapes(const ShapeStore& store, uint32_t shape, std::set<uint32_t>& out) {
    const Shape& s = store.shapes[shape];
    if (s.kind == NodeKind::ARRAY) out.insert(shape);
    for (uint32_t k : s.kids) collect_array_shapes(store, k, out);
}

// Wrap a flat occurrence of an existing array's record body into that array
// (arrays are one-or-more, so a single copy is legal). Enables rows of
// different lengths to unify.
bool wrap_step(ShapeStore& store, std::vector<uint32_t>& items) {
    std::set<uint32_t> arrays;
    for (uint32_t it : items) collect_array_shapes(store, it, arrays);
    for (uint32_t arr : arrays) {
        uint32_t body = store.shapes[arr].kids[0];
        const Shape& b = store.shapes[body];
        if (b.kind != NodeKind::RECORD || b.kids.size() < 2) continue;
        const auto& comps = b.kids;
        for (size_t pos = 0; pos + comps.size() <= items.size(); ++pos) {
            bool eq = true;
            for (size_t i = 0; i < comps.size() && eq; ++i) eq = items[pos + i] == comps[i];
            if (!eq) continue;
            items.erase(items.begin() + pos, items.begin() + pos + comps.size());
            items.insert(items.begin() + pos, arr);
            return true;
        }
    }
    return false;
}

// Tail reduction for the streaming path: folds, merges and wraps only at the
// end of the item list, so long uniform inputs collapse in one linear pass.
void reduce_tail(ShapeStore& store, std::vector<uint32_t>& out) {
    for (bool changed = true; changed;) {
        changed = false;
        size_t n = out.size();
        if (n >= 2 && out[n - 1] == out[n - 2] &&
            store.shapes[out[n - 1]].kind == NodeKind::ARRAY) {
            out.pop_back();
            changed = true;
            continue;
        }
        if (n >= 2 && store.shapes[out[n - 2]].kind == NodeKind::ARRAY &&
            store.shapes[out[n - 2]].kids[0] == out[n - 1]) {
            out.pop_back();
            changed = true;
            continue;
        }
        // Suffix forming one more copy of a preceding array's record body.
        for (size_t k = 2; k <= kMaxPeriod && k + 1 <= n; ++k) {
            uint32_t cand = out[n - 1 - k];
            if (store.shapes[cand].kind != NodeKind::ARRAY) continue;
            uint32_t body = store.shapes[cand].kids[0];
            if (store.shapes[body].kind != NodeKind::RECORD) continue;
            const auto& comps = store.shapes[body].kids;
            if (comps.size() != k) continue;
            bool eq = true;
            for (size_t i = 0; i < k && eq; ++i) eq = out[n - k + i] == comps[i];
            if (!eq) continue;
            out.resize(n - k);
            changed = true;
            break;
        }
        if (changed) continue;
        n = out.size();
        for (size_t p = 1; p <= kMaxPeriod && 2 * p <= n; ++p) {
            bool eq = true;
            for (size_t i = 0; i < p && eq; ++i) eq = out[n - p + i] == out[n - 2 * p + i];
            if (!eq) continue;
            uint32_t body = p == 1 ? out[n - 1]
                                   : store.intern(NodeKind::RECORD, 0,
                                                  {out.begin() + (n - p), out.end()});
            uint32_t arr = store.intern(NodeKind::ARRAY, 0, {body});
            out.resize(n - 2 * p);
            out.push_back(arr);
            changed = true;
            break;
        }
    }
}

void fold_sequence(ShapeStore& store, std::vector<uint32_t>& items) {
    if (items.size() > 4096) {
        std::vector<uint32_t> out;
        out.reserve(1024);
        for (uint32_t it : items) {
            out.push_back(it);
            reduce_tail(store, out);
        }
        items = std::move(out);
    }
    for (;;) {
        while (fold_step(store, items)) {
        }
        if (!wrap_step(store, items)) break;
    }
}

bool is_chain(std::vector<std::vector<uint32_t>> sets) {
    std::sort(sets.begin(), sets.end(),
              [](const auto& a, const auto& b) { return a.size() < b.size(); });
    for (size_t i = 0; i + 1 < sets.size(); ++i)
        if (!std::includes(sets[i + 1].begin(), sets[i + 1].end(), sets[i].begin(),
                           sets[i].end()))
            return false;
    return true;
}

// Variant pre-pass: discriminator fields are constant, co-occurring, and
// their instruction sets form an inclusion chain (a compare ladder). The
// region they head becomes array(option(variants)).
void variant_prepass(ShapeStore& store, std::vector<uint32_t>& items,
                     const std::vector<uint32_t>& seq, const FieldEvidence& ev) {
    std::set<uint32_t> present(seq.begin(), seq.end());
    std::map<uint32_t, std::vector<uint32_t>> classes;  // co-class -> member fields
    for (uint32_t f : present) classes[ev.co_class[f]].push_back(f);
    for (const auto& [cls, members] : classes) {
        std::vector<uint32_t> disc;
        for (uint32_t f : members)
            if (ev.constant[f]) disc.push_back(f);
        if (disc.size() < 2) continue;
        // A compare ladder distinguishes values; identical constants parsed at
        // different sites (e.g. separators in recursive parsers) do not
        // discriminate anything.
        std::set<std::string> distinct;
        bool dup = false;
        for (uint32_t f : disc)
            if (!distinct.insert(f < ev.const_bytes.size() ? ev.const_bytes[f] : "").second)
                dup = true;
        if (dup) continue;
        std::vector<std::vector<uint32_t>> addr_sets;
        for (uint32_t f : disc) addr_sets.push_back(ev.si_addrs[f]);
        if (!is_chain(addr_sets)) continue;
        std::set<uint32_t> dset(disc.begin(), disc.end());
        // Segment the discriminator-headed region of the current item list.
        std::vector<size_t> starts;
        for (size_t i = 0; i < items.size(); ++i) {
            const Shape& s = store.shapes[items[i]];
            if (s.kind == NodeKind::ATOMIC && dset.count(s.field)) starts.push_back(i);
        }
        if (starts.size() < 2) continue;
        // Segments must be contiguous from the first start to the end of items.
        std::vector<std::pair<size_t, size_t>> segs;
        for (size_t i = 0; i < starts.size(); ++i) {
            size_t b = starts[i];
            size_t e = i + 1 < starts.size() ? starts[i + 1] : items.size();
            segs.emplace_back(b, e);
        }
        auto seg_shape = [&](const std::pair<size_t, size_t>& s) {
            // Fold within the segment first so same-variant segments of
            // different repeat lengths share one shape.
            std::vector<uint32_t> seg(items.begin() + s.first, items.begin() + s.second);
            while (fold_step(store, seg)) {
            }
            return seg;
        };
        // A final segment whose shape appears nowhere else spills out of the
        // array (end marker).
        size_t used = segs.size();
        std::map<std::vector<uint32_t>, int> shape_count;
        for (const auto& s : segs) shape_count[seg_shape(s)]++;
        if (shape_count[seg_shape(segs.back())] == 1) --used;
        if (used < 2) continue;
        std::vector<std::vector<uint32_t>> variants;
        for (size_t i = 0; i < used; ++i) {
            auto sh = seg_shape(segs[i]);
            if (std::find(variants.begin(), variants.end(), sh) == variants.end())
                variants.push_back(sh);
        }
        if (variants.size() < 2) continue;  // uniform: plain folding handles it
        std::vector<uint32_t> alts;
        for (const auto& v : variants)
            alts.push_back(v.size() == 1 ? v[0] : store.intern(NodeKind::RECORD, 0, v));
        uint32_t opt = store.intern(NodeKind::OPTION, 0, alts);
        uint32_t arr = store.intern(NodeKind::ARRAY, 0, {opt});
        size_t from = segs.front().first, to = segs[used - 1].second;
        items.erase(items.begin() + from, items.begin() + to);
        items.insert(items.begin() + from, arr);
        return;  // one region per pass is enough for the supported formats
    }
}

}  // namespace

FieldEvidence make_evidence(const std::vector<Field>& fields) {
    FieldEvidence ev;
    ev.co_class = co_occurrence_classes(fields);
    for (const auto& f : fields) {
        std::set<uint32_t> addrs;
        for (UsePair u : f.si) addrs.insert(use_addr(u));
        ev.si_addrs.emplace_back(addrs.begin(), addrs.end());
    }
    ev.constant.resize(fields.size(), false);
    ev.const_bytes.resize(fields.size());
    return ev;
}

// ---------------------------------------------------------------------------
// Materialization: shapes -> StructureNode tree with S*/A*/O* ids.

namespace {

struct Materializer {
    const ShapeStore& store;
    StructureDoc& doc;
    std::map<uint32_t, uint32_t> atomics;  // field -> node index (shared leaves)
    int s = 0, a = 0, o = 0;

    uint32_t emit(uint32_t shape) {
        const Shape& sh = store.shapes[shape];
        if (sh.kind == NodeKind::ATOMIC) {
            auto it = atomics.find(sh.field);
            if (it != atomics.end()) return it->second;
            uint32_t id = uint32_t(doc.nodes.size());
            doc.nodes.push_back(StructureNode{NodeKind::ATOMIC, doc.fields[sh.field].id,
                                              sh.field, {}, {}});
            atomics.emplace(sh.field, id);
            return id;
        }
        uint32_t id = uint32_t(doc.nodes.size());
        doc.nodes.push_back(StructureNode{sh.kind, "", 0, {}, {}});
        switch (sh.kind) {
            case NodeKind::RECORD: doc.nodes[id].id = "S" + std::to_string(s++); break;
            case NodeKind::ARRAY: doc.nodes[id].id = "A" + std::to_string(a++); break;
            case NodeKind::OPTION: doc.nodes[id].id = "O" + std::to_string(o++); break;
            default: break;
        }
        std::vector<uint32_t> kids;
        for (uint32_t k : sh.kids) kids.push_back(emit(k));
        doc.nodes[id].kids = std::move(kids);
        return id;
    }
};

}  // namespace

const StructureNode* StructureDoc::find(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

uint32_t StructureDoc::node_index(const std::string& id) const {
    for (uint32_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].id == id) return i;
    throw TraceError("unknown structure node " + id);
}

std::optional<uint32_t> StructureDoc::parent_of(uint32_t node) const {
    for (uint32_t i = 0; i < nodes.size(); ++i)
        for (uint32_t k : nodes[i].kids)
            if (k == node) return i;
    return std::nullopt;
}

StructureDoc build_structure(const std::vector<uint32_t>& seq,
                             const std::vector<Field>& fields,
                             const std::vector<std::vector<std::string>>& field_values,
                             const std::vector<Token>& tokens,
                             const FieldEvidence* evidence,
                             const std::vector<ByteInterval>* intervals) {
    if (seq.empty()) throw TraceError("cannot build structure from empty sequence");
    ShapeStore store;
    std::vector<uint32_t> items;
    items.reserve(seq.size());
    for (uint32_t f : seq) items.push_back(store.atomic(f));
    if (evidence) variant_prepass(store, items, seq, *evidence);
    fold_sequence(store, items);

    StructureDoc doc;
    doc.fields = fields;
    doc.field_values = field_values;
    doc.tokens = tokens;
    doc.seq = seq;
    uint32_t top;
    if (items.size() == 1) {
        top = items[0];
    } else {
        top = store.intern(NodeKind::RECORD, 0, items);
    }
    Materializer mat{store, doc};
    doc.root = mat.emit(top);
    doc.witness = match_sequence(doc, seq, intervals);
    return doc;
}

StructureDoc sequence_to_structure(const std::vector<uint32_t>& seq, uint32_t alphabet) {
    std::vector<Field> fields(alphabet);
    std::vector<std::vector<std::string>> values(alphabet);
    std::vector<Token> tokens(alphabet);
    for (uint32_t i = 0; i < alphabet; ++i) {
        fields[i].id = "F" + std::to_string(i);
        values[i] = {std::string(1, char('a' + i % 26))};
        tokens[i] = infer_token(values[i]);
    }
    return build_structure(seq, fields, values, tokens, nullptr, nullptr);
}

// ---------------------------------------------------------------------------
// Matching.

namespace {

// Backtracking recognizer (continuation-passing); used by structure_matches.
bool cps_match(const StructureDoc& doc, uint32_t node, const std::vector<uint32_t>& seq,
               size_t pos, const std::function<bool(size_t)>& k) {
    const StructureNode& n = doc.nodes[node];
    switch (n.kind) {
        case NodeKind::ATOMIC:
            return pos < seq.size() && seq[pos] == n.field && k(pos + 1);
        case NodeKind::RECORD: {
            std::function<bool(size_t, size_t)> step = [&](size_t idx, size_t p) -> bool {
                if (idx == n.kids.size()) return k(p);
                return cps_match(doc, n.kids[idx], seq, p,
                                 [&, idx](size_t np) { return step(idx + 1, np); });
            };
            return step(0, pos);
        }
        case NodeKind::ARRAY: {
            std::function<bool(size_t)> more = [&](size_t p) -> bool {
                return cps_match(doc, n.kids[0], seq, p,
                                 [&](size_t np) { return more(np) || k(np); });
            };
            return more(pos);
        }
        case NodeKind::OPTION:
            for (uint32_t alt : n.kids)
                if (cps_match(doc, alt, seq, pos, k)) return true;
            return false;
    }
    return false;
}

// Greedy instance builder for witness sequences produced by the folder.
struct GreedyMatcher {
    const StructureDoc& doc;
    const std::vector<uint32_t>& seq;
    const std::vector<ByteInterval>* ivs;
    InstanceTree tree;

    std::optional<uint32_t> match(uint32_t node, size_t& pos) {
        const StructureNode& n = doc.nodes[node];
        switch (n.kind) {
            case NodeKind::ATOMIC: {
                if (pos >= seq.size() || seq[pos] != n.field) return std::nullopt;
                Instance inst;
                inst.node = node;
                inst.iv = ivs ? (*ivs)[pos] : ByteInterval{uint32_t(pos), uint32_t(pos) + 1};
                ++pos;
                tree.insts.push_back(inst);
                return uint32_t(tree.insts.size() - 1);
            }
            case NodeKind::RECORD: {
                size_t save = pos;
                size_t mark = tree.insts.size();
                Instance inst;
                inst.node = node;
                for (uint32_t kid : n.kids) {
                    auto c = match(kid, pos);
                    if (!c) {
                        pos = save;
                        tree.insts.resize(mark);
                        return std::nullopt;
                    }
                    inst.kids.push_back(*c);
                }
                span(inst);
                tree.insts.push_back(inst);
                return uint32_t(tree.insts.size() - 1);
            }
            case NodeKind::ARRAY: {
                Instance inst;
                inst.node = node;
                for (;;) {
                    size_t save = pos;
                    size_t mark = tree.insts.size();
                    auto c = match(n.kids[0], pos);
                    if (!c) {
                        pos = save;
                        tree.insts.resize(mark);
                        break;
                    }
                    inst.kids.push_back(*c);
                }
                if (inst.kids.empty()) return std::nullopt;
                span(inst);
                tree.insts.push_back(inst);
                return uint32_t(tree.insts.size() - 1);
            }
            case NodeKind::OPTION: {
                for (size_t vi = 0; vi < n.kids.size(); ++vi) {
                    size_t save = pos;
                    size_t mark = tree.insts.size();
                    auto c = match(n.kids[vi], pos);
                    if (c) {
                        Instance inst;
                        inst.node = node;
                        inst.variant = int(vi);
                        inst.kids.push_back(*c);
                        span(inst);
                        tree.insts.push_back(inst);
                        return uint32_t(tree.insts.size() - 1);
                    }
                    pos = save;
                    tree.insts.resize(mark);
                }
                return std::nullopt;
            }
        }
        return std::nullopt;
    }

    void span(Instance& inst) {
        inst.iv = {UINT32_MAX, 0};
        for (uint32_t k : inst.kids) {
            inst.iv.start = std::min(inst.iv.start, tree.insts[k].iv.start);
            inst.iv.end = std::max(inst.iv.end, tree.insts[k].iv.end);
        }
        if (inst.kids.empty()) inst.iv = {0, 0};
    }
};

// Backtracking instance builder: greedy arrays, but a failed continuation
// backs off the copy count (and option choice). Recursion depth grows with
// array length, so it only serves as the fallback for inputs the greedy
// matcher cannot handle.
struct BtMatcher {
    const StructureDoc& doc;
    const std::vector<uint32_t>& seq;
    const std::vector<ByteInterval>* ivs;
    InstanceTree tree;

    using Cont = std::function<bool(size_t, uint32_t)>;  // (new pos, instance)

    void span(Instance& inst) {
        inst.iv = {UINT32_MAX, 0};
        for (uint32_t k : inst.kids) {
            inst.iv.start = std::min(inst.iv.start, tree.insts[k].iv.start);
            inst.iv.end = std::max(inst.iv.end, tree.insts[k].iv.end);
        }
        if (inst.kids.empty()) inst.iv = {0, 0};
    }

    bool match(uint32_t node, size_t pos, const Cont& k) {
        const StructureNode& n = doc.nodes[node];
        size_t mark = tree.insts.size();
        auto emit = [&](Instance inst, size_t np) {
            span(inst);
            tree.insts.push_back(std::move(inst));
            if (k(np, uint32_t(tree.insts.size() - 1))) return true;
            tree.insts.pop_back();
            return false;
        };
        switch (n.kind) {
            case NodeKind::ATOMIC: {
                if (pos >= seq.size() || seq[pos] != n.field) return false;
                Instance inst;
                inst.node = node;
                inst.iv = ivs ? (*ivs)[pos] : ByteInterval{uint32_t(pos), uint32_t(pos) + 1};
                tree.insts.push_back(inst);
                if (k(pos + 1, uint32_t(tree.insts.size() - 1))) return true;
                tree.insts.resize(mark);
                return false;
            }
            case NodeKind::RECORD: {
                std::vector<uint32_t> kids;
                std::function<bool(size_t, size_t)> step = [&](size_t idx, size_t p) -> bool {
                    if (idx == n.kids.size()) {
                        Instance inst;
                        inst.node = node;
                        inst.kids = kids;
                        return emit(std::move(inst), p);
                    }
                    return match(n.kids[idx], p, [&, idx](size_t np, uint32_t ci) {
                        kids.push_back(ci);
                        if (step(idx + 1, np)) return true;
                        kids.pop_back();
                        return false;
                    });
                };
                if (step(0, pos)) return true;
                tree.insts.resize(mark);
                return false;
            }
            case NodeKind::ARRAY: {
                std::vector<uint32_t> kids;
                std::function<bool(size_t)> more = [&](size_t p) -> bool {
                    // Longest run first, then back off one copy at a time.
                    if (match(n.kids[0], p, [&](size_t np, uint32_t ci) {
                            kids.push_back(ci);
                            if (more(np)) return true;
                            kids.pop_back();
                            return false;
                        }))
                        return true;
                    if (kids.empty()) return false;
                    Instance inst;
                    inst.node = node;
                    inst.kids = kids;
                    return emit(std::move(inst), p);
                };
                if (more(pos)) return true;
                tree.insts.resize(mark);
                return false;
            }
            case NodeKind::OPTION: {
                for (size_t vi = 0; vi < n.kids.size(); ++vi) {
                    bool ok = match(n.kids[vi], pos, [&](size_t np, uint32_t ci) {
                        Instance inst;
                        inst.node = node;
                        inst.variant = int(vi);
                        inst.kids.push_back(ci);
                        return emit(std::move(inst), np);
                    });
                    if (ok) return true;
                }
                tree.insts.resize(mark);
                return false;
            }
        }
        return false;
    }
};

}  // namespace

bool structure_matches(const StructureDoc& doc, const std::vector<uint32_t>& seq) {
    return cps_match(doc, doc.root, seq, 0, [&](size_t p) { return p == seq.size(); });
}

InstanceTree match_sequence(const StructureDoc& doc, const std::vector<uint32_t>& seq,
                            const std::vector<ByteInterval>* intervals) {
    GreedyMatcher m{doc, seq, intervals, {}};
    size_t pos = 0;
    auto root = m.match(doc.root, pos);
    if (root && pos == seq.size()) {
        m.tree.root = *root;
        return m.tree;
    }
    BtMatcher bt{doc, seq, intervals, {}};
    uint32_t root_inst = 0;
    bool ok = bt.match(doc.root, 0, [&](size_t p, uint32_t inst) {
        if (p != seq.size()) return false;
        root_inst = inst;
        return true;
    });
    if (!ok) throw TraceError("witness sequence does not match its own structure");
    bt.tree.root = root_inst;
    return bt.tree;
}

// ---------------------------------------------------------------------------
// Boundary repair.

namespace {

// a absorbs into b when both run the same parsing code (equal instruction
// addresses) under different calling contexts.
bool absorbable(const FieldEvidence& ev, uint32_t a, uint32_t b) {
    if (a == b) return false;
    if (ev.co_class[a] != ev.co_class[b]) return false;
    return ev.si_addrs[a] == ev.si_addrs[b];
}

// Structural match of a sibling subtree against an array-body subtree,
// collecting the field substitution that would unify them.
bool match_subtree(const StructureDoc& doc, const FieldEvidence& ev, uint32_t sib,
                   uint32_t body, std::map<uint32_t, uint32_t>& out) {
    const StructureNode& a = doc.nodes[sib];
    const StructureNode& b = doc.nodes[body];
    if (a.kind != b.kind) return false;
    if (a.kind == NodeKind::ATOMIC) {
        if (a.field == b.field) return true;
        if (!absorbable(ev, a.field, b.field)) return false;
        out[a.field] = b.field;
        return true;
    }
    if (a.kids.size() != b.kids.size()) return false;
    for (size_t i = 0; i < a.kids.size(); ++i)
        if (!match_subtree(doc, ev, a.kids[i], b.kids[i], out)) return false;
    return true;
}

}  // namespace

StructureDoc repair_array_boundaries(const StructureDoc& doc) {
    FieldEvidence ev = make_evidence(doc.fields);
    for (uint32_t f = 0; f < doc.fields.size(); ++f) {
        ev.constant[f] = doc.tokens.size() > f && doc.tokens[f].is_constant();
        if (ev.constant[f]) ev.const_bytes[f] = doc.tokens[f].constant_bytes();
    }

    // Look for a record whose array child is preceded (or followed) by a flat
    // run of fields matching the array body under SI-address inclusion.
    std::map<uint32_t, uint32_t> subst;  // absorbed field -> body field
    for (const auto& n : doc.nodes) {
        if (n.kind != NodeKind::RECORD) continue;
        for (size_t i = 0; i < n.kids.size(); ++i) {
            const StructureNode& arr = doc.nodes[n.kids[i]];
            if (arr.kind != NodeKind::ARRAY) continue;
            uint32_t body = arr.kids[0];
            std::vector<uint32_t> comps =
                doc.nodes[body].kind == NodeKind::RECORD ? doc.nodes[body].kids
                                                         : std::vector<uint32_t>{body};
            auto try_run = [&](size_t start) {
                if (start + comps.size() > n.kids.size()) return;
                std::map<uint32_t, uint32_t> local;
                for (size_t j = 0; j < comps.size(); ++j)
                    if (!match_subtree(doc, ev, n.kids[start + j], comps[j], local)) return;
                if (local.empty()) return;  // nothing to unify
                subst.insert(local.begin(), local.end());
            };
            if (i >= comps.size()) try_run(i - comps.size());
            try_run(i + 1);
        }
    }
    if (subst.empty()) return doc;

    // Merge absorbed fields into their body fields and rebuild.
    std::vector<Field> fields;
    std::vector<std::vector<std::string>> values;
    std::vector<uint32_t> remap(doc.fields.size());
    std::vector<uint32_t> target(doc.fields.size());
    for (uint32_t f = 0; f < doc.fields.size(); ++f)
        target[f] = subst.count(f) ? subst[f] : f;
    // Fields keep body identity; renumber survivors by first offset.
    std::vector<uint32_t> survivors;
    for (uint32_t f = 0; f < doc.fields.size(); ++f)
        if (target[f] == f) survivors.push_back(f);
    std::vector<Field> merged(doc.fields.size());
    std::vector<std::vector<std::string>> merged_vals(doc.fields.size());
    for (uint32_t f = 0; f < doc.fields.size(); ++f) {
        uint32_t t = target[f];
        auto& m = merged[t];
        m.gap = doc.fields[t].gap;
        std::set<UsePair> si(m.si.begin(), m.si.end());
        si.insert(doc.fields[f].si.begin(), doc.fields[f].si.end());
        m.si.assign(si.begin(), si.end());
        m.values.insert(m.values.end(), doc.fields[f].values.begin(), doc.fields[f].values.end());
        merged_vals[t].insert(merged_vals[t].end(), doc.field_values[f].begin(),
                              doc.field_values[f].end());
    }
    std::sort(survivors.begin(), survivors.end(), [&](uint32_t a, uint32_t b) {
        const auto& x = merged[a].values;
        const auto& y = merged[b].values;
        uint32_t xs = x.empty() ? 0 : std::min_element(x.begin(), x.end())->start;
        uint32_t ys = y.empty() ? 0 : std::min_element(y.begin(), y.end())->start;
        return xs < ys;
    });
    for (uint32_t i = 0; i < survivors.size(); ++i) {
        uint32_t f = survivors[i];
        std::sort(merged[f].values.begin(), merged[f].values.end());
        merged[f].id = "F" + std::to_string(i);
        fields.push_back(merged[f]);
        values.push_back(merged_vals[f]);
        remap[f] = i;
    }
    for (uint32_t f = 0; f < doc.fields.size(); ++f)
        if (target[f] != f) remap[f] = remap[target[f]];

    std::vector<Token> tokens;
    for (const auto& v : values) tokens.push_back(infer_token(v));
    std::vector<uint32_t> seq;
    for (uint32_t f : doc.seq) seq.push_back(remap[f]);
    std::vector<ByteInterval> ivs;
    bool have_ivs = !doc.witness.insts.empty();
    if (have_ivs) {
        // Leaf intervals in sequence order come from the old witness tree.
        std::vector<std::pair<ByteInterval, uint32_t>> leaves;
        for (const auto& inst : doc.witness.insts)
            if (doc.nodes[inst.node].kind == NodeKind::ATOMIC) leaves.emplace_back(inst.iv, 0);
        std::sort(leaves.begin(), leaves.end());
        for (auto& [iv, _] : leaves) ivs.push_back(iv);
    }
    FieldEvidence ev2 = make_evidence(fields);
    for (uint32_t f = 0; f < fields.size(); ++f) {
        ev2.constant[f] = tokens[f].is_constant();
        if (ev2.constant[f]) ev2.const_bytes[f] = tokens[f].constant_bytes();
    }
    StructureDoc out = build_structure(seq, fields, values, tokens, &ev2,
                                       have_ivs ? &ivs : nullptr);
    // Idempotence: repair until fixpoint.
    return out;
}

// ---------------------------------------------------------------------------
// Rendering and parsing.

std::string render_relation(const Relation& r) {
    std::ostringstream out;
    auto adj = [&](const std::string& base) {
        if (r.adjust == 0) return base;
        if (r.adjust == -1) return base + " - 1";
        return base + " + 1";
    };
    switch (r.kind) {
        case RelKind::COUNT:
            out << r.target << ".count = " << adj("int(" + r.sources[0] + ".bytes)");
            break;
        case RelKind::SIZE:
            out << r.target << ".size = " << adj("int(" + r.sources[0] + ".bytes)");
            break;
        case RelKind::OFFSET:
            out << r.target << ".offset = " << adj("int(" + r.sources[0] + ".bytes)");
            break;
        case RelKind::TERMINATOR:
            out << r.target << ".terminator = " << r.sources[0] << ".bytes";
            break;
        case RelKind::RECORD_TYPE:
            out << r.target << ".record_type = " << r.sources[0] << ".bytes";
            break;
        case RelKind::MODULUS: {
            std::string src = "int(" + r.sources[0] + ".bytes)";
            if (r.adjust != 0) src = "(" + adj(src) + ")";
            out << r.target << ".count % " << src << " == 0";
            break;
        }
        case RelKind::PRODUCT: {
            out << r.target << ".count = ";
            for (size_t i = 0; i < r.sources.size(); ++i) {
                if (i) out << " * ";
                out << "int(" << r.sources[i] << ".bytes)";
            }
            break;
        }
    }
    return out.str();
}

namespace {

std::string render_where(const std::vector<Relation>& rels) {
    if (rels.empty()) return "";
    // Alternatives for the same property join with OR; properties with AND.
    std::map<std::pair<std::string, int>, std::vector<const Relation*>> groups;
    std::vector<std::pair<std::string, int>> order;
    for (const auto& r : rels) {
        auto key = std::make_pair(r.target, int(r.kind));
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::string out = " WHERE ";
    for (size_t i = 0; i < order.size(); ++i) {
        if (i) out += " AND ";
        const auto& g = groups[order[i]];
        for (size_t j = 0; j < g.size(); ++j) {
            if (j) out += " OR ";
            out += render_relation(*g[j]);
        }
    }
    return out;
}

void render_node(const StructureDoc& doc, uint32_t node, int depth, std::set<uint32_t>& defined,
                 std::ostringstream& out) {
    const StructureNode& n = doc.nodes[node];
    std::string ind(size_t(depth) * 2, ' ');
    if (n.kind == NodeKind::ATOMIC) {
        if (defined.insert(n.field).second)
            out << ind << "atomic " << n.id << " = " << render_token(doc.tokens[n.field])
                << render_where(n.constraints) << "\n";
        else
            out << ind << n.id << render_where(n.constraints) << "\n";
        return;
    }
    const char* kw = n.kind == NodeKind::RECORD ? "record"
                     : n.kind == NodeKind::ARRAY ? "array"
                                                 : "option";
    out << ind << kw << " " << n.id << " {\n";
    for (uint32_t k : n.kids) render_node(doc, k, depth + 1, defined, out);
    out << ind << "}" << render_where(n.constraints) << "\n";
}

}  // namespace

std::string render(const StructureDoc& doc) {
    std::ostringstream out;
    std::set<uint32_t> defined;
    render_node(doc, doc.root, 0, defined, out);
    return out.str();
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Relation parse_relation(const std::string& text) {
    Relation r;
    auto fail = [&] { throw TraceError("cannot parse constraint: " + text); };
    size_t dot = text.find('.');
    if (dot == std::string::npos) fail();
    r.target = trim(text.substr(0, dot));
    std::string rest = trim(text.substr(dot + 1));
    auto grab_int = [&](std::string expr) {
        // int(F.bytes) [* int(F.bytes)]... with optional +/- 1
        expr = trim(expr);
        if (expr.size() > 4 && expr.compare(expr.size() - 4, 4, " - 1") == 0) {
            r.adjust = -1;
            expr = trim(expr.substr(0, expr.size() - 4));
        } else if (expr.size() > 4 && expr.compare(expr.size() - 4, 4, " + 1") == 0) {
            r.adjust = +1;
            expr = trim(expr.substr(0, expr.size() - 4));
        }
        size_t pos = 0;
        while (pos < expr.size()) {
            size_t open = expr.find("int(", pos);
            if (open == std::string::npos) fail();
            size_t close = expr.find(".bytes)", open);
            if (close == std::string::npos) fail();
            r.sources.push_back(expr.substr(open + 4, close - open - 4));
            pos = close + 7;
            while (pos < expr.size() && (expr[pos] == ' ' || expr[pos] == '*')) ++pos;
        }
        if (r.sources.empty()) fail();
    };
    if (rest.rfind("count % ", 0) == 0) {
        r.kind = RelKind::MODULUS;
        std::string expr = trim(rest.substr(8));
        size_t eq = expr.rfind("== 0");
        if (eq == std::string::npos) fail();
        expr = trim(expr.substr(0, eq));
        if (!expr.empty() && expr.front() == '(' && expr.back() == ')')
            expr = expr.substr(1, expr.size() - 2);
        grab_int(expr);
    } else if (rest.rfind("count = ", 0) == 0) {
        std::string expr = rest.substr(8);
        grab_int(expr);
        r.kind = r.sources.size() > 1 ? RelKind::PRODUCT : RelKind::COUNT;
    } else if (rest.rfind("size = ", 0) == 0) {
        r.kind = RelKind::SIZE;
        grab_int(rest.substr(7));
    } else if (rest.rfind("offset = ", 0) == 0) {
        r.kind = RelKind::OFFSET;
        grab_int(rest.substr(9));
    } else if (rest.rfind("terminator = ", 0) == 0) {
        r.kind = RelKind::TERMINATOR;
        std::string src = trim(rest.substr(13));
        size_t b = src.rfind(".bytes");
        if (b == std::string::npos) fail();
        r.sources.push_back(src.substr(0, b));
    } else if (rest.rfind("record_type = ", 0) == 0) {
        r.kind = RelKind::RECORD_TYPE;
        std::string src = trim(rest.substr(14));
        size_t b = src.rfind(".bytes");
        if (b == std::string::npos) fail();
        r.sources.push_back(src.substr(0, b));
    } else {
        fail();
    }
    return r;
}

std::vector<Relation> parse_where(const std::string& text) {
    std::vector<Relation> out;
    size_t pos = 0;
    std::string rest = text;
    // Split on AND, then OR; both only occur between clauses.
    std::vector<std::string> clauses;
    while (true) {
        size_t a = rest.find(" AND ");
        size_t o = rest.find(" OR ");
        size_t cut = std::min(a, o);
        if (cut == std::string::npos) {
            clauses.push_back(rest);
            break;
        }
        clauses.push_back(rest.substr(0, cut));
        rest = rest.substr(cut + (cut == a ? 5 : 4));
    }
    (void)pos;
    for (const auto& c : clauses)
        if (!trim(c).empty()) out.push_back(parse_relation(trim(c)));
    return out;
}

}  // namespace

StructureDoc parse_grammar(const std::string& text) {
    StructureDoc doc;
    std::map<std::string, uint32_t> field_index;
    std::vector<std::string> lines;
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            line = trim(line);
            if (!line.empty()) lines.push_back(line);
        }
    }
    size_t pos = 0;
    std::function<uint32_t()> parse_node = [&]() -> uint32_t {
        if (pos >= lines.size()) throw TraceError("grammar text ends unexpectedly");
        std::string line = lines[pos++];
        auto where_rels = [&](std::string& l) {
            size_t w = l.find(" WHERE ");
            std::vector<Relation> rels;
            if (w != std::string::npos) {
                rels = parse_where(l.substr(w + 7));
                l = trim(l.substr(0, w));
            }
            return rels;
        };
        if (line.rfind("atomic ", 0) == 0) {
            auto rels = where_rels(line);
            size_t eq = line.find(" = ");
            if (eq == std::string::npos) throw TraceError("bad atomic line: " + line);
            std::string id = trim(line.substr(7, eq - 7));
            Token tok = parse_token(trim(line.substr(eq + 3)));
            uint32_t f;
            auto it = field_index.find(id);
            if (it == field_index.end()) {
                f = uint32_t(doc.fields.size());
                Field fld;
                fld.id = id;
                doc.fields.push_back(fld);
                doc.tokens.push_back(tok);
                doc.field_values.push_back({});
                field_index.emplace(id, f);
            } else {
                f = it->second;
            }
            uint32_t node = uint32_t(doc.nodes.size());
            doc.nodes.push_back(StructureNode{NodeKind::ATOMIC, id, f, {}, rels});
            for (const auto& r : rels) doc.relations.push_back(r);
            return node;
        }
        if (line.rfind("record ", 0) == 0 || line.rfind("array ", 0) == 0 ||
            line.rfind("option ", 0) == 0) {
            NodeKind kind = line[0] == 'r'   ? NodeKind::RECORD
                            : line[0] == 'a' ? NodeKind::ARRAY
                                             : NodeKind::OPTION;
            size_t sp = line.find(' ');
            size_t brace = line.find('{');
            std::string id = trim(line.substr(sp + 1, brace - sp - 1));
            uint32_t node = uint32_t(doc.nodes.size());
            doc.nodes.push_back(StructureNode{kind, id, 0, {}, {}});
            std::vector<uint32_t> kids;
            while (pos < lines.size() && lines[pos].rfind("}", 0) != 0) kids.push_back(parse_node());
            if (pos >= lines.size()) throw TraceError("missing closing brace for " + id);
            std::string close = lines[pos++];
            auto rels = where_rels(close);
            doc.nodes[node].kids = std::move(kids);
            doc.nodes[node].constraints = rels;
            for (const auto& r : rels) doc.relations.push_back(r);
            return node;
        }
        // Bare atomic reference, possibly with WHERE.
        auto rels = where_rels(line);
        auto it = field_index.find(line);
        if (it == field_index.end()) throw TraceError("reference to undefined field " + line);
        // Reuse the existing atomic node for this field.
        for (uint32_t i = 0; i < doc.nodes.size(); ++i)
            if (doc.nodes[i].kind == NodeKind::ATOMIC && doc.nodes[i].field == it->second) {
                for (const auto& r : rels) {
                    doc.nodes[i].constraints.push_back(r);
                    doc.relations.push_back(r);
                }
                return i;
            }
        throw TraceError("internal: atomic node missing for " + line);
    };
    doc.root = parse_node();
    if (pos != lines.size()) throw TraceError("trailing content in grammar text");
    // Repeated bare references restate their WHERE clauses; normalize to the
    // mining order and drop the duplicates.
    auto rel_order = [](const Relation& a, const Relation& b) {
        return std::tie(a.target, a.kind, a.sources, a.adjust) <
               std::tie(b.target, b.kind, b.sources, b.adjust);
    };
    std::sort(doc.relations.begin(), doc.relations.end(), rel_order);
    doc.relations.erase(std::unique(doc.relations.begin(), doc.relations.end()),
                        doc.relations.end());
    for (auto& n : doc.nodes) {
        std::sort(n.constraints.begin(), n.constraints.end(), rel_order);
        n.constraints.erase(std::unique(n.constraints.begin(), n.constraints.end()),
                            n.constraints.end());
    }
    return doc;
}

std::string doc_to_json(const StructureDoc& doc) {
    std::ostringstream out;
    out << "{\n  \"grammar\": ";
    // Embed the canonical text form; it is the normative serialization.
    std::string g = render(doc);
    out << "\"";
    for (char c : g) {
        if (c == '"' || c == '\\') out << '\\' << c;
        else if (c == '\n') out << "\\n";
        else out << c;
    }
    out << "\"\n}\n";
    return out.str();
}

StructureDoc doc_from_json(const std::string& text) {
    // The JSON document wraps the canonical grammar text.
    size_t key = text.find("\"grammar\"");
    if (key == std::string::npos) throw TraceError("document missing grammar key");
    size_t q1 = text.find('"', key + 9);
    if (q1 == std::string::npos) throw TraceError("bad grammar document");
    std::string g;
    for (size_t i = q1 + 1; i < text.size(); ++i) {
        char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            char n = text[++i];
            g += n == 'n' ? '\n' : n;
        } else if (c == '"') {
            break;
        } else {
            g += c;
        }
    }
    return parse_grammar(g);
}

}  // namespace gi
