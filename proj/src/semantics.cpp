#include "semantics.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace gi {

std::optional<int64_t> int_value(const std::string& bytes) {
    if (bytes.empty() || bytes.size() > 8) return std::nullopt;
    bool digits = std::all_of(bytes.begin(), bytes.end(),
                              [](char c) { return c >= '0' && c <= '9'; });
    if (digits) {
        int64_t v = 0;
        for (char c : bytes) {
            if (v > (INT64_MAX - 9) / 10) return std::nullopt;
            v = v * 10 + (c - '0');
        }
        return v;
    }
    int64_t v = 0;
    for (size_t i = bytes.size(); i-- > 0;) v = (v << 8) | uint8_t(bytes[i]);
    return v;
}

std::vector<std::vector<uint32_t>> semantic_sources(const StructureDoc& doc,
                                                    const Icdg& icdg,
                                                    const CfgPackage& cfg,
                                                    const TaintTrace& trace) {
    std::vector<std::vector<std::string>> addrs(doc.fields.size());
    for (size_t f = 0; f < doc.fields.size(); ++f) {
        std::set<uint32_t> ids;
        for (UsePair u : doc.fields[f].si) ids.insert(use_addr(u));
        for (uint32_t a : ids) addrs[f].push_back(trace.name_of(a));
    }
    auto blocks = annotate_fields(icdg, cfg, addrs);
    return project_graph(icdg, blocks, doc.fields.size());
}

namespace {

struct Wit {
    const StructureDoc& doc;
    const std::string& input;
    std::vector<int> parent;
    std::vector<std::vector<uint32_t>> by_node;     // structure node -> instances
    std::vector<std::vector<uint32_t>> field_insts; // field -> atomic instances

    explicit Wit(const StructureDoc& d, const std::string& in) : doc(d), input(in) {
        const auto& t = d.witness;
        parent.assign(t.insts.size(), -1);
        by_node.assign(d.nodes.size(), {});
        field_insts.assign(d.fields.size(), {});
        for (uint32_t i = 0; i < t.insts.size(); ++i) {
            const Instance& inst = t.insts[i];
            for (uint32_t k : inst.kids) parent[k] = int(i);
            by_node[inst.node].push_back(i);
            if (d.nodes[inst.node].kind == NodeKind::ATOMIC)
                field_insts[d.nodes[inst.node].field].push_back(i);
        }
        for (auto& v : field_insts)
            std::sort(v.begin(), v.end(), [&](uint32_t a, uint32_t b) {
                return t.insts[a].iv.start < t.insts[b].iv.start;
            });
    }

    std::string bytes(uint32_t inst) const {
        const auto& iv = doc.witness.insts[inst].iv;
        return input.substr(iv.start, iv.len());
    }

    // Value of the source field nearest to instance t: walk up the enclosing
    // instances until one contains source occurrences outside t; they must
    // agree on a single value.
    std::optional<int64_t> source_val(uint32_t t, uint32_t s_field) const {
        const auto& tiv = doc.witness.insts[t].iv;
        for (int r = parent[t]; r != -1; r = parent[r]) {
            const auto& riv = doc.witness.insts[r].iv;
            std::vector<std::string> vals;
            for (uint32_t si : field_insts[s_field]) {
                const auto& siv = doc.witness.insts[si].iv;
                if (riv.contains(siv) && !tiv.contains(siv)) vals.push_back(bytes(si));
            }
            if (vals.empty()) continue;
            for (const auto& v : vals)
                if (v != vals.front()) return std::nullopt;
            return int_value(vals.front());
        }
        return std::nullopt;
    }

    uint32_t first_atomic(uint32_t inst) const {
        const Instance& i = doc.witness.insts[inst];
        if (doc.nodes[i.node].kind == NodeKind::ATOMIC) return inst;
        return first_atomic(i.kids.front());
    }
};

void fields_under(const StructureDoc& doc, uint32_t node, std::set<uint32_t>& out) {
    const StructureNode& n = doc.nodes[node];
    if (n.kind == NodeKind::ATOMIC) {
        out.insert(n.field);
        return;
    }
    for (uint32_t k : n.kids) fields_under(doc, k, out);
}

bool eval_numeric(const Wit& w, RelKind kind, uint32_t target,
                  const std::vector<uint32_t>& src_fields, int adjust) {
    const auto& insts = w.by_node[target];
    if (insts.empty()) return false;
    for (uint32_t t : insts) {
        int64_t v = 1;
        for (uint32_t s : src_fields) {
            auto sv = w.source_val(t, s);
            if (!sv) return false;
            v *= *sv;
        }
        const Instance& ti = w.doc.witness.insts[t];
        switch (kind) {
            case RelKind::COUNT:
            case RelKind::PRODUCT:
                if (v + adjust < 1 || int64_t(ti.kids.size()) != v + adjust) return false;
                break;
            case RelKind::SIZE:
                if (int64_t(ti.iv.len()) != v + adjust) return false;
                break;
            case RelKind::OFFSET:
                if (int64_t(ti.iv.start) != v + adjust) return false;
                break;
            case RelKind::MODULUS:
                if (v + adjust <= 1 || int64_t(ti.kids.size()) % (v + adjust) != 0) return false;
                break;
            default:
                return false;
        }
    }
    return true;
}

std::optional<int> find_adjust(const Wit& w, RelKind kind, uint32_t target,
                               const std::vector<uint32_t>& src_fields) {
    static const int order[] = {0, -1, +1};
    for (int a : order)
        if (eval_numeric(w, kind, target, src_fields, a)) return a;
    return std::nullopt;
}

bool var_length(const Token& t) { return t.plus; }

// A size relation on a target whose length is structurally constant is
// always a coincidence; such targets are skipped.
std::optional<uint32_t> fixed_width(const StructureDoc& doc, uint32_t node) {
    const StructureNode& n = doc.nodes[node];
    if (n.kind == NodeKind::ATOMIC) {
        const Token& t = doc.tokens[n.field];
        if (t.plus) return std::nullopt;
        return uint32_t(t.units.size());
    }
    if (n.kind != NodeKind::RECORD) return std::nullopt;
    uint32_t sum = 0;
    for (uint32_t k : n.kids) {
        auto w = fixed_width(doc, k);
        if (!w) return std::nullopt;
        sum += *w;
    }
    return sum;
}

}  // namespace

void mine_relations(StructureDoc& doc, const std::string& input,
                    const std::vector<std::vector<uint32_t>>& dep_sources) {
    Wit w(doc, input);
    std::vector<Relation> rels;

    auto candidates = [&](uint32_t node) {
        std::set<uint32_t> inside;
        fields_under(doc, node, inside);
        std::set<uint32_t> cands;
        for (uint32_t f : inside)
            for (uint32_t s : dep_sources.size() > f ? dep_sources[f] : std::vector<uint32_t>{})
                if (!inside.count(s) && !doc.fields[s].gap) cands.insert(s);
        if (cands.empty()) {
            // No dependence evidence at all: fall back to every other field.
            for (uint32_t f = 0; f < doc.fields.size(); ++f)
                if (!inside.count(f) && !doc.fields[f].gap) cands.insert(f);
        }
        return std::vector<uint32_t>(cands.begin(), cands.end());
    };

    for (uint32_t n = 0; n < doc.nodes.size(); ++n) {
        const StructureNode& node = doc.nodes[n];
        bool composite = node.kind == NodeKind::ARRAY || node.kind == NodeKind::RECORD;
        bool var_atomic = node.kind == NodeKind::ATOMIC && var_length(doc.tokens[node.field]);
        if (!composite && !var_atomic) continue;
        if (n == doc.root) continue;
        auto cands = candidates(n);

        std::vector<uint32_t> counted;
        if (node.kind == NodeKind::ARRAY) {
            for (uint32_t s : cands) {
                if (auto a = find_adjust(w, RelKind::COUNT, n, {s})) {
                    rels.push_back({RelKind::COUNT, node.id, {doc.fields[s].id}, *a});
                    counted.push_back(s);
                }
            }
            // Divisibility only where no exact count explains the source.
            std::vector<uint32_t> moduli;
            for (uint32_t s : cands) {
                if (std::count(counted.begin(), counted.end(), s)) continue;
                if (eval_numeric(w, RelKind::MODULUS, n, {s}, 0)) moduli.push_back(s);
            }
            bool product = false;
            for (size_t i = 0; i < moduli.size() && !product; ++i)
                for (size_t j = i + 1; j < moduli.size() && !product; ++j)
                    if (eval_numeric(w, RelKind::PRODUCT, n, {moduli[i], moduli[j]}, 0)) {
                        rels.push_back({RelKind::PRODUCT, node.id,
                                        {doc.fields[moduli[i]].id, doc.fields[moduli[j]].id}, 0});
                        product = true;
                    }
            if (!product)
                for (uint32_t s : moduli)
                    rels.push_back({RelKind::MODULUS, node.id, {doc.fields[s].id}, 0});
        }

        bool fixed = fixed_width(doc, n).has_value();
        // An offset is only actionable when slack (a gap) precedes the
        // target; otherwise its position is fully determined by layout and
        // any match is coincidence.
        bool slack = false;
        if (!w.by_node[n].empty()) {
            uint32_t first = doc.witness.insts[w.by_node[n].front()].iv.start;
            for (uint32_t f = 0; f < doc.fields.size() && !slack; ++f)
                if (doc.fields[f].gap)
                    for (const auto& iv : doc.fields[f].values)
                        if (iv.start < first) slack = true;
        }
        for (uint32_t s : cands) {
            if (std::count(counted.begin(), counted.end(), s)) continue;
            if (!fixed)
                if (auto a = find_adjust(w, RelKind::SIZE, n, {s}))
                    rels.push_back({RelKind::SIZE, node.id, {doc.fields[s].id}, *a});
            if (slack)
                if (auto a = find_adjust(w, RelKind::OFFSET, n, {s}))
                    rels.push_back({RelKind::OFFSET, node.id, {doc.fields[s].id}, *a});
        }
    }

    // Terminators: a repeating or variable-length field immediately followed
    // by constant fields.
    for (uint32_t f = 0; f < doc.fields.size(); ++f) {
        if (doc.fields[f].gap) continue;
        size_t occ = std::count(doc.seq.begin(), doc.seq.end(), f);
        if (occ < 2 && !var_length(doc.tokens[f])) continue;
        std::set<uint32_t> followers;
        bool all_constant = true;
        for (size_t i = 0; i + 1 < doc.seq.size(); ++i) {
            if (doc.seq[i] != f) continue;
            uint32_t g = doc.seq[i + 1];
            if (g == f || !doc.tokens[g].is_constant()) {
                all_constant = false;
                break;
            }
            followers.insert(g);
        }
        if (!all_constant || followers.empty()) continue;
        for (uint32_t g : followers)
            rels.push_back({RelKind::TERMINATOR, doc.fields[f].id, {doc.fields[g].id}, 0});
    }

    // Record types: option arrays discriminated by constant leading fields.
    for (uint32_t n = 0; n < doc.nodes.size(); ++n) {
        const StructureNode& node = doc.nodes[n];
        if (node.kind != NodeKind::ARRAY) continue;
        const StructureNode& body = doc.nodes[node.kids[0]];
        if (body.kind != NodeKind::OPTION || body.kids.size() < 2) continue;
        std::vector<uint32_t> tags;
        std::set<std::string> values;
        bool ok = true;
        for (uint32_t v : body.kids) {
            std::set<uint32_t> fs;
            uint32_t cur = v;
            while (doc.nodes[cur].kind != NodeKind::ATOMIC) cur = doc.nodes[cur].kids.front();
            uint32_t tag = doc.nodes[cur].field;
            if (!doc.tokens[tag].is_constant() ||
                !values.insert(doc.tokens[tag].constant_bytes()).second) {
                ok = false;
                break;
            }
            tags.push_back(tag);
        }
        if (!ok) continue;
        for (uint32_t tag : tags)
            rels.push_back({RelKind::RECORD_TYPE, node.id, {doc.fields[tag].id}, 0});
    }

    std::sort(rels.begin(), rels.end(), [&](const Relation& a, const Relation& b) {
        return std::tie(a.target, a.kind, a.sources, a.adjust) <
               std::tie(b.target, b.kind, b.sources, b.adjust);
    });
    rels.erase(std::unique(rels.begin(), rels.end()), rels.end());

    doc.relations = rels;
    for (auto& n : doc.nodes) n.constraints.clear();
    for (const auto& r : rels) doc.nodes[doc.node_index(r.target)].constraints.push_back(r);
}

bool verify_relations(const StructureDoc& doc, const std::string& input) {
    Wit w(doc, input);
    auto fidx = [&](const std::string& id) {
        for (uint32_t f = 0; f < doc.fields.size(); ++f)
            if (doc.fields[f].id == id) return f;
        throw TraceError("unknown field " + id);
    };
    // Terminator and record_type alternatives verify as groups.
    std::map<std::string, std::set<uint32_t>> term_groups, type_groups;
    for (const auto& r : doc.relations) {
        if (r.kind == RelKind::TERMINATOR) {
            term_groups[r.target].insert(fidx(r.sources[0]));
            continue;
        }
        if (r.kind == RelKind::RECORD_TYPE) {
            type_groups[r.target].insert(fidx(r.sources[0]));
            continue;
        }
        std::vector<uint32_t> srcs;
        for (const auto& s : r.sources) srcs.push_back(fidx(s));
        if (!eval_numeric(w, r.kind, doc.node_index(r.target), srcs, r.adjust)) return false;
    }
    for (const auto& [target, srcs] : term_groups) {
        uint32_t f = fidx(target);
        for (size_t i = 0; i + 1 < doc.seq.size(); ++i)
            if (doc.seq[i] == f && !srcs.count(doc.seq[i + 1])) return false;
    }
    for (const auto& [target, srcs] : type_groups) {
        uint32_t n = doc.node_index(target);
        for (uint32_t arr : w.by_node[n])
            for (uint32_t opt : doc.witness.insts[arr].kids) {
                std::string first = w.bytes(w.first_atomic(opt));
                bool hit = false;
                for (uint32_t s : srcs)
                    if (doc.tokens[s].is_constant() && doc.tokens[s].constant_bytes() == first)
                        hit = true;
                if (!hit) return false;
            }
    }
    return true;
}

}  // namespace gi
