#include "generator.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <random>

#include "semantics.hpp"

namespace gi {

namespace {

std::optional<std::string> encode_value(const Token& t, int64_t v, uint32_t max_varlen) {
    if (v < 0) return std::nullopt;
    // Decimal first: natural for textual formats, zero-padded to the width.
    {
        std::string dec = std::to_string(v);
        if (t.plus) {
            if (dec.size() >= t.units.size() && dec.size() <= max_varlen && t.matches(dec))
                return dec;
        } else {
            if (dec.size() <= t.units.size()) {
                std::string s(t.units.size() - dec.size(), '0');
                s += dec;
                if (t.matches(s)) return s;
            }
        }
    }
    if (!t.plus) {
        // Little-endian binary of the token's width.
        size_t w = t.units.size();
        if (w <= 8 && (w == 8 || v < (int64_t(1) << (8 * w)))) {
            std::string s(w, '\0');
            for (size_t i = 0; i < w; ++i) s[i] = char((v >> (8 * i)) & 0xff);
            if (t.matches(s)) return s;
        }
    }
    return std::nullopt;
}

struct Leaf {
    uint32_t field = 0;
    bool gap = false;
    std::optional<std::string> bytes;     // pinned content
    std::optional<int64_t> required;      // value to back-fill
    std::optional<uint32_t> length;       // chosen length for plus tokens
};

struct OffsetFix {
    Relation rel;
    size_t first_leaf;   // first leaf of the target
    size_t source_leaf;
};

struct Planner {
    const StructureDoc& doc;
    const GenConfig& cfg;
    std::mt19937_64& rng;
    std::vector<Leaf> leaves;
    std::vector<std::map<uint32_t, size_t>> scopes;
    std::vector<OffsetFix> offsets;

    uint32_t uniform(uint32_t lo, uint32_t hi) {
        return lo + uint32_t(rng() % (uint64_t(hi) - lo + 1));
    }

    std::optional<size_t> lookup(uint32_t field) const {
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it) {
            auto f = it->find(field);
            if (f != it->end()) return f->second;
        }
        return std::nullopt;
    }

    // Known value of a planned leaf, if any.
    std::optional<int64_t> leaf_val(size_t li) const {
        const Leaf& l = leaves[li];
        if (l.required) return l.required;
        if (l.bytes) return int_value(*l.bytes);
        return std::nullopt;
    }

    // Choose `raw` so that raw == chosen - adjust is encodable in the source
    // token, or take the pinned value.
    std::optional<int64_t> bind_source(size_t li, int64_t lo, int64_t hi, int adjust) {
        auto known = leaf_val(li);
        if (known) {
            int64_t c = *known + adjust;
            if (c < lo || c > hi) return std::nullopt;
            return c;
        }
        const Token& tok = doc.tokens[leaves[li].field];
        for (int tries = 0; tries < 64; ++tries) {
            int64_t c = int64_t(uniform(uint32_t(lo), uint32_t(hi)));
            auto enc = encode_value(tok, c - adjust, cfg.max_varlen);
            if (!enc) continue;
            leaves[li].required = c - adjust;
            return c;
        }
        return std::nullopt;
    }

    uint32_t fixed_body_width(uint32_t node) const {
        // Byte width of an array body when every leaf is fixed; 0 otherwise.
        const StructureNode& n = doc.nodes[node];
        if (n.kind == NodeKind::ATOMIC) {
            const Token& t = doc.tokens[n.field];
            return t.plus ? 0 : uint32_t(t.units.size());
        }
        if (n.kind != NodeKind::RECORD) return 0;
        uint32_t w = 0;
        for (uint32_t k : n.kids) {
            uint32_t kw = fixed_body_width(k);
            if (!kw) return 0;
            w += kw;
        }
        return w;
    }

    bool plan(uint32_t node) {
        const StructureNode& n = doc.nodes[node];
        switch (n.kind) {
            case NodeKind::ATOMIC: {
                Leaf l;
                l.field = n.field;
                l.gap = doc.fields[n.field].gap;
                const Token& tok = doc.tokens[n.field];
                if (tok.is_constant()) l.bytes = tok.constant_bytes();
                if (cfg.use_relations && tok.plus) {
                    for (const auto& r : n.constraints)
                        if (r.kind == RelKind::SIZE) {
                            size_t li = leaves.size();
                            leaves.push_back(l);
                            scopes.back()[n.field] = li;
                            auto sl = lookup_field(r.sources[0]);
                            if (!sl) return false;
                            auto len = bind_source(*sl, 1, cfg.max_varlen, r.adjust);
                            if (!len) return false;
                            leaves[li].length = uint32_t(*len);
                            note_offset(n, li);
                            return true;
                        }
                }
                size_t li = leaves.size();
                leaves.push_back(l);
                scopes.back()[n.field] = li;
                if (cfg.use_relations) note_offset(n, li);
                return true;
            }
            case NodeKind::RECORD: {
                size_t first = leaves.size();
                scopes.emplace_back();
                for (uint32_t k : n.kids)
                    if (!plan(k)) return false;
                scopes.pop_back();
                if (cfg.use_relations) note_offset(n, first);
                return true;
            }
            case NodeKind::ARRAY: {
                int64_t count = -1;
                if (cfg.use_relations) {
                    for (const auto& r : n.constraints) {
                        if (r.kind == RelKind::COUNT) {
                            auto sl = lookup_field(r.sources[0]);
                            if (!sl) return false;
                            auto c = bind_source(*sl, 1, cfg.max_array_count, r.adjust);
                            if (!c) return false;
                            count = *c;
                            break;
                        }
                        if (r.kind == RelKind::PRODUCT) {
                            auto s1 = lookup_field(r.sources[0]);
                            auto s2 = lookup_field(r.sources[1]);
                            if (!s1 || !s2) return false;
                            auto v1 = bind_source(*s1, 1, 4, 0);
                            if (!v1) return false;
                            auto v2 = bind_source(*s2, 1, int64_t(cfg.max_array_count) / *v1, 0);
                            if (!v2) return false;
                            count = *v1 * *v2;
                            break;
                        }
                        if (r.kind == RelKind::MODULUS) {
                            auto sl = lookup_field(r.sources[0]);
                            if (!sl) return false;
                            auto v = bind_source(*sl, 2, cfg.max_array_count, r.adjust);
                            if (!v) return false;
                            int64_t k = uniform(1, uint32_t(cfg.max_array_count / *v));
                            count = *v * k;
                            break;
                        }
                        if (r.kind == RelKind::SIZE) {
                            uint32_t w = fixed_body_width(n.kids[0]);
                            if (!w) continue;
                            auto sl = lookup_field(r.sources[0]);
                            if (!sl) return false;
                            auto sz = bind_source(*sl, w, int64_t(cfg.max_array_count) * w,
                                                  r.adjust);
                            if (!sz || *sz % w) return false;
                            count = *sz / w;
                            break;
                        }
                    }
                }
                if (count < 0) count = uniform(1, cfg.max_array_count);
                size_t first = leaves.size();
                for (int64_t i = 0; i < count; ++i) {
                    scopes.emplace_back();
                    bool ok = plan(n.kids[0]);
                    scopes.pop_back();
                    if (!ok) return false;
                }
                if (cfg.use_relations) note_offset(n, first);
                return true;
            }
            case NodeKind::OPTION: {
                uint32_t pick = uniform(0, uint32_t(n.kids.size()) - 1);
                return plan(n.kids[pick]);
            }
        }
        return false;
    }

    std::optional<size_t> lookup_field(const std::string& id) const {
        for (uint32_t f = 0; f < doc.fields.size(); ++f)
            if (doc.fields[f].id == id) return lookup(f);
        return std::nullopt;
    }

    void note_offset(const StructureNode& n, size_t first_leaf) {
        for (const auto& r : n.constraints)
            if (r.kind == RelKind::OFFSET) {
                auto sl = lookup_field(r.sources[0]);
                if (sl) offsets.push_back({r, first_leaf, *sl});
            }
    }
};

}  // namespace

std::string generate(const StructureDoc& doc, const GenConfig& cfg) {
    std::mt19937_64 rng(cfg.seed * 0x9e3779b97f4a7c15ull + 1);
    std::uniform_int_distribution<uint32_t> dist;
    for (int attempt = 0; attempt < 50; ++attempt) {
        Planner pl{doc, cfg, rng, {}, {}, {}};
        pl.scopes.emplace_back();
        if (!pl.plan(doc.root)) continue;

        // Materialize leaf bytes.
        std::vector<std::string> bytes(pl.leaves.size());
        bool ok = true;
        for (size_t i = 0; i < pl.leaves.size() && ok; ++i) {
            const Leaf& l = pl.leaves[i];
            const Token& tok = doc.tokens[l.field];
            if (l.required) {
                auto enc = encode_value(tok, *l.required, cfg.max_varlen);
                if (!enc) {
                    ok = false;
                    break;
                }
                bytes[i] = *enc;
                continue;
            }
            if (l.bytes) {
                bytes[i] = *l.bytes;
                continue;
            }
            size_t w = tok.units.size();
            size_t extra = 0;
            if (tok.plus) {
                size_t chosen = l.length ? *l.length : pl.uniform(uint32_t(w), cfg.max_varlen);
                extra = chosen > w ? chosen - w : 0;
            }
            std::string s;
            for (size_t u = 0; u < w + extra; ++u) {
                const Unit& unit = tok.units[std::min(u, w - 1)];
                s += char(unit_sample(unit, dist(rng)));
            }
            bytes[i] = s;
        }
        if (!ok) continue;

        // Offsets: move the nearest preceding gap, or back-fill the source.
        for (const auto& off : pl.offsets) {
            size_t start = 0;
            for (size_t i = 0; i < off.first_leaf; ++i) start += bytes[i].size();
            auto sval = pl.leaf_val(off.source_leaf);
            if (!sval) {
                auto src = int_value(bytes[off.source_leaf]);
                sval = src;
            }
            if (!sval) {
                ok = false;
                break;
            }
            int64_t want = *sval + off.rel.adjust;
            int64_t delta = want - int64_t(start);
            if (delta == 0) continue;
            bool fixed = false;
            for (size_t i = off.first_leaf; i-- > 0;) {
                if (!pl.leaves[i].gap) continue;
                int64_t nl = int64_t(bytes[i].size()) + delta;
                if (nl < 0) break;
                bytes[i].resize(size_t(nl), '\0');
                fixed = true;
                break;
            }
            if (!fixed) {
                // Try encoding the actual position into the source instead.
                auto enc = encode_value(doc.tokens[pl.leaves[off.source_leaf].field],
                                        int64_t(start) - off.rel.adjust, cfg.max_varlen);
                if (!enc) {
                    ok = false;
                    break;
                }
                bytes[off.source_leaf] = *enc;
            }
        }
        if (!ok) continue;

        std::string out;
        std::vector<uint32_t> seq;
        std::vector<ByteInterval> ivs;
        for (size_t i = 0; i < bytes.size(); ++i) {
            uint32_t s = uint32_t(out.size());
            out += bytes[i];
            seq.push_back(pl.leaves[i].field);
            ivs.push_back({s, uint32_t(out.size())});
        }

        // Self-check: the result must parse under the grammar and satisfy
        // every mined relation.
        try {
            StructureDoc check = doc;
            check.seq = seq;
            check.witness = match_sequence(check, seq, &ivs);
            bool tokens_ok = true;
            for (size_t i = 0; i < seq.size(); ++i)
                if (!doc.tokens[seq[i]].matches(bytes[i])) tokens_ok = false;
            if (!tokens_ok) continue;
            if (cfg.use_relations && !verify_relations(check, out)) continue;
        } catch (const TraceError&) {
            continue;
        }
        return out;
    }
    throw TraceError("generation failed after 50 attempts");
}

}  // namespace gi
