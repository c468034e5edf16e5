#include "field_partition.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace gi {

std::vector<Value> extract_values(const TaintTrace& trace) {
    // Flat sort-and-group; node-based containers are too heavy for large traces.
    std::vector<std::pair<ByteInterval, UsePair>> pairs;
    size_t total = 0;
    for (const auto& t : trace.tuples) total += t.taints.size();
    pairs.reserve(total);
    for (const auto& t : trace.tuples) {
        UsePair u = make_use(t.addr, t.ctx);
        for (const auto& iv : t.taints) pairs.emplace_back(iv, u);
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    std::vector<Value> out;
    for (size_t i = 0; i < pairs.size();) {
        size_t j = i;
        while (j < pairs.size() && pairs[j].first == pairs[i].first) ++j;
        Value v;
        v.iv = pairs[i].first;
        v.uses.reserve(j - i);
        for (size_t k = i; k < j; ++k) v.uses.push_back(pairs[k].second);
        out.push_back(std::move(v));
        i = j;
    }
    return out;
}

std::vector<Field> group_fields(const std::vector<Value>& values) {
    std::map<std::vector<UsePair>, std::vector<ByteInterval>> by_si;
    for (const auto& v : values) by_si[v.uses].push_back(v.iv);
    std::vector<Field> fields;
    for (auto& [si, ivs] : by_si) {
        std::sort(ivs.begin(), ivs.end(), [](const ByteInterval& a, const ByteInterval& b) {
            return a.start != b.start ? a.start < b.start : a.len() > b.len();
        });
        fields.push_back(Field{"", si, ivs});
    }
    // Number F0.. by first-occurrence offset; ties by longer interval first.
    std::sort(fields.begin(), fields.end(), [](const Field& a, const Field& b) {
        const auto& x = a.values.front();
        const auto& y = b.values.front();
        return x.start != y.start ? x.start < y.start : x.len() > y.len();
    });
    for (size_t i = 0; i < fields.size(); ++i) fields[i].id = "F" + std::to_string(i);
    return fields;
}

std::vector<uint32_t> field_sequence(const std::vector<Field>& fields, uint32_t input_length) {
    std::vector<std::pair<ByteInterval, uint32_t>> tiles;
    for (uint32_t f = 0; f < fields.size(); ++f)
        for (const auto& iv : fields[f].values) tiles.emplace_back(iv, f);
    std::sort(tiles.begin(), tiles.end());
    uint32_t pos = 0;
    std::vector<uint32_t> seq;
    for (const auto& [iv, f] : tiles) {
        if (iv.start != pos)
            throw TraceError("field sequence coverage hole at offset " + std::to_string(pos));
        seq.push_back(f);
        pos = iv.end;
    }
    if (pos != input_length)
        throw TraceError("field sequence stops short of input end");
    return seq;
}

std::vector<FieldTraceEntry> make_field_trace(const TaintTrace& trace,
                                              const std::vector<Field>& fields) {
    std::map<ByteInterval, uint32_t> field_of;
    for (uint32_t f = 0; f < fields.size(); ++f)
        for (const auto& iv : fields[f].values) field_of[iv] = f;
    std::vector<FieldTraceEntry> out;
    for (const auto& t : trace.tuples)
        for (const auto& iv : t.taints) {
            auto it = field_of.find(iv);
            if (it != field_of.end()) out.push_back({t.addr, t.ctx, it->second});
        }
    return out;
}

namespace {
struct UnionFind {
    std::vector<uint32_t> parent;
    explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
    uint32_t find(uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(uint32_t a, uint32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};
}  // namespace

std::vector<uint32_t> co_occurrence_classes(const std::vector<Field>& fields) {
    UnionFind uf(fields.size());
    // Fields co-occur when they share an instruction address (contexts are
    // ignored; the ICDG side of the analysis is context-free as well).
    std::map<uint32_t, uint32_t> first_with_addr;
    for (uint32_t f = 0; f < fields.size(); ++f) {
        std::set<uint32_t> addrs;
        for (UsePair u : fields[f].si) addrs.insert(use_addr(u));
        for (uint32_t a : addrs) {
            auto [it, fresh] = first_with_addr.emplace(a, f);
            if (!fresh) uf.unite(it->second, f);
        }
    }
    std::vector<uint32_t> cls(fields.size());
    for (uint32_t f = 0; f < fields.size(); ++f) cls[f] = uf.find(f);
    return cls;
}

std::vector<std::vector<UsePair>> compute_new_si(const std::vector<Field>& fields) {
    auto cls = co_occurrence_classes(fields);
    std::map<uint32_t, std::set<UsePair>> unions;
    for (uint32_t f = 0; f < fields.size(); ++f)
        unions[cls[f]].insert(fields[f].si.begin(), fields[f].si.end());
    std::vector<std::vector<UsePair>> out(fields.size());
    for (uint32_t f = 0; f < fields.size(); ++f) {
        const auto& u = unions[cls[f]];
        out[f].assign(u.begin(), u.end());
    }
    return out;
}

std::string field_bytes(const TaintTrace& trace, const ByteInterval& iv) {
    return trace.input.substr(iv.start, iv.len());
}

std::string dump_fields(const TaintTrace& trace, const std::vector<Field>& fields) {
    std::ostringstream out;
    for (const auto& f : fields) {
        std::string preview = f.values.empty() ? "" : field_bytes(trace, f.values.front());
        for (char& c : preview)
            if (uint8_t(c) < 0x20 || uint8_t(c) > 0x7e) c = '.';
        if (preview.size() > 16) preview = preview.substr(0, 16) + "...";
        out << f.id << (f.gap ? " (gap)" : "") << "  values=" << f.values.size()
            << "  |SI|=" << f.si.size() << "  \"" << preview << "\"\n";
    }
    return out.str();
}

}  // namespace gi
