#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>

namespace gi {

double StageTimes::of(const std::string& name) const {
    for (const auto& [n, t] : stages)
        if (n == name) return t;
    return 0.0;
}

FrontierFields fields_from_frontier(const TigTree& tree, const Frontier& frontier,
                                    const TaintTrace& trace) {
    FrontierFields out;
    // Group key: the use set for proper nodes, the byte length for gaps
    // (gap content is opaque; same-width gaps play the same role).
    std::map<std::pair<std::vector<UsePair>, uint32_t>, uint32_t> groups;
    std::vector<std::vector<ByteInterval>> ivs_of;
    std::vector<bool> gap_of;
    std::vector<std::vector<UsePair>> si_of;
    std::vector<uint32_t> raw_seq;
    for (uint32_t n : frontier) {
        const TigNode& node = tree.at(n);
        bool gap = node.gap || node.uses.empty();
        auto key = gap ? std::make_pair(std::vector<UsePair>{}, node.iv.len())
                       : std::make_pair(node.uses, 0u);
        auto [it, fresh] = groups.emplace(key, uint32_t(ivs_of.size()));
        if (fresh) {
            ivs_of.emplace_back();
            gap_of.push_back(gap);
            si_of.push_back(gap ? std::vector<UsePair>{} : node.uses);
        }
        ivs_of[it->second].push_back(node.iv);
        raw_seq.push_back(it->second);
        out.intervals.push_back(node.iv);
    }
    // Number F0.. by first occurrence (start, longer first).
    std::vector<uint32_t> order(ivs_of.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
        const auto& x = ivs_of[a].front();
        const auto& y = ivs_of[b].front();
        return x.start != y.start ? x.start < y.start : x.len() > y.len();
    });
    std::vector<uint32_t> renum(ivs_of.size());
    for (uint32_t i = 0; i < order.size(); ++i) renum[order[i]] = i;
    out.fields.resize(ivs_of.size());
    out.values.resize(ivs_of.size());
    out.tokens.resize(ivs_of.size());
    for (uint32_t g = 0; g < ivs_of.size(); ++g) {
        uint32_t f = renum[g];
        Field& fld = out.fields[f];
        fld.id = "F" + std::to_string(f);
        fld.gap = gap_of[g];
        fld.si = si_of[g];
        fld.values = ivs_of[g];
        std::sort(fld.values.begin(), fld.values.end());
        for (const auto& iv : fld.values)
            out.values[f].push_back(trace.input.substr(iv.start, iv.len()));
        if (fld.gap) {
            Token t;
            t.units.assign(fld.values.front().len(), Unit{UnitClass::ALL, 0});
            out.tokens[f] = t;
        } else {
            out.tokens[f] = infer_token(out.values[f]);
        }
    }
    for (uint32_t g : raw_seq) out.seq.push_back(renum[g]);
    return out;
}

AnalysisResult analyze(const TaintTrace& trace, const CfgPackage& cfg) {
    using Clock = std::chrono::steady_clock;
    AnalysisResult res;
    auto t0 = Clock::now();

    // Partition: distinct values, the interval graph, the selected frontier,
    // and the field set it induces.
    auto values = extract_values(trace);
    res.tig = build_tig(values, trace.input_length());
    auto fmap = frontiers(res.tig);
    auto frontier = select_frontier(res.tig, fmap);
    FrontierFields ff = fields_from_frontier(res.tig, frontier, trace);
    auto t1 = Clock::now();

    // Structure: folding plus boundary repair to a fixpoint.
    FieldEvidence ev = make_evidence(ff.fields);
    for (uint32_t f = 0; f < ff.fields.size(); ++f) {
        ev.constant[f] = ff.tokens[f].is_constant();
        if (ev.constant[f]) ev.const_bytes[f] = ff.tokens[f].constant_bytes();
    }
    res.doc = build_structure(ff.seq, ff.fields, ff.values, ff.tokens, &ev, &ff.intervals);
    for (int i = 0; i < 4; ++i) {
        StructureDoc next = repair_array_boundaries(res.doc);
        bool same = next.fields.size() == res.doc.fields.size() && next.seq == res.doc.seq;
        res.doc = std::move(next);
        if (same) break;
    }
    auto t2 = Clock::now();

    // Dependence graph.
    res.icdg = compute_icdg(cfg);
    {
        std::vector<std::vector<std::string>> addrs(res.doc.fields.size());
        for (size_t f = 0; f < res.doc.fields.size(); ++f) {
            std::map<uint32_t, bool> seen;
            for (UsePair u : res.doc.fields[f].si)
                if (seen.emplace(use_addr(u), true).second)
                    addrs[f].push_back(trace.name_of(use_addr(u)));
        }
        res.field_blocks = annotate_fields(res.icdg, cfg, addrs);
    }
    auto t3 = Clock::now();

    // Relations.
    auto sources = project_graph(res.icdg, res.field_blocks, res.doc.fields.size());
    mine_relations(res.doc, trace.input, sources);
    auto t4 = Clock::now();

    auto secs = [](auto a, auto b) {
        return std::chrono::duration<double>(b - a).count();
    };
    res.times.stages = {{"partition", secs(t0, t1)},
                        {"structure", secs(t1, t2)},
                        {"icdg", secs(t2, t3)},
                        {"semantics", secs(t3, t4)}};
    return res;
}

}  // namespace gi
