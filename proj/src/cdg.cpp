#include "cdg.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace gi {

uint32_t Icdg::index_of(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) throw TraceError("unknown block " + id);
    return it->second;
}

namespace {

struct FuncGraph {
    std::vector<std::string> blocks;  // blocks of one function, entry first
    std::map<std::string, uint32_t> idx;
    std::vector<std::vector<uint32_t>> succ;  // virtual exit is node `blocks.size()`
};

FuncGraph function_graph(const CfgPackage& cfg, const std::string& function) {
    FuncGraph g;
    std::string entry;
    for (const auto& f : cfg.functions)
        if (f.id == function) entry = f.entry;
    if (entry.empty()) throw TraceError("unknown function " + function);
    // Reachable blocks from the entry via intra edges.
    std::vector<std::string> stack{entry};
    while (!stack.empty()) {
        std::string b = stack.back();
        stack.pop_back();
        if (g.idx.count(b)) continue;
        g.idx.emplace(b, uint32_t(g.blocks.size()));
        g.blocks.push_back(b);
        for (const auto& [from, to] : cfg.edges)
            if (from == b) stack.push_back(to);
    }
    uint32_t vexit = uint32_t(g.blocks.size());
    g.succ.assign(g.blocks.size() + 1, {});
    std::set<std::string> exits;
    auto it = cfg.exits.find(function);
    if (it != cfg.exits.end()) exits.insert(it->second.begin(), it->second.end());
    for (uint32_t i = 0; i < g.blocks.size(); ++i) {
        for (const auto& [from, to] : cfg.edges)
            if (from == g.blocks[i]) g.succ[i].push_back(g.idx.at(to));
        if (exits.count(g.blocks[i]) || g.succ[i].empty()) g.succ[i].push_back(vexit);
    }
    return g;
}

// Post-dominator sets by fixpoint; graphs here are small.
std::vector<std::set<uint32_t>> postdom_sets(const FuncGraph& g) {
    uint32_t n = uint32_t(g.blocks.size());
    uint32_t vexit = n;
    std::set<uint32_t> all;
    for (uint32_t i = 0; i <= n; ++i) all.insert(i);
    std::vector<std::set<uint32_t>> pdom(n + 1, all);
    pdom[vexit] = {vexit};
    for (bool changed = true; changed;) {
        changed = false;
        for (uint32_t b = 0; b < n; ++b) {
            std::set<uint32_t> meet = all;
            for (uint32_t s : g.succ[b]) {
                std::set<uint32_t> inter;
                std::set_intersection(meet.begin(), meet.end(), pdom[s].begin(), pdom[s].end(),
                                      std::inserter(inter, inter.begin()));
                meet = std::move(inter);
            }
            meet.insert(b);
            if (meet != pdom[b]) {
                pdom[b] = std::move(meet);
                changed = true;
            }
        }
    }
    return pdom;
}

std::vector<uint32_t> immediate_of(const FuncGraph& g,
                                   const std::vector<std::set<uint32_t>>& pdom) {
    uint32_t n = uint32_t(g.blocks.size());
    uint32_t vexit = n;
    std::vector<uint32_t> ipdom(n + 1, vexit);
    ipdom[vexit] = vexit;
    for (uint32_t b = 0; b < n; ++b) {
        // The immediate post-dominator is the closest strict one: every other
        // strict post-dominator of b also post-dominates it, so its own set
        // is the largest.
        uint32_t best = vexit;
        size_t best_size = 0;
        for (uint32_t d : pdom[b]) {
            if (d == b) continue;
            if (pdom[d].size() > best_size) {
                best = d;
                best_size = pdom[d].size();
            }
        }
        ipdom[b] = best;
    }
    return ipdom;
}

}  // namespace

std::map<std::string, std::string> immediate_postdominators(const CfgPackage& cfg,
                                                            const std::string& function) {
    FuncGraph g = function_graph(cfg, function);
    auto pdom = postdom_sets(g);
    auto ipdom = immediate_of(g, pdom);
    std::map<std::string, std::string> out;
    for (uint32_t b = 0; b < g.blocks.size(); ++b)
        out[g.blocks[b]] = ipdom[b] == g.blocks.size() ? std::string() : g.blocks[ipdom[b]];
    return out;
}

Icdg compute_icdg(const CfgPackage& cfg) {
    Icdg g;
    for (const auto& b : cfg.blocks) {
        g.index.emplace(b.id, uint32_t(g.blocks.size()));
        g.blocks.push_back(b.id);
    }
    g.deps.assign(g.blocks.size(), {});
    std::vector<std::set<uint32_t>> deps(g.blocks.size());

    // Intra-procedural dependence (Ferrante et al.): for an edge a->s, the
    // blocks on the post-dominator path from s up to (excluding) ipdom(a)
    // depend on a.
    for (const auto& f : cfg.functions) {
        FuncGraph fg = function_graph(cfg, f.id);
        auto pdom = postdom_sets(fg);
        auto ipdom = immediate_of(fg, pdom);
        uint32_t vexit = uint32_t(fg.blocks.size());
        for (uint32_t a = 0; a < fg.blocks.size(); ++a) {
            for (uint32_t s : fg.succ[a]) {
                uint32_t stop = ipdom[a];
                for (uint32_t b = s; b != stop && b != vexit; b = ipdom[b]) {
                    if (b != a) deps[g.index.at(fg.blocks[b])].insert(g.index.at(fg.blocks[a]));
                }
            }
        }
    }

    // Call-site splicing: callee blocks with no guards of their own execute
    // exactly when the call does, so they inherit the call block's guards.
    // Iterate to a fixpoint so chains of calls propagate.
    std::map<std::string, std::vector<uint32_t>> callee_blocks;  // function -> icdg indices
    for (const auto& f : cfg.functions) {
        FuncGraph fg = function_graph(cfg, f.id);
        for (const auto& b : fg.blocks) callee_blocks[f.id].push_back(g.index.at(b));
    }
    std::vector<std::set<uint32_t>> intra = deps;
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& call : cfg.calls) {
            auto bit = cfg.block_of_insn.find(call.site);
            if (bit == cfg.block_of_insn.end()) continue;
            const auto& guards = deps[g.index.at(bit->second)];
            auto cit = callee_blocks.find(call.callee);
            if (cit == callee_blocks.end()) continue;
            for (uint32_t b : cit->second) {
                if (!intra[b].empty()) continue;
                for (uint32_t gd : guards)
                    if (deps[b].insert(gd).second) changed = true;
            }
        }
    }

    for (uint32_t b = 0; b < g.blocks.size(); ++b)
        g.deps[b].assign(deps[b].begin(), deps[b].end());
    return g;
}

std::vector<std::vector<uint32_t>> annotate_fields(
    const Icdg& g, const CfgPackage& cfg,
    const std::vector<std::vector<std::string>>& field_addrs) {
    std::vector<std::vector<uint32_t>> out(field_addrs.size());
    for (size_t f = 0; f < field_addrs.size(); ++f) {
        std::set<uint32_t> blocks;
        for (const auto& a : field_addrs[f]) {
            auto it = cfg.block_of_insn.find(a);
            if (it != cfg.block_of_insn.end()) blocks.insert(g.index.at(it->second));
        }
        out[f].assign(blocks.begin(), blocks.end());
    }
    return out;
}

std::vector<std::vector<uint32_t>> project_graph(
    const Icdg& g, const std::vector<std::vector<uint32_t>>& field_blocks,
    size_t field_count) {
    // Fields annotating each block.
    std::vector<std::vector<uint32_t>> fields_of(g.blocks.size());
    for (uint32_t f = 0; f < field_blocks.size(); ++f)
        for (uint32_t b : field_blocks[f]) fields_of[b].push_back(f);

    std::vector<std::vector<uint32_t>> sources(field_count);
    for (uint32_t f = 0; f < field_blocks.size(); ++f) {
        std::vector<uint32_t> stack(field_blocks[f].begin(), field_blocks[f].end());
        std::set<uint32_t> visited(stack.begin(), stack.end());
        while (!stack.empty()) {
            uint32_t b = stack.back();
            stack.pop_back();
            for (uint32_t d : g.deps[b])
                if (visited.insert(d).second) stack.push_back(d);
        }
        std::set<uint32_t> found;
        for (uint32_t b : visited)
            for (uint32_t sf : fields_of[b]) found.insert(sf);
        found.erase(f);
        sources[f].assign(found.begin(), found.end());
    }
    return sources;
}

std::string icdg_dot(const Icdg& g, const std::vector<std::vector<uint32_t>>* field_blocks,
                     const std::vector<std::string>* field_ids) {
    std::vector<std::string> labels(g.blocks.size());
    for (uint32_t i = 0; i < g.blocks.size(); ++i) labels[i] = g.blocks[i];
    if (field_blocks && field_ids) {
        for (uint32_t f = 0; f < field_blocks->size(); ++f)
            for (uint32_t b : (*field_blocks)[f]) labels[b] += "\\n" + (*field_ids)[f];
    }
    std::ostringstream out;
    out << "digraph icdg {\n  node [shape=box];\n";
    for (uint32_t i = 0; i < g.blocks.size(); ++i)
        out << "  n" << i << " [label=\"" << labels[i] << "\"];\n";
    for (uint32_t i = 0; i < g.blocks.size(); ++i)
        for (uint32_t d : g.deps[i]) out << "  n" << i << " -> n" << d << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace gi
