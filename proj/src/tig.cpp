#include "tig.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace gi {

namespace {

struct WorkInterval {
    ByteInterval iv;
    std::vector<UsePair> uses;
    bool fragment = false;
};

bool partial_overlap(const ByteInterval& a, const ByteInterval& b) {
    bool intersect = a.start < b.end && b.start < a.end;
    return intersect && !a.contains(b) && !b.contains(a);
}

}  // namespace

TigTree build_tig(const std::vector<Value>& values, uint32_t input_length) {
    // Start from the distinct intervals.
    std::vector<WorkInterval> work;
    work.reserve(values.size());
    for (const auto& v : values) work.push_back({v.iv, v.uses, false});

    // Overlap splitting: cut every partially-overlapping interval at all
    // mutual boundaries until the set nests cleanly.
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<std::set<uint32_t>> cuts(work.size());
        std::vector<size_t> order(work.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return work[a].iv < work[b].iv;
        });
        for (size_t oi = 0; oi < order.size(); ++oi) {
            for (size_t oj = oi + 1; oj < order.size(); ++oj) {
                const auto& a = work[order[oi]].iv;
                const auto& b = work[order[oj]].iv;
                if (b.start >= a.end) break;
                if (partial_overlap(a, b)) {
                    if (b.start > a.start && b.start < a.end) cuts[order[oi]].insert(b.start);
                    if (b.end > a.start && b.end < a.end) cuts[order[oi]].insert(b.end);
                    if (a.start > b.start && a.start < b.end) cuts[order[oj]].insert(a.start);
                    if (a.end > b.start && a.end < b.end) cuts[order[oj]].insert(a.end);
                }
            }
        }
        std::vector<WorkInterval> next;
        for (size_t i = 0; i < work.size(); ++i) {
            if (cuts[i].empty()) {
                next.push_back(std::move(work[i]));
                continue;
            }
            changed = true;
            uint32_t pos = work[i].iv.start;
            auto emit = [&](uint32_t end) {
                if (end > pos) next.push_back({{pos, end}, {}, true});
                pos = end;
            };
            for (uint32_t c : cuts[i]) emit(c);
            emit(work[i].iv.end);
        }
        work = std::move(next);
        if (changed) {
            // Fragments may duplicate each other or originals; dedupe.
            std::map<ByteInterval, WorkInterval> uniq;
            for (auto& w : work) {
                auto [it, fresh] = uniq.emplace(w.iv, w);
                if (!fresh) {
                    std::set<UsePair> merged(it->second.uses.begin(), it->second.uses.end());
                    merged.insert(w.uses.begin(), w.uses.end());
                    it->second.uses.assign(merged.begin(), merged.end());
                    it->second.fragment = it->second.fragment && w.fragment;
                }
            }
            work.clear();
            for (auto& [iv, w] : uniq) work.push_back(std::move(w));
        }
    }

    // Fragments inherit the use sets of every original interval containing them.
    for (auto& w : work) {
        if (!w.fragment) continue;
        std::set<UsePair> uses(w.uses.begin(), w.uses.end());
        for (const auto& v : values)
            if (v.iv.contains(w.iv)) uses.insert(v.uses.begin(), v.uses.end());
        w.uses.assign(uses.begin(), uses.end());
    }

    // Containment tree via a stack over (start asc, longer first).
    std::sort(work.begin(), work.end(), [](const WorkInterval& a, const WorkInterval& b) {
        return a.iv.start != b.iv.start ? a.iv.start < b.iv.start : a.iv.len() > b.iv.len();
    });
    TigTree tree;
    tree.nodes.push_back(TigNode{{0, input_length}, {}, false, {}});
    tree.root = 0;
    std::vector<uint32_t> stack{0};
    for (auto& w : work) {
        if (w.iv == tree.nodes[tree.root].iv) {
            tree.nodes[tree.root].uses = w.uses;  // whole-input value merges into the root
            continue;
        }
        while (!tree.nodes[stack.back()].iv.contains(w.iv)) stack.pop_back();
        uint32_t id = uint32_t(tree.nodes.size());
        tree.nodes.push_back(TigNode{w.iv, std::move(w.uses), false, {}});
        tree.nodes[stack.back()].kids.push_back(id);
        stack.push_back(id);
    }

    // Gap filling: internal nodes get GAP children so the kids tile exactly.
    size_t original = tree.nodes.size();
    for (uint32_t n = 0; n < original; ++n) {
        if (tree.nodes[n].kids.empty()) continue;
        std::vector<uint32_t> tiled;
        uint32_t pos = tree.nodes[n].iv.start;
        auto add_gap = [&](uint32_t from, uint32_t to) {
            uint32_t id = uint32_t(tree.nodes.size());
            tree.nodes.push_back(TigNode{{from, to}, {}, true, {}});
            tiled.push_back(id);
        };
        for (uint32_t k : tree.nodes[n].kids) {
            uint32_t ks = tree.nodes[k].iv.start, ke = tree.nodes[k].iv.end;
            if (ks > pos) add_gap(pos, ks);
            tiled.push_back(k);
            pos = ke;
        }
        if (pos < tree.nodes[n].iv.end) add_gap(pos, tree.nodes[n].iv.end);
        tree.nodes[n].kids = std::move(tiled);
    }
    return tree;
}

namespace {

std::string si_key(const std::vector<UsePair>& uses) {
    std::string k;
    for (UsePair u : uses) {
        k += std::to_string(use_addr(u));
        k += ':';
        k += std::to_string(use_ctx(u));
        k += ',';
    }
    return k;
}

// Frontier obtained by expanding every node on the path from root to target.
void cover(const TigTree& t, uint32_t node, const std::set<uint32_t>& path, Frontier& out) {
    if (path.count(node) && !t.at(node).kids.empty()) {
        for (uint32_t k : t.at(node).kids) cover(t, k, path, out);
    } else {
        out.push_back(node);
    }
}

}  // namespace

FrontierMap frontiers(const TigTree& tree, const SiProjection& project) {
    auto key_of = [&](const TigNode& n) {
        return project ? project(n.uses) : si_key(n.uses);
    };
    FrontierMap map;
    // Root frontier.
    FrontierEntry root_entry;
    root_entry.key = "ROOT";
    root_entry.depth = 0;
    root_entry.leftmost = 0;
    if (tree.at(tree.root).kids.empty())
        root_entry.nodes.push_back(tree.root);
    else
        root_entry.nodes = tree.at(tree.root).kids;
    map.entries.push_back(std::move(root_entry));

    // DFS emitting one frontier per (node, repeating child SI).
    struct Item {
        uint32_t node;
        uint32_t depth;
        std::vector<uint32_t> path;
    };
    std::vector<Item> stack{{tree.root, 0, {tree.root}}};
    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        const TigNode& n = tree.at(it.node);
        if (n.kids.empty()) continue;
        std::map<std::string, std::vector<uint32_t>> groups;
        for (uint32_t k : n.kids) {
            const TigNode& kn = tree.at(k);
            if (kn.gap || kn.uses.empty()) continue;
            groups[key_of(kn)].push_back(k);
        }
        std::set<uint32_t> path(it.path.begin(), it.path.end());
        for (const auto& [key, members] : groups) {
            if (members.size() < 2) continue;
            FrontierEntry e;
            e.key = key;
            e.depth = it.depth;
            e.leftmost = tree.at(members.front()).iv.start;
            cover(tree, tree.root, path, e.nodes);
            map.entries.push_back(std::move(e));
        }
        for (uint32_t k : n.kids) {
            if (tree.at(k).kids.empty()) continue;
            Item sub;
            sub.node = k;
            sub.depth = it.depth + 1;
            sub.path = it.path;
            sub.path.push_back(k);
            stack.push_back(std::move(sub));
        }
    }
    return map;
}

static bool has_repetition(const TigTree& tree, const Frontier& f) {
    std::map<std::string, int> seen;
    for (uint32_t n : f) {
        const TigNode& node = tree.at(n);
        if (node.gap || node.uses.empty()) continue;
        if (++seen[si_key(node.uses)] >= 2) return true;
    }
    return false;
}

Frontier select_frontier(const TigTree& tree, const FrontierMap& map) {
    const FrontierEntry* best = nullptr;
    for (const auto& e : map.entries) {
        if (e.key == "ROOT") continue;
        if (!has_repetition(tree, e.nodes)) continue;
        if (!best || std::tie(e.depth, e.leftmost, e.key) <
                         std::tie(best->depth, best->leftmost, best->key))
            best = &e;
    }
    if (best) return best->nodes;
    // No repetition anywhere: coarsest frontier (the root's children).
    return map.entries.front().nodes;
}

std::string tig_dot(const TigTree& tree, const TaintTrace& trace) {
    std::ostringstream out;
    out << "digraph tig {\n  node [shape=box];\n";
    for (uint32_t i = 0; i < tree.nodes.size(); ++i) {
        const TigNode& n = tree.nodes[i];
        std::string preview = trace.input.substr(n.iv.start, std::min<uint32_t>(n.iv.len(), 12));
        std::string esc;
        for (char c : preview) {
            if (c == '"' || c == '\\') esc += '\\';
            esc += (uint8_t(c) >= 0x20 && uint8_t(c) <= 0x7e) ? c : '.';
        }
        out << "  n" << i << " [label=\"" << (n.gap ? "GAP " : "") << "[" << n.iv.start << ","
            << n.iv.end << ")\\n" << esc << "\"];\n";
    }
    for (uint32_t i = 0; i < tree.nodes.size(); ++i)
        for (uint32_t k : tree.nodes[i].kids) out << "  n" << i << " -> n" << k << ";\n";
    out << "}\n";
    return out.str();
}

}  // namespace gi
