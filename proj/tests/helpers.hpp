#pragma once

// Shared oracles for the property tests. Everything here is implemented
// independently of src/ so the tests cross-check rather than restate.

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cdg.hpp"
#include "structure.hpp"
#include "trace_model.hpp"

namespace oracle {

// --- Random single-function CFGs -------------------------------------------

struct RandomCfg {
    gi::CfgPackage cfg;
    int n = 0;  // block count; block ids are b0..b{n-1}, entry b0
};

inline RandomCfg random_cfg(std::mt19937_64& rng, int max_blocks) {
    RandomCfg r;
    std::uniform_int_distribution<int> nb(2, max_blocks);
    r.n = nb(rng);
    std::uniform_int_distribution<int> tgt(0, r.n - 1);
    std::uniform_int_distribution<int> kind(0, 9);
    for (int i = 0; i < r.n; ++i) {
        gi::CfgBlock b;
        b.id = "b" + std::to_string(i);
        b.insns = {"x" + std::to_string(i)};
        r.cfg.blocks.push_back(b);
        int k = kind(rng);
        if (k < 2 || (i == r.n - 1 && k < 5)) {
            r.cfg.exits["f"].push_back(b.id);
        } else if (k < 5) {
            r.cfg.edges.emplace_back(b.id, "b" + std::to_string(tgt(rng)));
        } else {
            r.cfg.edges.emplace_back(b.id, "b" + std::to_string(tgt(rng)));
            r.cfg.edges.emplace_back(b.id, "b" + std::to_string(tgt(rng)));
        }
    }
    // Every block must be able to reach an exit: the post-dominator relation
    // over closed loops is not tree-shaped and is out of scope.
    for (bool fixed = true; fixed;) {
        fixed = false;
        std::set<std::string> can_exit(r.cfg.exits["f"].begin(), r.cfg.exits["f"].end());
        for (bool grew = true; grew;) {
            grew = false;
            for (const auto& [a, b] : r.cfg.edges)
                if (can_exit.count(b) && can_exit.insert(a).second) grew = true;
        }
        for (int i = 0; i < r.n; ++i) {
            std::string id = "b" + std::to_string(i);
            if (!can_exit.count(id)) {
                r.cfg.exits["f"].push_back(id);
                fixed = true;
                break;
            }
        }
    }
    r.cfg.functions.push_back({"f", "b0"});
    r.cfg.validate();
    return r;
}

// Brute-force control dependence for one function: b depends on a iff a has
// an edge to some s with b post-dominating s, and b does not strictly
// post-dominate a. Post-dominance by removal reachability against a virtual
// exit; self-dependence excluded (matching compute_icdg).
inline std::map<std::string, std::set<std::string>> brute_cdeps(const gi::CfgPackage& cfg,
                                                                const std::string& fn) {
    std::string entry;
    for (const auto& f : cfg.functions)
        if (f.id == fn) entry = f.entry;
    // Reachable blocks.
    std::set<std::string> reach;
    std::vector<std::string> work{entry};
    while (!work.empty()) {
        std::string b = work.back();
        work.pop_back();
        if (!reach.insert(b).second) continue;
        for (const auto& [x, y] : cfg.edges)
            if (x == b) work.push_back(y);
    }
    const std::string vexit = "<exit>";
    std::set<std::string> exits;
    auto it = cfg.exits.find(fn);
    if (it != cfg.exits.end()) exits.insert(it->second.begin(), it->second.end());
    auto succs = [&](const std::string& b) {
        std::vector<std::string> out;
        for (const auto& [x, y] : cfg.edges)
            if (x == b && reach.count(y)) out.push_back(y);
        if (exits.count(b) || out.empty()) out.push_back(vexit);
        return out;
    };
    // reach_exit(from, removed): can `from` reach vexit avoiding `removed`?
    auto reach_exit = [&](const std::string& from, const std::string& removed) {
        if (from == removed) return from == vexit;
        std::set<std::string> seen;
        std::vector<std::string> stk{from};
        while (!stk.empty()) {
            std::string b = stk.back();
            stk.pop_back();
            if (b == vexit) return true;
            if (!seen.insert(b).second) continue;
            for (const auto& s : succs(b))
                if (s != removed) stk.push_back(s);
        }
        return false;
    };
    auto pdom = [&](const std::string& b, const std::string& x) {
        if (b == x) return true;
        return !reach_exit(x, b);
    };
    std::map<std::string, std::set<std::string>> deps;
    for (const std::string& a : reach) {
        auto ss = succs(a);
        for (const std::string& b : reach) {
            if (b == a) continue;
            bool post_any = false;
            for (const auto& s : ss)
                if (s != vexit && pdom(b, s)) post_any = true;
            if (post_any && !pdom(b, a)) deps[b].insert(a);
        }
    }
    return deps;
}

// --- Reference tandem folding ----------------------------------------------

// Independent reimplementation over canonical strings: atoms render as the
// symbol number, records as R(a,b,...), arrays as A(body). Fold rule:
// leftmost position, then smallest period (capped at 64), maximal copies;
// adjacent equal arrays merge; flat copies of an array's record body wrap.
struct RefFold {
    std::vector<std::string> items;

    static std::string atom(uint32_t sym) { return std::to_string(sym); }

    bool step() {
        size_t n = items.size();
        for (size_t pos = 0; pos < n; ++pos) {
            size_t maxp = std::min<size_t>(64, (n - pos) / 2);
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
                if (p == 1 && items[pos].starts_with("A(")) {
                    items.erase(items.begin() + pos + 1, items.begin() + pos + m);
                    return true;
                }
                std::string body;
                if (p == 1) {
                    body = items[pos];
                } else {
                    body = "R(";
                    for (size_t i = 0; i < p; ++i) body += items[pos + i] + (i + 1 < p ? "," : "");
                    body += ")";
                }
                items.erase(items.begin() + pos, items.begin() + pos + m * p);
                items.insert(items.begin() + pos, "A(" + body + ")");
                return true;
            }
        }
        return false;
    }

    // Record bodies (with >= 2 components) of arrays anywhere inside `s`.
    static void collect_bodies(const std::string& s, std::set<std::string>& out) {
        for (size_t i = 0; i + 4 < s.size(); ++i) {
            if (s.compare(i, 4, "A(R(") != 0) continue;
            int depth = 0;
            for (size_t j = i + 2; j < s.size(); ++j) {
                if (s[j] == '(') ++depth;
                if (s[j] == ')' && --depth == 0) {
                    out.insert(s.substr(i + 2, j - i - 1));
                    break;
                }
            }
        }
    }

    static std::vector<std::string> components(const std::string& record) {
        // record == "R(a,b,...)"; split at top level commas.
        std::vector<std::string> out;
        int depth = 0;
        std::string cur;
        for (size_t i = 2; i + 1 < record.size(); ++i) {
            char c = record[i];
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ',' && depth == 0) {
                out.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(cur);
        return out;
    }

    bool wrap() {
        std::set<std::string> bodies;
        for (const auto& it : items) collect_bodies(it, bodies);
        for (const auto& body : bodies) {
            auto comps = components(body);
            if (comps.size() < 2) continue;
            for (size_t pos = 0; pos + comps.size() <= items.size(); ++pos) {
                bool eq = true;
                for (size_t i = 0; i < comps.size() && eq; ++i) eq = items[pos + i] == comps[i];
                if (!eq) continue;
                items.erase(items.begin() + pos, items.begin() + pos + comps.size());
                items.insert(items.begin() + pos, "A(" + body + ")");
                return true;
            }
        }
        return false;
    }

    std::string run(const std::vector<uint32_t>& seq) {
        items.clear();
        for (uint32_t s : seq) items.push_back(atom(s));
        for (;;) {
            while (step()) {
            }
            if (!wrap()) break;
        }
        if (items.size() == 1) return items[0];
        std::string out = "R(";
        for (size_t i = 0; i < items.size(); ++i) out += items[i] + (i + 1 < items.size() ? "," : "");
        return out + ")";
    }
};

// Canonical rendering of a structure doc's shape for comparison with RefFold.
inline std::string shape_string(const gi::StructureDoc& doc, uint32_t node) {
    const gi::StructureNode& n = doc.nodes[node];
    switch (n.kind) {
        case gi::NodeKind::ATOMIC:
            return std::to_string(n.field);
        case gi::NodeKind::ARRAY:
            return "A(" + shape_string(doc, n.kids[0]) + ")";
        case gi::NodeKind::RECORD:
        case gi::NodeKind::OPTION: {
            std::string out = n.kind == gi::NodeKind::RECORD ? "R(" : "O(";
            for (size_t i = 0; i < n.kids.size(); ++i)
                out += shape_string(doc, n.kids[i]) + (i + 1 < n.kids.size() ? "," : "");
            return out + ")";
        }
    }
    return "?";
}

// Leftmost-then-smallest-period tandem repeat, or nullopt-style {-1,-1}.
inline std::pair<int, int> first_tandem(const std::vector<uint32_t>& seq) {
    int n = int(seq.size());
    for (int pos = 0; pos < n; ++pos)
        for (int p = 1; pos + 2 * p <= n && p <= 64; ++p) {
            bool eq = true;
            for (int i = 0; i < p && eq; ++i) eq = seq[pos + i] == seq[pos + p + i];
            if (eq) return {pos, p};
        }
    return {-1, -1};
}

// --- Random taint values for TIG tests -------------------------------------

inline std::vector<gi::Value> random_values(std::mt19937_64& rng, uint32_t input_len,
                                            int max_intervals) {
    std::uniform_int_distribution<int> cnt(1, max_intervals);
    std::uniform_int_distribution<uint32_t> pos(0, input_len - 1);
    std::uniform_int_distribution<uint32_t> use(0, 5);
    std::map<gi::ByteInterval, std::set<gi::UsePair>> acc;
    int k = cnt(rng);
    for (int i = 0; i < k; ++i) {
        uint32_t a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        gi::ByteInterval iv{a, b + 1};
        acc[iv].insert(gi::make_use(use(rng), use(rng)));
    }
    std::vector<gi::Value> out;
    for (auto& [iv, uses] : acc) out.push_back({iv, {uses.begin(), uses.end()}});
    return out;
}

}  // namespace oracle
