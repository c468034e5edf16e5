#include <doctest.h>

#include <random>
#include <set>

#include "../tests/helpers.hpp"
#include "field_partition.hpp"
#include "tig.hpp"
#include "vm.hpp"

using namespace gi;

namespace {

// Parent of each node, from the kids lists.
std::vector<int> parents(const TigTree& t) {
    std::vector<int> p(t.nodes.size(), -1);
    for (uint32_t i = 0; i < t.nodes.size(); ++i)
        for (uint32_t k : t.nodes[i].kids) p[k] = int(i);
    return p;
}

void check_invariants(const TigTree& t, uint32_t input_len) {
    REQUIRE(!t.nodes.empty());
    CHECK(t.at(t.root).iv == ByteInterval{0, input_len});
    auto par = parents(t);
    for (uint32_t i = 0; i < t.nodes.size(); ++i) {
        const TigNode& n = t.at(i);
        CHECK(n.iv.start < n.iv.end);
        if (i != t.root) {
            REQUIRE(par[i] != -1);
            CHECK(t.at(par[i]).iv.contains(n.iv));
            CHECK(t.at(par[i]).iv != n.iv);
        }
        // Children tile the node exactly: ordered, adjacent, full cover.
        if (!n.kids.empty()) {
            uint32_t pos = n.iv.start;
            for (uint32_t k : n.kids) {
                CHECK(t.at(k).iv.start == pos);
                pos = t.at(k).iv.end;
            }
            CHECK(pos == n.iv.end);
        }
    }
    // Transitive reduction, brute force: no node fits strictly between a
    // node and its parent.
    for (uint32_t i = 0; i < t.nodes.size(); ++i) {
        if (i == t.root) continue;
        const auto& iv = t.at(i).iv;
        const auto& piv = t.at(par[i]).iv;
        for (uint32_t q = 0; q < t.nodes.size(); ++q) {
            if (q == i || q == uint32_t(par[i])) continue;
            const auto& qiv = t.at(q).iv;
            bool strictly_between =
                qiv.contains(iv) && qiv != iv && piv.contains(qiv) && qiv != piv;
            CHECK(!strictly_between);
        }
    }
}

}  // namespace

TEST_CASE("tig invariants hold on random interval multisets") {
    std::mt19937_64 rng(37);
    for (int it = 0; it < 300; ++it) {
        uint32_t len = 4 + uint32_t(rng() % 29);
        auto values = oracle::random_values(rng, len, 20);
        TigTree t = build_tig(values, len);
        check_invariants(t, len);
    }
}

TEST_CASE("overlapping intervals are split, never partially overlapping") {
    std::mt19937_64 rng(41);
    for (int it = 0; it < 200; ++it) {
        uint32_t len = 6 + uint32_t(rng() % 20);
        auto values = oracle::random_values(rng, len, 12);
        TigTree t = build_tig(values, len);
        for (uint32_t a = 0; a < t.nodes.size(); ++a)
            for (uint32_t b = 0; b < a; ++b) {
                const auto& x = t.at(a).iv;
                const auto& y = t.at(b).iv;
                bool disjoint = x.end <= y.start || y.end <= x.start;
                bool nested = x.contains(y) || y.contains(x);
                CHECK((disjoint || nested));
            }
    }
}

TEST_CASE("uncovered bytes become gap nodes") {
    std::vector<Value> values = {{{2, 4}, {make_use(1, 0)}}, {{6, 7}, {make_use(2, 0)}}};
    TigTree t = build_tig(values, 9);
    std::set<std::pair<uint32_t, uint32_t>> gaps;
    for (const auto& n : t.nodes)
        if (n.gap) gaps.insert({n.iv.start, n.iv.end});
    CHECK(gaps == std::set<std::pair<uint32_t, uint32_t>>{{0, 2}, {4, 6}, {7, 9}});
}

TEST_CASE("whole-input values merge into the root") {
    std::vector<Value> values = {{{0, 8}, {make_use(1, 0)}}, {{0, 4}, {make_use(2, 0)}},
                                 {{4, 8}, {make_use(3, 0)}}};
    TigTree t = build_tig(values, 8);
    CHECK(t.at(t.root).iv == ByteInterval{0, 8});
    // The [0,8) value is the root, not a duplicate child.
    size_t whole = 0;
    for (const auto& n : t.nodes)
        if (n.iv == ByteInterval{0, 8}) ++whole;
    CHECK(whole == 1);
    CHECK(t.at(t.root).kids.size() == 2);
}

TEST_CASE("sum_csv selects the ten-leaf frontier with repeating digits") {
    const Fixture& fx = fixture("sum_csv");
    auto run = run_trace(assemble(fx.program), fx.input);
    auto values = extract_values(run.trace);
    TigTree t = build_tig(values, run.trace.input_length());
    auto fmap = frontiers(t);
    REQUIRE(!fmap.entries.empty());
    Frontier sel = select_frontier(t, fmap);
    REQUIRE(sel.size() == 10);
    for (uint32_t i = 0; i < 10; ++i) CHECK(t.at(sel[i]).iv == ByteInterval{i, i + 1});
    // The selected entry's repetition key is a non-root SI (the digit/comma
    // run), i.e. repetition was actually exposed.
    bool repeating = false;
    for (const auto& e : fmap.entries)
        if (e.nodes == sel && e.key != "ROOT") repeating = true;
    CHECK(repeating);
}

TEST_CASE("frontiers cover the input exactly") {
    std::mt19937_64 rng(43);
    for (int it = 0; it < 100; ++it) {
        uint32_t len = 6 + uint32_t(rng() % 16);
        auto values = oracle::random_values(rng, len, 10);
        TigTree t = build_tig(values, len);
        auto fmap = frontiers(t);
        for (const auto& e : fmap.entries) {
            uint32_t pos = 0;
            for (uint32_t n : e.nodes) {
                CHECK(t.at(n).iv.start == pos);
                pos = t.at(n).iv.end;
            }
            CHECK(pos == len);
        }
        Frontier sel = select_frontier(t, fmap);
        uint32_t pos = 0;
        for (uint32_t n : sel) {
            CHECK(t.at(n).iv.start == pos);
            pos = t.at(n).iv.end;
        }
        CHECK(pos == len);
    }
}
