#include <doctest.h>

#include <functional>
#include <map>
#include <random>
#include <set>

#include "field_partition.hpp"
#include "vm.hpp"

using namespace gi;

namespace {

TaintTrace random_trace(std::mt19937_64& rng, uint32_t len, int tuples) {
    TaintTrace t;
    t.input.assign(len, 'x');
    std::vector<uint32_t> names;
    for (int i = 0; i < 6; ++i) names.push_back(t.intern("I" + std::to_string(i)));
    uint32_t ctx = t.intern_ctx({});
    std::uniform_int_distribution<uint32_t> pos(0, len - 1);
    for (int i = 0; i < tuples; ++i) {
        uint32_t a = pos(rng), b = pos(rng);
        if (a > b) std::swap(a, b);
        // One or two disjoint intervals per tuple.
        TraceTuple tt{names[rng() % names.size()], ctx, {{a, b + 1}}};
        if (rng() % 3 == 0 && b + 2 < len) tt.taints.push_back({b + 2, b + 3});
        t.tuples.push_back(tt);
    }
    return t;
}

}  // namespace

TEST_CASE("extract_values matches a brute-force oracle") {
    std::mt19937_64 rng(23);
    for (int it = 0; it < 200; ++it) {
        TaintTrace t = random_trace(rng, 12 + rng() % 20, 1 + int(rng() % 30));
        // Oracle: accumulate the use set per distinct interval.
        std::map<ByteInterval, std::set<UsePair>> want;
        for (const auto& tt : t.tuples)
            for (const auto& iv : tt.taints) want[iv].insert(make_use(tt.addr, tt.ctx));
        auto got = extract_values(t);
        REQUIRE(got.size() == want.size());
        for (const auto& v : got) {
            auto itv = want.find(v.iv);
            REQUIRE(itv != want.end());
            CHECK(std::set<UsePair>(v.uses.begin(), v.uses.end()) == itv->second);
        }
    }
}

TEST_CASE("group_fields partitions values by use-set equality") {
    std::mt19937_64 rng(29);
    for (int it = 0; it < 100; ++it) {
        TaintTrace t = random_trace(rng, 16, 1 + int(rng() % 20));
        auto values = extract_values(t);
        auto fields = group_fields(values);
        // Oracle: number of distinct use sets.
        std::set<std::vector<UsePair>> sets;
        for (const auto& v : values) sets.insert(v.uses);
        size_t gaps = 0;
        for (const auto& f : fields)
            if (f.gap) ++gaps;
        CHECK(fields.size() - gaps == sets.size());
        // Every non-gap field's values all share the field's SI.
        std::map<ByteInterval, std::vector<UsePair>> by_iv;
        for (const auto& v : values) by_iv[v.iv] = v.uses;
        for (const auto& f : fields) {
            if (f.gap) continue;
            for (const auto& iv : f.values) CHECK(by_iv.at(iv) == f.si);
        }
    }
}

TEST_CASE("sum_csv trace reproduces the running example") {
    const Fixture& fx = fixture("sum_csv");
    auto run = run_trace(assemble(fx.program), fx.input);
    REQUIRE(run.accepted);
    auto values = extract_values(run.trace);

    // 10 single-byte values, one per input byte.
    REQUIRE(values.size() == 10);
    for (uint32_t i = 0; i < 10; ++i) {
        CHECK(values[i].iv == ByteInterval{i, i + 1});
    }
    // Byte "4" is used at I2, I3, I4, I6 and I8 (in the single main context).
    std::set<std::string> names;
    for (UsePair u : values[0].uses) names.insert(run.trace.name_of(use_addr(u)));
    CHECK(names == std::set<std::string>{"I2", "I3", "I4", "I6", "I8"});

    auto fields = group_fields(values);
    REQUIRE(fields.size() == 5);
    CHECK(fields[0].values.size() == 1);  // F0 = "4"
    CHECK(fields[1].values.size() == 1);  // F1 = ","
    CHECK(fields[2].values.size() == 4);  // F2 = digits 3 2 5 8
    CHECK(fields[3].values.size() == 3);  // F3 = inner commas
    CHECK(fields[4].values.size() == 1);  // F4 = newline
    CHECK(field_bytes(run.trace, fields[0].values[0]) == "4");
    CHECK(field_bytes(run.trace, fields[2].values[0]) == "3");
    CHECK(field_bytes(run.trace, fields[4].values[0]) == "\n");

    CHECK(field_sequence(fields, run.trace.input_length()) ==
          std::vector<uint32_t>{0, 1, 2, 3, 2, 3, 2, 3, 2, 4});
}

TEST_CASE("field id numbering follows first-occurrence offset order") {
    const Fixture& fx = fixture("sum_csv");
    auto run = run_trace(assemble(fx.program), fx.input);
    auto fields = group_fields(extract_values(run.trace));
    uint32_t prev = 0;
    for (size_t i = 0; i < fields.size(); ++i) {
        CHECK(fields[i].id == "F" + std::to_string(i));
        CHECK(fields[i].values.front().start >= prev);
        prev = fields[i].values.front().start;
    }
}

TEST_CASE("co-occurrence classes close over shared instruction addresses") {
    std::mt19937_64 rng(31);
    for (int it = 0; it < 100; ++it) {
        TaintTrace t = random_trace(rng, 16, 1 + int(rng() % 20));
        auto fields = group_fields(extract_values(t));
        auto cls = co_occurrence_classes(fields);
        auto new_si = compute_new_si(fields);
        REQUIRE(cls.size() == fields.size());
        // Oracle union-find over shared addresses.
        std::vector<uint32_t> uf(fields.size());
        for (uint32_t i = 0; i < uf.size(); ++i) uf[i] = i;
        std::function<uint32_t(uint32_t)> find = [&](uint32_t x) {
            return uf[x] == x ? x : uf[x] = find(uf[x]);
        };
        for (uint32_t i = 0; i < fields.size(); ++i)
            for (uint32_t j = 0; j < i; ++j) {
                std::set<uint32_t> a, b;
                for (UsePair u : fields[i].si) a.insert(use_addr(u));
                for (UsePair u : fields[j].si) b.insert(use_addr(u));
                bool share = false;
                for (uint32_t x : a) share = share || b.count(x);
                if (share && !fields[i].gap && !fields[j].gap) uf[find(i)] = find(j);
            }
        for (uint32_t i = 0; i < fields.size(); ++i)
            for (uint32_t j = 0; j < i; ++j) {
                if (fields[i].gap || fields[j].gap) continue;
                CHECK((cls[i] == cls[j]) == (find(i) == find(j)));
                if (cls[i] == cls[j]) CHECK(new_si[i] == new_si[j]);
            }
        // New_SI is the union of the class members' SIs.
        for (uint32_t i = 0; i < fields.size(); ++i) {
            if (fields[i].gap) continue;
            std::set<UsePair> want;
            for (uint32_t j = 0; j < fields.size(); ++j)
                if (!fields[j].gap && find(j) == find(i))
                    want.insert(fields[j].si.begin(), fields[j].si.end());
            CHECK(std::set<UsePair>(new_si[i].begin(), new_si[i].end()) == want);
        }
    }
}

TEST_CASE("field_sequence rejects overlap and gap-free requirement violations") {
    Field a{"F0", {make_use(0, 0)}, {{0, 2}}, false};
    Field b{"F1", {make_use(1, 0)}, {{2, 4}}, false};
    CHECK(field_sequence({a, b}, 4) == std::vector<uint32_t>{0, 1});
    CHECK_THROWS_AS(field_sequence({a, b}, 5), TraceError);   // uncovered tail
    Field c{"F1", {make_use(1, 0)}, {{1, 3}}, false};
    CHECK_THROWS_AS(field_sequence({a, c}, 3), TraceError);   // overlap
}
