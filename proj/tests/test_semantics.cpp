#include <doctest.h>

#include <set>

#include "pipeline.hpp"
#include "semantics.hpp"
#include "vm.hpp"

using namespace gi;

namespace {

AnalysisResult analyze_fixture(const std::string& name) {
    const Fixture& fx = fixture(name);
    Program p = assemble(fx.program);
    auto run = run_trace(p, fx.input);
    REQUIRE(run.accepted);
    return analyze(run.trace, export_cfg(p));
}

std::set<std::string> rendered_relations(const StructureDoc& doc) {
    std::set<std::string> out;
    for (const auto& r : doc.relations) out.insert(render_relation(r));
    return out;
}

}  // namespace

TEST_CASE("int_value reads ASCII decimal and little-endian binary") {
    CHECK(int_value("0") == 0);
    CHECK(int_value("42") == 42);
    CHECK(int_value("007") == 7);
    CHECK(int_value(std::string("\x0c\x00", 2)) == 12);
    CHECK(int_value(std::string("\x01\x02", 2)) == 0x0201);
    CHECK(int_value("\x7f") == 127);
    CHECK(!int_value("").has_value());
    CHECK(!int_value("123456789").has_value());  // > 8 bytes
    // Mixed digit/non-digit falls back to binary.
    CHECK(int_value("1\x01") == 0x0131);
}

TEST_CASE("sum_csv mines exactly the appendix relations") {
    auto res = analyze_fixture("sum_csv");
    CHECK(rendered_relations(res.doc) ==
          std::set<std::string>{"A0.count = int(F0.bytes) - 1", "F2.terminator = F3.bytes",
                                "F2.terminator = F4.bytes"});
}

TEST_CASE("bmp_csv mines the width-times-height product") {
    auto res = analyze_fixture("bmp_csv");
    auto rels = rendered_relations(res.doc);
    CHECK(rels.count("A0.count = int(F0.bytes) * int(F2.bytes)") == 1);
    // The product suppresses the per-factor modulus relations.
    for (const auto& r : rels) CHECK(r.find('%') == std::string::npos);
}

TEST_CASE("pe mines count and offset over the header fields") {
    auto res = analyze_fixture("pe");
    auto rels = rendered_relations(res.doc);
    CHECK(rels.count("A0.count = int(F2.bytes)") == 1);
    CHECK(rels.count("A0.offset = int(F1.bytes)") == 1);
}

TEST_CASE("png2 mines record types and the per-chunk data count") {
    auto res = analyze_fixture("png2");
    auto rels = rendered_relations(res.doc);
    CHECK(rels.count("A1.record_type = F2.bytes") == 1);
    CHECK(rels.count("A1.record_type = F5.bytes") == 1);
    CHECK(rels.count("A2.count = int(F3.bytes)") == 1);
}

TEST_CASE("no size relation targets a structurally fixed-width record") {
    for (const char* name : {"csv_nested_array", "png2", "sum_csv"}) {
        auto res = analyze_fixture(name);
        for (const auto& r : res.doc.relations) {
            if (r.kind != RelKind::SIZE) continue;
            const StructureNode* n = res.doc.find(r.target);
            REQUIRE(n != nullptr);
            CHECK(n->kind != NodeKind::RECORD);
        }
    }
}

TEST_CASE("every mined relation verifies on its witness input") {
    for (const auto& fx : fixture_suite()) {
        auto res = analyze_fixture(fx.name);
        CHECK(verify_relations(res.doc, fx.input));
    }
}

TEST_CASE("corrupting a relation makes verification fail") {
    auto res = analyze_fixture("sum_csv");
    StructureDoc bad = res.doc;
    for (auto& r : bad.relations)
        if (r.kind == RelKind::COUNT) r.adjust = +1;
    CHECK(!verify_relations(bad, fixture("sum_csv").input));
}

TEST_CASE("semantic_sources agrees with the pipeline projection") {
    const Fixture& fx = fixture("sum_csv");
    Program p = assemble(fx.program);
    auto run = run_trace(p, fx.input);
    CfgPackage cfg = export_cfg(p);
    auto res = analyze(run.trace, cfg);
    Icdg g = compute_icdg(cfg);
    auto src = semantic_sources(res.doc, g, cfg, run.trace);
    REQUIRE(src.size() == res.doc.fields.size());
    // The array digits (F2) are guarded by the count header (F0).
    bool found = false;
    for (uint32_t s : src[2]) found = found || s == 0;
    CHECK(found);
}
