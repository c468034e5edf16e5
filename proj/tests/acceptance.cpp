// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria 1-3 and 8-9 run the full pipeline on the fixture suite;
// 4-7 are the property-based substitutes for the paper's real-binary runs.

#include <chrono>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../tests/helpers.hpp"
#include "generator.hpp"
#include "pipeline.hpp"
#include "semantics.hpp"
#include "tig.hpp"
#include "tokens.hpp"
#include "vm.hpp"

using namespace gi;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
    printf("criterion %d: %s — %s\n", criterion, ok ? "PASS" : "FAIL", detail.c_str());
    if (!ok) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

AnalysisResult analyze_fixture(const Fixture& fx) {
    Program p = assemble(fx.program);
    auto run = run_trace(p, fx.input);
    if (!run.accepted) throw TraceError(fx.name + " rejected its own input");
    return analyze(run.trace, export_cfg(p));
}

// --- 1: running example ----------------------------------------------------

void criterion1() {
    auto t0 = std::chrono::steady_clock::now();
    auto res = analyze_fixture(fixture("sum_csv"));
    double secs = seconds_since(t0);
    const StructureDoc& doc = res.doc;

    bool ok = true;
    std::string why;
    // Fields F0..F4 with the appendix value multiplicities.
    std::vector<size_t> counts = {1, 1, 4, 3, 1};
    if (doc.fields.size() != 5) {
        ok = false;
        why = "expected 5 fields, got " + std::to_string(doc.fields.size());
    }
    for (size_t f = 0; ok && f < 5; ++f) {
        if (doc.fields[f].id != "F" + std::to_string(f) ||
            doc.fields[f].values.size() != counts[f]) {
            ok = false;
            why = "field table mismatch at F" + std::to_string(f);
        }
    }
    if (ok && doc.seq != std::vector<uint32_t>{0, 1, 2, 3, 2, 3, 2, 3, 2, 4}) {
        ok = false;
        why = "field sequence mismatch";
    }
    if (ok && oracle::shape_string(doc, doc.root) != "R(0,1,A(R(2,3)),2,4)") {
        ok = false;
        why = "structure mismatch: " + oracle::shape_string(doc, doc.root);
    }
    if (ok) {
        std::set<std::string> rels;
        for (const auto& r : doc.relations) rels.insert(render_relation(r));
        std::set<std::string> want = {"A0.count = int(F0.bytes) - 1",
                                      "F2.terminator = F3.bytes",
                                      "F2.terminator = F4.bytes"};
        if (rels != want) {
            ok = false;
            why = "relation set mismatch";
        }
    }
    if (ok && secs >= 1.0) {
        ok = false;
        why = "too slow";
    }
    char buf[128];
    snprintf(buf, sizeof buf, "appendix reproduction in %.3fs", secs);
    report(1, ok, ok ? buf : why);
}

// --- 2 and 3: acceptance ratios --------------------------------------------

int accepted_of(const Program& p, const StructureDoc& doc, int n, bool use_relations) {
    int ok = 0;
    for (int i = 0; i < n; ++i) {
        GenConfig cfg;
        cfg.seed = uint64_t(i);
        cfg.use_relations = use_relations;
        try {
            if (run_accept(p, generate(doc, cfg))) ++ok;
        } catch (const TraceError&) {
        }
    }
    return ok;
}

void criteria2and3() {
    auto t0 = std::chrono::steady_clock::now();
    bool ok2 = true;
    std::string det2;
    std::map<std::string, const AnalysisResult*> cache;
    std::vector<AnalysisResult> keep;
    keep.reserve(16);
    for (const auto& fx : fixture_suite()) {
        Program p = assemble(fx.program);
        keep.push_back(analyze_fixture(fx));
        cache[fx.name] = &keep.back();
        int ok = accepted_of(p, keep.back().doc, 1000, true);
        if (ok != 1000) {
            ok2 = false;
            det2 += fx.name + " " + std::to_string(ok) + "/1000; ";
        }
    }
    double secs = seconds_since(t0);
    if (secs >= 120.0) {
        ok2 = false;
        det2 += "too slow";
    }
    char buf[128];
    snprintf(buf, sizeof buf, "9 fixtures x 1000 inputs all accepted in %.1fs", secs);
    report(2, ok2, ok2 ? buf : det2);

    bool ok3 = true;
    std::string det3;
    for (const char* name : {"csv_array", "bmp_csv", "pe", "png2"}) {
        Program p = assemble(fixture(name).program);
        int n = 500;
        int stripped = accepted_of(p, cache.at(name)->doc, n, false);
        double rate = 100.0 * stripped / n;
        // With relations the fixtures sit at 100% (criterion 2), so >= 5x
        // separation means the stripped rate must stay at or below 20%.
        char line[96];
        snprintf(line, sizeof line, "%s %.1f%%; ", name, rate);
        det3 += line;
        if (rate >= 20.0 || rate * 5.0 > 100.0) ok3 = false;
    }
    report(3, ok3, "relations stripped: " + det3);
}

// --- 4: control dependence vs brute force ----------------------------------

void criterion4() {
    std::mt19937_64 rng(2024);
    int mismatches = 0;
    for (int it = 0; it < 200; ++it) {
        auto rc = oracle::random_cfg(rng, 12);
        Icdg g = compute_icdg(rc.cfg);
        auto want = oracle::brute_cdeps(rc.cfg, "f");
        for (uint32_t b = 0; b < g.blocks.size(); ++b) {
            std::set<std::string> got;
            for (uint32_t d : g.deps[b]) got.insert(g.blocks[d]);
            auto itw = want.find(g.blocks[b]);
            std::set<std::string> expect =
                itw == want.end() ? std::set<std::string>{} : itw->second;
            if (got != expect) ++mismatches;
        }
    }
    report(4, mismatches == 0,
           "200 random CFGs vs path oracle, " + std::to_string(mismatches) + " mismatches");
}

// --- 5: TIG invariants ------------------------------------------------------

void criterion5() {
    std::mt19937_64 rng(2025);
    int violations = 0;
    for (int it = 0; it < 500; ++it) {
        uint32_t len = 4 + uint32_t(rng() % 29);
        auto values = oracle::random_values(rng, len, 20);
        TigTree t = build_tig(values, len);
        std::vector<int> par(t.nodes.size(), -1);
        for (uint32_t i = 0; i < t.nodes.size(); ++i)
            for (uint32_t k : t.nodes[i].kids) par[k] = int(i);
        if (t.at(t.root).iv != ByteInterval{0, len}) ++violations;
        for (uint32_t i = 0; i < t.nodes.size(); ++i) {
            const TigNode& n = t.at(i);
            if (i != t.root && par[i] == -1) ++violations;
            if (!n.kids.empty()) {
                uint32_t pos = n.iv.start;
                bool tiled = true;
                for (uint32_t k : n.kids) {
                    tiled = tiled && t.at(k).iv.start == pos;
                    pos = t.at(k).iv.end;
                }
                if (!tiled || pos != n.iv.end) ++violations;
            }
            if (i == t.root) continue;
            const auto& piv = t.at(par[i]).iv;
            for (uint32_t q = 0; q < t.nodes.size(); ++q) {
                if (q == i || q == uint32_t(par[i])) continue;
                const auto& qiv = t.at(q).iv;
                if (qiv.contains(n.iv) && qiv != n.iv && piv.contains(qiv) && qiv != piv)
                    ++violations;  // transitive reduction broken
            }
        }
    }
    report(5, violations == 0,
           "500 random interval multisets, " + std::to_string(violations) + " violations");
}

// --- 6: structure round trip ------------------------------------------------

void criterion6() {
    std::mt19937_64 rng(2026);
    oracle::RefFold ref;
    int bad = 0;
    for (int it = 0; it < 500; ++it) {
        int n = 1 + int(rng() % 64);
        int alpha = 1 + int(rng() % 8);
        std::vector<uint32_t> seq;
        for (int i = 0; i < n; ++i) seq.push_back(uint32_t(rng() % alpha));
        StructureDoc doc = sequence_to_structure(seq, 8);
        if (!structure_matches(doc, seq)) ++bad;
        if (n <= 16 && oracle::shape_string(doc, doc.root) != ref.run(seq)) ++bad;
    }
    report(6, bad == 0, "500 random sequences round-trip, " + std::to_string(bad) + " failures");
}

// --- 7: token soundness / minimality ----------------------------------------

void criterion7() {
    std::mt19937_64 rng(2027);
    static const UnitClass classes[] = {
        UnitClass::LOWER_HEX,   UnitClass::UPPER_HEX, UnitClass::DIGIT,
        UnitClass::XDIGIT,      UnitClass::LOWER,     UnitClass::UPPER,
        UnitClass::ALPHA,       UnitClass::ALNUM,     UnitClass::WHITESPACE,
        UnitClass::PUNCTUATION, UnitClass::CONTROL,   UnitClass::PRINTABLE,
        UnitClass::ALL,
    };
    int bad = 0;
    for (int it = 0; it < 500; ++it) {
        size_t w = 1 + rng() % 4;
        size_t k = 1 + rng() % 6;
        std::vector<std::string> samples(k);
        for (auto& s : samples)
            for (size_t i = 0; i < w; ++i) s += char(rng() & 0x7f);
        Token t = infer_token(samples);
        for (const auto& s : samples)
            if (!t.matches(s)) ++bad;  // soundness
        for (size_t i = 0; i < t.units.size(); ++i) {
            std::vector<uint8_t> col;
            for (const auto& s : samples) col.push_back(uint8_t(s[i]));
            const Unit& u = t.units[i];
            if (u.cls == UnitClass::LITERAL) continue;
            for (UnitClass c : classes) {  // minimality
                if (class_cardinality(c) >= class_cardinality(u.cls)) continue;
                bool covers = true;
                for (uint8_t b : col) covers = covers && class_matches(c, b);
                if (covers) ++bad;
            }
        }
    }
    // The documented over-generalization: samples of real chunk names admit
    // invented ones.
    Token chunk = infer_token({"IHDR", "IDAT", "IEND"});
    bool over = chunk.matches("IZZZ");
    report(7, bad == 0 && over,
           "500 sample sets sound+minimal, " + std::to_string(bad) +
               " failures; chunk-name over-generalization " + (over ? "shown" : "missing"));
}

// --- 8: relation soundness ---------------------------------------------------

void criterion8() {
    int bad = 0;
    size_t total = 0;
    for (const auto& fx : fixture_suite()) {
        auto res = analyze_fixture(fx);
        total += res.doc.relations.size();
        if (!verify_relations(res.doc, fx.input)) ++bad;
    }
    report(8, bad == 0,
           std::to_string(total) + " mined relations across the suite, " +
               std::to_string(bad) + " fixtures with a failing relation");
}

// --- 9: performance envelope -------------------------------------------------

void criterion9() {
    Fixture fx = big_csv_fixture(3 * 1024 * 1024);
    Program p = assemble(fx.program);
    auto t0 = std::chrono::steady_clock::now();
    auto run = run_trace(p, fx.input);
    auto res = analyze(run.trace, export_cfg(p));
    double secs = seconds_since(t0);
    double part = res.times.of("partition");
    bool dominant = true;
    for (const auto& [name, t] : res.times.stages)
        if (name != "partition" && t > part) dominant = false;
    char buf[160];
    snprintf(buf, sizeof buf,
             "3 MB input in %.1fs (partition %.1fs, structure %.1fs, icdg %.2fs, semantics %.2fs)",
             secs, part, res.times.of("structure"), res.times.of("icdg"),
             res.times.of("semantics"));
    report(9, run.accepted && secs < 60.0 && dominant, buf);
}

}  // namespace

int main() {
    try {
        criterion1();
        criteria2and3();
        criterion4();
        criterion5();
        criterion6();
        criterion7();
        criterion8();
        criterion9();
    } catch (const std::exception& e) {
        printf("acceptance run aborted: %s\n", e.what());
        return 2;
    }
    return failures == 0 ? 0 : 1;
}
