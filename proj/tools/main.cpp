#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "generator.hpp"
#include "pipeline.hpp"
#include "vm.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gi::TraceError("cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gi::TraceError("cannot write " + path);
    out << data;
}

struct Inputs {
    gi::TaintTrace trace;
    gi::CfgPackage cfg;
};

Inputs load_inputs(const std::string& trace_path, const std::string& cfg_path,
                   const std::string& fixture_name) {
    Inputs in;
    if (!fixture_name.empty()) {
        const gi::Fixture& fx = gi::fixture(fixture_name);
        gi::Program p = gi::assemble(fx.program);
        auto run = gi::run_trace(p, fx.input);
        if (!run.accepted) throw gi::TraceError("fixture rejected its own input");
        in.trace = std::move(run.trace);
        in.cfg = gi::export_cfg(p);
    } else {
        in.trace = gi::load_trace(trace_path);
        in.cfg = gi::load_cfg(cfg_path);
    }
    return in;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"grammar and relation recovery from taint traces"};
    app.require_subcommand(1);

    std::string trace_path, cfg_path, fixture_name, program_path, input_path;
    std::string out_path, dot_path, grammar_path;
    uint64_t seed = 0;
    int count = 1;
    bool no_relations = false;

    auto add_inputs = [&](CLI::App* c) {
        c->add_option("--trace", trace_path, "trace JSON file");
        c->add_option("--cfg", cfg_path, "CFG JSON file");
        c->add_option("--fixture", fixture_name, "built-in fixture name");
    };

    auto* c_suite = app.add_subcommand("suite", "list the built-in fixtures");

    auto* c_trace = app.add_subcommand("trace", "run a program and emit trace + CFG JSON");
    c_trace->add_option("--program", program_path, "assembly file");
    c_trace->add_option("--input", input_path, "input file");
    c_trace->add_option("--fixture", fixture_name, "built-in fixture name");
    c_trace->add_option("--out", out_path, "trace JSON output")->required();
    c_trace->add_option("--cfg-out", cfg_path, "CFG JSON output");

    auto* c_fields = app.add_subcommand("fields", "print the recovered field table");
    add_inputs(c_fields);

    auto* c_tig = app.add_subcommand("tig", "print the taint interval graph");
    add_inputs(c_tig);
    c_tig->add_option("--dot", dot_path, "write DOT to this path");

    auto* c_structure = app.add_subcommand("structure", "print the folded structure");
    add_inputs(c_structure);

    auto* c_icdg = app.add_subcommand("icdg", "print the control-dependence graph");
    add_inputs(c_icdg);
    c_icdg->add_option("--dot", dot_path, "write DOT to this path");

    auto* c_analyze = app.add_subcommand("analyze", "full pipeline: grammar with relations");
    add_inputs(c_analyze);
    c_analyze->add_option("--out", out_path, "write the grammar document (JSON)");
    c_analyze->add_option("--dot", dot_path, "write the TIG DOT to this path");

    auto* c_generate = app.add_subcommand("generate", "draw inputs from a grammar");
    c_generate->add_option("--grammar", grammar_path, "grammar text file")->required();
    c_generate->add_option("--seed", seed, "random seed");
    c_generate->add_option("--count", count, "number of inputs");
    c_generate->add_option("--out", out_path, "output file prefix (else stdout)");
    c_generate->add_flag("--no-relations", no_relations, "ignore relations");

    auto* c_accept = app.add_subcommand("accept", "generated-input acceptance rate");
    c_accept->add_option("--fixture", fixture_name, "built-in fixture name")->required();
    c_accept->add_option("--count", count, "number of inputs");
    c_accept->add_option("--seed", seed, "random seed");
    c_accept->add_flag("--no-relations", no_relations, "ignore relations");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_suite->parsed()) {
            for (const auto& f : gi::fixture_suite())
                std::cout << f.name << "  (" << f.input.size() << " bytes)\n";
            return 0;
        }
        if (c_trace->parsed()) {
            gi::Program p;
            std::string input;
            if (!fixture_name.empty()) {
                const gi::Fixture& fx = gi::fixture(fixture_name);
                p = gi::assemble(fx.program);
                input = fx.input;
            } else {
                p = gi::assemble(slurp(program_path));
                input = slurp(input_path);
            }
            auto run = gi::run_trace(p, input);
            if (!run.accepted) {
                std::cerr << "program rejected the input\n";
                return 1;
            }
            spit(out_path, gi::serialize_trace(run.trace));
            if (!cfg_path.empty()) spit(cfg_path, gi::serialize_cfg(gi::export_cfg(p)));
            std::cout << run.trace.tuples.size() << " tuples\n";
            return 0;
        }

        Inputs in = load_inputs(trace_path, cfg_path, fixture_name);
        if (c_fields->parsed() || c_tig->parsed()) {
            auto values = gi::extract_values(in.trace);
            auto tig = gi::build_tig(values, in.trace.input_length());
            if (c_tig->parsed()) {
                if (!dot_path.empty()) spit(dot_path, gi::tig_dot(tig, in.trace));
                std::cout << tig.nodes.size() << " nodes\n";
                return 0;
            }
            auto fmap = gi::frontiers(tig);
            auto frontier = gi::select_frontier(tig, fmap);
            auto ff = gi::fields_from_frontier(tig, frontier, in.trace);
            std::cout << gi::dump_fields(in.trace, ff.fields);
            return 0;
        }
        if (c_icdg->parsed()) {
            auto res = gi::analyze(in.trace, in.cfg);
            std::vector<std::string> ids;
            for (const auto& f : res.doc.fields) ids.push_back(f.id);
            std::string dot = gi::icdg_dot(res.icdg, &res.field_blocks, &ids);
            if (!dot_path.empty())
                spit(dot_path, dot);
            else
                std::cout << dot;
            return 0;
        }
        if (c_structure->parsed() || c_analyze->parsed()) {
            auto res = gi::analyze(in.trace, in.cfg);
            std::cout << gi::render(res.doc);
            if (c_analyze->parsed()) {
                for (const auto& [name, secs] : res.times.stages)
                    std::cerr << name << ": " << secs << "s\n";
                if (!out_path.empty()) spit(out_path, gi::doc_to_json(res.doc));
                if (!dot_path.empty()) spit(dot_path, gi::tig_dot(res.tig, in.trace));
            }
            return 0;
        }
        if (c_generate->parsed()) {
            gi::StructureDoc doc = gi::parse_grammar(slurp(grammar_path));
            for (int i = 0; i < count; ++i) {
                gi::GenConfig cfg;
                cfg.seed = seed + uint64_t(i);
                cfg.use_relations = !no_relations;
                std::string s = gi::generate(doc, cfg);
                if (out_path.empty())
                    std::cout << gi::base64_encode(s) << "\n";
                else
                    spit(out_path + "." + std::to_string(i), s);
            }
            return 0;
        }
        if (c_accept->parsed()) {
            const gi::Fixture& fx = gi::fixture(fixture_name);
            gi::Program p = gi::assemble(fx.program);
            auto run = gi::run_trace(p, fx.input);
            auto res = gi::analyze(run.trace, gi::export_cfg(p));
            int ok = 0;
            for (int i = 0; i < count; ++i) {
                gi::GenConfig cfg;
                cfg.seed = seed + uint64_t(i);
                cfg.use_relations = !no_relations;
                try {
                    if (gi::run_accept(p, gi::generate(res.doc, cfg))) ++ok;
                } catch (const gi::TraceError&) {
                }
            }
            std::cout << ok << "/" << count << " accepted\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
