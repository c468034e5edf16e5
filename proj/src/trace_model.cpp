#include "trace_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace gi {

using nlohmann::json;

uint32_t TaintTrace::intern(const std::string& name) {
    auto it = name_ids_.find(name);
    if (it != name_ids_.end()) return it->second;
    uint32_t id = uint32_t(names.size());
    names.push_back(name);
    name_ids_.emplace(name, id);
    return id;
}

uint32_t TaintTrace::intern_ctx(const std::vector<uint32_t>& frames) {
    auto it = ctx_ids_.find(frames);
    if (it != ctx_ids_.end()) return it->second;
    uint32_t id = uint32_t(contexts.size());
    contexts.push_back(frames);
    ctx_ids_.emplace(frames, id);
    return id;
}

std::string TaintTrace::ctx_string(uint32_t ctx) const {
    std::string out = "[";
    const auto& frames = contexts[ctx];
    for (size_t i = 0; i < frames.size(); ++i) {
        if (i) out += ",";
        out += names[frames[i]];
    }
    out += "]";
    return out;
}

void TaintTrace::validate() const {
    if (tuples.empty()) throw TraceError("trace has no tuples");
    for (const auto& t : tuples) {
        if (t.taints.empty()) throw TraceError("tuple with empty taint set");
        for (const auto& iv : t.taints) {
            if (iv.start >= iv.end || iv.end > input_length())
                throw TraceError("taint interval [" + std::to_string(iv.start) + "," +
                                 std::to_string(iv.end) + ") out of range for input of " +
                                 std::to_string(input_length()) + " bytes");
        }
        std::set<uint32_t> seen;
        for (uint32_t f : contexts[t.ctx])
            if (!seen.insert(f).second)
                throw TraceError("calling context repeats call site " + names[f]);
    }
}

void CfgPackage::validate() {
    block_of_insn.clear();
    func_of_block.clear();
    std::map<std::string, const CfgBlock*> by_id;
    for (const auto& b : blocks) {
        if (!by_id.emplace(b.id, &b).second) throw TraceError("duplicate block id " + b.id);
        for (const auto& i : b.insns) {
            if (!block_of_insn.emplace(i, b.id).second)
                throw TraceError("instruction " + i + " appears in more than one block");
        }
    }
    for (const auto& [a, b] : edges) {
        if (!by_id.count(a) || !by_id.count(b))
            throw TraceError("edge references unknown block " + (by_id.count(a) ? b : a));
    }
    std::map<std::string, std::vector<std::string>> succ;
    for (const auto& [a, b] : edges) succ[a].push_back(b);
    std::set<std::string> fn_ids;
    for (const auto& f : functions) {
        if (!fn_ids.insert(f.id).second) throw TraceError("duplicate function " + f.id);
        if (!by_id.count(f.entry)) throw TraceError("function " + f.id + " has no entry block");
        // Function membership: blocks reachable from the entry via intra edges.
        std::vector<std::string> work{f.entry};
        while (!work.empty()) {
            std::string b = work.back();
            work.pop_back();
            auto [it, fresh] = func_of_block.emplace(b, f.id);
            if (!fresh) {
                if (it->second != f.id)
                    throw TraceError("block " + b + " reachable from two function entries");
                continue;
            }
            for (const auto& s : succ[b]) work.push_back(s);
        }
    }
    for (const auto& c : calls) {
        if (!fn_ids.count(c.callee)) throw TraceError("call to unknown function " + c.callee);
        if (!block_of_insn.count(c.site)) throw TraceError("dangling call site " + c.site);
    }
    for (const auto& [fn, ex] : exits) {
        if (!fn_ids.count(fn)) throw TraceError("exits for unknown function " + fn);
        for (const auto& b : ex)
            if (!by_id.count(b)) throw TraceError("dangling exit block " + b);
    }
}

static const char b64_alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::string& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        uint32_t v = (uint8_t(bytes[i]) << 16) | (uint8_t(bytes[i + 1]) << 8) | uint8_t(bytes[i + 2]);
        out += b64_alphabet[v >> 18];
        out += b64_alphabet[(v >> 12) & 63];
        out += b64_alphabet[(v >> 6) & 63];
        out += b64_alphabet[v & 63];
        i += 3;
    }
    size_t rem = bytes.size() - i;
    if (rem == 1) {
        uint32_t v = uint8_t(bytes[i]) << 16;
        out += b64_alphabet[v >> 18];
        out += b64_alphabet[(v >> 12) & 63];
        out += "==";
    } else if (rem == 2) {
        uint32_t v = (uint8_t(bytes[i]) << 16) | (uint8_t(bytes[i + 1]) << 8);
        out += b64_alphabet[v >> 18];
        out += b64_alphabet[(v >> 12) & 63];
        out += b64_alphabet[(v >> 6) & 63];
        out += "=";
    }
    return out;
}

std::string base64_decode(const std::string& text) {
    int8_t rev[256];
    std::fill(rev, rev + 256, int8_t(-1));
    for (int i = 0; i < 64; ++i) rev[uint8_t(b64_alphabet[i])] = int8_t(i);
    std::string out;
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        int8_t v = rev[uint8_t(c)];
        if (v < 0) throw TraceError("invalid base64 character");
        acc = (acc << 6) | uint32_t(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out += char((acc >> bits) & 0xff);
        }
    }
    return out;
}

TaintTrace parse_trace(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw TraceError(std::string("trace parse error: ") + e.what());
    }
    TaintTrace t;
    if (!doc.contains("input_len") || !doc.contains("input_b64") || !doc.contains("tuples"))
        throw TraceError("trace document missing required keys");
    t.input = base64_decode(doc["input_b64"].get<std::string>());
    if (t.input.size() != doc["input_len"].get<size_t>())
        throw TraceError("input_len disagrees with decoded input");
    for (const auto& jt : doc["tuples"]) {
        TraceTuple tt;
        tt.addr = t.intern(jt.at("i").get<std::string>());
        std::vector<uint32_t> frames;
        for (const auto& f : jt.at("c")) frames.push_back(t.intern(f.get<std::string>()));
        tt.ctx = t.intern_ctx(frames);
        for (const auto& iv : jt.at("t")) {
            if (!iv.is_array() || iv.size() != 2) throw TraceError("malformed taint interval");
            int64_t a = iv[0].get<int64_t>(), b = iv[1].get<int64_t>();
            if (a < 0 || b < 0) throw TraceError("negative taint interval bound");
            tt.taints.push_back({uint32_t(a), uint32_t(b)});
        }
        std::sort(tt.taints.begin(), tt.taints.end());
        t.tuples.push_back(std::move(tt));
    }
    t.validate();
    return t;
}

std::string serialize_trace(const TaintTrace& t) {
    json doc;
    doc["input_len"] = t.input.size();
    doc["input_b64"] = base64_encode(t.input);
    json tuples = json::array();
    for (const auto& tt : t.tuples) {
        json jt;
        jt["i"] = t.names[tt.addr];
        json ctx = json::array();
        for (uint32_t f : t.contexts[tt.ctx]) ctx.push_back(t.names[f]);
        jt["c"] = ctx;
        json taints = json::array();
        for (const auto& iv : tt.taints) taints.push_back(json::array({iv.start, iv.end}));
        jt["t"] = taints;
        tuples.push_back(std::move(jt));
    }
    doc["tuples"] = std::move(tuples);
    return doc.dump();
}

CfgPackage parse_cfg(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw TraceError(std::string("cfg parse error: ") + e.what());
    }
    CfgPackage c;
    for (const auto& jf : doc.at("functions"))
        c.functions.push_back({jf.at("id").get<std::string>(), jf.at("entry").get<std::string>()});
    for (const auto& jb : doc.at("blocks")) {
        CfgBlock b;
        b.id = jb.at("id").get<std::string>();
        for (const auto& i : jb.at("insns")) b.insns.push_back(i.get<std::string>());
        c.blocks.push_back(std::move(b));
    }
    for (const auto& je : doc.at("edges"))
        c.edges.emplace_back(je.at(0).get<std::string>(), je.at(1).get<std::string>());
    for (const auto& jc : doc.at("calls"))
        c.calls.push_back({jc.at("site").get<std::string>(), jc.at("callee").get<std::string>()});
    if (doc.contains("exits"))
        for (auto it = doc["exits"].begin(); it != doc["exits"].end(); ++it) {
            std::vector<std::string> ex;
            for (const auto& b : it.value()) ex.push_back(b.get<std::string>());
            c.exits[it.key()] = std::move(ex);
        }
    c.validate();
    return c;
}

std::string serialize_cfg(const CfgPackage& c) {
    json doc;
    json fns = json::array();
    for (const auto& f : c.functions) fns.push_back({{"id", f.id}, {"entry", f.entry}});
    doc["functions"] = std::move(fns);
    json blocks = json::array();
    for (const auto& b : c.blocks) blocks.push_back({{"id", b.id}, {"insns", b.insns}});
    doc["blocks"] = std::move(blocks);
    json edges = json::array();
    for (const auto& [a, b] : c.edges) edges.push_back(json::array({a, b}));
    doc["edges"] = std::move(edges);
    json calls = json::array();
    for (const auto& e : c.calls) calls.push_back({{"site", e.site}, {"callee", e.callee}});
    doc["calls"] = std::move(calls);
    json exits = json::object();
    for (const auto& [fn, ex] : c.exits) exits[fn] = ex;
    doc["exits"] = std::move(exits);
    return doc.dump();
}

static std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TraceError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

TaintTrace load_trace(const std::string& path) { return parse_trace(slurp(path)); }
CfgPackage load_cfg(const std::string& path) { return parse_cfg(slurp(path)); }

}  // namespace gi
