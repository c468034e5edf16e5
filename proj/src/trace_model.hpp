#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gi {

// Half-open byte range [start, end) into the traced input.
struct ByteInterval {
    uint32_t start = 0;
    uint32_t end = 0;

    uint32_t len() const { return end - start; }
    bool contains(const ByteInterval& o) const { return start <= o.start && o.end <= end; }
    bool operator==(const ByteInterval& o) const = default;
    auto operator<=>(const ByteInterval& o) const = default;
};

struct TraceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A (instruction, calling-context) pair packed into one word.  Instruction
// names and context frame lists are interned in the owning TaintTrace.
using UsePair = uint64_t;
inline UsePair make_use(uint32_t addr, uint32_t ctx) { return (uint64_t(addr) << 32) | ctx; }
inline uint32_t use_addr(UsePair u) { return uint32_t(u >> 32); }
inline uint32_t use_ctx(UsePair u) { return uint32_t(u & 0xffffffffu); }

struct TraceTuple {
    uint32_t addr = 0;                 // index into TaintTrace::names
    uint32_t ctx = 0;                  // index into TaintTrace::contexts
    std::vector<ByteInterval> taints;  // non-empty, disjoint, sorted
};

struct TaintTrace {
    std::string input;                            // raw input bytes
    std::vector<std::string> names;               // interned instruction / call-site ids
    std::vector<std::vector<uint32_t>> contexts;  // ctx id -> frame name ids, outermost first
    std::vector<TraceTuple> tuples;

    uint32_t input_length() const { return uint32_t(input.size()); }

    uint32_t intern(const std::string& name);
    uint32_t intern_ctx(const std::vector<uint32_t>& frames);
    const std::string& name_of(uint32_t id) const { return names[id]; }

    // Human-readable rendering of a context, e.g. "[c1,c2]".
    std::string ctx_string(uint32_t ctx) const;

    void validate() const;

private:
    std::map<std::string, uint32_t> name_ids_;
    std::map<std::vector<uint32_t>, uint32_t> ctx_ids_;
};

struct CfgBlock {
    std::string id;
    std::vector<std::string> insns;
};

struct CfgFunction {
    std::string id;
    std::string entry;
};

struct CallEdge {
    std::string site;    // call-site instruction id
    std::string callee;  // function id
};

struct CfgPackage {
    std::vector<CfgFunction> functions;
    std::vector<CfgBlock> blocks;
    std::vector<std::pair<std::string, std::string>> edges;  // intra-procedural
    std::vector<CallEdge> calls;
    std::map<std::string, std::vector<std::string>> exits;  // function -> exit blocks

    // Derived cross-references, filled by validate().
    std::map<std::string, std::string> block_of_insn;
    std::map<std::string, std::string> func_of_block;

    void validate();
};

TaintTrace load_trace(const std::string& path);
CfgPackage load_cfg(const std::string& path);
TaintTrace parse_trace(const std::string& json_text);
CfgPackage parse_cfg(const std::string& json_text);
std::string serialize_trace(const TaintTrace& t);
std::string serialize_cfg(const CfgPackage& c);

std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);

}  // namespace gi
