#include "vm.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace gi {

namespace {

struct Asm {
    Program p;
    std::map<std::string, int> reg_ids, block_ids, func_ids;
    std::map<std::string, std::vector<std::pair<int, int>>> pending_blocks;  // name -> (insn, slot)
    std::map<std::string, std::vector<int>> pending_funcs;

    int reg(const std::string& name) {
        auto [it, fresh] = reg_ids.emplace(name, int(p.regs.size()));
        if (fresh) p.regs.push_back(name);
        return it->second;
    }
};

bool is_imm(const std::string& tok) {
    if (tok.empty()) return false;
    size_t i = tok[0] == '-' ? 1 : 0;
    if (i == tok.size()) return false;
    for (; i < tok.size(); ++i)
        if (!isdigit(uint8_t(tok[i]))) return false;
    return true;
}

Operand operand(Asm& a, const std::string& tok) {
    Operand o;
    if (is_imm(tok)) {
        o.imm = std::stoll(tok);
    } else {
        o.is_reg = true;
        o.reg = a.reg(tok);
    }
    return o;
}

const std::map<std::string, Op>& opcodes() {
    static const std::map<std::string, Op> m = {
        {"read", Op::READ}, {"readn", Op::READN}, {"seek", Op::SEEK}, {"eof", Op::EOFQ},
        {"mov", Op::MOV},   {"add", Op::ADD},     {"sub", Op::SUB},   {"mul", Op::MUL},
        {"div", Op::DIV},   {"mod", Op::MOD},     {"jeq", Op::JEQ},   {"jne", Op::JNE},
        {"jlt", Op::JLT},   {"jle", Op::JLE},     {"jgt", Op::JGT},   {"jge", Op::JGE},
        {"jmp", Op::JMP},   {"call", Op::CALL},   {"ret", Op::RET},   {"fail", Op::FAIL},
        {"halt", Op::HALT},
    };
    return m;
}

bool is_terminator(Op op) {
    switch (op) {
        case Op::JEQ: case Op::JNE: case Op::JLT: case Op::JLE: case Op::JGT: case Op::JGE:
        case Op::JMP: case Op::RET: case Op::FAIL: case Op::HALT:
            return true;
        default:
            return false;
    }
}

}  // namespace

Program assemble(const std::string& text) {
    Asm a;
    std::istringstream in(text);
    std::string line;
    int cur_func = -1, cur_block = -1;
    std::map<std::string, bool> seen_insn;
    while (std::getline(in, line)) {
        size_t semi = line.find(';');
        if (semi != std::string::npos) line = line.substr(0, semi);
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);
        if (toks.empty()) continue;
        if (toks[0] == "func") {
            if (toks.size() != 2) throw TraceError("bad func line: " + line);
            cur_func = int(a.p.funcs.size());
            a.func_ids.emplace(toks[1], cur_func);
            a.p.funcs.push_back(VmFunc{toks[1], -1});
            for (int slot : a.pending_funcs[toks[1]]) a.p.insns[slot].callee = cur_func;
            a.pending_funcs[toks[1]].clear();
            cur_block = -1;
            continue;
        }
        if (toks[0] == "block") {
            if (toks.size() != 2 || cur_func < 0) throw TraceError("bad block line: " + line);
            if (cur_block >= 0 && (a.p.blocks[cur_block].insns.empty() ||
                                   !is_terminator(a.p.insns[a.p.blocks[cur_block].insns.back()].op)))
                throw TraceError("block " + a.p.blocks[cur_block].id + " lacks a terminator");
            cur_block = int(a.p.blocks.size());
            if (!a.block_ids.emplace(toks[1], cur_block).second)
                throw TraceError("duplicate block " + toks[1]);
            a.p.blocks.push_back(VmBlock{toks[1], cur_func, {}});
            if (a.p.funcs[cur_func].entry < 0) a.p.funcs[cur_func].entry = cur_block;
            for (auto [insn, slot] : a.pending_blocks[toks[1]])
                (slot == 0 ? a.p.insns[insn].target_true : a.p.insns[insn].target_false) =
                    cur_block;
            a.pending_blocks[toks[1]].clear();
            continue;
        }
        // "ID: op args..."
        if (cur_block < 0) throw TraceError("instruction outside a block: " + line);
        if (toks[0].empty() || toks[0].back() != ':')
            throw TraceError("missing instruction id: " + line);
        Insn insn;
        insn.id = toks[0].substr(0, toks[0].size() - 1);
        if (!seen_insn.emplace(insn.id, true).second)
            throw TraceError("duplicate instruction id " + insn.id);
        if (toks.size() < 2) throw TraceError("missing opcode: " + line);
        auto oit = opcodes().find(toks[1]);
        if (oit == opcodes().end()) throw TraceError("unknown opcode " + toks[1]);
        insn.op = oit->second;
        std::vector<std::string> args(toks.begin() + 2, toks.end());
        auto block_ref = [&](const std::string& name, int insn_idx, int slot) {
            auto bit = a.block_ids.find(name);
            if (bit != a.block_ids.end()) {
                (slot == 0 ? a.p.insns[insn_idx].target_true
                           : a.p.insns[insn_idx].target_false) = bit->second;
            } else {
                a.pending_blocks[name].emplace_back(insn_idx, slot);
            }
        };
        int idx = int(a.p.insns.size());
        switch (insn.op) {
            case Op::READ:
            case Op::EOFQ:
                if (args.size() != 1) throw TraceError("bad operands: " + line);
                insn.ops = {operand(a, args[0])};
                break;
            case Op::READN:
            case Op::MOV:
                if (args.size() != 2) throw TraceError("bad operands: " + line);
                insn.ops = {operand(a, args[0]), operand(a, args[1])};
                break;
            case Op::SEEK:
                if (args.size() != 1) throw TraceError("bad operands: " + line);
                insn.ops = {operand(a, args[0])};
                break;
            case Op::ADD: case Op::SUB: case Op::MUL: case Op::DIV: case Op::MOD:
                if (args.size() != 3) throw TraceError("bad operands: " + line);
                insn.ops = {operand(a, args[0]), operand(a, args[1]), operand(a, args[2])};
                break;
            case Op::JEQ: case Op::JNE: case Op::JLT: case Op::JLE: case Op::JGT: case Op::JGE:
                if (args.size() != 4) throw TraceError("bad operands: " + line);
                insn.ops = {operand(a, args[0]), operand(a, args[1])};
                a.p.insns.push_back(insn);
                a.p.blocks[cur_block].insns.push_back(uint32_t(idx));
                block_ref(args[2], idx, 0);
                block_ref(args[3], idx, 1);
                continue;
            case Op::JMP:
                if (args.size() != 1) throw TraceError("bad operands: " + line);
                a.p.insns.push_back(insn);
                a.p.blocks[cur_block].insns.push_back(uint32_t(idx));
                block_ref(args[0], idx, 0);
                continue;
            case Op::CALL: {
                if (args.size() != 1) throw TraceError("bad operands: " + line);
                auto fit = a.func_ids.find(args[0]);
                if (fit != a.func_ids.end())
                    insn.callee = fit->second;
                else
                    a.pending_funcs[args[0]].push_back(idx);
                break;
            }
            case Op::RET: case Op::FAIL: case Op::HALT:
                if (!args.empty()) throw TraceError("bad operands: " + line);
                break;
        }
        a.p.insns.push_back(insn);
        a.p.blocks[cur_block].insns.push_back(uint32_t(idx));
    }
    if (cur_block >= 0 && (a.p.blocks[cur_block].insns.empty() ||
                           !is_terminator(a.p.insns[a.p.blocks[cur_block].insns.back()].op)))
        throw TraceError("block " + a.p.blocks[cur_block].id + " lacks a terminator");
    for (const auto& [name, refs] : a.pending_blocks)
        if (!refs.empty()) throw TraceError("undefined block " + name);
    for (const auto& [name, refs] : a.pending_funcs)
        if (!refs.empty()) throw TraceError("undefined function " + name);
    if (a.p.funcs.empty() || a.p.funcs[0].id != "main")
        throw TraceError("program must start with func main");
    return a.p;
}

namespace {

using Taint = std::vector<uint32_t>;  // sorted byte positions

Taint taint_union(const Taint& a, const Taint& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    Taint out;
    out.reserve(a.size() + b.size());
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<ByteInterval> group_intervals(const Taint& t) {
    std::vector<ByteInterval> out;
    for (size_t i = 0; i < t.size();) {
        size_t j = i + 1;
        while (j < t.size() && t[j] == t[j - 1] + 1) ++j;
        out.push_back({t[i], t[j - 1] + 1});
        i = j;
    }
    return out;
}

struct Machine {
    const Program& p;
    const std::string& input;
    bool record;
    size_t step_limit;

    std::vector<int64_t> val;
    std::vector<Taint> taint;
    size_t pos = 0;
    size_t steps = 0;
    TaintTrace trace;
    std::vector<uint32_t> addr_ids;
    std::vector<uint32_t> call_sites;  // interned call-site names, outermost first
    uint32_t cur_ctx = 0;

    Machine(const Program& prog, const std::string& in, bool rec, size_t limit)
        : p(prog), input(in), record(rec), step_limit(limit) {
        val.assign(p.regs.size(), 0);
        taint.assign(p.regs.size(), {});
        if (record) {
            trace.input = in;
            for (const auto& i : p.insns) addr_ids.push_back(trace.intern(i.id));
            recompute_ctx();
        }
    }

    void recompute_ctx() {
        // Contexts are truncated: repeated call sites keep their first
        // occurrence only.
        std::vector<uint32_t> dedup;
        for (uint32_t s : call_sites)
            if (std::find(dedup.begin(), dedup.end(), s) == dedup.end()) dedup.push_back(s);
        cur_ctx = trace.intern_ctx(dedup);
    }

    int64_t src_val(const Operand& o) const { return o.is_reg ? val[o.reg] : o.imm; }
    const Taint& src_taint(const Operand& o) const {
        static const Taint none;
        return o.is_reg ? taint[o.reg] : none;
    }

    void emit(uint32_t insn, const Taint& used) {
        if (!record || used.empty()) return;
        trace.tuples.push_back(TraceTuple{addr_ids[insn], cur_ctx, group_intervals(used)});
    }

    // Returns true on accept (halt), false on reject.
    bool run() {
        struct Frame {
            int block;
            size_t idx;
        };
        std::vector<Frame> stack;
        int block = p.funcs[0].entry;
        size_t idx = 0;
        for (;;) {
            if (idx >= p.blocks[block].insns.size()) return false;
            uint32_t ii = p.blocks[block].insns[idx];
            const Insn& insn = p.insns[ii];
            if (++steps > step_limit) return false;
            switch (insn.op) {
                case Op::READ: {
                    if (pos >= input.size()) return false;
                    val[insn.ops[0].reg] = uint8_t(input[pos]);
                    taint[insn.ops[0].reg] = {uint32_t(pos)};
                    ++pos;
                    ++idx;
                    break;
                }
                case Op::READN: {
                    int64_t n = src_val(insn.ops[1]);
                    if (n <= 0 || pos + size_t(n) > input.size()) return false;
                    emit(ii, src_taint(insn.ops[1]));
                    int64_t v = 0;
                    for (int64_t k = std::min<int64_t>(n, 8) - 1; k >= 0; --k)
                        v = (v << 8) | uint8_t(input[pos + size_t(k)]);
                    val[insn.ops[0].reg] = v;
                    Taint t;
                    t.resize(size_t(n));
                    for (int64_t k = 0; k < n; ++k) t[size_t(k)] = uint32_t(pos + size_t(k));
                    taint[insn.ops[0].reg] = std::move(t);
                    pos += size_t(n);
                    ++idx;
                    break;
                }
                case Op::SEEK: {
                    int64_t v = src_val(insn.ops[0]);
                    if (v < 0 || size_t(v) > input.size()) return false;
                    emit(ii, src_taint(insn.ops[0]));
                    pos = size_t(v);
                    ++idx;
                    break;
                }
                case Op::EOFQ:
                    val[insn.ops[0].reg] = pos == input.size() ? 1 : 0;
                    taint[insn.ops[0].reg].clear();
                    ++idx;
                    break;
                case Op::MOV:
                    emit(ii, src_taint(insn.ops[1]));
                    val[insn.ops[0].reg] = src_val(insn.ops[1]);
                    taint[insn.ops[0].reg] = src_taint(insn.ops[1]);
                    ++idx;
                    break;
                case Op::ADD: case Op::SUB: case Op::MUL: case Op::DIV: case Op::MOD: {
                    int64_t x = src_val(insn.ops[1]), y = src_val(insn.ops[2]);
                    if ((insn.op == Op::DIV || insn.op == Op::MOD) && y == 0) return false;
                    Taint used = taint_union(src_taint(insn.ops[1]), src_taint(insn.ops[2]));
                    emit(ii, used);
                    int64_t r = insn.op == Op::ADD   ? x + y
                                : insn.op == Op::SUB ? x - y
                                : insn.op == Op::MUL ? x * y
                                : insn.op == Op::DIV ? x / y
                                                     : x % y;
                    val[insn.ops[0].reg] = r;
                    taint[insn.ops[0].reg] = std::move(used);
                    ++idx;
                    break;
                }
                case Op::JEQ: case Op::JNE: case Op::JLT: case Op::JLE: case Op::JGT:
                case Op::JGE: {
                    int64_t x = src_val(insn.ops[0]), y = src_val(insn.ops[1]);
                    emit(ii, taint_union(src_taint(insn.ops[0]), src_taint(insn.ops[1])));
                    bool taken = insn.op == Op::JEQ   ? x == y
                                 : insn.op == Op::JNE ? x != y
                                 : insn.op == Op::JLT ? x < y
                                 : insn.op == Op::JLE ? x <= y
                                 : insn.op == Op::JGT ? x > y
                                                      : x >= y;
                    block = taken ? insn.target_true : insn.target_false;
                    idx = 0;
                    break;
                }
                case Op::JMP:
                    block = insn.target_true;
                    idx = 0;
                    break;
                case Op::CALL:
                    stack.push_back({block, idx + 1});
                    if (record) {
                        call_sites.push_back(addr_ids[ii]);
                        recompute_ctx();
                    }
                    block = p.funcs[insn.callee].entry;
                    idx = 0;
                    break;
                case Op::RET:
                    if (stack.empty()) return false;
                    block = stack.back().block;
                    idx = stack.back().idx;
                    stack.pop_back();
                    if (record) {
                        call_sites.pop_back();
                        recompute_ctx();
                    }
                    break;
                case Op::FAIL:
                    return false;
                case Op::HALT:
                    return true;
            }
        }
    }
};

}  // namespace

RunResult run_trace(const Program& p, const std::string& input, size_t step_limit) {
    Machine m(p, input, true, step_limit);
    RunResult r;
    r.accepted = m.run();
    r.steps = m.steps;
    r.trace = std::move(m.trace);
    return r;
}

bool run_accept(const Program& p, const std::string& input, size_t step_limit) {
    Machine m(p, input, false, step_limit);
    return m.run();
}

CfgPackage export_cfg(const Program& p) {
    CfgPackage cfg;
    for (const auto& f : p.funcs)
        cfg.functions.push_back(CfgFunction{f.id, p.blocks[f.entry].id});
    for (const auto& b : p.blocks) {
        CfgBlock cb;
        cb.id = b.id;
        for (uint32_t i : b.insns) cb.insns.push_back(p.insns[i].id);
        cfg.blocks.push_back(std::move(cb));
    }
    for (const auto& b : p.blocks) {
        if (b.insns.empty()) continue;
        const Insn& last = p.insns[b.insns.back()];
        switch (last.op) {
            case Op::JMP:
                cfg.edges.emplace_back(b.id, p.blocks[last.target_true].id);
                break;
            case Op::JEQ: case Op::JNE: case Op::JLT: case Op::JLE: case Op::JGT: case Op::JGE:
                cfg.edges.emplace_back(b.id, p.blocks[last.target_true].id);
                if (last.target_false != last.target_true)
                    cfg.edges.emplace_back(b.id, p.blocks[last.target_false].id);
                break;
            case Op::RET: case Op::FAIL: case Op::HALT:
                cfg.exits[p.funcs[b.func].id].push_back(b.id);
                break;
            default:
                break;
        }
        for (uint32_t i : b.insns)
            if (p.insns[i].op == Op::CALL)
                cfg.calls.push_back(CallEdge{p.insns[i].id, p.funcs[p.insns[i].callee].id});
    }
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Reference programs.

namespace {

const char* kSumCsv = R"(func main
block entry
  i0: mov count, 0
  i1: mov n, 0
  i2: mov sum, 0
  i3: mov atend, 0
  i4: mov sep, 0
  i5: jmp loop
block loop
  i6: read c
  I2: jeq c, 10, endline, body
block body
  i7: jeq sep, 1, p2entry, phase1
block phase1
  I3: jeq c, 44, p1sep, p1digit
block p1digit
  I4: sub count, c, 48
  i8: jmp loop
block p1sep
  i9: mov sep, 1
  i10: jmp loop
block p2entry
  I6: jgt count, 0, phase2, failblk
block phase2
  I7: jeq c, 44, p2sep, p2digit
block p2sep
  i11: jmp loop
block p2digit
  i12: mov atend, 0
  i13: jmp chk
block endline
  i14: mov atend, 1
  i15: jmp chk
block chk
  I8: jlt n, count, lt, ge
block lt
  i16: jeq atend, 1, failblk, p2ok
block ge
  i17: jeq atend, 1, okblk, failblk
block p2ok
  I9: sub val, c, 48
  I10: add sum, sum, val
  i18: add n, n, 1
  i19: jmp loop
block okblk
  i20: halt
block failblk
  i21: fail
)";

const char* kCsvArray = R"(func main
block entry
  i0: jmp row
block row
  i1: read k
  i2: jlt k, 48, failb, r2
block r2
  i3: jgt k, 57, failb, r3
block r3
  i4: sub cnt, k, 48
  i5: jgt cnt, 0, body, failb
block body
  i6: read s
  i7: jeq s, 44, digit, failb
block digit
  i8: read c
  i9: jlt c, 48, failb, d2
block d2
  i10: jgt c, 57, failb, d3
block d3
  i11: add sum, sum, c
  i12: sub cnt, cnt, 1
  i13: jgt cnt, 0, body, eol
block eol
  i14: read s
  i15: jeq s, 10, chk, failb
block chk
  i16: eof e
  i17: jeq e, 1, okb, row
block okb
  i18: halt
block failb
  i19: fail
)";

const char* kCsvNested = R"(func main
block entry
  i0: read k
  i1: jlt k, 48, failb, e2
block e2
  i2: jgt k, 57, failb, e3
block e3
  i3: sub rows, k, 48
  i4: read s
  i5: jeq s, 10, e4, failb
block e4
  i6: jgt rows, 0, row, failb
block row
  i7: read m
  i8: jlt m, 48, failb, r2
block r2
  i9: jgt m, 57, failb, r3
block r3
  i10: sub cnt, m, 48
  i11: jgt cnt, 0, body, failb
block body
  i12: read s
  i13: jeq s, 44, digit, failb
block digit
  i14: read c
  i15: jlt c, 48, failb, d2
block d2
  i16: jgt c, 57, failb, d3
block d3
  i17: add sum, sum, c
  i18: sub cnt, cnt, 1
  i19: jgt cnt, 0, body, eol
block eol
  i20: read s
  i21: jeq s, 10, rchk, failb
block rchk
  i22: sub rows, rows, 1
  i23: jgt rows, 0, row, fin
block fin
  i24: eof e
  i25: jeq e, 1, okb, failb
block okb
  i26: halt
block failb
  i27: fail
)";

const char* kCsvRecursive = R"(func main
block mentry
  c0: call f
  m1: halt
func f
block fentry
  i0: read a
  i1: jlt a, 48, failb, f2
block f2
  i2: jgt a, 57, failb, f3
block f3
  i3: read s
  i4: jeq s, 44, f4, failb
block f4
  i5: read b
  i6: jlt b, 48, failb, f5
block f5
  i7: jgt b, 57, failb, f6
block f6
  i8: read t
  i9: jeq t, 10, f7, failb
block f7
  i10: eof e
  i11: jeq e, 1, f8, f9
block f8
  i12: ret
block f9
  c1: call f
  i13: ret
block failb
  i14: fail
)";

const char* kCsvArrayRecursive = R"(func main
block mentry
  c0: call f
  m1: halt
func f
block fentry
  i0: read k
  i1: jlt k, 48, failb, r2
block r2
  i2: jgt k, 57, failb, r3
block r3
  i3: sub cnt, k, 48
  i4: jgt cnt, 0, body, failb
block body
  i5: read s
  i6: jeq s, 44, digit, failb
block digit
  i7: read c
  i8: jlt c, 48, failb, d2
block d2
  i9: jgt c, 57, failb, d3
block d3
  i10: add sum, sum, c
  i11: sub cnt, cnt, 1
  i12: jgt cnt, 0, body, eol
block eol
  i13: read s
  i14: jeq s, 10, chk, failb
block chk
  i15: eof e
  i16: jeq e, 1, f8, f9
block f8
  i17: ret
block f9
  c1: call f
  i18: ret
block failb
  i19: fail
)";

const char* kHttp = R"(func main
block entry
  i0: jmp hdr
block hdr
  i1: read c
  i2: jeq c, 10, fin, name
block name
  i3: jlt c, 65, failb, n2
block n2
  i4: jgt c, 90, failb, n3
block n3
  i5: read s
  i6: jeq s, 58, val, failb
block val
  i7: read v
  i8: jlt v, 97, failb, v2
block v2
  i9: jgt v, 122, failb, v3
block v3
  i10: read e
  i11: jeq e, 10, hdr, failb
block fin
  i12: eof t
  i13: jeq t, 1, okb, failb
block okb
  i14: halt
block failb
  i15: fail
)";

const char* kBmpCsv = R"(func main
block entry
  i0: read w
  i1: jlt w, 49, failb, e2
block e2
  i2: jgt w, 57, failb, e3
block e3
  i3: sub wv, w, 48
  i4: read s
  i5: jeq s, 44, e4, failb
block e4
  i6: read h
  i7: jlt h, 49, failb, e5
block e5
  i8: jgt h, 57, failb, e6
block e6
  i9: sub hv, h, 48
  i26: read s2
  i27: jeq s2, 44, e7, failb
block e7
  i10: mul cnt, wv, hv
  i11: jgt cnt, 0, pix, failb
block pix
  i12: read p
  i13: jlt p, 48, failb, p2
block p2
  i14: jgt p, 57, failb, p3
block p3
  i15: add sum, sum, p
  i16: read s
  i17: jeq s, 44, p4, failb
block p4
  i18: sub cnt, cnt, 1
  i19: jgt cnt, 0, pix, fin
block fin
  i20: read e
  i21: jeq e, 10, fin2, failb
block fin2
  i22: eof t
  i23: jeq t, 1, okb, failb
block okb
  i24: halt
block failb
  i25: fail
)";

const char* kPe = R"(func main
block entry
  i0: readn m, 2
  i1: jeq m, 23117, e2, failb
block e2
  i2: readn off, 2
  i3: jlt off, 6, failb, e3
block e3
  i4: readn sz, 2
  i5: jgt sz, 0, e4, failb
block e4
  i6: seek off
  i7: jmp lp
block lp
  i8: read b
  i9: add sum, b, 0
  i10: sub sz, sz, 1
  i11: jgt sz, 0, lp, fin
block fin
  i12: eof t
  i13: jeq t, 1, okb, failb
block okb
  i14: halt
block failb
  i15: fail
)";

const char* kPng2 = R"(func main
block sig
  s0: read c
  s1: jeq c, 47, next, s2
block s2
  s3: jlt c, 97, failb, s4
block s4
  s5: jgt c, 122, failb, s6
block s6
  s7: add acc, c, 0
  s8: jmp sig
block next
  t0: read c
  t1: jmp disp
block disp
  d0: jeq c, 48, fin, d1
block d1
  d2: jeq c, 49, v1, d3
block d3
  d4: jeq c, 50, v2, failb
block v1
  a0: read l
  a1: jlt l, 49, failb, v1b
block v1b
  a2: jgt l, 57, failb, v1c
block v1c
  a3: sub len, l, 48
  a4: jmp dat
block dat
  a5: read b
  a6: add acc, b, 0
  a7: sub len, len, 1
  a8: jgt len, 0, dat, next
block v2
  b0: read v
  b1: jlt v, 48, failb, v2b
block v2b
  b2: jgt v, 57, failb, v2c
block v2c
  b3: add acc, v, 0
  b4: jmp next
block fin
  f0: eof t
  f1: jeq t, 1, okb, failb
block okb
  f2: halt
block failb
  f3: fail
)";

const char* kBigCsv = R"(func main
block entry
  i0: mov sum, 0
  i1: jmp num
block num
  i2: read c
  i3: jlt c, 48, failb, num2
block num2
  i4: jgt c, 57, failb, num3
block num3
  i5: add sum, c, 0
  i6: read s
  i7: jeq s, 44, num, eol
block eol
  i8: jeq s, 10, eolchk, failb
block eolchk
  i9: eof e
  i10: jeq e, 1, okb, num
block okb
  i11: halt
block failb
  i12: fail
)";

std::string pe_input() {
    std::string in = "MZ";
    in += '\x0c';
    in += '\0';
    in += '\x04';
    in += '\0';
    in += std::string(6, '\0');  // gap before the section
    in += "7392";
    return in;
}

}  // namespace

const std::vector<Fixture>& fixture_suite() {
    static const std::vector<Fixture> suite = {
        {"sum_csv", kSumCsv, "4,3,2,5,8\n"},
        {"csv_array", kCsvArray, "2,7,4\n3,1,5,9\n"},
        {"csv_nested_array", kCsvNested, "2\n2,7,4\n3,1,5,9\n"},
        {"csv_recursive", kCsvRecursive, "1,2\n3,4\n5,6\n"},
        {"csv_array_recursive", kCsvArrayRecursive, "2,7,4\n3,1,5,9\n1,6\n"},
        {"http", kHttp, "A:x\nB:y\n\n"},
        {"bmp_csv", kBmpCsv, "3,2,9,1,4,2,8,7,\n"},
        {"pe", kPe, pe_input()},
        {"png2", kPng2, "png/12ab2713xyz0"},
    };
    return suite;
}

const Fixture& fixture(const std::string& name) {
    for (const auto& f : fixture_suite())
        if (f.name == name) return f;
    throw TraceError("unknown fixture " + name);
}

Fixture big_csv_fixture(size_t target_bytes) {
    Fixture f;
    f.name = "big_csv";
    f.program = kBigCsv;
    const std::string row = "1,2,3,4,5,6,7,8\n";
    f.input.reserve(target_bytes + row.size());
    while (f.input.size() < target_bytes) f.input += row;
    return f;
}

}  // namespace gi
