#pragma once

#include <string>
#include <vector>

#include "trace_model.hpp"

namespace gi {

// A tiny register machine used to exercise the analysis: byte-level taint on
// registers, explicit basic blocks, and a textual assembly format with named
// instruction ids.
enum class Op {
    READ,   // read rD            one byte, taints rD, no tuple
    READN,  // readn rD, n|rS     n bytes little-endian, single taint interval
    SEEK,   // seek rS|imm        reposition the input cursor
    EOFQ,   // eof rD             1 when the cursor is at end of input
    MOV,
    ADD,
    SUB,
    MUL,
    DIV,
    MOD,
    JEQ,
    JNE,
    JLT,
    JLE,
    JGT,
    JGE,
    JMP,
    CALL,
    RET,
    FAIL,
    HALT,
};

struct Operand {
    bool is_reg = false;
    int reg = -1;
    int64_t imm = 0;
};

struct Insn {
    std::string id;
    Op op;
    std::vector<Operand> ops;
    int target_true = -1;   // block index for jumps
    int target_false = -1;
    int callee = -1;        // function index for call
};

struct VmBlock {
    std::string id;
    int func = -1;
    std::vector<uint32_t> insns;
};

struct VmFunc {
    std::string id;
    int entry = -1;
};

struct Program {
    std::vector<VmFunc> funcs;
    std::vector<VmBlock> blocks;
    std::vector<Insn> insns;
    std::vector<std::string> regs;
};

Program assemble(const std::string& text);

struct RunResult {
    bool accepted = false;
    size_t steps = 0;
    TaintTrace trace;
};

// Executes with taint tracking and trace recording.
RunResult run_trace(const Program& p, const std::string& input,
                    size_t step_limit = 200'000'000);

// Fast accept/reject run without any recording.
bool run_accept(const Program& p, const std::string& input,
                size_t step_limit = 200'000'000);

CfgPackage export_cfg(const Program& p);

struct Fixture {
    std::string name;
    std::string program;
    std::string input;
};

// The nine reference programs with their canonical inputs.
const std::vector<Fixture>& fixture_suite();
const Fixture& fixture(const std::string& name);

// Large uniform CSV input for the end-to-end timing run.
Fixture big_csv_fixture(size_t target_bytes);

}  // namespace gi
