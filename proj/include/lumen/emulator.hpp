#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <vector>

#include "lumen/errors.hpp"
#include "lumen/isa.hpp"
#include "lumen/rng.hpp"

namespace lumen {

/// Fixed four-tick instruction timing: one tick per phase, so the phase
/// of any cycle is cycle mod 4.
enum class TimingPhase : std::uint8_t { Fetch = 0, Decode = 1, Execute = 2, Writeback = 3 };

inline const char* phase_name(TimingPhase phase) {
    switch (phase) {
        case TimingPhase::Fetch: return "fetch";
        case TimingPhase::Decode: return "decode";
        case TimingPhase::Execute: return "execute";
        case TimingPhase::Writeback: return "writeback";
    }
    return "?";
}

/// Force-low window on the internal data bus: masked bits are cleared,
/// never set. `start_tick` is an absolute cycle tick at this level; the
/// sweep harness resolves trigger-relative delays before building one.
struct BusInjection {
    std::int64_t start_tick = 0;
    std::uint64_t duration_ticks = 1;
    std::uint8_t mask = 0xff;
    double probability = 1.0;
    std::uint64_t seed = 0;

    bool contains(std::uint64_t tick) const {
        const auto t = static_cast<std::int64_t>(tick);
        return t >= start_tick && t < start_tick + static_cast<std::int64_t>(duration_ticks);
    }
};

/// Which (tick, phase) pairs of the core are susceptible to bus
/// impression. `None` models an invulnerable part; `Phases` marks whole
/// pipeline phases; `Tick` plants a single vulnerable instant.
struct VulnerabilityProfile {
    enum class Kind { None, Phases, Tick };

    Kind kind = Kind::Phases;
    std::set<TimingPhase> phases = {TimingPhase::Execute, TimingPhase::Writeback};
    std::int64_t tick = 0;

    static VulnerabilityProfile none() { return {Kind::None, {}, 0}; }
    static VulnerabilityProfile default_profile() { return {}; }
    static VulnerabilityProfile phases_of(std::set<TimingPhase> set) {
        return {Kind::Phases, std::move(set), 0};
    }
    static VulnerabilityProfile at_tick(std::int64_t absolute_tick) {
        return {Kind::Tick, {}, absolute_tick};
    }

    bool susceptible(std::uint64_t cycle, TimingPhase phase) const {
        switch (kind) {
            case Kind::None: return false;
            case Kind::Phases: return phases.count(phase) > 0;
            case Kind::Tick: return static_cast<std::int64_t>(cycle) == tick;
        }
        return false;
    }
};

enum class TransferKind : std::uint8_t {
    FetchWord,
    RegWrite,
    MemRead,
    MemWrite,
    StackRead,
    StackWrite,
    PortRead,
    PortWrite,
    PcLow,
};

/// One byte moved across the data bus (or one fetched word byte).
struct TransferEvent {
    std::uint64_t tick = 0;
    TimingPhase phase = TimingPhase::Fetch;
    TransferKind kind = TransferKind::RegWrite;
    std::uint16_t target = 0;  // register index, memory address, or port
    std::uint8_t before = 0;
    std::uint8_t after = 0;
    bool masked = false;
};

namespace detail {

/// Pipeline latch between phases of the current instruction.
struct InFlight {
    Instruction instr{};
    bool unmapped = false;
    std::uint8_t operand_d = 0;
    std::uint8_t operand_r = 0;
    std::uint8_t result = 0;
    std::uint8_t bus_value = 0;
    std::uint8_t pending_sreg = 0;
    bool sreg_dirty = false;
    std::uint16_t branch_target = 0;
    bool branch_taken = false;
};

}  // namespace detail

inline constexpr std::uint8_t kSregC = 0x01;
inline constexpr std::uint8_t kSregZ = 0x02;
inline constexpr std::uint8_t kSregN = 0x04;

struct CoreState {
    std::uint16_t pc = 0;
    std::array<std::uint8_t, 32> regs{};
    std::uint8_t sreg = 0;
    std::uint16_t sp = kDataMemBytes - 1;
    std::vector<std::uint8_t> data_mem = std::vector<std::uint8_t>(kDataMemBytes, 0);
    std::uint64_t cycle = 0;
    TimingPhase phase = TimingPhase::Fetch;

    std::uint8_t port_in = 0;   // GPIO-mapped input port
    std::uint8_t port_out = 0;  // last value written to the trigger port
    bool trigger_seen = false;
    std::uint64_t trigger_tick = 0;
    bool halted = false;

    detail::InFlight inflight{};
};

/// Full-register snapshot, including the data memory image.
struct Snapshot {
    std::uint64_t tick = 0;
    std::uint16_t pc = 0;
    std::uint16_t sp = 0;
    std::uint8_t sreg = 0;
    std::array<std::uint8_t, 32> regs{};
    std::vector<std::uint8_t> mem;
};

inline Snapshot make_snapshot(const CoreState& state, std::uint64_t tick_label) {
    return Snapshot{tick_label, state.pc, state.sp, state.sreg, state.regs, state.data_mem};
}

namespace detail {

/// Advances the core by one tick, applying the force-low mask to every
/// data-bus transfer of an injected tick. `gate`, when present, further
/// enables individual window ticks (the optical delivery path).
inline void step_tick(CoreState& state,
                      const Program& program,
                      const std::optional<BusInjection>& injection,
                      const VulnerabilityProfile& profile,
                      std::vector<TransferEvent>* log,
                      const std::vector<std::uint8_t>* gate) {
    if (state.halted) {
        return;
    }
    if (state.phase == TimingPhase::Fetch && state.pc >= program.words.size()) {
        state.halted = true;
        return;
    }

    bool injected = false;
    if (injection && injection->contains(state.cycle) &&
        profile.susceptible(state.cycle, state.phase)) {
        bool enabled = true;
        if (gate) {
            const auto idx = static_cast<std::uint64_t>(
                static_cast<std::int64_t>(state.cycle) - injection->start_tick);
            enabled = idx < gate->size() && (*gate)[idx] != 0;
        }
        injected = enabled && tick_coin(injection->seed, state.cycle, injection->probability);
    }
    const std::uint8_t mask = injection ? injection->mask : 0;

    const auto transfer = [&](std::uint8_t value, TransferKind kind, std::uint16_t target) {
        const std::uint8_t out = injected ? static_cast<std::uint8_t>(value & ~mask) : value;
        if (log) {
            log->push_back({state.cycle, state.phase, kind, target, value, out, injected});
        }
        return out;
    };

    detail::InFlight& fl = state.inflight;
    switch (state.phase) {
        case TimingPhase::Fetch: {
            std::uint16_t w0 = program.words[state.pc];
            std::uint16_t w1 = state.pc + 1u < program.words.size() ? program.words[state.pc + 1] : 0;
            // instruction-bus impression only happens on fetch-susceptible
            // profiles; the mask lands on each byte lane of both words
            const std::uint8_t w0_lo = transfer(static_cast<std::uint8_t>(w0 & 0xff), TransferKind::FetchWord, state.pc);
            const std::uint8_t w0_hi = transfer(static_cast<std::uint8_t>(w0 >> 8), TransferKind::FetchWord, state.pc);
            w0 = static_cast<std::uint16_t>(w0_hi << 8 | w0_lo);
            if (state.pc + 1u < program.words.size()) {
                const std::uint8_t w1_lo = transfer(static_cast<std::uint8_t>(w1 & 0xff), TransferKind::FetchWord, state.pc + 1);
                const std::uint8_t w1_hi = transfer(static_cast<std::uint8_t>(w1 >> 8), TransferKind::FetchWord, state.pc + 1);
                w1 = static_cast<std::uint16_t>(w1_hi << 8 | w1_lo);
            }
            fl = detail::InFlight{};
            if (const auto decoded = decode(w0, w1)) {
                fl.instr = *decoded;
            } else {
                // unmapped encodings are ignored: execute as NOP
                fl.instr = Instruction{};
                fl.unmapped = true;
            }
            break;
        }
        case TimingPhase::Decode: {
            fl.operand_d = state.regs[fl.instr.rd];
            fl.operand_r = state.regs[fl.instr.rr];
            break;
        }
        case TimingPhase::Execute: {
            const auto alu_flags = [&](std::uint16_t wide, bool carry, bool with_carry) {
                const auto result = static_cast<std::uint8_t>(wide & 0xff);
                std::uint8_t flags = state.sreg;
                if (with_carry) {
                    flags = carry ? flags | kSregC : flags & ~kSregC;
                }
                flags = result == 0 ? flags | kSregZ : flags & ~kSregZ;
                flags = result & 0x80 ? flags | kSregN : flags & ~kSregN;
                fl.result = result;
                fl.pending_sreg = flags;
                fl.sreg_dirty = true;
            };
            switch (fl.instr.op) {
                case Op::Ldi:
                    fl.result = fl.instr.imm;
                    break;
                case Op::Mov:
                    fl.result = fl.operand_r;
                    break;
                case Op::Add: {
                    const std::uint16_t wide = static_cast<std::uint16_t>(fl.operand_d) + fl.operand_r;
                    alu_flags(wide, wide > 0xff, true);
                    break;
                }
                case Op::Sub: {
                    const std::uint16_t wide =
                        static_cast<std::uint16_t>(fl.operand_d - fl.operand_r);
                    alu_flags(wide, fl.operand_r > fl.operand_d, true);
                    break;
                }
                case Op::And:
                    alu_flags(static_cast<std::uint8_t>(fl.operand_d & fl.operand_r), false, false);
                    break;
                case Op::Or:
                    alu_flags(static_cast<std::uint8_t>(fl.operand_d | fl.operand_r), false, false);
                    break;
                case Op::Eor:
                    alu_flags(static_cast<std::uint8_t>(fl.operand_d ^ fl.operand_r), false, false);
                    break;
                case Op::Lds:
                    fl.bus_value = transfer(state.data_mem[fl.instr.addr], TransferKind::MemRead, fl.instr.addr);
                    break;
                case Op::Pop:
                    state.sp = static_cast<std::uint16_t>((state.sp + 1) & (kDataMemBytes - 1));
                    fl.bus_value = transfer(state.data_mem[state.sp], TransferKind::StackRead, state.sp);
                    break;
                case Op::In: {
                    std::uint8_t port_value = 0;
                    if (fl.instr.port == kGpioInPort) {
                        port_value = state.port_in;
                    } else if (fl.instr.port == kTriggerPort) {
                        port_value = state.port_out;
                    }
                    fl.bus_value = transfer(port_value, TransferKind::PortRead, fl.instr.port);
                    break;
                }
                case Op::Brne:
                    fl.branch_taken = (state.sreg & kSregZ) == 0;
                    fl.branch_target = static_cast<std::uint16_t>(state.pc + fl.instr.words + fl.instr.offset);
                    break;
                case Op::Rjmp:
                    fl.branch_taken = true;
                    fl.branch_target = static_cast<std::uint16_t>(state.pc + fl.instr.words + fl.instr.offset);
                    break;
                case Op::Nop:
                case Op::Sts:
                case Op::Push:
                case Op::Out:
                    break;
            }
            break;
        }
        case TimingPhase::Writeback: {
            bool branch = false;
            switch (fl.instr.op) {
                case Op::Ldi:
                case Op::Mov:
                case Op::Add:
                case Op::Sub:
                case Op::And:
                case Op::Or:
                case Op::Eor:
                    state.regs[fl.instr.rd] = transfer(fl.result, TransferKind::RegWrite, fl.instr.rd);
                    if (fl.sreg_dirty) {
                        state.sreg = fl.pending_sreg;  // flags latch off the ALU, not the bus
                    }
                    break;
                case Op::Lds:
                case Op::Pop:
                case Op::In:
                    state.regs[fl.instr.rd] = transfer(fl.bus_value, TransferKind::RegWrite, fl.instr.rd);
                    break;
                case Op::Sts:
                    state.data_mem[fl.instr.addr] = transfer(fl.operand_r, TransferKind::MemWrite, fl.instr.addr);
                    break;
                case Op::Push:
                    state.data_mem[state.sp] = transfer(fl.operand_r, TransferKind::StackWrite, state.sp);
                    state.sp = static_cast<std::uint16_t>((state.sp - 1) & (kDataMemBytes - 1));
                    break;
                case Op::Out: {
                    const std::uint8_t value = transfer(fl.operand_r, TransferKind::PortWrite, fl.instr.port);
                    if (fl.instr.port == kTriggerPort) {
                        state.port_out = value;
                        if (!state.trigger_seen) {
                            state.trigger_seen = true;
                            state.trigger_tick = state.cycle;
                        }
                    }
                    break;
                }
                case Op::Rjmp:
                case Op::Brne:
                    if (fl.branch_taken) {
                        const std::uint8_t lo = transfer(
                            static_cast<std::uint8_t>(fl.branch_target & 0xff), TransferKind::PcLow,
                            fl.branch_target);
                        state.pc = static_cast<std::uint16_t>((fl.branch_target & 0xff00) | lo);
                        branch = true;
                    }
                    break;
                case Op::Nop:
                    break;
            }
            if (!branch) {
                state.pc = static_cast<std::uint16_t>(state.pc + fl.instr.words);
            }
            break;
        }
    }

    state.cycle += 1;
    state.phase = static_cast<TimingPhase>(state.cycle % kTicksPerInstruction);
}

}  // namespace detail

/// One-tick step over value state; the input state is left untouched.
inline CoreState step(const CoreState& state,
                      const Program& program,
                      const std::optional<BusInjection>& injection,
                      const VulnerabilityProfile& profile,
                      std::vector<TransferEvent>* log = nullptr) {
    CoreState next = state;
    detail::step_tick(next, program, injection, profile, log, nullptr);
    return next;
}

struct RunOptions {
    std::optional<BusInjection> injection;
    VulnerabilityProfile profile = VulnerabilityProfile::default_profile();
    std::vector<std::uint64_t> checkpoints;
    std::uint64_t tick_limit = 1'000'000;
    std::uint8_t port_in = 0;
    bool record_transfers = false;
    /// Per-window-tick enable computed by the optical delivery path;
    /// absent means the window is always live.
    std::optional<std::vector<std::uint8_t>> injection_gate;
};

struct RunResult {
    std::vector<Snapshot> snapshots;
    std::optional<std::uint64_t> trigger_tick;
    std::vector<TransferEvent> transfers;
    CoreState final_state;
    std::uint64_t ticks = 0;
};

/// Runs a program to completion, snapshotting at each checkpoint tick.
/// A snapshot at checkpoint c reflects the state after exactly c ticks;
/// checkpoints past the halt tick replay the halted state so traces from
/// different runs always pair up tick-for-tick.
inline RunResult run_program(const Program& program, const RunOptions& options) {
    CoreState state;
    state.port_in = options.port_in;

    std::vector<std::uint64_t> checkpoints = options.checkpoints;
    std::sort(checkpoints.begin(), checkpoints.end());
    checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

    RunResult result;
    std::vector<TransferEvent>* log = options.record_transfers ? &result.transfers : nullptr;
    const std::vector<std::uint8_t>* gate =
        options.injection_gate ? &*options.injection_gate : nullptr;

    std::size_t next_checkpoint = 0;
    while (true) {
        while (next_checkpoint < checkpoints.size() &&
               checkpoints[next_checkpoint] == state.cycle) {
            result.snapshots.push_back(make_snapshot(state, state.cycle));
            ++next_checkpoint;
        }
        if (state.halted || (state.phase == TimingPhase::Fetch && state.pc >= program.words.size())) {
            state.halted = true;
            break;
        }
        if (state.cycle >= options.tick_limit) {
            throw TickLimitExceeded("no halt within " + std::to_string(options.tick_limit) + " ticks");
        }
        detail::step_tick(state, program, options.injection, options.profile, log, gate);
    }
    for (; next_checkpoint < checkpoints.size(); ++next_checkpoint) {
        result.snapshots.push_back(make_snapshot(state, checkpoints[next_checkpoint]));
    }
    if (state.trigger_seen) {
        result.trigger_tick = state.trigger_tick;
    }
    result.ticks = state.cycle;
    result.final_state = std::move(state);
    return result;
}

/// Checkpoints at every instruction boundary: 4, 8, ..., 4n.
inline std::vector<std::uint64_t> default_checkpoints(const Program& program) {
    std::vector<std::uint64_t> ticks;
    ticks.reserve(program.instruction_count());
    for (std::size_t i = 1; i <= program.instruction_count(); ++i) {
        ticks.push_back(static_cast<std::uint64_t>(i) * kTicksPerInstruction);
    }
    return ticks;
}

/// Snapshot trace rows: tick, pc, sp, sreg, r0..r31 (hex).
inline void write_snapshots_csv(const std::vector<Snapshot>& snapshots, std::ostream& out) {
    out << "tick,pc,sp,sreg";
    for (int i = 0; i < 32; ++i) {
        out << ",r" << i;
    }
    out << '\n';
    char buf[16];
    for (const Snapshot& snap : snapshots) {
        out << snap.tick;
        std::snprintf(buf, sizeof(buf), ",0x%04x", snap.pc);
        out << buf;
        std::snprintf(buf, sizeof(buf), ",0x%04x", snap.sp);
        out << buf;
        std::snprintf(buf, sizeof(buf), ",0x%02x", snap.sreg);
        out << buf;
        for (std::uint8_t reg : snap.regs) {
            std::snprintf(buf, sizeof(buf), ",0x%02x", reg);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace lumen
