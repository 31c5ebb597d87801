#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lumen/channel.hpp"
#include "lumen/emulator.hpp"
#include "lumen/errors.hpp"
#include "lumen/gpio.hpp"
#include "lumen/led.hpp"
#include "lumen/rng.hpp"

namespace lumen {

struct InjectionTemplate {
    std::uint8_t mask = 0xff;
    std::uint64_t duration_ticks = 1;
    double probability = 1.0;
};

/// Direct logic levels on the target pin, or the full optical chain
/// (modulator, free-space channel, LED response, logic threshold) gating
/// each window tick.
enum class InjectionPath { DirectLogic, Optical };

struct OpticalPathParams {
    LedDevice device;
    Terminal terminal = Terminal::Anode;
    ExcitationKind excitation = ExcitationKind::Laser640;
    ChannelParams channel{};
    double peak_w_m2 = 0.01;
    double pull_up_ohms = kDefaultPullOhms;
    double pull_down_ohms = kDefaultPullOhms;
    SupplyRails rails{};
};

/// Delay offsets are measured in ticks from the program's trigger-pin
/// write; `tick_seconds` only labels reports.
struct SweepConfig {
    std::int64_t delay_min_ticks = 0;
    std::int64_t delay_max_ticks = 0;
    std::uint64_t step_ticks = 1;
    std::uint32_t reps_per_offset = 1;
    InjectionTemplate injection{};
    std::uint64_t seed = 0;
    InjectionPath path = InjectionPath::DirectLogic;
    std::optional<OpticalPathParams> optics;
    std::uint32_t baseline_runs = 10;
    double tick_seconds = 1e-6;
    std::uint64_t tick_limit = 1'000'000;
    std::uint8_t port_in = 0;

    void validate() const {
        if (delay_min_ticks > delay_max_ticks) {
            throw InvalidConfig("delay_min_ticks must not exceed delay_max_ticks");
        }
        if (step_ticks < 1) {
            throw InvalidConfig("step_ticks must be at least 1");
        }
        if (reps_per_offset < 1) {
            throw InvalidConfig("reps_per_offset must be at least 1");
        }
        if (injection.duration_ticks < 1) {
            throw InvalidConfig("injection duration must be at least 1 tick");
        }
        if (!(injection.probability >= 0.0 && injection.probability <= 1.0)) {
            throw InvalidConfig("injection probability must be in [0, 1]");
        }
        if (baseline_runs < 1) {
            throw InvalidConfig("baseline_runs must be at least 1");
        }
        if (path == InjectionPath::Optical && !optics.has_value()) {
            throw InvalidConfig("optical path requires optical parameters");
        }
    }
};

/// Harness-level vulnerability selection. A planted offset is
/// trigger-relative and resolved against the golden run's trigger tick.
struct SweepProfile {
    enum class Kind { None, Phases, PlantedOffset };

    Kind kind = Kind::Phases;
    std::set<TimingPhase> phases = {TimingPhase::Execute, TimingPhase::Writeback};
    std::int64_t planted_offset_ticks = 0;

    static SweepProfile none() { return {Kind::None, {}, 0}; }
    static SweepProfile default_phases() { return {}; }
    static SweepProfile phases_of(std::set<TimingPhase> set) {
        return {Kind::Phases, std::move(set), 0};
    }
    static SweepProfile planted(std::int64_t offset_ticks) {
        return {Kind::PlantedOffset, {}, offset_ticks};
    }
};

struct FieldDiff {
    std::string field;
    std::uint64_t golden = 0;
    std::uint64_t observed = 0;
};

/// Exhaustive field comparison of two snapshots taken at the same tick.
inline std::vector<FieldDiff> diff_snapshot(const Snapshot& observed, const Snapshot& golden) {
    if (observed.tick != golden.tick) {
        throw TickMismatch("snapshots at tick " + std::to_string(observed.tick) + " vs " +
                           std::to_string(golden.tick));
    }
    std::vector<FieldDiff> diffs;
    if (observed.pc != golden.pc) {
        diffs.push_back({"pc", golden.pc, observed.pc});
    }
    if (observed.sp != golden.sp) {
        diffs.push_back({"sp", golden.sp, observed.sp});
    }
    if (observed.sreg != golden.sreg) {
        diffs.push_back({"sreg", golden.sreg, observed.sreg});
    }
    for (std::size_t i = 0; i < observed.regs.size(); ++i) {
        if (observed.regs[i] != golden.regs[i]) {
            diffs.push_back({"r" + std::to_string(i), golden.regs[i], observed.regs[i]});
        }
    }
    const std::size_t mem_len = std::min(observed.mem.size(), golden.mem.size());
    for (std::size_t i = 0; i < mem_len; ++i) {
        if (observed.mem[i] != golden.mem[i]) {
            char name[24];
            std::snprintf(name, sizeof(name), "mem[0x%03x]", static_cast<unsigned>(i));
            diffs.push_back({name, golden.mem[i], observed.mem[i]});
        }
    }
    return diffs;
}

namespace detail {

template <typename Get>
inline double novelty_term(const Snapshot& observed, std::span<const Snapshot> baseline, Get get) {
    const std::uint64_t value = get(observed);
    std::size_t seen = 0;
    for (const Snapshot& b : baseline) {
        seen += get(b) == value ? 1 : 0;
    }
    const double n = static_cast<double>(baseline.size());
    const double freq = seen > 0 ? static_cast<double>(seen) / n : 1.0 / (n + 1.0);
    return -std::log(freq);
}

}  // namespace detail

/// Per-field frequency surprise: sum over fields of -log(frequency of
/// the observed value in the baseline population), with never-seen
/// values floored at 1/(N+1). Zero exactly when every field value was
/// seen in every baseline run.
inline double novelty_score(const Snapshot& observed, std::span<const Snapshot> baseline) {
    if (baseline.empty()) {
        throw EmptyBaseline("novelty_score needs at least one baseline snapshot");
    }
    for (const Snapshot& b : baseline) {
        if (b.tick != observed.tick) {
            throw TickMismatch("baseline snapshot at tick " + std::to_string(b.tick) +
                               " does not match observed tick " + std::to_string(observed.tick));
        }
    }
    double score = 0.0;
    score += detail::novelty_term(observed, baseline, [](const Snapshot& s) -> std::uint64_t { return s.pc; });
    score += detail::novelty_term(observed, baseline, [](const Snapshot& s) -> std::uint64_t { return s.sp; });
    score += detail::novelty_term(observed, baseline, [](const Snapshot& s) -> std::uint64_t { return s.sreg; });
    for (std::size_t i = 0; i < observed.regs.size(); ++i) {
        score += detail::novelty_term(observed, baseline,
                                      [i](const Snapshot& s) -> std::uint64_t { return s.regs[i]; });
    }
    for (std::size_t i = 0; i < observed.mem.size(); ++i) {
        score += detail::novelty_term(observed, baseline,
                                      [i](const Snapshot& s) -> std::uint64_t {
                                          return i < s.mem.size() ? s.mem[i] : 0;
                                      });
    }
    return score;
}

/// Uninjected reference run over the given checkpoints.
inline RunResult golden_trace(const Program& program,
                              const std::vector<std::uint64_t>& checkpoints,
                              std::uint64_t tick_limit = 1'000'000,
                              std::uint8_t port_in = 0) {
    RunOptions options;
    options.checkpoints = checkpoints;
    options.tick_limit = tick_limit;
    options.port_in = port_in;
    return run_program(program, options);
}

struct OffsetResult {
    std::int64_t offset_ticks = 0;
    std::uint32_t reps = 0;
    std::uint32_t anomaly_count = 0;
    std::optional<std::uint64_t> first_divergence_tick;
    std::set<std::string> fields;
    double max_novelty = 0.0;
    std::optional<std::string> error;
};

struct SweepOutcome {
    std::vector<OffsetResult> results;
    std::optional<std::uint64_t> trigger_tick;
    std::uint64_t golden_ticks = 0;
    std::uint32_t total_anomalies = 0;
};

namespace detail {

/// Per-tick enable for the optical delivery path: the window's drive
/// pulse crosses modulator, channel, LED, and logic threshold; a tick
/// only injects if the light actually pulled the sense node Low.
inline std::vector<std::uint8_t> optical_gate(const OpticalPathParams& optics,
                                              std::uint64_t duration_ticks,
                                              double tick_seconds,
                                              std::uint64_t seed) {
    const PinConfig anode = configure_pin(
        {0, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp, optics.pull_up_ohms},
        optics.rails);
    const PinConfig cathode = configure_pin(
        {1, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullDown, optics.pull_down_ohms},
        optics.rails);

    IrradianceTrace pulse;
    pulse.sample_period_s = tick_seconds;
    pulse.samples.assign(duration_ticks, optics.peak_w_m2);
    ChannelParams channel = optics.channel;
    channel.seed = seed;
    pulse = apply_channel(pulse, channel);

    std::vector<std::uint8_t> gate(duration_ticks, 0);
    for (std::uint64_t i = 0; i < duration_ticks; ++i) {
        const double current =
            photocurrent(optics.device, optics.terminal, optics.excitation, pulse.samples[i]);
        const ResolvedNode node =
            resolve_led_node(anode, cathode, current, SenseMode::Photovoltaic, optics.rails);
        gate[i] = read_logic(node.v_anode, optics.rails) == LogicLevel::Low ? 1 : 0;
    }
    return gate;
}

}  // namespace detail

/// Sweeps the injection window across [delay_min, delay_max] relative to
/// the golden trigger tick, diffing every rep against the golden trace.
/// Rep seeds derive from (master seed, offset, rep), so parallel and
/// serial execution produce identical output.
inline SweepOutcome run_sweep(const SweepConfig& config,
                              const Program& program,
                              const SweepProfile& profile) {
    config.validate();

    const std::vector<std::uint64_t> checkpoints = default_checkpoints(program);
    const RunResult golden = golden_trace(program, checkpoints, config.tick_limit, config.port_in);
    const std::int64_t trigger =
        golden.trigger_tick ? static_cast<std::int64_t>(*golden.trigger_tick) : 0;

    VulnerabilityProfile core_profile = VulnerabilityProfile::none();
    switch (profile.kind) {
        case SweepProfile::Kind::None:
            core_profile = VulnerabilityProfile::none();
            break;
        case SweepProfile::Kind::Phases:
            core_profile = VulnerabilityProfile::phases_of(profile.phases);
            break;
        case SweepProfile::Kind::PlantedOffset:
            core_profile = VulnerabilityProfile::at_tick(trigger + profile.planted_offset_ticks);
            break;
    }

    // The novelty baseline is a population of golden reruns; the core is
    // deterministic, so the population is homogeneous by construction.
    std::vector<Snapshot> baseline_pool;
    std::vector<std::span<const Snapshot>> baseline_at;
    {
        std::vector<RunResult> reruns;
        for (std::uint32_t i = 0; i < config.baseline_runs; ++i) {
            reruns.push_back(golden_trace(program, checkpoints, config.tick_limit, config.port_in));
        }
        baseline_pool.reserve(static_cast<std::size_t>(config.baseline_runs) * golden.snapshots.size());
        for (std::size_t c = 0; c < golden.snapshots.size(); ++c) {
            for (const RunResult& rerun : reruns) {
                baseline_pool.push_back(rerun.snapshots[c]);
            }
        }
        for (std::size_t c = 0; c < golden.snapshots.size(); ++c) {
            baseline_at.emplace_back(baseline_pool.data() + c * config.baseline_runs,
                                     config.baseline_runs);
        }
    }

    SweepOutcome outcome;
    if (golden.trigger_tick) {
        outcome.trigger_tick = golden.trigger_tick;
    }
    outcome.golden_ticks = golden.ticks;

    for (std::int64_t offset = config.delay_min_ticks; offset <= config.delay_max_ticks;
         offset += static_cast<std::int64_t>(config.step_ticks)) {
        OffsetResult result;
        result.offset_ticks = offset;
        result.reps = config.reps_per_offset;

        for (std::uint32_t rep = 0; rep < config.reps_per_offset; ++rep) {
            BusInjection injection;
            injection.start_tick = trigger + offset;
            injection.duration_ticks = config.injection.duration_ticks;
            injection.mask = config.injection.mask;
            injection.probability = config.injection.probability;
            injection.seed = derive_seed(config.seed, static_cast<std::uint64_t>(offset), rep);

            RunOptions options;
            options.injection = injection;
            options.profile = core_profile;
            options.checkpoints = checkpoints;
            options.tick_limit = config.tick_limit;
            options.port_in = config.port_in;
            if (config.path == InjectionPath::Optical) {
                options.injection_gate = detail::optical_gate(
                    *config.optics, config.injection.duration_ticks, config.tick_seconds,
                    derive_seed(config.seed ^ 0x09717ca1u, static_cast<std::uint64_t>(offset), rep));
            }

            RunResult observed;
            try {
                observed = run_program(program, options);
            } catch (const TickLimitExceeded& e) {
                result.error = e.what();
                continue;
            }

            bool anomalous = false;
            for (std::size_t c = 0; c < checkpoints.size(); ++c) {
                const std::vector<FieldDiff> diffs =
                    diff_snapshot(observed.snapshots[c], golden.snapshots[c]);
                if (diffs.empty()) {
                    continue;
                }
                anomalous = true;
                for (const FieldDiff& diff : diffs) {
                    result.fields.insert(diff.field);
                }
                if (!result.first_divergence_tick ||
                    checkpoints[c] < *result.first_divergence_tick) {
                    result.first_divergence_tick = checkpoints[c];
                }
                const double score = novelty_score(observed.snapshots[c], baseline_at[c]);
                result.max_novelty = std::max(result.max_novelty, score);
            }
            if (anomalous) {
                result.anomaly_count += 1;
            }
        }
        outcome.total_anomalies += result.anomaly_count;
        outcome.results.push_back(std::move(result));
    }
    return outcome;
}

inline void write_sweep_csv(const std::vector<OffsetResult>& results, std::ostream& out) {
    out << "offset_ticks,reps,anomalies,first_divergence_tick,fields,max_novelty\n";
    char buf[32];
    for (const OffsetResult& r : results) {
        out << r.offset_ticks << ',' << r.reps << ',' << r.anomaly_count << ',';
        if (r.first_divergence_tick) {
            out << *r.first_divergence_tick;
        }
        out << ',';
        bool first = true;
        for (const std::string& field : r.fields) {
            if (!first) {
                out << ';';
            }
            out << field;
            first = false;
        }
        std::snprintf(buf, sizeof(buf), ",%.12g\n", r.max_novelty);
        out << buf;
    }
}

/// Ground truth for a planted vulnerable offset: the grid offsets whose
/// window overlaps it.
struct PlantedTruth {
    std::vector<std::int64_t> expected_offsets;
    double recall = 1.0;
    double precision = 1.0;
};

inline PlantedTruth planted_truth(const std::vector<OffsetResult>& results,
                                  std::int64_t planted_offset,
                                  std::uint64_t duration_ticks) {
    PlantedTruth truth;
    std::size_t hits = 0;
    std::size_t flagged = 0;
    std::size_t flagged_expected = 0;
    for (const OffsetResult& r : results) {
        const bool overlaps = r.offset_ticks <= planted_offset &&
                              planted_offset < r.offset_ticks + static_cast<std::int64_t>(duration_ticks);
        if (overlaps) {
            truth.expected_offsets.push_back(r.offset_ticks);
            ++hits;
        }
        if (r.anomaly_count > 0) {
            ++flagged;
            if (overlaps) {
                ++flagged_expected;
            }
        }
    }
    truth.recall = hits > 0 ? static_cast<double>(flagged_expected) / static_cast<double>(hits) : 1.0;
    truth.precision =
        flagged > 0 ? static_cast<double>(flagged_expected) / static_cast<double>(flagged) : 1.0;
    return truth;
}

inline nlohmann::json sweep_summary_json(const SweepConfig& config,
                                         const SweepOutcome& outcome,
                                         const std::optional<std::int64_t>& planted_offset) {
    nlohmann::json flagged = nlohmann::json::array();
    for (const OffsetResult& r : outcome.results) {
        if (r.anomaly_count > 0) {
            flagged.push_back(r.offset_ticks);
        }
    }
    nlohmann::json doc{
        {"delay_min_ticks", config.delay_min_ticks},
        {"delay_max_ticks", config.delay_max_ticks},
        {"step_ticks", config.step_ticks},
        {"reps_per_offset", config.reps_per_offset},
        {"mask", config.injection.mask},
        {"duration_ticks", config.injection.duration_ticks},
        {"probability", config.injection.probability},
        {"seed", config.seed},
        {"path", config.path == InjectionPath::Optical ? "optical" : "direct"},
        {"tick_seconds", config.tick_seconds},
        {"offsets_swept", outcome.results.size()},
        {"total_anomalies", outcome.total_anomalies},
        {"flagged_offsets", std::move(flagged)},
    };
    if (outcome.trigger_tick) {
        doc["trigger_tick"] = *outcome.trigger_tick;
    } else {
        doc["trigger_tick"] = nullptr;
    }
    if (planted_offset) {
        const PlantedTruth truth =
            planted_truth(outcome.results, *planted_offset, config.injection.duration_ticks);
        doc["ground_truth"] = {
            {"planted_offset_ticks", *planted_offset},
            {"expected_offsets", truth.expected_offsets},
            {"recall", truth.recall},
            {"precision", truth.precision},
        };
    }
    return doc;
}

}  // namespace lumen
