#include "lumen/sweep.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "lumen/device_library.hpp"

namespace lumen {
namespace {

Program fixture_program() {
    std::ifstream in(std::string(LUMEN_DATA_DIR) + "/opcode_coverage.asm");
    const std::string source{std::istreambuf_iterator<char>(in),
                             std::istreambuf_iterator<char>()};
    return assemble(source);
}

const LedDevice& blue_led() {
    static const DeviceLibrary library =
        load_device_library_file(std::string(LUMEN_DATA_DIR) + "/led_library.json");
    return *find_device(library, "5 mm blue LED");
}

TEST(GoldenTrace, DeterministicAndCached) {
    const Program program = fixture_program();
    const auto checkpoints = default_checkpoints(program);
    const RunResult a = golden_trace(program, checkpoints);
    const RunResult b = golden_trace(program, checkpoints);
    ASSERT_EQ(a.snapshots.size(), 16u);
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
        EXPECT_TRUE(diff_snapshot(a.snapshots[i], b.snapshots[i]).empty());
    }
}

TEST(GoldenTrace, EmptyProgramGivesAnEmptyTrace) {
    const Program program = assemble("");
    EXPECT_TRUE(golden_trace(program, default_checkpoints(program)).snapshots.empty());
}

TEST(DiffSnapshot, EmptyForIdenticalSnapshots) {
    const Program program = fixture_program();
    const RunResult run = golden_trace(program, {8});
    EXPECT_TRUE(diff_snapshot(run.snapshots[0], run.snapshots[0]).empty());
}

TEST(DiffSnapshot, SingleRegisterDifferenceIsNamed) {
    Snapshot golden;
    golden.tick = 4;
    golden.mem.assign(kDataMemBytes, 0);
    golden.regs[16] = 0xff;
    Snapshot observed = golden;
    observed.regs[16] = 0x00;
    const auto diffs = diff_snapshot(observed, golden);
    ASSERT_EQ(diffs.size(), 1u);
    EXPECT_EQ(diffs[0].field, "r16");
    EXPECT_EQ(diffs[0].golden, 0xffu);
    EXPECT_EQ(diffs[0].observed, 0x00u);
}

TEST(DiffSnapshot, MismatchedTicksAreAnError) {
    Snapshot a;
    a.tick = 4;
    Snapshot b;
    b.tick = 8;
    EXPECT_THROW(diff_snapshot(a, b), TickMismatch);
}

TEST(NoveltyScore, ZeroWhenObservedMatchesTheBaseline) {
    const Program program = fixture_program();
    const RunResult run = golden_trace(program, {8});
    const std::vector<Snapshot> baseline(9, run.snapshots[0]);
    EXPECT_DOUBLE_EQ(novelty_score(run.snapshots[0], baseline), 0.0);
}

TEST(NoveltyScore, NeverSeenValueScoresLogNPlusOne) {
    Snapshot base;
    base.tick = 4;
    base.mem.assign(8, 0);
    const std::vector<Snapshot> baseline(9, base);
    Snapshot observed = base;
    observed.regs[7] = 0x42;  // never seen in any of the nine baseline runs
    EXPECT_NEAR(novelty_score(observed, baseline), std::log(10.0), 1e-12);
}

TEST(NoveltyScore, EmptyBaselineIsAnError) {
    Snapshot observed;
    EXPECT_THROW(novelty_score(observed, {}), EmptyBaseline);
}

TEST(NoveltyScore, ZeroExactlyWhenDiffAgainstHomogeneousBaselineIsEmpty) {
    const Program program = fixture_program();
    const RunResult run = golden_trace(program, default_checkpoints(program));
    const std::vector<Snapshot> baseline(5, run.snapshots[3]);
    Snapshot tweaked = run.snapshots[3];
    tweaked.mem[0x40] ^= 0x80;
    EXPECT_TRUE(diff_snapshot(run.snapshots[3], run.snapshots[3]).empty());
    EXPECT_DOUBLE_EQ(novelty_score(run.snapshots[3], baseline), 0.0);
    EXPECT_FALSE(diff_snapshot(tweaked, run.snapshots[3]).empty());
    EXPECT_GT(novelty_score(tweaked, baseline), 0.0);
}

TEST(RunSweep, NullProfileRaisesNoAnomalies) {
    const Program program = fixture_program();
    SweepConfig config;
    config.delay_min_ticks = -100;
    config.delay_max_ticks = 99;
    config.reps_per_offset = 3;
    config.injection = {0xff, 4, 1.0};
    config.seed = 7;
    const SweepOutcome outcome = run_sweep(config, program, SweepProfile::none());
    EXPECT_EQ(outcome.results.size(), 200u);
    EXPECT_EQ(outcome.total_anomalies, 0u);
    for (const OffsetResult& r : outcome.results) {
        EXPECT_EQ(r.anomaly_count, 0u);
        EXPECT_TRUE(r.fields.empty());
        EXPECT_FALSE(r.first_divergence_tick.has_value());
        EXPECT_DOUBLE_EQ(r.max_novelty, 0.0);
    }
}

TEST(RunSweep, PlantedTickIsDetectedAtExactlyTheOverlappingOffsets) {
    const Program program = fixture_program();
    const RunResult golden = golden_trace(program, default_checkpoints(program));
    ASSERT_TRUE(golden.trigger_tick.has_value());
    const auto trigger = static_cast<std::int64_t>(*golden.trigger_tick);
    // plant at the writeback of the first LDI
    const std::int64_t planted = 3 - trigger;

    for (const std::uint64_t duration : {1ull, 3ull}) {
        SweepConfig config;
        config.delay_min_ticks = planted - 10;
        config.delay_max_ticks = planted + 10;
        config.reps_per_offset = 2;
        config.injection = {0xff, duration, 1.0};
        config.seed = 13;
        const SweepOutcome outcome =
            run_sweep(config, program, SweepProfile::planted(planted));

        std::set<std::int64_t> flagged;
        for (const OffsetResult& r : outcome.results) {
            if (r.anomaly_count > 0) {
                EXPECT_EQ(r.anomaly_count, config.reps_per_offset);
                EXPECT_TRUE(r.fields.count("r16")) << "offset " << r.offset_ticks;
                EXPECT_GT(r.max_novelty, 0.0);
                flagged.insert(r.offset_ticks);
            }
        }
        std::set<std::int64_t> expected;
        for (std::int64_t o = planted - static_cast<std::int64_t>(duration) + 1; o <= planted; ++o) {
            expected.insert(o);
        }
        EXPECT_EQ(flagged, expected) << "duration " << duration;

        const PlantedTruth truth = planted_truth(outcome.results, planted, duration);
        EXPECT_DOUBLE_EQ(truth.recall, 1.0);
        EXPECT_DOUBLE_EQ(truth.precision, 1.0);
    }
}

// Coverage oracle: with p = 1 and a phase profile, the flagged offsets
// must be exactly those whose window overlaps a golden-run transfer that
// the mask visibly damages.
TEST(RunSweep, FlagsExactlyTheOffsetsPredictedByTheTransferLog) {
    const Program program = fixture_program();
    const std::set<TimingPhase> phases = {TimingPhase::Execute, TimingPhase::Writeback};
    const std::uint8_t mask = 0x0f;
    const std::uint64_t duration = 2;

    RunOptions logging;
    logging.record_transfers = true;
    const RunResult golden = run_program(program, logging);
    ASSERT_TRUE(golden.trigger_tick.has_value());
    const auto trigger = static_cast<std::int64_t>(*golden.trigger_tick);

    std::set<std::int64_t> effectful_ticks;
    for (const TransferEvent& event : golden.transfers) {
        // port writes only land in the trigger latch, which snapshots do
        // not cover (and this program never reads back)
        if (event.kind == TransferKind::PortWrite) {
            continue;
        }
        if (phases.count(event.phase) && (event.before & mask) != 0) {
            effectful_ticks.insert(static_cast<std::int64_t>(event.tick));
        }
    }
    ASSERT_FALSE(effectful_ticks.empty());

    SweepConfig config;
    config.delay_min_ticks = -trigger - 5;
    config.delay_max_ticks = static_cast<std::int64_t>(golden.ticks) - trigger + 5;
    config.reps_per_offset = 1;
    config.injection = {mask, duration, 1.0};
    config.seed = 99;
    const SweepOutcome outcome =
        run_sweep(config, program, SweepProfile::phases_of(phases));

    std::set<std::int64_t> expected;
    for (const OffsetResult& r : outcome.results) {
        const std::int64_t start = trigger + r.offset_ticks;
        for (std::int64_t t = start; t < start + static_cast<std::int64_t>(duration); ++t) {
            if (effectful_ticks.count(t)) {
                expected.insert(r.offset_ticks);
            }
        }
    }
    std::set<std::int64_t> flagged;
    for (const OffsetResult& r : outcome.results) {
        if (r.anomaly_count > 0) {
            flagged.insert(r.offset_ticks);
        }
    }
    EXPECT_EQ(flagged, expected);
}

TEST(RunSweep, StochasticInjectionLandsNearTheBinomialMean) {
    const Program program = fixture_program();
    const RunResult golden = golden_trace(program, default_checkpoints(program));
    const auto trigger = static_cast<std::int64_t>(*golden.trigger_tick);
    const std::int64_t planted = 3 - trigger;

    SweepConfig config;
    config.delay_min_ticks = planted;
    config.delay_max_ticks = planted;
    config.reps_per_offset = 40;
    config.injection = {0xff, 1, 0.5};
    config.seed = 1234;
    const SweepOutcome outcome = run_sweep(config, program, SweepProfile::planted(planted));
    ASSERT_EQ(outcome.results.size(), 1u);
    EXPECT_GE(outcome.results[0].anomaly_count, 10u);
    EXPECT_LE(outcome.results[0].anomaly_count, 30u);
}

TEST(RunSweep, ReproducibleOffsetResults) {
    const Program program = fixture_program();
    SweepConfig config;
    config.delay_min_ticks = -50;
    config.delay_max_ticks = 20;
    config.step_ticks = 3;
    config.reps_per_offset = 4;
    config.injection = {0x3c, 2, 0.7};
    config.seed = 4242;
    const SweepOutcome a = run_sweep(config, program, SweepProfile::default_phases());
    const SweepOutcome b = run_sweep(config, program, SweepProfile::default_phases());
    ASSERT_EQ(a.results.size(), b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        EXPECT_EQ(a.results[i].offset_ticks, b.results[i].offset_ticks);
        EXPECT_EQ(a.results[i].anomaly_count, b.results[i].anomaly_count);
        EXPECT_EQ(a.results[i].fields, b.results[i].fields);
        EXPECT_EQ(a.results[i].first_divergence_tick, b.results[i].first_divergence_tick);
        EXPECT_DOUBLE_EQ(a.results[i].max_novelty, b.results[i].max_novelty);
    }
}

TEST(RunSweep, OpticalPathMatchesDirectOnACleanChannel) {
    const Program program = fixture_program();
    SweepConfig direct;
    direct.delay_min_ticks = -48;
    direct.delay_max_ticks = 10;
    direct.reps_per_offset = 2;
    direct.injection = {0xff, 2, 1.0};
    direct.seed = 31;

    SweepConfig optical = direct;
    optical.path = InjectionPath::Optical;
    OpticalPathParams optics;
    optics.device = blue_led();
    optics.excitation = ExcitationKind::Laser640;
    optics.channel = ChannelParams{1.0, 0.0, 0.0, 8};
    optical.optics = optics;

    const SweepOutcome a = run_sweep(direct, program, SweepProfile::default_phases());
    const SweepOutcome b = run_sweep(optical, program, SweepProfile::default_phases());
    ASSERT_EQ(a.results.size(), b.results.size());
    for (std::size_t i = 0; i < a.results.size(); ++i) {
        EXPECT_EQ(a.results[i].anomaly_count, b.results[i].anomaly_count);
        EXPECT_EQ(a.results[i].fields, b.results[i].fields);
    }
    EXPECT_GT(b.total_anomalies, 0u);
}

TEST(RunSweep, OpticalPathThroughANonResponsiveDeviceFindsNothing) {
    static const DeviceLibrary library =
        load_device_library_file(std::string(LUMEN_DATA_DIR) + "/led_library.json");
    const Program program = fixture_program();
    SweepConfig config;
    config.delay_min_ticks = -48;
    config.delay_max_ticks = 10;
    config.reps_per_offset = 2;
    config.injection = {0xff, 2, 1.0};
    config.seed = 31;
    config.path = InjectionPath::Optical;
    OpticalPathParams optics;
    optics.device = *find_device(library, "red diffuse");
    optics.channel = ChannelParams{1.0, 0.0, 0.0, 8};
    config.optics = optics;
    const SweepOutcome outcome = run_sweep(config, program, SweepProfile::default_phases());
    EXPECT_EQ(outcome.total_anomalies, 0u);
}

TEST(RunSweep, PerOffsetRunErrorsAreCapturedWithoutAbortingTheSweep) {
    // corrupting the countdown register sends the loop around 255 extra
    // times; a tight tick limit turns exactly those offsets into errors
    const Program program = assemble(
        "      OUT 0, r0\n"
        "      LDI r16, 1\n"
        "      LDI r17, 1\n"
        "loop: SUB r16, r17\n"
        "      BRNE loop\n");
    const RunResult golden = run_program(program, RunOptions{});
    SweepConfig config;
    config.delay_min_ticks = 0;
    config.delay_max_ticks = 20;
    config.injection = {0x01, 1, 1.0};
    config.seed = 5;
    config.tick_limit = golden.ticks + 8;
    const SweepOutcome outcome = run_sweep(config, program, SweepProfile::default_phases());
    bool any_error = false;
    bool any_clean = false;
    for (const OffsetResult& r : outcome.results) {
        any_error = any_error || r.error.has_value();
        any_clean = any_clean || (!r.error.has_value() && r.anomaly_count == 0);
    }
    EXPECT_TRUE(any_error);
    EXPECT_TRUE(any_clean);
}

TEST(RunSweep, ValidatesItsConfiguration) {
    const Program program = fixture_program();
    SweepConfig config;
    config.delay_min_ticks = 10;
    config.delay_max_ticks = 0;
    EXPECT_THROW(run_sweep(config, program, SweepProfile::none()), InvalidConfig);

    config = SweepConfig{};
    config.step_ticks = 0;
    EXPECT_THROW(run_sweep(config, program, SweepProfile::none()), InvalidConfig);

    config = SweepConfig{};
    config.injection.probability = 1.5;
    EXPECT_THROW(run_sweep(config, program, SweepProfile::none()), InvalidConfig);

    config = SweepConfig{};
    config.path = InjectionPath::Optical;  // no optics supplied
    EXPECT_THROW(run_sweep(config, program, SweepProfile::none()), InvalidConfig);
}

TEST(SweepReports, CsvAndSummaryCarryTheContract) {
    const Program program = fixture_program();
    const RunResult golden = golden_trace(program, default_checkpoints(program));
    const auto trigger = static_cast<std::int64_t>(*golden.trigger_tick);
    const std::int64_t planted = 3 - trigger;

    SweepConfig config;
    config.delay_min_ticks = planted - 2;
    config.delay_max_ticks = planted + 2;
    config.reps_per_offset = 2;
    config.injection = {0xff, 1, 1.0};
    config.seed = 77;
    const SweepOutcome outcome = run_sweep(config, program, SweepProfile::planted(planted));

    std::ostringstream csv;
    write_sweep_csv(outcome.results, csv);
    const std::string text = csv.str();
    EXPECT_NE(text.find("offset_ticks,reps,anomalies,first_divergence_tick,fields,max_novelty"),
              std::string::npos);
    EXPECT_NE(text.find("r16"), std::string::npos);

    const nlohmann::json summary = sweep_summary_json(config, outcome, planted);
    EXPECT_EQ(summary["total_anomalies"], 2u);
    EXPECT_EQ(summary["flagged_offsets"].size(), 1u);
    EXPECT_EQ(summary["flagged_offsets"][0], planted);
    EXPECT_DOUBLE_EQ(summary["ground_truth"]["recall"], 1.0);
    EXPECT_DOUBLE_EQ(summary["ground_truth"]["precision"], 1.0);
    EXPECT_EQ(summary["trigger_tick"], *golden.trigger_tick);
}

}  // namespace
}  // namespace lumen
