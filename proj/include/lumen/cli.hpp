#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lumen/lumen.hpp"

namespace lumen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFail = 1;    // semantic failure: errors detected
inline constexpr int kExitConfig = 2;  // usage / config / schema errors

inline std::string default_library_path() {
    if (const char* env = std::getenv("LUMEN_DEVICE_LIB"); env != nullptr && *env != '\0') {
        return env;
    }
    return "data/led_library.json";
}

inline ExcitationKind parse_excitation(const std::string& text) {
    if (text == "laser405" || text == "405") return ExcitationKind::Laser405;
    if (text == "laser532" || text == "532") return ExcitationKind::Laser532;
    if (text == "laser640" || text == "640") return ExcitationKind::Laser640;
    if (text == "white") return ExcitationKind::WhiteLed;
    throw InvalidConfig("unknown excitation '" + text + "' (laser405|laser532|laser640|white)");
}

inline Terminal parse_terminal(const std::string& text) {
    if (text == "anode") return Terminal::Anode;
    if (text == "cathode") return Terminal::Cathode;
    throw InvalidConfig("unknown terminal '" + text + "' (anode|cathode)");
}

inline Modulator parse_modulator(const std::string& text) {
    if (text == "pockels") return Modulator{ModulatorKind::Pockels};
    if (text == "eo" || text == "electrooptic") return Modulator{ModulatorKind::ElectroOptic};
    throw InvalidConfig("unknown modulator '" + text + "' (pockels|eo)");
}

inline SenseMode parse_sense_mode(const std::string& text) {
    if (text == "photovoltaic") return SenseMode::Photovoltaic;
    if (text == "photoconductive") return SenseMode::Photoconductive;
    throw InvalidConfig("unknown sense mode '" + text + "' (photovoltaic|photoconductive)");
}

inline int error_exit_code(const Error& error) {
    if (dynamic_cast<const TickLimitExceeded*>(&error) != nullptr) {
        return kExitFail;
    }
    return kExitConfig;
}

// ---------------------------------------------------------------------------
// devices
// ---------------------------------------------------------------------------

struct DevicesOptions {
    std::string library_path;
};

inline void render_device_matrix(const DeviceLibrary& library, std::ostream& out) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-28s", "Device");
    out << buf << "405nm laser     532nm laser     640nm laser     white LED\n";
    std::snprintf(buf, sizeof(buf), "%-28s", "");
    out << buf << "anode cathode   anode cathode   anode cathode   anode cathode\n";
    for (const LedDevice& device : library.devices) {
        std::snprintf(buf, sizeof(buf), "%-28s", device.name.c_str());
        out << buf;
        for (ExcitationKind kind : kAllExcitations) {
            out << "  " << response_glyph(device.cell(kind, Terminal::Anode).cls) << "     "
                << response_glyph(device.cell(kind, Terminal::Cathode).cls) << "      ";
        }
        out << '\n';
    }
    int cells = 0;
    int exploitable = 0;
    for (const LedDevice& device : library.devices) {
        cells += device.responsive_cells();
        exploitable += device.exploitable() ? 1 : 0;
    }
    const long percent =
        library.devices.empty()
            ? 0
            : std::lround(100.0 * exploitable / static_cast<double>(library.devices.size()));
    out << "\nLegend: E expected   U unexpected   X unexplainable   · none\n";
    out << "Responsive cells: " << cells << '\n';
    out << "Exploitable devices: " << exploitable << '/' << library.devices.size() << " ("
        << percent << "%)\n";
}

inline int run_devices(const DevicesOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DeviceLibrary library = load_device_library_file(options.library_path);
        render_device_matrix(library, out);
        return kExitOk;
    } catch (const Error& e) {
        err << "devices: " << e.what() << '\n';
        return error_exit_code(e);
    }
}

// ---------------------------------------------------------------------------
// channel
// ---------------------------------------------------------------------------

struct ChannelOptions {
    std::string library_path;
    std::string device_name;
    std::string excitation = "laser640";
    std::string terminal = "anode";
    std::string modulator = "eo";
    std::string sense_mode = "photovoltaic";
    std::string board;  // board name from the library; empty = dual-GPIO wiring
    double rate_hz = 1e6;
    double coupling = 1.0;
    double ambient = 0.0;
    double noise = 0.0;
    double peak = 0.01;
    std::uint64_t seed = 0;
    unsigned frames = 20;
    unsigned payload_size = 64;
    int samples_per_symbol = 4;
    std::string out_path;  // report JSON; empty = stdout
    std::string csv_path;  // per-frame CSV; empty = skip
};

inline std::vector<std::vector<std::uint8_t>> generate_payloads(std::uint64_t seed,
                                                                unsigned frames,
                                                                unsigned payload_size) {
    std::vector<std::vector<std::uint8_t>> payloads;
    payloads.reserve(frames);
    for (unsigned i = 0; i < frames; ++i) {
        std::uint64_t x = derive_seed(seed, 0x70ad, i);
        std::vector<std::uint8_t> payload(payload_size);
        for (auto& byte : payload) {
            x = splitmix64(x);
            byte = static_cast<std::uint8_t>(x & 0xff);
        }
        payloads.push_back(std::move(payload));
    }
    return payloads;
}

inline int run_channel(const ChannelOptions& options, std::ostream& out, std::ostream& err) {
    try {
        const DeviceLibrary library = load_device_library_file(options.library_path);
        const LedDevice* device = find_device(library, options.device_name);
        if (device == nullptr) {
            throw InvalidConfig("no unique device matches '" + options.device_name + "'");
        }

        LinkScenario scenario;
        scenario.bit_rate_hz = options.rate_hz;
        scenario.modulator = parse_modulator(options.modulator);
        scenario.channel = ChannelParams{options.coupling, options.ambient, options.noise, options.seed};
        scenario.peak_w_m2 = options.peak;
        scenario.device = *device;
        scenario.terminal = parse_terminal(options.terminal);
        scenario.excitation = parse_excitation(options.excitation);
        scenario.sense_mode = parse_sense_mode(options.sense_mode);
        scenario.samples_per_symbol = options.samples_per_symbol;
        if (!options.board.empty()) {
            const BoardDescription* board = nullptr;
            for (const BoardDescription& b : library.boards) {
                if (b.name == options.board) {
                    board = &b;
                }
            }
            if (board == nullptr) {
                throw InvalidConfig("no board named '" + options.board + "' in the library");
            }
            scenario.wiring = board->wiring;
        }

        const auto payloads = generate_payloads(options.seed, options.frames, options.payload_size);
        const LinkReport report = measure_link(payloads, scenario);

        const std::string json = link_report_json(report).dump(2) + "\n";
        if (options.out_path.empty()) {
            out << json;
        } else {
            std::ofstream file(options.out_path, std::ios::binary);
            if (!file) {
                throw InvalidConfig("cannot write '" + options.out_path + "'");
            }
            file << json;
        }
        if (!options.csv_path.empty()) {
            std::ofstream file(options.csv_path, std::ios::binary);
            if (!file) {
                throw InvalidConfig("cannot write '" + options.csv_path + "'");
            }
            write_frames_csv(report, file);
        }

        char line[160];
        std::snprintf(line, sizeof(line),
                      "channel: %llu/%llu frames ok, ber %.3g, goodput %.6g bit/s\n",
                      static_cast<unsigned long long>(report.frames_ok),
                      static_cast<unsigned long long>(report.frames_sent), report.ber,
                      report.goodput_bit_s);
        err << line;
        return report.ber == 0.0 ? kExitOk : kExitFail;
    } catch (const Error& e) {
        err << "channel: " << e.what() << '\n';
        return error_exit_code(e);
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
    std::string program_path;
    std::string profile = "default";  // none | default | planted:<offset>
    std::int64_t delay_min = 0;
    std::int64_t delay_max = 0;
    std::uint64_t step = 1;
    std::uint32_t reps = 1;
    std::uint32_t mask = 0xff;
    std::uint64_t duration = 1;
    double probability = 1.0;
    std::uint64_t seed = 0;
    std::string path = "direct";  // direct | optical
    double tick_seconds = 1e-6;
    std::uint64_t tick_limit = 1'000'000;
    unsigned port_in = 0;
    std::string out_path;           // sweep CSV; empty = stdout
    std::string summary_path;       // summary JSON; empty = skip
    std::string golden_trace_path;  // golden snapshot CSV; empty = skip

    // optical path parameters
    std::string library_path;
    std::string device_name;
    std::string excitation = "laser640";
    std::string terminal = "anode";
    double coupling = 1.0;
    double ambient = 0.0;
    double noise = 0.0;
    double peak = 0.01;
};

inline int run_sweep_cmd(const SweepOptions& options, std::ostream& out, std::ostream& err) {
    try {
        if (options.program_path.empty()) {
            throw InvalidConfig("--program is required");
        }
        std::ifstream in(options.program_path);
        if (!in) {
            throw InvalidConfig("cannot open program '" + options.program_path + "'");
        }
        const std::string source((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
        const Program program = assemble(source);

        SweepProfile profile = SweepProfile::default_phases();
        std::optional<std::int64_t> planted;
        if (options.profile == "none") {
            profile = SweepProfile::none();
        } else if (options.profile == "default") {
            profile = SweepProfile::default_phases();
        } else if (options.profile.rfind("planted:", 0) == 0) {
            const std::string arg = options.profile.substr(8);
            try {
                planted = std::stoll(arg);
            } catch (const std::exception&) {
                throw InvalidConfig("bad planted offset '" + arg + "'");
            }
            profile = SweepProfile::planted(*planted);
        } else {
            throw InvalidConfig("unknown profile '" + options.profile +
                                "' (none|default|planted:<offset>)");
        }

        SweepConfig config;
        config.delay_min_ticks = options.delay_min;
        config.delay_max_ticks = options.delay_max;
        config.step_ticks = options.step;
        config.reps_per_offset = options.reps;
        config.injection =
            InjectionTemplate{static_cast<std::uint8_t>(options.mask), options.duration,
                              options.probability};
        config.seed = options.seed;
        config.tick_seconds = options.tick_seconds;
        config.tick_limit = options.tick_limit;
        config.port_in = static_cast<std::uint8_t>(options.port_in);
        if (options.path == "optical") {
            config.path = InjectionPath::Optical;
            const DeviceLibrary library = load_device_library_file(options.library_path);
            const LedDevice* device = find_device(library, options.device_name);
            if (device == nullptr) {
                throw InvalidConfig("no unique device matches '" + options.device_name + "'");
            }
            OpticalPathParams optics;
            optics.device = *device;
            optics.terminal = parse_terminal(options.terminal);
            optics.excitation = parse_excitation(options.excitation);
            optics.channel = ChannelParams{options.coupling, options.ambient, options.noise, options.seed};
            optics.peak_w_m2 = options.peak;
            config.optics = std::move(optics);
        } else if (options.path != "direct") {
            throw InvalidConfig("unknown path '" + options.path + "' (direct|optical)");
        }

        const SweepOutcome outcome = run_sweep(config, program, profile);

        if (!options.golden_trace_path.empty()) {
            const RunResult golden = golden_trace(program, default_checkpoints(program),
                                                  config.tick_limit, config.port_in);
            std::ofstream file(options.golden_trace_path, std::ios::binary);
            if (!file) {
                throw InvalidConfig("cannot write '" + options.golden_trace_path + "'");
            }
            write_snapshots_csv(golden.snapshots, file);
        }

        if (options.out_path.empty()) {
            write_sweep_csv(outcome.results, out);
        } else {
            std::ofstream file(options.out_path, std::ios::binary);
            if (!file) {
                throw InvalidConfig("cannot write '" + options.out_path + "'");
            }
            write_sweep_csv(outcome.results, file);
        }
        if (!options.summary_path.empty()) {
            std::ofstream file(options.summary_path, std::ios::binary);
            if (!file) {
                throw InvalidConfig("cannot write '" + options.summary_path + "'");
            }
            file << sweep_summary_json(config, outcome, planted).dump(2) << '\n';
        }

        bool run_errors = false;
        for (const OffsetResult& r : outcome.results) {
            run_errors = run_errors || r.error.has_value();
        }

        err << "sweep: " << outcome.total_anomalies << " anomalies across "
            << outcome.results.size() << " offsets x " << config.reps_per_offset << " reps";
        if (outcome.trigger_tick) {
            err << " (trigger tick " << *outcome.trigger_tick << ")";
        }
        err << '\n';

        if (planted) {
            const PlantedTruth truth =
                planted_truth(outcome.results, *planted, config.injection.duration_ticks);
            char line[96];
            std::snprintf(line, sizeof(line), "sweep: planted recall %.3f precision %.3f\n",
                          truth.recall, truth.precision);
            err << line;
            if (truth.recall < 1.0 || truth.precision < 1.0) {
                return kExitFail;
            }
        }
        return run_errors ? kExitFail : kExitOk;
    } catch (const Error& e) {
        err << "sweep: " << e.what() << '\n';
        return error_exit_code(e);
    }
}

}  // namespace lumen::cli
