// Command-line front end: device-library inspection, covert-channel link
// measurement, and delay-sweep fault-injection experiments.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lumen/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"lumen: LED optical-injection bench"};
    app.require_subcommand(1);

    lumen::cli::DevicesOptions devices;
    devices.library_path = lumen::cli::default_library_path();
    CLI::App* cmd_devices = app.add_subcommand("devices", "Render the LED response matrix");
    cmd_devices->add_option("--library", devices.library_path, "Device library JSON")
        ->envname("LUMEN_DEVICE_LIB");

    lumen::cli::ChannelOptions channel;
    channel.library_path = lumen::cli::default_library_path();
    CLI::App* cmd_channel = app.add_subcommand("channel", "Measure a covert optical link");
    cmd_channel->add_option("--library", channel.library_path, "Device library JSON")
        ->envname("LUMEN_DEVICE_LIB");
    cmd_channel->add_option("--device", channel.device_name, "Target LED name (substring ok)")
        ->required();
    cmd_channel->add_option("--excitation", channel.excitation, "laser405|laser532|laser640|white");
    cmd_channel->add_option("--terminal", channel.terminal, "anode|cathode");
    cmd_channel->add_option("--modulator", channel.modulator, "pockels|eo");
    cmd_channel->add_option("--mode", channel.sense_mode, "photovoltaic|photoconductive");
    cmd_channel->add_option("--board", channel.board, "Board description from the library");
    cmd_channel->add_option("--rate", channel.rate_hz, "Raw frame bit rate, Hz");
    cmd_channel->add_option("--coupling", channel.coupling, "Geometric coupling (0,1]");
    cmd_channel->add_option("--ambient", channel.ambient, "Ambient irradiance, W/m^2");
    cmd_channel->add_option("--noise", channel.noise, "Noise sigma, W/m^2");
    cmd_channel->add_option("--peak", channel.peak, "Peak irradiance, W/m^2");
    cmd_channel->add_option("--seed", channel.seed, "Master seed");
    cmd_channel->add_option("--frames", channel.frames, "Frames to send");
    cmd_channel->add_option("--payload-size", channel.payload_size, "Payload bytes per frame");
    cmd_channel->add_option("--samples-per-symbol", channel.samples_per_symbol,
                            "Receiver oversampling per line symbol");
    cmd_channel->add_option("--out", channel.out_path, "Write the report JSON here");
    cmd_channel->add_option("--csv", channel.csv_path, "Write per-frame CSV here");

    lumen::cli::SweepOptions sweep;
    sweep.library_path = lumen::cli::default_library_path();
    std::string range = "0:0";
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "Sweep an injection window over a program");
    cmd_sweep->add_option("--program", sweep.program_path, "Assembly source file")->required();
    cmd_sweep->add_option("--profile", sweep.profile, "none|default|planted:<offset>");
    cmd_sweep->add_option("--range", range, "Offset range min:max, ticks from trigger");
    cmd_sweep->add_option("--step", sweep.step, "Offset step, ticks");
    cmd_sweep->add_option("--reps", sweep.reps, "Repetitions per offset");
    cmd_sweep->add_option("--mask", sweep.mask, "Force-low bit mask");
    cmd_sweep->add_option("--duration", sweep.duration, "Window length, ticks");
    cmd_sweep->add_option("--prob", sweep.probability, "Per-tick injection probability");
    cmd_sweep->add_option("--seed", sweep.seed, "Master seed");
    cmd_sweep->add_option("--path", sweep.path, "direct|optical");
    cmd_sweep->add_option("--tick-seconds", sweep.tick_seconds, "Seconds per tick (labels only)");
    cmd_sweep->add_option("--tick-limit", sweep.tick_limit, "Run tick limit");
    cmd_sweep->add_option("--port-in", sweep.port_in, "GPIO input port value");
    cmd_sweep->add_option("--out", sweep.out_path, "Write the sweep CSV here");
    cmd_sweep->add_option("--summary", sweep.summary_path, "Write the summary JSON here");
    cmd_sweep->add_option("--golden-trace", sweep.golden_trace_path,
                          "Write the golden snapshot CSV here");
    cmd_sweep->add_option("--library", sweep.library_path, "Device library JSON (optical path)")
        ->envname("LUMEN_DEVICE_LIB");
    cmd_sweep->add_option("--device", sweep.device_name, "Target LED (optical path)");
    cmd_sweep->add_option("--excitation", sweep.excitation, "Excitation source (optical path)");
    cmd_sweep->add_option("--terminal", sweep.terminal, "LED terminal (optical path)");
    cmd_sweep->add_option("--coupling", sweep.coupling, "Coupling (optical path)");
    cmd_sweep->add_option("--ambient", sweep.ambient, "Ambient irradiance (optical path)");
    cmd_sweep->add_option("--noise", sweep.noise, "Noise sigma (optical path)");
    cmd_sweep->add_option("--peak", sweep.peak, "Peak irradiance (optical path)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return lumen::cli::kExitConfig;
    }

    if (cmd_devices->parsed()) {
        return lumen::cli::run_devices(devices, std::cout, std::cerr);
    }
    if (cmd_channel->parsed()) {
        return lumen::cli::run_channel(channel, std::cout, std::cerr);
    }
    if (cmd_sweep->parsed()) {
        const auto colon = range.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= range.size()) {
            std::cerr << "sweep: --range expects min:max\n";
            return lumen::cli::kExitConfig;
        }
        try {
            sweep.delay_min = std::stoll(range.substr(0, colon));
            sweep.delay_max = std::stoll(range.substr(colon + 1));
        } catch (const std::exception&) {
            std::cerr << "sweep: --range expects min:max\n";
            return lumen::cli::kExitConfig;
        }
        return lumen::cli::run_sweep_cmd(sweep, std::cout, std::cerr);
    }
    return lumen::cli::kExitConfig;
}
