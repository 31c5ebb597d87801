#pragma once

#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <vector>

#include <json.hpp>

#include "lumen/channel.hpp"
#include "lumen/errors.hpp"
#include "lumen/framing.hpp"
#include "lumen/gpio.hpp"
#include "lumen/led.hpp"
#include "lumen/manchester.hpp"
#include "lumen/rng.hpp"

namespace lumen {

/// Everything one end-to-end link run needs. `bit_rate_hz` is the frame
/// bit rate: the modulator budget is charged here, and Manchester halves
/// run at twice it as sub-bit shaping.
struct LinkScenario {
    double bit_rate_hz = 1e6;
    Modulator modulator{};
    ChannelParams channel{};
    double peak_w_m2 = 0.01;
    LedDevice device;
    Terminal terminal = Terminal::Anode;
    ExcitationKind excitation = ExcitationKind::Laser640;
    SenseMode sense_mode = SenseMode::Photovoltaic;
    LedWiring wiring = LedWiring::DualGpio;
    double pull_up_ohms = kDefaultPullOhms;
    double pull_down_ohms = kDefaultPullOhms;
    SupplyRails rails{};
    int samples_per_symbol = 4;
};

struct FrameStat {
    std::size_t index = 0;
    std::size_t bits = 0;
    std::size_t errors = 0;
    bool ok = false;
};

struct LinkReport {
    double raw_bit_rate_hz = 0.0;
    double goodput_bit_s = 0.0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bits_total = 0;
    double ber = 0.0;
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_ok = 0;
    std::vector<FrameStat> frames;
};

/// Full pipeline per frame: encode, Manchester, OOK, channel,
/// photocurrent, node solve, logic read, clock recovery, frame decode.
/// The sense node reads Low under illumination, so the receiver inverts
/// before clock recovery. Deterministic given the channel seed; each
/// frame derives its own noise stream, so aggregation order is free.
inline LinkReport measure_link(const std::vector<std::vector<std::uint8_t>>& payloads,
                               const LinkScenario& scenario) {
    if (scenario.bit_rate_hz <= 0.0) {
        throw InvalidConfig("bit rate must be positive");
    }
    if (scenario.bit_rate_hz > scenario.modulator.max_rate_hz()) {
        char message[128];
        std::snprintf(message, sizeof(message),
                      "%.6g bit/s exceeds %s modulator ceiling of %.6g Hz",
                      scenario.bit_rate_hz, scenario.modulator.name(),
                      scenario.modulator.max_rate_hz());
        throw RateExceedsModulatorBandwidth(message);
    }
    if (scenario.samples_per_symbol < 2) {
        throw InvalidConfig("samples_per_symbol must be at least 2");
    }
    if (scenario.wiring != LedWiring::DualGpio) {
        throw FloatingNode("link requires a dual-GPIO wired indicator");
    }
    scenario.rails.validate();
    scenario.channel.validate();
    scenario.device.validate();

    const PinConfig anode = configure_pin(
        {0, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullUp, scenario.pull_up_ohms},
        scenario.rails);
    const PinConfig cathode = configure_pin(
        {1, PinMode::DigitalInput, DriveState::NotDriven, PullMode::PullDown, scenario.pull_down_ohms},
        scenario.rails);

    LinkReport report;
    report.raw_bit_rate_hz = scenario.bit_rate_hz;

    double total_duration_s = 0.0;
    std::uint64_t ok_payload_bits = 0;

    std::vector<LogicLevel> light_levels;
    for (std::size_t index = 0; index < payloads.size(); ++index) {
        const Bits tx_bits = encode_frame(payloads[index]);
        const Bits symbols = manchester_encode(tx_bits);

        IrradianceTrace trace = detail::ook_waveform(symbols, 2.0 * scenario.bit_rate_hz,
                                                     scenario.peak_w_m2,
                                                     scenario.samples_per_symbol);
        ChannelParams channel = scenario.channel;
        channel.seed = derive_seed(scenario.channel.seed, index);
        trace = apply_channel(trace, channel);
        total_duration_s += trace.duration_s();

        light_levels.clear();
        light_levels.reserve(trace.samples.size());
        for (double irradiance : trace.samples) {
            const double current =
                photocurrent(scenario.device, scenario.terminal, scenario.excitation, irradiance);
            const ResolvedNode node =
                resolve_led_node(anode, cathode, current, scenario.sense_mode, scenario.rails);
            const LogicLevel level = read_logic(node.v_anode, scenario.rails);
            // illuminated = Low at the pulled-up sense node; flip back to
            // the light domain for the clock-recovery stage
            light_levels.push_back(level == LogicLevel::Low    ? LogicLevel::High
                                   : level == LogicLevel::High ? LogicLevel::Low
                                                               : LogicLevel::Indeterminate);
        }

        FrameStat stat;
        stat.index = index;
        stat.bits = tx_bits.size();
        try {
            const Bits rx_bits = recover_bits(light_levels, scenario.samples_per_symbol);
            const std::size_t compared = rx_bits.size() < tx_bits.size() ? rx_bits.size() : tx_bits.size();
            for (std::size_t i = 0; i < compared; ++i) {
                stat.errors += rx_bits[i] != tx_bits[i] ? 1 : 0;
            }
            stat.errors += tx_bits.size() - compared;  // clipped tail counts as lost
            const FrameDecode decoded = decode_frame(rx_bits);
            stat.ok = decoded.ok;
            if (decoded.ok) {
                ok_payload_bits += 8 * decoded.payload.size();
            }
        } catch (const NoPreamble&) {
            stat.errors = tx_bits.size();
            stat.ok = false;
        }

        report.frames_sent += 1;
        report.frames_ok += stat.ok ? 1 : 0;
        report.bit_errors += stat.errors;
        report.bits_total += stat.bits;
        report.frames.push_back(stat);
    }

    report.ber = report.bits_total > 0
                     ? static_cast<double>(report.bit_errors) / static_cast<double>(report.bits_total)
                     : 0.0;
    report.goodput_bit_s =
        total_duration_s > 0.0 ? static_cast<double>(ok_payload_bits) / total_duration_s : 0.0;
    return report;
}

inline nlohmann::json link_report_json(const LinkReport& report) {
    return nlohmann::json{
        {"raw_bit_rate_hz", report.raw_bit_rate_hz},
        {"goodput_bit_s", report.goodput_bit_s},
        {"bit_errors", report.bit_errors},
        {"bits_total", report.bits_total},
        {"ber", report.ber},
        {"frames_sent", report.frames_sent},
        {"frames_ok", report.frames_ok},
    };
}

/// One row per frame: frame_idx, bits, errors, ok.
inline void write_frames_csv(const LinkReport& report, std::ostream& out) {
    out << "frame_idx,bits,errors,ok\n";
    for (const FrameStat& stat : report.frames) {
        out << stat.index << ',' << stat.bits << ',' << stat.errors << ','
            << (stat.ok ? 1 : 0) << '\n';
    }
}

}  // namespace lumen
