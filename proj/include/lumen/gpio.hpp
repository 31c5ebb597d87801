#pragma once

#include <algorithm>
#include <optional>
#include <string>

#include "lumen/errors.hpp"

namespace lumen {

enum class PinMode { DigitalOutput, DigitalInput };
enum class DriveState { High, Low, NotDriven };
enum class PullMode { NoPull, PullUp, PullDown };
enum class LogicLevel { High, Low, Indeterminate };

/// How the LED is operated as a light sensor. Photovoltaic sensing drives
/// a loop current from the device's own generated EMF; photoconductive
/// sensing reads a reverse-biased diode whose swing through GPIO pulls
/// stays in the tens of millivolts.
enum class SenseMode { Photovoltaic, Photoconductive };

/// Midpoint of the 20-50 kOhm programmable pull range common on
/// microcontroller GPIO blocks.
inline constexpr double kDefaultPullOhms = 35'000.0;

struct SupplyRails {
    double vdd = 3.3;
    double v_ih = 0.7 * 3.3;
    double v_il = 0.3 * 3.3;

    static SupplyRails with_vdd(double vdd_volts) {
        return SupplyRails{vdd_volts, 0.7 * vdd_volts, 0.3 * vdd_volts};
    }

    void validate() const {
        if (!(0.0 < v_il && v_il < v_ih && v_ih < vdd)) {
            throw InvalidConfig("supply rails require 0 < v_il < v_ih < vdd");
        }
    }
};

/// Reference values for the classic reverse-biased photodiode front end:
/// a 10 kOhm pull-up doubling as a 33 mV bias source plus a 100 Ohm
/// short-circuit protection resistor.
struct PhotoconductiveBiasRef {
    double pull_up_ohms = 10'000.0;
    double series_protect_ohms = 100.0;
    double bias_volts = 0.033;
};

struct PinConfig {
    int pin_id = 0;
    PinMode mode = PinMode::DigitalInput;
    DriveState drive = DriveState::NotDriven;
    PullMode pull = PullMode::NoPull;
    /// Ohms; filled with kDefaultPullOhms by configure_pin when a pull is
    /// enabled without an explicit value. Ignored when pull == NoPull.
    std::optional<double> pull_resistance;
};

/// Solved DC state of the two-pin LED node pair.
struct ResolvedNode {
    double v_anode = 0.0;
    double v_cathode = 0.0;
    double i_loop = 0.0;
};

/// How the indicator is wired on the target board: through a buffer or
/// transistor (which isolates the LED from the pins), or directly between
/// two GPIO pins.
enum class LedWiring { BufferDriven, DualGpio };

struct BoardDescription {
    std::string name;
    LedWiring wiring = LedWiring::DualGpio;
    int anode_pin = 0;
    int cathode_pin = 1;
};

/// Validates a pin configuration and fills defaults. pin_id uniqueness is
/// a board-level concern and is not checked here.
inline PinConfig configure_pin(PinConfig config, const SupplyRails& rails) {
    rails.validate();
    if (config.mode == PinMode::DigitalInput && config.drive != DriveState::NotDriven) {
        throw InvalidConfig("input pins cannot drive a level");
    }
    if (config.mode == PinMode::DigitalOutput && config.drive == DriveState::NotDriven) {
        throw InvalidConfig("output pins must drive High or Low");
    }
    if (config.pull != PullMode::NoPull) {
        if (!config.pull_resistance.has_value()) {
            config.pull_resistance = kDefaultPullOhms;
        }
        if (*config.pull_resistance <= 0.0) {
            throw InvalidConfig("pull_resistance must be positive");
        }
    }
    return config;
}

inline LogicLevel read_logic(double volts, const SupplyRails& rails) {
    rails.validate();
    if (volts >= rails.v_ih) {
        return LogicLevel::High;
    }
    if (volts <= rails.v_il) {
        return LogicLevel::Low;
    }
    return LogicLevel::Indeterminate;
}

namespace detail {

/// Thevenin equivalent a pin presents to its LED terminal. Drivers are
/// ideal rails; pulls are resistive sources; an undriven, unpulled input
/// presents nothing.
struct NodeSource {
    double v = 0.0;
    double r = 0.0;
};

inline std::optional<NodeSource> node_source(const PinConfig& pin, const SupplyRails& rails) {
    if (pin.mode == PinMode::DigitalOutput) {
        return NodeSource{pin.drive == DriveState::High ? rails.vdd : 0.0, 0.0};
    }
    switch (pin.pull) {
        case PullMode::PullUp:
            return NodeSource{rails.vdd, pin.pull_resistance.value_or(kDefaultPullOhms)};
        case PullMode::PullDown:
            return NodeSource{0.0, pin.pull_resistance.value_or(kDefaultPullOhms)};
        case PullMode::NoPull:
            break;
    }
    return std::nullopt;
}

}  // namespace detail

/// Solves the two-pin LED loop for a given photocurrent.
///
/// The illuminated LED conducts anode-to-cathode as a current sink of up
/// to `photocurrent_a`, backed by a photovoltaic EMF of up to one full
/// rail; in darkness it is an open switch. In photoconductive mode the
/// available swing saturates at the 33 mV reverse-bias level, so the
/// sensed voltage never leaves its dark logic band.
inline ResolvedNode resolve_led_node(const PinConfig& pin_anode,
                                     const PinConfig& pin_cathode,
                                     double photocurrent_a,
                                     SenseMode mode,
                                     const SupplyRails& rails) {
    rails.validate();
    if (photocurrent_a < 0.0) {
        throw InvalidConfig("photocurrent must be non-negative");
    }
    const auto anode = detail::node_source(pin_anode, rails);
    const auto cathode = detail::node_source(pin_cathode, rails);
    if (!anode || !cathode) {
        throw FloatingNode("no DC path at the LED node pair");
    }

    const double headroom = mode == SenseMode::Photovoltaic
                                ? std::max(0.0, anode->v - cathode->v + rails.vdd)
                                : PhotoconductiveBiasRef{}.bias_volts;
    const double r_loop = anode->r + cathode->r;
    const double i_cap = r_loop > 0.0 ? headroom / r_loop : photocurrent_a;
    const double i_loop = std::min(photocurrent_a, i_cap);

    const auto clamp_rail = [&](double v) { return std::clamp(v, 0.0, rails.vdd); };
    return ResolvedNode{clamp_rail(anode->v - i_loop * anode->r),
                        clamp_rail(cathode->v + i_loop * cathode->r),
                        i_loop};
}

/// Board-aware wrapper: buffer-driven indicators expose no node the pins
/// can sense, whatever their configuration.
inline ResolvedNode resolve_board_node(const BoardDescription& board,
                                       const PinConfig& pin_anode,
                                       const PinConfig& pin_cathode,
                                       double photocurrent_a,
                                       SenseMode mode,
                                       const SupplyRails& rails) {
    if (board.wiring == LedWiring::BufferDriven) {
        throw FloatingNode(board.name + ": buffer-driven indicator, LED unreachable from GPIO pins");
    }
    return resolve_led_node(pin_anode, pin_cathode, photocurrent_a, mode, rails);
}

}  // namespace lumen
