#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <random>
#include <vector>

#include "lumen/errors.hpp"

namespace lumen {

/// Bit / symbol containers use one byte per element, value 0 or 1.
using Bits = std::vector<std::uint8_t>;

enum class ModulatorKind { Pockels, ElectroOptic };

/// Amplitude modulator with a hard rate ceiling: Pockels cells top out
/// around 5 kHz, electro-optic cells around 250 MHz.
struct Modulator {
    ModulatorKind kind = ModulatorKind::ElectroOptic;

    double max_rate_hz() const {
        return kind == ModulatorKind::Pockels ? 5e3 : 250e6;
    }
    const char* name() const {
        return kind == ModulatorKind::Pockels ? "pockels" : "eo";
    }
};

/// Free-space path abstraction between source and target LED.
struct ChannelParams {
    double coupling = 1.0;          // geometric coupling, (0, 1]
    double ambient_w_m2 = 0.0;      // DC ambient irradiance
    double noise_sigma_w_m2 = 0.0;  // gaussian irradiance noise
    std::uint64_t seed = 0;

    void validate() const {
        if (!(coupling > 0.0 && coupling <= 1.0)) {
            throw InvalidConfig("coupling must be in (0, 1]");
        }
        if (ambient_w_m2 < 0.0) {
            throw InvalidConfig("ambient irradiance must be non-negative");
        }
        if (noise_sigma_w_m2 < 0.0) {
            throw InvalidConfig("noise sigma must be non-negative");
        }
    }
};

/// Time-indexed optical power density at the target LED.
struct IrradianceTrace {
    double sample_period_s = 0.0;
    std::vector<double> samples;

    double duration_s() const {
        return sample_period_s * static_cast<double>(samples.size());
    }
};

namespace detail {

/// Rectangular OOK waveform without the modulator bandwidth check.
inline IrradianceTrace ook_waveform(const Bits& bits,
                                    double bit_rate_hz,
                                    double peak_w_m2,
                                    int samples_per_bit) {
    IrradianceTrace trace;
    trace.sample_period_s = 1.0 / (bit_rate_hz * static_cast<double>(samples_per_bit));
    trace.samples.reserve(bits.size() * static_cast<std::size_t>(samples_per_bit));
    for (std::uint8_t bit : bits) {
        const double level = bit ? peak_w_m2 : 0.0;
        for (int s = 0; s < samples_per_bit; ++s) {
            trace.samples.push_back(level);
        }
    }
    return trace;
}

}  // namespace detail

/// On-off keying: bit 1 holds peak irradiance for the bit period, bit 0
/// holds dark. Rejects bit rates beyond the modulator ceiling.
inline IrradianceTrace modulate_ook(const Bits& bits,
                                    double bit_rate_hz,
                                    double peak_w_m2,
                                    const Modulator& modulator,
                                    int samples_per_bit) {
    if (bit_rate_hz <= 0.0) {
        throw InvalidConfig("bit rate must be positive");
    }
    if (peak_w_m2 < 0.0) {
        throw InvalidConfig("peak irradiance must be non-negative");
    }
    if (samples_per_bit < 2) {
        throw InvalidConfig("samples_per_bit must be at least 2");
    }
    if (bit_rate_hz > modulator.max_rate_hz()) {
        char message[128];
        std::snprintf(message, sizeof(message),
                      "%.6g Hz exceeds %s modulator ceiling of %.6g Hz",
                      bit_rate_hz, modulator.name(), modulator.max_rate_hz());
        throw RateExceedsModulatorBandwidth(message);
    }
    return detail::ook_waveform(bits, bit_rate_hz, peak_w_m2, samples_per_bit);
}

/// Applies coupling, ambient light, and seeded gaussian noise:
/// s -> max(0, coupling * s + ambient + N(0, sigma)).
inline IrradianceTrace apply_channel(const IrradianceTrace& trace, const ChannelParams& params) {
    params.validate();
    IrradianceTrace out;
    out.sample_period_s = trace.sample_period_s;
    out.samples.reserve(trace.samples.size());

    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> gauss(0.0, params.noise_sigma_w_m2 > 0.0
                                                    ? params.noise_sigma_w_m2
                                                    : 1.0);
    const bool noisy = params.noise_sigma_w_m2 > 0.0;
    for (double s : trace.samples) {
        const double noise = noisy ? gauss(rng) : 0.0;
        out.samples.push_back(std::max(0.0, params.coupling * s + params.ambient_w_m2 + noise));
    }
    return out;
}

/// Two-column plot-ready CSV: time_s, irradiance_w_m2.
inline void write_trace_csv(const IrradianceTrace& trace, std::ostream& out) {
    out << "time_s,irradiance_w_m2\n";
    char line[96];
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        std::snprintf(line, sizeof(line), "%.12g,%.12g\n",
                      static_cast<double>(i) * trace.sample_period_s, trace.samples[i]);
        out << line;
    }
}

}  // namespace lumen
