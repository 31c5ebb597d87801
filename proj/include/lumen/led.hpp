#pragma once

#include <array>
#include <optional>
#include <string>

#include "lumen/errors.hpp"

namespace lumen {

enum class ExcitationKind { Laser405, Laser532, Laser640, WhiteLed };
enum class Terminal { Anode, Cathode };

/// Empirical classification of a device's photo-response at one terminal
/// under one excitation source.
enum class ResponseClass { None, Expected, Unexpected, Unexplainable };

inline constexpr std::array<ExcitationKind, 4> kAllExcitations = {
    ExcitationKind::Laser405, ExcitationKind::Laser532,
    ExcitationKind::Laser640, ExcitationKind::WhiteLed};

inline constexpr std::array<Terminal, 2> kAllTerminals = {Terminal::Anode, Terminal::Cathode};

/// Wavelength of an excitation source; nullopt for broadband white.
inline std::optional<double> excitation_wavelength_nm(ExcitationKind kind) {
    switch (kind) {
        case ExcitationKind::Laser405: return 405.0;
        case ExcitationKind::Laser532: return 532.0;
        case ExcitationKind::Laser640: return 640.0;
        case ExcitationKind::WhiteLed: return std::nullopt;
    }
    return std::nullopt;
}

struct ExcitationSource {
    ExcitationKind kind = ExcitationKind::Laser405;
    std::optional<double> wavelength_nm;
    double power_mw = 0.0;
};

inline ExcitationSource make_excitation(ExcitationKind kind, double power_mw) {
    if (power_mw < 0.0) {
        throw InvalidConfig("excitation power must be non-negative");
    }
    return ExcitationSource{kind, excitation_wavelength_nm(kind), power_mw};
}

struct ResponseCell {
    ResponseClass cls = ResponseClass::None;
    double responsivity_a_per_w_m2 = 0.0;
};

/// Transmission band of a coloured epoxy package, nm.
struct PassBand {
    double lo_nm = 0.0;
    double hi_nm = 0.0;
};

inline bool filter_passes(const std::optional<PassBand>& filter, ExcitationKind kind) {
    if (!filter.has_value()) {
        return true;
    }
    const auto wl = excitation_wavelength_nm(kind);
    if (!wl.has_value()) {
        return true;  // broadband white reaches every passband
    }
    return *wl >= filter->lo_nm && *wl <= filter->hi_nm;
}

/// One physical LED with its measured 4x2 response matrix
/// (excitation source x terminal).
struct LedDevice {
    std::string name;
    double size_mm = 5.0;
    std::optional<double> emission_nm;  // nullopt = broadband emitter
    std::optional<PassBand> package_filter;
    std::array<std::array<ResponseCell, 2>, 4> matrix{};

    static constexpr std::size_t index(ExcitationKind kind) {
        return static_cast<std::size_t>(kind);
    }
    static constexpr std::size_t index(Terminal terminal) {
        return static_cast<std::size_t>(terminal);
    }

    const ResponseCell& cell(ExcitationKind kind, Terminal terminal) const {
        return matrix[index(kind)][index(terminal)];
    }
    ResponseCell& cell(ExcitationKind kind, Terminal terminal) {
        return matrix[index(kind)][index(terminal)];
    }

    int responsive_cells() const {
        int n = 0;
        for (const auto& row : matrix) {
            for (const auto& c : row) {
                n += c.cls != ResponseClass::None ? 1 : 0;
            }
        }
        return n;
    }

    bool exploitable() const { return responsive_cells() > 0; }

    void validate() const {
        if (size_mm <= 0.0) {
            throw InvariantError(name + ": size_mm must be positive");
        }
        if (package_filter && !(package_filter->lo_nm < package_filter->hi_nm)) {
            throw InvariantError(name + ": filter passband must satisfy lo < hi");
        }
        for (ExcitationKind kind : kAllExcitations) {
            for (Terminal terminal : kAllTerminals) {
                const ResponseCell& c = cell(kind, terminal);
                if (c.cls == ResponseClass::None && c.responsivity_a_per_w_m2 != 0.0) {
                    throw InvariantError(name + ": non-responsive cell must have zero responsivity");
                }
                if (c.cls != ResponseClass::None && c.responsivity_a_per_w_m2 <= 0.0) {
                    throw InvariantError(name + ": responsive cell must have positive responsivity");
                }
                if (c.cls != ResponseClass::None && !filter_passes(package_filter, kind)) {
                    throw InvariantError(name + ": package filter excludes this excitation wavelength");
                }
            }
        }
    }
};

/// Exact lookup into the measured matrix; the table is empirical ground
/// truth and is never interpolated or computed.
inline const ResponseCell& response_matrix(const LedDevice& device,
                                           ExcitationKind kind,
                                           Terminal terminal) {
    return device.cell(kind, terminal);
}

/// Photocurrent in amps for a given irradiance. Linear in irradiance;
/// exactly zero for non-responsive cells.
inline double photocurrent(const LedDevice& device,
                           Terminal terminal,
                           ExcitationKind kind,
                           double irradiance_w_m2) {
    if (irradiance_w_m2 < 0.0) {
        throw InvalidConfig("irradiance must be non-negative");
    }
    const ResponseCell& c = device.cell(kind, terminal);
    if (c.cls == ResponseClass::None) {
        return 0.0;
    }
    return c.responsivity_a_per_w_m2 * irradiance_w_m2;
}

/// Legend glyph for matrix rendering; the non-response marker is a
/// UTF-8 middle dot.
inline const char* response_glyph(ResponseClass cls) {
    switch (cls) {
        case ResponseClass::Expected: return "E";
        case ResponseClass::Unexpected: return "U";
        case ResponseClass::Unexplainable: return "X";
        case ResponseClass::None: break;
    }
    return "·";
}

}  // namespace lumen
