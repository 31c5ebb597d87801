#pragma once

#include <cctype>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lumen/errors.hpp"
#include "lumen/gpio.hpp"
#include "lumen/led.hpp"

namespace lumen {

/// A loaded device-library document: the measured LED response matrices
/// plus the board wiring descriptions that accompany them.
struct DeviceLibrary {
    std::vector<LedDevice> devices;
    std::vector<BoardDescription> boards;
};

namespace detail {

inline const char* excitation_key(ExcitationKind kind) {
    switch (kind) {
        case ExcitationKind::Laser405: return "laser405";
        case ExcitationKind::Laser532: return "laser532";
        case ExcitationKind::Laser640: return "laser640";
        case ExcitationKind::WhiteLed: return "white";
    }
    return "?";
}

inline const char* terminal_key(Terminal terminal) {
    return terminal == Terminal::Anode ? "anode" : "cathode";
}

inline const char* class_key(ResponseClass cls) {
    switch (cls) {
        case ResponseClass::None: return "none";
        case ResponseClass::Expected: return "expected";
        case ResponseClass::Unexpected: return "unexpected";
        case ResponseClass::Unexplainable: return "unexplainable";
    }
    return "?";
}

inline ResponseClass parse_class(const std::string& text, const std::string& path) {
    if (text == "none") return ResponseClass::None;
    if (text == "expected") return ResponseClass::Expected;
    if (text == "unexpected") return ResponseClass::Unexpected;
    if (text == "unexplainable") return ResponseClass::Unexplainable;
    throw SchemaError(path, "unknown response class '" + text + "'");
}

inline const nlohmann::json& require(const nlohmann::json& obj,
                                     const char* key,
                                     const std::string& path) {
    if (!obj.is_object()) {
        throw SchemaError(path, "expected an object");
    }
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(path + "/" + key, "missing required field");
    }
    return *it;
}

inline double require_number(const nlohmann::json& obj, const char* key, const std::string& path) {
    const nlohmann::json& v = require(obj, key, path);
    if (!v.is_number()) {
        throw SchemaError(path + "/" + key, "expected a number");
    }
    return v.get<double>();
}

inline std::string require_string(const nlohmann::json& obj, const char* key, const std::string& path) {
    const nlohmann::json& v = require(obj, key, path);
    if (!v.is_string()) {
        throw SchemaError(path + "/" + key, "expected a string");
    }
    return v.get<std::string>();
}

inline void reject_unknown_keys(const nlohmann::json& obj,
                                std::initializer_list<const char*> allowed,
                                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw SchemaError(path + "/" + it.key(), "unknown field");
        }
    }
}

inline ResponseCell parse_cell(const nlohmann::json& node, const std::string& path) {
    if (!node.is_object()) {
        throw SchemaError(path, "expected an object with class and responsivity");
    }
    reject_unknown_keys(node, {"class", "responsivity"}, path);
    ResponseCell cell;
    cell.cls = parse_class(require_string(node, "class", path), path + "/class");
    cell.responsivity_a_per_w_m2 = require_number(node, "responsivity", path);
    return cell;
}

inline LedDevice parse_device(const nlohmann::json& node, const std::string& path) {
    if (!node.is_object()) {
        throw SchemaError(path, "expected a device object");
    }
    reject_unknown_keys(node, {"name", "size_mm", "emission_nm", "filter", "matrix"}, path);

    LedDevice device;
    device.name = require_string(node, "name", path);
    device.size_mm = require_number(node, "size_mm", path);

    const nlohmann::json& emission = require(node, "emission_nm", path);
    if (emission.is_string()) {
        if (emission.get<std::string>() != "broadband") {
            throw SchemaError(path + "/emission_nm", "expected a wavelength or \"broadband\"");
        }
        device.emission_nm = std::nullopt;
    } else if (emission.is_number()) {
        device.emission_nm = emission.get<double>();
    } else {
        throw SchemaError(path + "/emission_nm", "expected a wavelength or \"broadband\"");
    }

    const nlohmann::json& filter = require(node, "filter", path);
    if (filter.is_null()) {
        device.package_filter = std::nullopt;
    } else if (filter.is_array() && filter.size() == 2 && filter[0].is_number() && filter[1].is_number()) {
        device.package_filter = PassBand{filter[0].get<double>(), filter[1].get<double>()};
    } else {
        throw SchemaError(path + "/filter", "expected null or [lo_nm, hi_nm]");
    }

    const nlohmann::json& matrix = require(node, "matrix", path);
    const std::string matrix_path = path + "/matrix";
    if (!matrix.is_object()) {
        throw SchemaError(matrix_path, "expected an object keyed by excitation source");
    }
    reject_unknown_keys(matrix, {"laser405", "laser532", "laser640", "white"}, matrix_path);
    for (ExcitationKind kind : kAllExcitations) {
        const std::string row_path = matrix_path + "/" + excitation_key(kind);
        const nlohmann::json& row = require(matrix, excitation_key(kind), matrix_path);
        if (!row.is_object()) {
            throw SchemaError(row_path, "expected an object with anode and cathode cells");
        }
        reject_unknown_keys(row, {"anode", "cathode"}, row_path);
        for (Terminal terminal : kAllTerminals) {
            const nlohmann::json& cell_node = require(row, terminal_key(terminal), row_path);
            device.cell(kind, terminal) =
                parse_cell(cell_node, row_path + "/" + terminal_key(terminal));
        }
    }
    return device;
}

inline BoardDescription parse_board(const nlohmann::json& node, const std::string& path) {
    if (!node.is_object()) {
        throw SchemaError(path, "expected a board object");
    }
    reject_unknown_keys(node, {"name", "wiring", "anode_pin", "cathode_pin"}, path);
    BoardDescription board;
    board.name = require_string(node, "name", path);
    const std::string wiring = require_string(node, "wiring", path);
    if (wiring == "dual_gpio") {
        board.wiring = LedWiring::DualGpio;
    } else if (wiring == "buffered") {
        board.wiring = LedWiring::BufferDriven;
    } else {
        throw SchemaError(path + "/wiring", "expected \"dual_gpio\" or \"buffered\"");
    }
    board.anode_pin = static_cast<int>(require_number(node, "anode_pin", path));
    board.cathode_pin = static_cast<int>(require_number(node, "cathode_pin", path));
    return board;
}

}  // namespace detail

inline DeviceLibrary load_device_library(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw SchemaError("/", "expected a top-level object");
    }
    detail::reject_unknown_keys(doc, {"devices", "boards"}, "");

    DeviceLibrary library;
    const nlohmann::json& devices = detail::require(doc, "devices", "");
    if (!devices.is_array()) {
        throw SchemaError("/devices", "expected an array");
    }
    for (std::size_t i = 0; i < devices.size(); ++i) {
        library.devices.push_back(
            detail::parse_device(devices[i], "/devices/" + std::to_string(i)));
        library.devices.back().validate();
    }

    if (doc.contains("boards")) {
        const nlohmann::json& boards = doc["boards"];
        if (!boards.is_array()) {
            throw SchemaError("/boards", "expected an array");
        }
        for (std::size_t i = 0; i < boards.size(); ++i) {
            library.boards.push_back(
                detail::parse_board(boards[i], "/boards/" + std::to_string(i)));
        }
    }
    return library;
}

inline DeviceLibrary load_device_library_text(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("/", std::string("parse error: ") + e.what());
    }
    return load_device_library(doc);
}

inline DeviceLibrary load_device_library_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("/", "cannot open device library '" + path + "'");
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_device_library_text(text);
}

inline nlohmann::json serialize_device_library(const DeviceLibrary& library) {
    nlohmann::json doc;
    doc["devices"] = nlohmann::json::array();
    for (const LedDevice& device : library.devices) {
        nlohmann::json node;
        node["name"] = device.name;
        node["size_mm"] = device.size_mm;
        if (device.emission_nm) {
            node["emission_nm"] = *device.emission_nm;
        } else {
            node["emission_nm"] = "broadband";
        }
        if (device.package_filter) {
            node["filter"] = {device.package_filter->lo_nm, device.package_filter->hi_nm};
        } else {
            node["filter"] = nullptr;
        }
        nlohmann::json matrix;
        for (ExcitationKind kind : kAllExcitations) {
            nlohmann::json row;
            for (Terminal terminal : kAllTerminals) {
                const ResponseCell& cell = device.cell(kind, terminal);
                row[detail::terminal_key(terminal)] = {
                    {"class", detail::class_key(cell.cls)},
                    {"responsivity", cell.responsivity_a_per_w_m2},
                };
            }
            matrix[detail::excitation_key(kind)] = std::move(row);
        }
        node["matrix"] = std::move(matrix);
        doc["devices"].push_back(std::move(node));
    }
    doc["boards"] = nlohmann::json::array();
    for (const BoardDescription& board : library.boards) {
        doc["boards"].push_back({
            {"name", board.name},
            {"wiring", board.wiring == LedWiring::DualGpio ? "dual_gpio" : "buffered"},
            {"anode_pin", board.anode_pin},
            {"cathode_pin", board.cathode_pin},
        });
    }
    return doc;
}

/// Case- and whitespace-insensitive device lookup; accepts any unambiguous
/// substring of a device name.
inline const LedDevice* find_device(const DeviceLibrary& library, std::string_view query) {
    auto normalize = [](std::string_view text) {
        std::string out;
        for (char c : text) {
            if (c != ' ' && c != '\t' && c != '-' && c != '_') {
                out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            }
        }
        return out;
    };
    const std::string needle = normalize(query);
    if (needle.empty()) {
        return nullptr;
    }
    const LedDevice* match = nullptr;
    for (const LedDevice& device : library.devices) {
        const std::string name = normalize(device.name);
        if (name == needle) {
            return &device;
        }
        if (name.find(needle) != std::string::npos) {
            if (match != nullptr) {
                return nullptr;  // ambiguous
            }
            match = &device;
        }
    }
    return match;
}

}  // namespace lumen
