#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lumen/channel.hpp"
#include "lumen/errors.hpp"

namespace lumen {

inline constexpr std::size_t kPreambleBits = 16;  // alternating 1 0 1 0 ...
inline constexpr std::uint8_t kSyncWord = 0x7e;
inline constexpr std::size_t kMaxPayloadBytes = 255;

/// preamble + sync + length + crc16
inline constexpr std::size_t kFrameOverheadBits = kPreambleBits + 8 + 8 + 16;

inline constexpr std::size_t frame_bits(std::size_t payload_bytes) {
    return kFrameOverheadBits + 8 * payload_bytes;
}

/// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no
/// final xor. Check value: crc16 of "123456789" is 0x29B1.
inline std::uint16_t crc16(std::span<const std::uint8_t> data) {
    std::uint16_t crc = 0xffff;
    for (std::uint8_t byte : data) {
        crc ^= static_cast<std::uint16_t>(byte) << 8;
        for (int i = 0; i < 8; ++i) {
            crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                                 : static_cast<std::uint16_t>(crc << 1);
        }
    }
    return crc;
}

namespace detail {

inline void append_byte_msb(Bits& bits, std::uint8_t byte) {
    for (int i = 7; i >= 0; --i) {
        bits.push_back((byte >> i) & 1u);
    }
}

inline std::uint8_t read_byte_msb(const Bits& bits, std::size_t offset) {
    std::uint8_t byte = 0;
    for (int i = 0; i < 8; ++i) {
        byte = static_cast<std::uint8_t>((byte << 1) | (bits[offset + static_cast<std::size_t>(i)] & 1u));
    }
    return byte;
}

}  // namespace detail

/// Serializes preamble | sync | length | payload | crc16, MSB first.
/// The CRC covers length and payload.
inline Bits encode_frame(std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayloadBytes) {
        throw PayloadTooLong("payload of " + std::to_string(payload.size()) +
                             " bytes exceeds the one-byte length field");
    }
    Bits bits;
    bits.reserve(frame_bits(payload.size()));
    for (std::size_t i = 0; i < kPreambleBits; ++i) {
        bits.push_back(i % 2 == 0 ? 1 : 0);
    }
    detail::append_byte_msb(bits, kSyncWord);

    std::vector<std::uint8_t> checked;
    checked.reserve(1 + payload.size());
    checked.push_back(static_cast<std::uint8_t>(payload.size()));
    checked.insert(checked.end(), payload.begin(), payload.end());
    for (std::uint8_t byte : checked) {
        detail::append_byte_msb(bits, byte);
    }

    const std::uint16_t crc = crc16(checked);
    detail::append_byte_msb(bits, static_cast<std::uint8_t>(crc >> 8));
    detail::append_byte_msb(bits, static_cast<std::uint8_t>(crc & 0xff));
    return bits;
}

struct FrameDecode {
    bool ok = false;
    std::vector<std::uint8_t> payload;
    std::string reason;
};

/// Positional frame parse from an aligned bit stream. Any deviation in
/// preamble, sync, length bound, or CRC rejects the frame.
inline FrameDecode decode_frame(const Bits& bits) {
    FrameDecode result;
    if (bits.size() < kFrameOverheadBits) {
        result.reason = "truncated frame";
        return result;
    }
    for (std::size_t i = 0; i < kPreambleBits; ++i) {
        if (bits[i] != (i % 2 == 0 ? 1 : 0)) {
            result.reason = "preamble mismatch";
            return result;
        }
    }
    std::size_t offset = kPreambleBits;
    if (detail::read_byte_msb(bits, offset) != kSyncWord) {
        result.reason = "sync word mismatch";
        return result;
    }
    offset += 8;
    const std::uint8_t length = detail::read_byte_msb(bits, offset);
    offset += 8;
    if (bits.size() < frame_bits(length)) {
        result.reason = "length exceeds frame";
        return result;
    }

    std::vector<std::uint8_t> checked;
    checked.reserve(1 + length);
    checked.push_back(length);
    for (std::size_t i = 0; i < length; ++i) {
        checked.push_back(detail::read_byte_msb(bits, offset));
        offset += 8;
    }
    const std::uint16_t stored =
        static_cast<std::uint16_t>((detail::read_byte_msb(bits, offset) << 8) |
                                   detail::read_byte_msb(bits, offset + 8));
    if (stored != crc16(checked)) {
        result.reason = "crc mismatch";
        return result;
    }
    result.ok = true;
    result.payload.assign(checked.begin() + 1, checked.end());
    return result;
}

}  // namespace lumen
