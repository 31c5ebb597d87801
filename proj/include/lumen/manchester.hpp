#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lumen/channel.hpp"
#include "lumen/errors.hpp"
#include "lumen/framing.hpp"
#include "lumen/gpio.hpp"

namespace lumen {

/// Line code convention: 1 -> (High, Low), 0 -> (Low, High).
/// High halves are represented as 1 in the symbol vector.
inline Bits manchester_encode(const Bits& bits) {
    Bits symbols;
    symbols.reserve(bits.size() * 2);
    for (std::uint8_t bit : bits) {
        if (bit) {
            symbols.push_back(1);
            symbols.push_back(0);
        } else {
            symbols.push_back(0);
            symbols.push_back(1);
        }
    }
    return symbols;
}

/// Exact inverse of manchester_encode; HH and LL pairs are illegal.
inline Bits manchester_decode(const Bits& symbols) {
    if (symbols.size() % 2 != 0) {
        throw InvalidSymbolPair(symbols.size() / 2);
    }
    Bits bits;
    bits.reserve(symbols.size() / 2);
    for (std::size_t i = 0; i < symbols.size(); i += 2) {
        const std::uint8_t first = symbols[i];
        const std::uint8_t second = symbols[i + 1];
        if (first == 1 && second == 0) {
            bits.push_back(1);
        } else if (first == 0 && second == 1) {
            bits.push_back(0);
        } else {
            throw InvalidSymbolPair(i / 2);
        }
    }
    return bits;
}

/// Majority vote over one symbol window. Indeterminate samples are
/// excluded; a tie (including an empty vote) repeats the previous symbol.
inline std::uint8_t majority_vote(std::span<const LogicLevel> window, std::uint8_t previous) {
    int high = 0;
    int low = 0;
    for (LogicLevel level : window) {
        if (level == LogicLevel::High) {
            ++high;
        } else if (level == LogicLevel::Low) {
            ++low;
        }
    }
    if (high > low) {
        return 1;
    }
    if (low > high) {
        return 0;
    }
    return previous;
}

namespace detail {

/// Votes out every full symbol window from `offset`, then folds symbol
/// pairs to bits. Pairs damaged into HH/LL decode by their first half;
/// the frame CRC catches what slips through.
inline Bits vote_and_fold(const std::vector<LogicLevel>& samples,
                          std::size_t offset,
                          std::size_t samples_per_symbol,
                          std::size_t max_bits) {
    Bits bits;
    std::uint8_t previous = 0;
    std::uint8_t first_half = 0;
    bool have_first = false;
    for (std::size_t start = offset;
         start + samples_per_symbol <= samples.size() && bits.size() < max_bits;
         start += samples_per_symbol) {
        const std::uint8_t symbol = majority_vote(
            std::span<const LogicLevel>(samples.data() + start, samples_per_symbol), previous);
        previous = symbol;
        if (!have_first) {
            first_half = symbol;
            have_first = true;
        } else {
            bits.push_back(first_half);  // (1,0) -> 1, (0,1) -> 0, damaged pairs by first half
            have_first = false;
        }
    }
    return bits;
}

}  // namespace detail

/// Recovers the transmitted bit stream from oversampled logic reads.
/// Phase is fixed by scanning for the alternating preamble within the
/// first four preamble lengths of the stream.
inline Bits recover_bits(const std::vector<LogicLevel>& samples, int samples_per_symbol) {
    if (samples_per_symbol < 1) {
        throw InvalidConfig("samples_per_symbol must be at least 1");
    }
    const std::size_t spp = static_cast<std::size_t>(samples_per_symbol);
    const std::size_t preamble_samples = kPreambleBits * 2 * spp;
    const std::size_t search_limit =
        samples.size() < 4 * preamble_samples ? samples.size() : 4 * preamble_samples;

    for (std::size_t offset = 0; offset < search_limit; ++offset) {
        if (offset + preamble_samples > samples.size()) {
            break;
        }
        const Bits head = detail::vote_and_fold(samples, offset, spp, kPreambleBits);
        if (head.size() < kPreambleBits) {
            break;
        }
        bool aligned = true;
        for (std::size_t i = 0; i < kPreambleBits; ++i) {
            if (head[i] != (i % 2 == 0 ? 1 : 0)) {
                aligned = false;
                break;
            }
        }
        if (aligned) {
            return detail::vote_and_fold(samples, offset, spp, samples.size());
        }
    }
    throw NoPreamble("no alternating preamble within the first 4 preamble lengths");
}

}  // namespace lumen
