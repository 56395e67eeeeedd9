#pragma once

// Extended binary Golay [24,12,8] code, systematic form.
//
// Codeword bit 23 is the first transmitted bit. The upper 12 bits carry the
// message, the lower 12 bits the parity m * B.

#include <array>
#include <bit>
#include <cstdint>
#include <optional>

#include "vbmodem/types.hpp"

namespace vbmodem {

struct GolayMessage {
    std::uint16_t bits = 0; // 12 significant bits

    friend bool operator==(GolayMessage, GolayMessage) = default;
};

struct GolayCodeword {
    std::uint32_t bits = 0; // 24 significant bits

    friend bool operator==(GolayCodeword, GolayCodeword) = default;
};

struct GolayDecoded {
    GolayMessage message;
    int corrected_bits = 0;
};

namespace golay_detail {

inline constexpr std::uint32_t kMessageMask = 0xFFF;
inline constexpr std::uint32_t kWordMask = 0xFFFFFF;

// Rows of the icosahedron-derived parity matrix B (B is symmetric, B*B = I).
inline constexpr std::array<std::uint16_t, 12> kParityRows = {
    0b110111000101, 0b101110001011, 0b011100010111, 0b111000101101,
    0b110001011011, 0b100010110111, 0b000101101111, 0b001011011101,
    0b010110111001, 0b101101110001, 0b011011100011, 0b111111111110,
};

constexpr std::uint16_t parity_of(std::uint32_t message) {
    std::uint16_t parity = 0;
    for (int i = 0; i < 12; ++i) {
        if (message & (1u << (11 - i))) parity ^= kParityRows[static_cast<std::size_t>(i)];
    }
    return parity;
}

constexpr std::uint16_t syndrome_of(std::uint32_t word) {
    return static_cast<std::uint16_t>(parity_of((word >> 12) & kMessageMask) ^ (word & kMessageMask));
}

inline constexpr std::uint32_t kNoPattern = 0xFFFFFFFF;

// Coset leaders of weight <= 3 indexed by syndrome. The 2325 patterns have
// distinct syndromes because the minimum distance is 8.
struct SyndromeTable {
    std::array<std::uint32_t, 4096> leader{};

    SyndromeTable() {
        leader.fill(kNoPattern);
        leader[0] = 0;
        for (int i = 0; i < 24; ++i) {
            const std::uint32_t ei = 1u << i;
            leader[syndrome_of(ei)] = ei;
            for (int j = i + 1; j < 24; ++j) {
                const std::uint32_t eij = ei | (1u << j);
                leader[syndrome_of(eij)] = eij;
                for (int k = j + 1; k < 24; ++k) {
                    const std::uint32_t eijk = eij | (1u << k);
                    leader[syndrome_of(eijk)] = eijk;
                }
            }
        }
    }
};

inline const SyndromeTable& syndrome_table() {
    static const SyndromeTable table;
    return table;
}

} // namespace golay_detail

inline GolayCodeword golay_encode(GolayMessage message) {
    const std::uint32_t m = message.bits & golay_detail::kMessageMask;
    return GolayCodeword{(m << 12) | golay_detail::parity_of(m)};
}

/// Corrects up to three bit errors. Returns nullopt when the word is farther
/// than three from every codeword (all weight-4 patterns land here).
inline std::optional<GolayDecoded> golay_decode(GolayCodeword word) {
    const std::uint32_t received = word.bits & golay_detail::kWordMask;
    const std::uint32_t error = golay_detail::syndrome_table().leader[golay_detail::syndrome_of(received)];
    if (error == golay_detail::kNoPattern) return std::nullopt;
    const std::uint32_t corrected = received ^ error;
    return GolayDecoded{GolayMessage{static_cast<std::uint16_t>(corrected >> 12)}, std::popcount(error)};
}

/// Message bits taken straight from a received word, no correction.
inline GolayMessage golay_systematic_bits(GolayCodeword word) {
    return GolayMessage{static_cast<std::uint16_t>((word.bits >> 12) & golay_detail::kMessageMask)};
}

} // namespace vbmodem
