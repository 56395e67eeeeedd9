#pragma once

// Two-dimensional Gray mapping between 6-bit groups and 8x8 dual tones.
// The upper three bits pick the group-A frequency, the lower three the
// group-B frequency; each 3-bit field is a reflected Gray code looked up by
// value, so tones one step apart in either group differ in one bit.

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

#include "vbmodem/freqplan.hpp"
#include "vbmodem/types.hpp"

namespace vbmodem {

struct ToneSymbol {
    int freq_a = 0;
    int freq_b = 0;

    /// Transmitted sum line.
    int f1() const noexcept { return freq_a + freq_b; }
    /// Transmitted group-A line.
    int f2() const noexcept { return freq_a; }

    friend bool operator==(const ToneSymbol&, const ToneSymbol&) = default;
};

inline constexpr std::array<std::uint8_t, 8> kGray3 = {0b000, 0b001, 0b011, 0b010,
                                                       0b110, 0b111, 0b101, 0b100};

inline std::uint8_t gray3(int index) {
    if (index < 0 || index > 7) {
        throw Error(ErrorKind::invalid_argument, "gray3 index out of range: " + std::to_string(index));
    }
    return kGray3[static_cast<std::size_t>(index)];
}

inline int gray3_index(std::uint8_t code) {
    const auto it = std::find(kGray3.begin(), kGray3.end(), static_cast<std::uint8_t>(code & 0b111));
    return static_cast<int>(it - kGray3.begin());
}

namespace detail {

inline void require_8x8(const FrequencyPlan& plan) {
    if (plan.group_a.size() != kGroupSize || plan.group_b.size() != kGroupSize) {
        throw Error(ErrorKind::invalid_argument, "tone mapping needs an 8x8 plan");
    }
}

inline int index_in(const std::vector<int>& group, int freq) {
    const auto it = std::find(group.begin(), group.end(), freq);
    if (it == group.end()) {
        throw Error(ErrorKind::frequency_not_in_plan, std::to_string(freq) + " Hz");
    }
    return static_cast<int>(it - group.begin());
}

} // namespace detail

inline ToneSymbol tone_of_bits(std::uint8_t bits, const FrequencyPlan& plan) {
    if (bits > 0b111111) {
        throw Error(ErrorKind::invalid_argument, "tone_of_bits takes 6 bits");
    }
    detail::require_8x8(plan);
    const int ia = gray3_index(static_cast<std::uint8_t>(bits >> 3));
    const int ib = gray3_index(static_cast<std::uint8_t>(bits & 0b111));
    return ToneSymbol{plan.group_a[static_cast<std::size_t>(ia)], plan.group_b[static_cast<std::size_t>(ib)]};
}

inline std::uint8_t bits_of_tone(const ToneSymbol& tone, const FrequencyPlan& plan) {
    detail::require_8x8(plan);
    const int ia = detail::index_in(plan.group_a, tone.freq_a);
    const int ib = detail::index_in(plan.group_b, tone.freq_b);
    return static_cast<std::uint8_t>((gray3(ia) << 3) | gray3(ib));
}

} // namespace vbmodem
