#pragma once

// Expanded dual-tone frequency groups: generation, validation and search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vbmodem/types.hpp"

namespace vbmodem {

inline constexpr int kVoicebandLowHz = 300;
inline constexpr int kVoicebandHighHz = 3400;
inline constexpr int kGroupSize = 8;

struct FrequencyPlan {
    std::vector<int> group_a;
    std::vector<int> group_b;
    int threshold_hz = 70;

    friend bool operator==(const FrequencyPlan&, const FrequencyPlan&) = default;
};

enum class ViolationKind {
    out_of_band,
    not_ascending,
    ratio_mismatch,
    cross_gap,
    sum_collision,
};

inline const char* to_string(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::out_of_band: return "out_of_band";
    case ViolationKind::not_ascending: return "not_ascending";
    case ViolationKind::ratio_mismatch: return "ratio_mismatch";
    case ViolationKind::cross_gap: return "cross_gap";
    case ViolationKind::sum_collision: return "sum_collision";
    }
    return "unknown";
}

struct Violation {
    ViolationKind kind;
    std::vector<int> frequencies;
};

struct PlanValidation {
    bool valid = true;
    int min_pairwise_gap_hz = 0;
    std::vector<Violation> violations;
};

/// Geometric chain with ratio 21/19, truncating to whole Hz at every step.
inline std::vector<int> build_chain(int base_hz, int count) {
    if (base_hz <= 0 || count < 1) {
        throw Error(ErrorKind::invalid_argument, "build_chain needs base_hz > 0 and count >= 1");
    }
    std::vector<int> chain;
    chain.reserve(static_cast<std::size_t>(count));
    std::int64_t f = base_hz;
    for (int i = 0; i < count; ++i) {
        chain.push_back(static_cast<int>(f));
        f = f * 21 / 19;
    }
    return chain;
}

/// Classic 4x4 touch-tone groups. Stored, not generated: 770 * 21/19 is not 852.
inline FrequencyPlan classic_dtmf_plan() {
    return FrequencyPlan{{1209, 1336, 1477, 1633}, {697, 770, 852, 941}, 73};
}

/// The expanded 8x8 groups used by the modem.
inline FrequencyPlan expanded_plan() {
    return FrequencyPlan{build_chain(1624, kGroupSize), build_chain(1402, kGroupSize), 70};
}

namespace detail {

inline void check_group(const std::vector<int>& group, std::vector<Violation>& out) {
    for (int f : group) {
        if (f < kVoicebandLowHz || f > kVoicebandHighHz) {
            out.push_back({ViolationKind::out_of_band, {f}});
        }
    }
    for (std::size_t i = 1; i < group.size(); ++i) {
        const int prev = group[i - 1];
        const int cur = group[i];
        if (cur <= prev) {
            out.push_back({ViolationKind::not_ascending, {prev, cur}});
        }
        const double ideal = static_cast<double>(prev) * 21.0 / 19.0;
        if (std::abs(static_cast<double>(cur) - ideal) > 1.0) {
            out.push_back({ViolationKind::ratio_mismatch, {prev, cur}});
        }
    }
}

// Cheap early-out variant of the full check, used by the exhaustive search.
inline bool separation_ok(const std::vector<int>& a, const std::vector<int>& b, int threshold) {
    for (int fa : a) {
        for (int fb : b) {
            if (std::abs(fa - fb) < threshold) return false;
            const int sum = fa + fb;
            for (int g : a) {
                if (std::abs(sum - g) < threshold) return false;
            }
            for (int g : b) {
                if (std::abs(sum - g) < threshold) return false;
            }
        }
    }
    return true;
}

} // namespace detail

inline PlanValidation validate_plan(const FrequencyPlan& plan) {
    if (plan.group_a.empty() || plan.group_b.empty()) {
        throw Error(ErrorKind::invalid_argument, "validate_plan needs two non-empty groups");
    }
    PlanValidation result;
    detail::check_group(plan.group_a, result.violations);
    detail::check_group(plan.group_b, result.violations);

    for (int fa : plan.group_a) {
        for (int fb : plan.group_b) {
            if (std::abs(fa - fb) < plan.threshold_hz) {
                result.violations.push_back({ViolationKind::cross_gap, {fa, fb}});
            }
            const int sum = fa + fb;
            for (const auto* group : {&plan.group_a, &plan.group_b}) {
                for (int g : *group) {
                    if (std::abs(sum - g) < plan.threshold_hz) {
                        result.violations.push_back({ViolationKind::sum_collision, {fa, fb, g}});
                    }
                }
            }
        }
    }

    std::vector<int> all(plan.group_a);
    all.insert(all.end(), plan.group_b.begin(), plan.group_b.end());
    std::sort(all.begin(), all.end());
    int gap = all.size() > 1 ? all[1] - all[0] : 0;
    for (std::size_t i = 1; i < all.size(); ++i) {
        gap = std::min(gap, all[i] - all[i - 1]);
    }
    result.min_pairwise_gap_hz = gap;
    result.valid = result.violations.empty();
    return result;
}

/// First (lexicographically smallest) base pair with base_a > base_b whose
/// 8-element chains satisfy every plan constraint at the given threshold.
inline std::optional<FrequencyPlan> search_plan(int threshold_hz) {
    if (threshold_hz <= 0) {
        throw Error(ErrorKind::invalid_argument, "search_plan needs threshold_hz > 0");
    }
    // A chain whose top exceeds the band can never pass, so bound the bases.
    int max_base = kVoicebandLowHz;
    while (build_chain(max_base + 1, kGroupSize).back() <= kVoicebandHighHz) ++max_base;

    for (int base_a = kVoicebandLowHz; base_a <= max_base; ++base_a) {
        const auto chain_a = build_chain(base_a, kGroupSize);
        for (int base_b = kVoicebandLowHz; base_b < base_a; ++base_b) {
            const auto chain_b = build_chain(base_b, kGroupSize);
            if (!detail::separation_ok(chain_a, chain_b, threshold_hz)) continue;
            FrequencyPlan plan{chain_a, chain_b, threshold_hz};
            if (validate_plan(plan).valid) return plan;
        }
    }
    return std::nullopt;
}

} // namespace vbmodem
