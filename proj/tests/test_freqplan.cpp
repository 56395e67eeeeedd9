#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>

#include "vbmodem/freqplan.hpp"

using namespace vbmodem;

namespace {

// Brute-force recomputation of the smallest separation between any two of the
// 16 group frequencies and between every sum and every group frequency.
int oracle_min_gap(const FrequencyPlan& p) {
    std::vector<int> all = p.group_a;
    all.insert(all.end(), p.group_b.begin(), p.group_b.end());
    int best = 1 << 30;
    for (std::size_t i = 0; i < all.size(); ++i) {
        for (std::size_t j = i + 1; j < all.size(); ++j) best = std::min(best, std::abs(all[i] - all[j]));
    }
    return best;
}

int oracle_min_sum_gap(const FrequencyPlan& p) {
    std::vector<int> all = p.group_a;
    all.insert(all.end(), p.group_b.begin(), p.group_b.end());
    int best = 1 << 30;
    for (int a : p.group_a) {
        for (int b : p.group_b) {
            for (int f : all) best = std::min(best, std::abs(a + b - f));
        }
    }
    return best;
}

} // namespace

TEST_CASE("chains reproduce the expanded groups") {
    CHECK(build_chain(1624, 8) == std::vector<int>{1624, 1794, 1982, 2190, 2420, 2674, 2955, 3266});
    CHECK(build_chain(1402, 8) == std::vector<int>{1402, 1549, 1712, 1892, 2091, 2311, 2554, 2822});
    CHECK(build_chain(1000, 1) == std::vector<int>{1000});
}

TEST_CASE("chain steps follow the truncated 21/19 ratio") {
    for (int base : {300, 697, 1209, 1402, 1624, 2000}) {
        const auto c = build_chain(base, 8);
        for (std::size_t i = 1; i < c.size(); ++i) {
            CHECK(c[i] > c[i - 1]);
            CHECK(c[i] == static_cast<int>(static_cast<long long>(c[i - 1]) * 21 / 19));
        }
        CHECK(build_chain(base, 8) == c);
    }
}

TEST_CASE("chain rejects bad input") {
    CHECK_THROWS_AS(build_chain(0, 8), Error);
    CHECK_THROWS_AS(build_chain(1000, 0), Error);
}

TEST_CASE("expanded plan validates at 70 Hz") {
    const auto plan = expanded_plan();
    const auto v = validate_plan(plan);
    CHECK(v.valid);
    CHECK(v.violations.empty());
    CHECK(v.min_pairwise_gap_hz == oracle_min_gap(plan));
    CHECK(v.min_pairwise_gap_hz >= 70);
    CHECK(oracle_min_sum_gap(plan) >= 70);
}

TEST_CASE("classic groups have a 73 Hz minimum gap") {
    CHECK(validate_plan(classic_dtmf_plan()).min_pairwise_gap_hz == 73);
}

TEST_CASE("identical groups are rejected") {
    FrequencyPlan p;
    p.group_a = build_chain(1624, 8);
    p.group_b = p.group_a;
    const auto v = validate_plan(p);
    CHECK_FALSE(v.valid);
    CHECK_FALSE(v.violations.empty());
    CHECK(v.min_pairwise_gap_hz == 0);
}

TEST_CASE("valid iff no violations") {
    for (int a : {1402, 1500, 1624, 1700}) {
        for (int b : {1300, 1402, 1450}) {
            FrequencyPlan p{build_chain(a, 8), build_chain(b, 8), 70};
            const auto v = validate_plan(p);
            CHECK(v.valid == v.violations.empty());
        }
    }
}

TEST_CASE("out of band group is flagged") {
    FrequencyPlan p{build_chain(1900, 8), build_chain(1402, 8), 70};
    const auto v = validate_plan(p);
    CHECK_FALSE(v.valid);
    CHECK(std::any_of(v.violations.begin(), v.violations.end(),
                      [](const Violation& x) { return x.kind == ViolationKind::out_of_band; }));
}

TEST_CASE("search at 70 Hz returns a plan that revalidates") {
    const auto plan = search_plan(70);
    REQUIRE(plan.has_value());
    CHECK(plan->group_a.front() == 1624);
    CHECK(plan->group_b.front() == 1402);
    CHECK(validate_plan(*plan).valid);
    CHECK(oracle_min_gap(*plan) >= 70);
    CHECK(oracle_min_sum_gap(*plan) >= 70);
}

TEST_CASE("search outcomes above 70 Hz") {
    for (int t : {71, 72}) {
        const auto plan = search_plan(t);
        REQUIRE(plan.has_value());
        CHECK(validate_plan(*plan).valid);
        CHECK(oracle_min_gap(*plan) >= t);
    }
    CHECK_FALSE(search_plan(73).has_value());
    CHECK_FALSE(search_plan(3400).has_value());
}
