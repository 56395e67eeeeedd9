#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "oracle.hpp"
#include "vbmodem/modem.hpp"

using namespace vbmodem;

TEST_CASE("framing sizes") {
    CHECK(pack_payload(Bytes{}).size() == 24);
    CHECK(pack_payload(Bytes{0x41}).size() == 24);
    CHECK(pack_payload(Bytes{1, 2}).size() == 36);
    std::mt19937 rng(1);
    for (int n = 0; n < 50; ++n) {
        Bytes p(static_cast<std::size_t>(n));
        for (auto& b : p) b = static_cast<std::uint8_t>(rng());
        const auto bits = pack_payload(p);
        CHECK(bits.size() % 12 == 0);
        CHECK(bits.size() / 12 == message_count_for(p.size()));
        CHECK(encode_payload(p, expanded_plan()).size() % 4 == 0);
        CHECK(encode_payload(p, expanded_plan()).size() == 4 * message_count_for(p.size()));
    }
}

TEST_CASE("header is the big-endian length then MSB-first bytes") {
    const auto bits = pack_payload(Bytes{0x41});
    const BitVector want{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 0, 1};
    CHECK(bits == want);
}

TEST_CASE("oversized payloads are refused") {
    try {
        pack_payload(Bytes(kMaxPayloadBytes + 1));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::payload_too_long);
    }
}

TEST_CASE("forty characters make 112 tones") {
    Bytes p(40, 'x');
    CHECK(message_count_for(40) == 28);
    CHECK(encode_payload(p, expanded_plan()).size() == 112);
    CHECK(message_count_for(0) == 2);
}

TEST_CASE("first tone follows the word's leading six bits") {
    // The leading bits of the frame are the length header: 0x2800 = 0010 1000 ...
    const Bytes p(0x2800, 0);
    const auto words = encode_codewords(pack_payload(p));
    REQUIRE(((words[0].bits >> 18) & 0x3F) == 0b001010);
    CHECK(encode_payload(p, expanded_plan()).front() == ToneSymbol{1794, 1892});
}

TEST_CASE("baseband synthesis timing and spectrum") {
    ModemConfig cfg;
    cfg.sample_rate = 48000;
    CHECK(synthesize({}, cfg).empty());

    std::vector<ToneSymbol> ten(10, ToneSymbol{1624, 1402});
    CHECK(synthesize(ten, cfg).duration_s() == Catch::Approx(1.0));

    cfg.tone_ms = 1000;
    cfg.gap_ms = 0;
    const std::vector<ToneSymbol> one{{1624, 1402}};
    const auto out = synthesize(one, cfg);
    REQUIRE(out.size() == 48000);
    const double p3026 = dft_power(out.samples, 3026, 48000);
    const double p1624 = dft_power(out.samples, 1624, 48000);
    CHECK(p3026 > 1e6 * dft_power(out.samples, 1402, 48000));
    CHECK(p1624 > 1e6 * dft_power(out.samples, 2000, 48000));
    CHECK(p3026 == Catch::Approx(p1624).epsilon(1e-6));
}

TEST_CASE("synthesis never clips") {
    ModemConfig cfg;
    const auto plan = expanded_plan();
    std::vector<ToneSymbol> all;
    for (int b = 0; b < 64; ++b) all.push_back(tone_of_bits(static_cast<std::uint8_t>(b), plan));
    for (double amp : {0.3, 0.8, 1.0}) {
        cfg.amplitude = amp;
        const auto base = synthesize(all, cfg);
        const double pk = *std::max_element(base.samples.begin(), base.samples.end(),
                                            [](double a, double b) { return std::abs(a) < std::abs(b); });
        CHECK(std::abs(pk) <= amp + 1e-12);
        cfg.carrier_hz = 18000;
        const auto mod = modulate(all, cfg);
        for (double v : mod.samples) REQUIRE(std::abs(v) <= amp + 1e-12);
        cfg.carrier_hz.reset();
    }
}

TEST_CASE("modulation keeps only the upper sidebands") {
    ModemConfig cfg;
    cfg.tone_ms = 1000;
    cfg.gap_ms = 0;
    cfg.carrier_hz = 18000;
    const std::vector<ToneSymbol> one{{1624, 1402}};
    const auto out = modulate(one, cfg);
    const double fs = cfg.sample_rate;
    const double pc = dft_power(out.samples, 18000, fs);
    const double p1 = dft_power(out.samples, 21026, fs);
    const double p2 = dft_power(out.samples, 19624, fs);
    const double peak = std::max({pc, p1, p2});
    CHECK(p1 == Catch::Approx(pc / 4).epsilon(1e-6));
    CHECK(p2 == Catch::Approx(pc / 4).epsilon(1e-6));
    CHECK(10 * std::log10(dft_power(out.samples, 16974, fs) / peak) < -60);
    CHECK(10 * std::log10(dft_power(out.samples, 16376, fs) / peak) < -60);
}

TEST_CASE("no lower sideband for any symbol at any carrier") {
    ModemConfig cfg;
    cfg.tone_ms = 250;
    cfg.gap_ms = 0;
    const auto plan = expanded_plan();
    const std::vector<double> hann = [] {
        std::vector<double> w(24000);
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / (w.size() - 1));
        return w;
    }();
    for (double fc : {15000.0, 18000.0, 20000.0}) {
        cfg.carrier_hz = fc;
        for (int b = 0; b < 64; b += 7) {
            const ToneSymbol t = tone_of_bits(static_cast<std::uint8_t>(b), plan);
            const std::vector<ToneSymbol> one{t};
            auto x = modulate(one, cfg).samples;
            for (std::size_t i = 0; i < x.size(); ++i) x[i] *= hann[i];
            const double ref = dft_power(x, fc, cfg.sample_rate);
            CHECK(10 * std::log10(dft_power(x, fc - t.f1(), cfg.sample_rate) / ref) < -60);
            CHECK(10 * std::log10(dft_power(x, fc - t.f2(), cfg.sample_rate) / ref) < -60);
        }
    }
}

TEST_CASE("nyquist is enforced") {
    ModemConfig cfg;
    cfg.sample_rate = 48000;
    cfg.carrier_hz = 20000;
    const std::vector<ToneSymbol> low{{1624, 1402}};
    CHECK_NOTHROW(modulate(low, cfg));
    const std::vector<ToneSymbol> high{{3266, 2822}};
    try {
        modulate(high, cfg);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::nyquist_violation);
    }
    cfg.sample_rate = 96000;
    CHECK_NOTHROW(modulate(high, cfg));
}

TEST_CASE("config validation") {
    ModemConfig cfg;
    cfg.tone_ms = 0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.gap_ms = -1;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg = {};
    cfg.amplitude = 1.5;
    CHECK_THROWS_AS(validate(cfg), Error);
    CHECK_NOTHROW(validate(ModemConfig{}));
}

TEST_CASE("transmission duration is additive") {
    ModemConfig cfg;
    const auto plan = expanded_plan();
    for (std::size_t n : {0u, 1u, 40u}) {
        const Bytes p(n, 0x33);
        const auto tx = build_transmission(p, plan, cfg);
        const auto layout = transmission_layout(cfg, encode_payload(p, plan).size());
        CHECK(tx.size() == layout.total_samples());
        const double preamble_s = (4 * (2 * cfg.tone_ms + cfg.gap_ms) + cfg.tone_ms + cfg.gap_ms) / 1000.0;
        CHECK(tx.duration_s() ==
              Catch::Approx(preamble_s + 0.2 + layout.body_tones * (cfg.tone_ms + cfg.gap_ms) / 1000.0));
    }
}

TEST_CASE("a kilobyte takes about 274 seconds of body") {
    const auto tones = 4 * message_count_for(1024);
    CHECK(tones == 2736);
    CHECK(tones * 0.1 == Catch::Approx(273.6));
}

TEST_CASE("preamble is four leading symbols then the top corner") {
    const auto pre = preamble_tones(expanded_plan());
    REQUIRE(pre.size() == 5);
    for (int i = 0; i < 4; ++i) CHECK(pre[i] == ToneSymbol{1624, 1402});
    CHECK(pre[4] == ToneSymbol{3266, 2822});
}

TEST_CASE("gaps are silent") {
    ModemConfig cfg;
    cfg.carrier_hz = 18000;
    const std::vector<ToneSymbol> two{{1624, 1402}, {1794, 1892}};
    const auto out = modulate(two, cfg);
    const auto t = samples_for_ms(cfg.tone_ms, cfg.sample_rate);
    const auto g = samples_for_ms(cfg.gap_ms, cfg.sample_rate);
    for (std::size_t i = t; i < t + g; ++i) REQUIRE(out.samples[i] == 0.0);
}
