#include <catch_amalgamated.hpp>

#include <bit>
#include <random>

#include "oracle.hpp"
#include "vbmodem/channel.hpp"
#include "vbmodem/detector.hpp"

using namespace vbmodem;

namespace {

Bytes random_bytes(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    Bytes out(n);
    for (auto& b : out) b = static_cast<std::uint8_t>(rng());
    return out;
}

std::size_t quarter_tone(const ModemConfig& m) { return samples_for_ms(m.tone_ms / 4, m.sample_rate); }

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

} // namespace

TEST_CASE("goertzel matches a direct DFT at bin-aligned frequencies") {
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double fs = 8000;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 200 + rng() % 800;
        std::vector<double> x(n);
        for (auto& v : x) v = u(rng);
        const std::size_t k = 1 + rng() % (n / 2 - 1);
        const double hz = fs * static_cast<double>(k) / static_cast<double>(n);
        const double want = dft_power(x, hz, fs);
        CHECK(std::abs(goertzel_power(x, hz, fs) - want) <= 1e-6 * want);
    }
}

TEST_CASE("goertzel orthogonality and zero input") {
    const double fs = 8000;
    const std::size_t n = 8000; // 1 Hz bins
    const auto x = sine(1624, fs, n);
    const double on = goertzel_power(x, 1624, fs);
    CHECK(on == Catch::Approx(dft_power(x, 1624, fs)).epsilon(1e-6));
    CHECK(goertzel_power(x, 2822, fs) <= 1e-9 * on);
    CHECK(goertzel_power(std::vector<double>(256, 0.0), 1000, fs) == 0.0);
    CHECK(goertzel_power(x, 1000, fs) >= 0.0);
}

TEST_CASE("clean baseband tone is detected") {
    ModemConfig m;
    const std::vector<ToneSymbol> one{{1794, 1892}};
    const auto audio = synthesize(one, m);
    const auto n = samples_for_ms(m.tone_ms, m.sample_rate);
    const auto d = detect_tone(std::span<const double>(audio.samples).first(n), expanded_plan(), m.sample_rate);
    CHECK(d.tone == ToneSymbol{1794, 1892});
    CHECK(d.margins.group_a_db > 10);
    CHECK(d.margins.group_b_db > 10);
}

TEST_CASE("neighbour leakage can move group A by one step") {
    const auto plan = expanded_plan();
    const double fs = 48000;
    const std::size_t n = 2400;
    auto x = sine(2674, fs, n, 0.3);
    const auto leak = sine(2955, fs, n, 0.5);
    const auto b = sine(1402, fs, n, 0.5);
    for (std::size_t i = 0; i < n; ++i) x[i] += leak[i] + b[i];
    const auto d = detect_tone(x, plan, fs);
    CHECK(d.tone == ToneSymbol{2955, 1402});
    const auto sent = bits_of_tone(ToneSymbol{2674, 1402}, plan);
    CHECK(std::popcount(static_cast<unsigned>(sent ^ bits_of_tone(d.tone, plan))) == 1);
}

TEST_CASE("every symbol survives a clean channel at each carrier") {
    const auto plan = expanded_plan();
    ModemConfig m;
    ChannelConfig ch;
    std::vector<ToneSymbol> all;
    for (int b = 0; b < 64; ++b) all.push_back(tone_of_bits(static_cast<std::uint8_t>(b), plan));
    const auto tone = samples_for_ms(m.tone_ms, m.sample_rate);
    const auto period = tone + samples_for_ms(m.gap_ms, m.sample_rate);
    auto check_all = [&](const SampleBuffer& rx) {
        for (std::size_t i = 0; i < all.size(); ++i) {
            const auto seg = std::span<const double>(rx.samples).subspan(i * period + tone / 10, tone * 8 / 10);
            CHECK(detect_tone(seg, plan, m.sample_rate).tone == all[i]);
        }
    };
    check_all(simulate(synthesize(all, m), ch));
    for (double fc : {15000.0, 18000.0, 20000.0}) {
        m.carrier_hz = fc;
        check_all(simulate(modulate(all, m), ch));
    }
}

TEST_CASE("alignment finds the body start") {
    const auto plan = expanded_plan();
    ModemConfig m;
    m.carrier_hz = 18000;
    const auto payload = random_bytes(20, 1);
    const auto tx = build_transmission(payload, plan, m);
    const auto layout = transmission_layout(m, encode_payload(payload, plan).size());

    ChannelConfig clean;
    CHECK(distance(align(simulate(tx, clean), plan, m), layout.body_start()) <= quarter_tone(m));

    // Shift by a leading pad of silence.
    SampleBuffer padded = tx;
    padded.samples.insert(padded.samples.begin(), 12345, 0.0);
    CHECK(distance(align(simulate(padded, clean), plan, m), layout.body_start() + 12345) <= quarter_tone(m));

    ChannelConfig noisy;
    noisy.noise = WhiteNoise{10};
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        noisy.seed = seed;
        CHECK(distance(align(simulate(tx, noisy), plan, m), layout.body_start()) <= quarter_tone(m));
    }
}

TEST_CASE("alignment is unaffected by agc level changes") {
    const auto plan = expanded_plan();
    ModemConfig m;
    m.carrier_hz = 18000;
    const auto p = random_bytes(40, 21);
    ChannelConfig ch;
    ch.noise = WhiteNoise{20};
    ch.agc = AgcSpec{};
    const auto rx = simulate(build_transmission(p, plan, m), ch);
    CHECK(distance(align(rx, plan, m), transmission_layout(m, 0).body_start()) <= quarter_tone(m));
    CHECK(decode_transmission(rx, plan, m).payload == p);
}

TEST_CASE("noise alone has no preamble") {
    ModemConfig m;
    std::mt19937 rng(8);
    std::normal_distribution<double> g(0.0, 0.1);
    SampleBuffer noise;
    noise.sample_rate = m.sample_rate;
    noise.samples.resize(static_cast<std::size_t>(3 * m.sample_rate));
    for (auto& v : noise.samples) v = g(rng);
    try {
        align(noise, expanded_plan(), m);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::preamble_not_found);
    }
    try {
        align(SampleBuffer{m.sample_rate, std::vector<double>(100, 0.0)}, expanded_plan(), m);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::preamble_not_found);
    }
}

TEST_CASE("lossless round trips") {
    const auto plan = expanded_plan();
    ModemConfig m;
    for (std::size_t n : {0u, 1u, 7u, 40u, 256u}) {
        const auto p = random_bytes(n, static_cast<std::uint32_t>(n + 3));
        const auto report = decode_transmission(build_transmission(p, plan, m), plan, m);
        CHECK(report.payload == p);
        CHECK(report.words_failed == 0);
        CHECK(report.corrected_bits_total == 0);
        CHECK(report.tones_total == 4 * message_count_for(n));
        CHECK(report.words_total == message_count_for(n));
        CHECK(report.per_tone_margin.size() == report.tones_total);
    }
}

TEST_CASE("modulated round trip through the default channel") {
    const auto plan = expanded_plan();
    ModemConfig m;
    m.carrier_hz = 18000;
    ChannelConfig ch;
    ch.noise = WhiteNoise{30};
    const auto p = random_bytes(64, 77);
    DecodeOptions opts;
    opts.truth = p;
    const auto report = decode_transmission(simulate(build_transmission(p, plan, m), ch), plan, m, opts);
    CHECK(report.payload == p);
    CHECK(report.bit_accuracy_pct == 100.0);
    CHECK(report.char_errors == 0u);
    CHECK(decode_transmission(simulate(build_transmission(p, plan, m), ch), plan, m, opts) == report);
}

TEST_CASE("heavy loss produces failed words") {
    const auto plan = expanded_plan();
    ModemConfig m;
    m.tone_ms = 20;
    m.gap_ms = 20;
    m.carrier_hz = 18000;
    ChannelConfig ch;
    ch.noise = WhiteNoise{30};
    ch.loss = PacketLoss{20, 0.3};
    ch.seed = 5;
    const auto p = random_bytes(40, 12);
    DecodeOptions opts;
    opts.truth = p;
    const auto report = decode_body(simulate(build_transmission(p, plan, m), ch),
                                    transmission_layout(m, 0).body_start(), plan, m, opts);
    CHECK(report.words_failed > 0);
    CHECK(*report.bit_accuracy_pct < 100.0);
    CHECK(*report.bit_accuracy_pct >= 0.0);
    CHECK(report.words_failed <= report.words_total);
}

namespace {

SampleBuffer body_audio(const std::vector<ToneSymbol>& tones, const ModemConfig& m) { return synthesize(tones, m); }

} // namespace

TEST_CASE("one adjacent-tone error is corrected") {
    const auto plan = expanded_plan();
    ModemConfig m;
    const auto p = random_bytes(12, 4);
    for (std::size_t victim : {0u, 5u, 9u, 22u}) {
        auto tones = encode_payload(p, plan);
        const auto sent_bits = bits_of_tone(tones[victim], plan);
        const auto& ga = plan.group_a;
        const auto ia = static_cast<std::size_t>(std::find(ga.begin(), ga.end(), tones[victim].freq_a) - ga.begin());
        tones[victim].freq_a = ga[ia == 7 ? 6 : ia + 1];
        CHECK(std::popcount(static_cast<unsigned>(sent_bits ^ bits_of_tone(tones[victim], plan))) == 1);
        const auto report = decode_body(body_audio(tones, m), 0, plan, m);
        CHECK(report.payload == p);
        CHECK(report.corrected_bits_total >= 1);
        CHECK(report.words_failed == 0);
    }
}

TEST_CASE("two far tone errors in one word can fail it") {
    const auto plan = expanded_plan();
    ModemConfig m;
    const auto p = random_bytes(12, 4);
    auto tones = encode_payload(p, plan);
    // Complement all six bits of two tones in the third word: 12 flips.
    for (std::size_t k : {8u, 9u}) tones[k] = tone_of_bits(static_cast<std::uint8_t>(bits_of_tone(tones[k], plan) ^ 0x3F), plan);
    DecodeOptions opts;
    opts.truth = p;
    const auto report = decode_body(body_audio(tones, m), 0, plan, m, opts);
    CHECK(report.words_failed + (report.payload != p ? 1 : 0) >= 1);
    CHECK(*report.bit_accuracy_pct == Catch::Approx(100.0 * (24.0 * report.words_total - 12.0) / (24.0 * report.words_total)));
}

TEST_CASE("single-tone damage bound") {
    // Replace one tone of a word with any other symbol and count flipped word bits.
    const auto plan = expanded_plan();
    const auto words = encode_codewords(pack_payload(Bytes{0xA5}));
    const auto tones = tones_of_codewords(words, plan);
    auto decisions = [&](const std::vector<ToneSymbol>& ts) {
        std::vector<ToneDecision> out;
        for (const auto& t : ts) out.push_back(ToneDecision{t, {}});
        return out;
    };
    const auto clean = codewords_of_tones(decisions(tones), plan);
    REQUIRE(clean == words);
    for (std::size_t k = 0; k < 4; ++k) {
        for (int c = 0; c < 64; ++c) {
            auto hurt = tones;
            hurt[k] = tone_of_bits(static_cast<std::uint8_t>(c), plan);
            const auto w = codewords_of_tones(decisions(hurt), plan);
            const int flips = std::popcount(w[0].bits ^ words[0].bits);
            CHECK(flips <= 6);
            const bool adjacent =
                (hurt[k].freq_a == tones[k].freq_a) != (hurt[k].freq_b == tones[k].freq_b) &&
                std::abs(std::find(plan.group_a.begin(), plan.group_a.end(), hurt[k].freq_a) -
                         std::find(plan.group_a.begin(), plan.group_a.end(), tones[k].freq_a)) +
                        std::abs(std::find(plan.group_b.begin(), plan.group_b.end(), hurt[k].freq_b) -
                                 std::find(plan.group_b.begin(), plan.group_b.end(), tones[k].freq_b)) ==
                    1;
            if (adjacent) CHECK(flips == 1);
        }
    }
}

TEST_CASE("correction never adds character errors") {
    const auto plan = expanded_plan();
    ModemConfig m;
    m.tone_ms = 12;
    m.gap_ms = 12;
    m.carrier_hz = 18000;
    ChannelConfig ch;
    ch.noise = WhiteNoise{0};
    ch.loss = PacketLoss{20, 0.05};
    const auto p = random_bytes(40, 9);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ch.seed = seed;
        const auto rx = simulate(build_transmission(p, plan, m), ch);
        DecodeOptions on;
        on.truth = p;
        DecodeOptions off = on;
        off.error_correction = false;
        const auto start = transmission_layout(m, 0).body_start();
        CHECK(*decode_body(rx, start, plan, m, on).char_errors <= *decode_body(rx, start, plan, m, off).char_errors);
    }
}

TEST_CASE("truncated body is rejected") {
    const auto plan = expanded_plan();
    ModemConfig m;
    auto tx = build_transmission(random_bytes(30, 2), plan, m);
    tx.samples.resize(tx.size() - 20 * samples_for_ms(100, m.sample_rate));
    try {
        decode_transmission(tx, plan, m);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::header_invalid);
    }
}
