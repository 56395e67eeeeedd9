#pragma once

// Transmit side: framing, Golay protection, tone mapping and audio synthesis.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbmodem/freqplan.hpp"
#include "vbmodem/golay.hpp"
#include "vbmodem/graymap.hpp"
#include "vbmodem/types.hpp"

namespace vbmodem {

struct ModemConfig {
    double tone_ms = 50.0;
    double gap_ms = 50.0;
    std::optional<double> carrier_hz; // unset: baseband
    double sample_rate = 96000.0;
    double amplitude = 0.8;
};

inline constexpr double kPreambleSilenceMs = 200.0;
inline constexpr std::size_t kMaxPayloadBytes = 65535;
inline constexpr int kHeaderBits = 16;
inline constexpr int kTonesPerWord = 4;

inline void validate(const ModemConfig& cfg) {
    if (!(cfg.tone_ms > 0.0)) throw Error(ErrorKind::invalid_argument, "tone_ms must be > 0");
    if (!(cfg.gap_ms >= 0.0)) throw Error(ErrorKind::invalid_argument, "gap_ms must be >= 0");
    if (!(cfg.sample_rate > 0.0)) throw Error(ErrorKind::invalid_argument, "sample_rate must be > 0");
    if (!(cfg.amplitude > 0.0 && cfg.amplitude <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "amplitude must be in (0, 1]");
    }
    if (cfg.carrier_hz && !(*cfg.carrier_hz > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "carrier_hz must be > 0");
    }
    if (samples_for_ms(cfg.tone_ms, cfg.sample_rate) < 2) {
        throw Error(ErrorKind::invalid_argument, "tone shorter than two samples");
    }
}

/// Sample-exact timing of one transmission.
struct TransmissionLayout {
    std::size_t tone_samples = 0;
    std::size_t gap_samples = 0;
    std::size_t preamble_samples = 0; // preamble tones and their gaps
    std::size_t silence_samples = 0;
    std::size_t body_tones = 0;

    std::size_t symbol_samples() const noexcept { return tone_samples + gap_samples; }
    std::size_t body_start() const noexcept { return preamble_samples + silence_samples; }
    std::size_t total_samples() const noexcept { return body_start() + body_tones * symbol_samples(); }
};

inline TransmissionLayout transmission_layout(const ModemConfig& cfg, std::size_t body_tones) {
    TransmissionLayout layout;
    layout.tone_samples = samples_for_ms(cfg.tone_ms, cfg.sample_rate);
    layout.gap_samples = samples_for_ms(cfg.gap_ms, cfg.sample_rate);
    // Four double-length (a0, b0) tones, then one (a7, b7) tone, each followed by a gap.
    layout.preamble_samples = 4 * (2 * layout.tone_samples + layout.gap_samples) + layout.symbol_samples();
    layout.silence_samples = samples_for_ms(kPreambleSilenceMs, cfg.sample_rate);
    layout.body_tones = body_tones;
    return layout;
}

/// 16-bit big-endian length, payload MSB first, zero pad to a 12-bit multiple.
inline BitVector pack_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() > kMaxPayloadBytes) {
        throw Error(ErrorKind::payload_too_long, std::to_string(payload.size()) + " bytes");
    }
    BitVector bits;
    bits.reserve(kHeaderBits + 8 * payload.size() + 12);
    const auto len = static_cast<std::uint16_t>(payload.size());
    for (int i = 15; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((len >> i) & 1));
    for (std::uint8_t byte : payload) {
        for (int i = 7; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((byte >> i) & 1));
    }
    while (bits.size() % 12 != 0) bits.push_back(0);
    return bits;
}

inline std::size_t message_count_for(std::size_t payload_bytes) {
    return (kHeaderBits + 8 * payload_bytes + 11) / 12;
}

inline std::vector<GolayCodeword> encode_codewords(const BitVector& bits) {
    if (bits.size() % 12 != 0) throw Error(ErrorKind::invalid_argument, "bit count not a multiple of 12");
    std::vector<GolayCodeword> words;
    words.reserve(bits.size() / 12);
    for (std::size_t i = 0; i < bits.size(); i += 12) {
        std::uint16_t m = 0;
        for (std::size_t j = 0; j < 12; ++j) m = static_cast<std::uint16_t>((m << 1) | (bits[i + j] & 1));
        words.push_back(golay_encode(GolayMessage{m}));
    }
    return words;
}

/// Each 24-bit word becomes four 6-bit groups, most significant group first.
inline std::vector<ToneSymbol> tones_of_codewords(std::span<const GolayCodeword> words, const FrequencyPlan& plan) {
    std::vector<ToneSymbol> tones;
    tones.reserve(words.size() * kTonesPerWord);
    for (const auto& w : words) {
        for (int g = kTonesPerWord - 1; g >= 0; --g) {
            tones.push_back(tone_of_bits(static_cast<std::uint8_t>((w.bits >> (6 * g)) & 0x3F), plan));
        }
    }
    return tones;
}

inline std::vector<ToneSymbol> encode_payload(std::span<const std::uint8_t> payload, const FrequencyPlan& plan) {
    const auto words = encode_codewords(pack_payload(payload));
    return tones_of_codewords(words, plan);
}

namespace modem_detail {

inline void render_baseband(const ToneSymbol& tone, std::size_t n, const ModemConfig& cfg, std::vector<double>& out) {
    const double w1 = 2.0 * std::numbers::pi * tone.f1() / cfg.sample_rate;
    const double w2 = 2.0 * std::numbers::pi * tone.f2() / cfg.sample_rate;
    const double scale = 0.5 * cfg.amplitude;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(i);
        out.push_back(scale * (std::sin(w1 * k) + std::sin(w2 * k)));
    }
}

// Carrier plus the two upper sidebands; peak of the bracket is at most 2.
inline void render_upper_sideband(const ToneSymbol& tone, std::size_t n, const ModemConfig& cfg,
                                  std::vector<double>& out) {
    const double fc = *cfg.carrier_hz;
    const double wc = 2.0 * std::numbers::pi * fc / cfg.sample_rate;
    const double w1 = 2.0 * std::numbers::pi * (fc + tone.f1()) / cfg.sample_rate;
    const double w2 = 2.0 * std::numbers::pi * (fc + tone.f2()) / cfg.sample_rate;
    const double scale = 0.5 * cfg.amplitude;
    for (std::size_t i = 0; i < n; ++i) {
        const double k = static_cast<double>(i);
        out.push_back(scale * (std::sin(wc * k) - 0.5 * std::cos(w1 * k) - 0.5 * std::cos(w2 * k)));
    }
}

inline void check_nyquist(std::span<const ToneSymbol> tones, const ModemConfig& cfg) {
    if (!cfg.carrier_hz) throw Error(ErrorKind::invalid_argument, "modulate needs carrier_hz");
    int max_f1 = 0;
    for (const auto& t : tones) max_f1 = std::max(max_f1, t.f1());
    const double top = *cfg.carrier_hz + max_f1;
    if (!(top < cfg.sample_rate / 2.0)) {
        throw Error(ErrorKind::nyquist_violation, "carrier + f1 = " + std::to_string(top) +
                                                      " Hz is not below " + std::to_string(cfg.sample_rate / 2.0));
    }
}

inline void render(const ToneSymbol& tone, std::size_t n, const ModemConfig& cfg, std::vector<double>& out) {
    if (cfg.carrier_hz) {
        render_upper_sideband(tone, n, cfg, out);
    } else {
        render_baseband(tone, n, cfg, out);
    }
}

inline SampleBuffer render_sequence(std::span<const ToneSymbol> tones, const ModemConfig& cfg) {
    validate(cfg);
    const auto layout = transmission_layout(cfg, tones.size());
    SampleBuffer out;
    out.sample_rate = cfg.sample_rate;
    out.samples.reserve(tones.size() * layout.symbol_samples());
    for (const auto& tone : tones) {
        render(tone, layout.tone_samples, cfg, out.samples);
        out.samples.insert(out.samples.end(), layout.gap_samples, 0.0);
    }
    return out;
}

} // namespace modem_detail

/// Baseband tones: 0.5 * amplitude * (sin f1 + sin f2), each followed by a silent gap.
inline SampleBuffer synthesize(std::span<const ToneSymbol> tones, ModemConfig cfg) {
    cfg.carrier_hz.reset();
    return modem_detail::render_sequence(tones, cfg);
}

/// Upper-sideband carrier audio: sin(fc) - cos(fc + f1)/2 - cos(fc + f2)/2
/// per tone, scaled so the peak never exceeds `amplitude`. Gaps are silent.
inline SampleBuffer modulate(std::span<const ToneSymbol> tones, const ModemConfig& cfg) {
    modem_detail::check_nyquist(tones, cfg);
    return modem_detail::render_sequence(tones, cfg);
}

inline std::vector<ToneSymbol> preamble_tones(const FrequencyPlan& plan) {
    detail::require_8x8(plan);
    const ToneSymbol head{plan.group_a.front(), plan.group_b.front()};
    return {head, head, head, head, ToneSymbol{plan.group_a.back(), plan.group_b.back()}};
}

inline SampleBuffer build_transmission(std::span<const std::uint8_t> payload, const FrequencyPlan& plan,
                                       const ModemConfig& cfg) {
    validate(cfg);
    const auto body = encode_payload(payload, plan);
    const auto preamble = preamble_tones(plan);
    if (cfg.carrier_hz) {
        modem_detail::check_nyquist(preamble, cfg);
        modem_detail::check_nyquist(body, cfg);
    }
    const auto layout = transmission_layout(cfg, body.size());

    SampleBuffer out;
    out.sample_rate = cfg.sample_rate;
    out.samples.reserve(layout.total_samples());
    for (std::size_t i = 0; i < preamble.size(); ++i) {
        const std::size_t len = i + 1 < preamble.size() ? 2 * layout.tone_samples : layout.tone_samples;
        modem_detail::render(preamble[i], len, cfg, out.samples);
        out.samples.insert(out.samples.end(), layout.gap_samples, 0.0);
    }
    out.samples.insert(out.samples.end(), layout.silence_samples, 0.0);
    for (const auto& tone : body) {
        modem_detail::render(tone, layout.tone_samples, cfg, out.samples);
        out.samples.insert(out.samples.end(), layout.gap_samples, 0.0);
    }
    return out;
}

} // namespace vbmodem
