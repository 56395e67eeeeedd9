#pragma once

// Receive side: preamble alignment, Goertzel tone detection and the
// Gray/Golay unwinding back to payload bytes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "vbmodem/freqplan.hpp"
#include "vbmodem/golay.hpp"
#include "vbmodem/graymap.hpp"
#include "vbmodem/modem.hpp"
#include "vbmodem/types.hpp"

namespace vbmodem {

/// Squared magnitude of the single-bin DFT at `target_hz` over the whole
/// segment. Equals |X[k]|^2 when target_hz = k * sample_rate / N.
inline double goertzel_power(std::span<const double> segment, double target_hz, double sample_rate) {
    if (segment.size() < 2) throw Error(ErrorKind::invalid_argument, "goertzel needs at least two samples");
    if (!(target_hz >= 0.0 && target_hz < sample_rate / 2.0)) {
        throw Error(ErrorKind::invalid_argument, "goertzel target must be below Nyquist");
    }
    const double coeff = 2.0 * std::cos(2.0 * std::numbers::pi * target_hz / sample_rate);
    double s1 = 0.0;
    double s2 = 0.0;
    for (double x : segment) {
        const double s0 = x + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    return std::max(0.0, s1 * s1 + s2 * s2 - coeff * s1 * s2);
}

struct ToneMargins {
    double group_a_db = 0.0;
    double group_b_db = 0.0;

    friend bool operator==(const ToneMargins&, const ToneMargins&) = default;
};

struct ToneDecision {
    ToneSymbol tone;
    ToneMargins margins;
};

namespace detector_detail {

inline constexpr double kMarginCapDb = 300.0;

inline double margin_db(double best, double second) {
    if (best <= 0.0) return 0.0;
    if (second <= 0.0) return kMarginCapDb;
    return std::min(kMarginCapDb, 10.0 * std::log10(best / second));
}

struct Argmax {
    std::size_t index = 0;
    double margin_db = 0.0;
};

// Earliest index wins ties, so an all-zero window decodes as index 0.
inline Argmax argmax(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    double second = -1.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (i != best) second = std::max(second, scores[i]);
    }
    return {best, margin_db(scores[best], std::max(0.0, second))};
}

inline double power_or_zero(std::span<const double> x, double hz, double rate) {
    return hz < rate / 2.0 ? goertzel_power(x, hz, rate) : 0.0;
}

// Least-squares removal of one sinusoid at `hz` (any phase). Keeps the strong
// group-A line from leaking into the group-B candidates next to it.
inline std::vector<double> without_line(std::span<const double> x, double hz, double rate) {
    std::vector<double> out(x.begin(), x.end());
    const double w = 2.0 * std::numbers::pi * hz / rate;
    double cc = 0.0, ss = 0.0, cs = 0.0, xc = 0.0, xs = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const double c = std::cos(w * static_cast<double>(n));
        const double s = std::sin(w * static_cast<double>(n));
        cc += c * c;
        ss += s * s;
        cs += c * s;
        xc += x[n] * c;
        xs += x[n] * s;
    }
    const double det = cc * ss - cs * cs;
    if (std::abs(det) < 1e-12 * (cc * ss + 1e-300)) return out;
    const double a = (xc * ss - xs * cs) / det;
    const double b = (xs * cc - xc * cs) / det;
    for (std::size_t n = 0; n < x.size(); ++n) {
        out[n] -= a * std::cos(w * static_cast<double>(n)) + b * std::sin(w * static_cast<double>(n));
    }
    return out;
}

} // namespace detector_detail

/// Independent per-group argmax over the plan frequencies. Group A is scored
/// on its own line f_A; group B candidates are scored on f_B plus the sum line
/// f_A + f_B relative to the chosen group-A frequency, so both demodulated
/// audio (f_B present) and raw baseband audio (only f_A and f_A + f_B present)
/// decode. The chosen group-A line is fitted and removed before group B is
/// scored. Margins are the dB gap between the best and runner-up score.
inline ToneDecision detect_tone(std::span<const double> segment, const FrequencyPlan& plan, double sample_rate) {
    detail::require_8x8(plan);

    std::vector<double> score_a(kGroupSize);
    for (std::size_t i = 0; i < kGroupSize; ++i) {
        score_a[i] = detector_detail::power_or_zero(segment, plan.group_a[i], sample_rate);
    }
    const auto pick_a = detector_detail::argmax(score_a);
    const int freq_a = plan.group_a[pick_a.index];

    const auto rest = detector_detail::without_line(segment, freq_a, sample_rate);
    std::vector<double> score_b(kGroupSize);
    for (std::size_t i = 0; i < kGroupSize; ++i) {
        const int fb = plan.group_b[i];
        score_b[i] = detector_detail::power_or_zero(rest, fb, sample_rate) +
                     detector_detail::power_or_zero(rest, freq_a + fb, sample_rate);
    }
    const auto pick_b = detector_detail::argmax(score_b);

    return ToneDecision{ToneSymbol{freq_a, plan.group_b[pick_b.index]}, ToneMargins{pick_a.margin_db, pick_b.margin_db}};
}

namespace detector_detail {

// Rectangular-window DFT power at one frequency for every window start that
// is a multiple of `hop`, via a running phasor sum.
inline std::vector<double> sliding_power(std::span<const double> x, double hz, double rate, std::size_t window,
                                         std::size_t hop) {
    const std::size_t points = x.size() + 1;
    std::vector<std::complex<double>> prefix((points + hop - 1) / hop + 1);
    const std::complex<double> step = std::polar(1.0, -2.0 * std::numbers::pi * hz / rate);
    std::complex<double> phasor{1.0, 0.0};
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < points; ++n) {
        if (n % hop == 0) prefix[n / hop] = acc;
        if (n == x.size()) break;
        acc += x[n] * phasor;
        phasor *= step;
        if ((n & 1023) == 1023) phasor = std::polar(1.0, -2.0 * std::numbers::pi * hz / rate * static_cast<double>(n + 1));
    }
    const std::size_t span_hops = window / hop;
    const std::size_t stored = x.size() / hop + 1;
    std::vector<double> power;
    if (stored <= span_hops) return power;
    power.resize(stored - span_hops);
    for (std::size_t j = 0; j < power.size(); ++j) power[j] = std::norm(prefix[j + span_hops] - prefix[j]);
    return power;
}

inline std::size_t alignment_hop(const TransmissionLayout& layout) {
    return std::max<std::size_t>(1, layout.tone_samples / 40);
}

} // namespace detector_detail

/// Finds the preamble by correlating sliding Goertzel energy at the preamble
/// frequencies against its known on/off pattern. Returns the first sample of
/// the data body. Ties go to the earliest offset.
inline std::size_t align(const SampleBuffer& buffer, const FrequencyPlan& plan, const ModemConfig& cfg) {
    validate(cfg);
    detail::require_8x8(plan);
    const auto layout = transmission_layout(cfg, 0);
    const std::size_t hop = detector_detail::alignment_hop(layout);
    const std::size_t window = std::max<std::size_t>(1, (layout.tone_samples + hop / 2) / hop) * hop;
    if (buffer.size() < layout.preamble_samples + window) {
        throw Error(ErrorKind::preamble_not_found, "buffer shorter than the preamble");
    }

    const auto head = preamble_tones(plan);
    auto line_energy = [&](const ToneSymbol& t) {
        std::vector<double> total;
        for (int hz : {t.freq_a, t.freq_b, t.freq_a + t.freq_b}) {
            if (hz >= buffer.sample_rate / 2.0) continue;
            auto p = detector_detail::sliding_power(buffer.samples, hz, buffer.sample_rate, window, hop);
            if (total.empty()) {
                total = std::move(p);
            } else {
                for (std::size_t i = 0; i < total.size(); ++i) total[i] += p[i];
            }
        }
        return total;
    };
    const auto lead = line_energy(head.front());
    const auto tail = line_energy(head.back());

    const double period = static_cast<double>(2 * layout.tone_samples + layout.gap_samples);
    auto hops = [&](double samples) { return static_cast<std::size_t>(std::lround(samples / static_cast<double>(hop))); };
    struct Probe {
        std::size_t offset;
        const std::vector<double>* feature;
        double weight;
    };
    std::vector<Probe> probes;
    for (int k = 0; k < 4; ++k) {
        probes.push_back({hops(k * period), &lead, 1.0});
        probes.push_back({hops(k * period + static_cast<double>(layout.tone_samples)), &lead, 1.0});
    }
    probes.push_back({hops(4 * period), &tail, 2.0});

    std::size_t reach = 0;
    for (const auto& p : probes) reach = std::max(reach, p.offset);
    if (lead.size() <= reach) throw Error(ErrorKind::preamble_not_found, "buffer shorter than the preamble");
    // Probe energy as a share of all energy in the preamble-length region that
    // starts at the candidate, so slow level changes (AGC) cannot favour later audio.
    std::vector<double> energy(buffer.size() + 1, 0.0);
    for (std::size_t i = 0; i < buffer.size(); ++i) energy[i + 1] = energy[i] + buffer.samples[i] * buffer.samples[i];
    const double unit = 0.5 * static_cast<double>(window);
    std::vector<double> score(lead.size() - reach);
    for (std::size_t j = 0; j < score.size(); ++j) {
        const std::size_t from = j * hop;
        const std::size_t to = std::min(buffer.size(), from + layout.preamble_samples);
        const double region = (energy[to] - energy[from]) * unit;
        if (!(region > 0.0)) continue;
        double s = 0.0;
        for (const auto& p : probes) s += p.weight * (*p.feature)[j + p.offset];
        score[j] = s / region;
    }

    const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
    auto sorted = score;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    if (!(score[best] > 0.0) || score[best] < 3.0 * median) {
        throw Error(ErrorKind::preamble_not_found, "no correlation peak above 3x the median");
    }
    return best * hop + layout.body_start();
}

/// Decisions for `count` consecutive tones starting at `body_start`, each
/// measured over the central 80% of its tone interval.
inline std::vector<ToneDecision> detect_body(const SampleBuffer& buffer, std::size_t body_start, std::size_t count,
                                             const FrequencyPlan& plan, const ModemConfig& cfg) {
    const auto layout = transmission_layout(cfg, count);
    const auto skip = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(layout.tone_samples)));
    const auto len = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(layout.tone_samples))));
    std::vector<ToneDecision> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t from = body_start + k * layout.symbol_samples() + skip;
        if (from + len > buffer.size()) {
            throw Error(ErrorKind::header_invalid, "tone " + std::to_string(k) + " runs past the end of the audio");
        }
        out.push_back(detect_tone(std::span<const double>(buffer.samples.data() + from, len), plan, buffer.sample_rate));
    }
    return out;
}

inline std::vector<GolayCodeword> codewords_of_tones(std::span<const ToneDecision> tones, const FrequencyPlan& plan) {
    std::vector<GolayCodeword> words;
    words.reserve(tones.size() / kTonesPerWord);
    for (std::size_t i = 0; i + kTonesPerWord <= tones.size(); i += kTonesPerWord) {
        std::uint32_t w = 0;
        for (std::size_t g = 0; g < kTonesPerWord; ++g) w = (w << 6) | bits_of_tone(tones[i + g].tone, plan);
        words.push_back(GolayCodeword{w});
    }
    return words;
}

struct WordDecoding {
    std::vector<GolayMessage> messages;
    std::size_t words_failed = 0;
    std::size_t corrected_bits = 0;
};

/// Golay-decodes each word; failed words fall back to their systematic bits.
/// With correction off every word is read systematically.
inline WordDecoding decode_words(std::span<const GolayCodeword> words, bool error_correction) {
    WordDecoding out;
    out.messages.reserve(words.size());
    for (const auto& w : words) {
        if (!error_correction) {
            out.messages.push_back(golay_systematic_bits(w));
            continue;
        }
        if (const auto d = golay_decode(w)) {
            out.messages.push_back(d->message);
            out.corrected_bits += static_cast<std::size_t>(d->corrected_bits);
        } else {
            out.messages.push_back(golay_systematic_bits(w));
            ++out.words_failed;
        }
    }
    return out;
}

inline BitVector bits_of_messages(std::span<const GolayMessage> messages) {
    BitVector bits;
    bits.reserve(messages.size() * 12);
    for (const auto& m : messages) {
        for (int i = 11; i >= 0; --i) bits.push_back(static_cast<std::uint8_t>((m.bits >> i) & 1));
    }
    return bits;
}

inline std::size_t header_length(const BitVector& bits) {
    std::size_t len = 0;
    for (int i = 0; i < kHeaderBits; ++i) len = (len << 1) | bits[static_cast<std::size_t>(i)];
    return len;
}

inline Bytes unpack_payload(const BitVector& bits, std::size_t length) {
    Bytes out(length, 0);
    for (std::size_t i = 0; i < length; ++i) {
        std::uint8_t byte = 0;
        for (std::size_t b = 0; b < 8; ++b) byte = static_cast<std::uint8_t>((byte << 1) | bits[kHeaderBits + 8 * i + b]);
        out[i] = byte;
    }
    return out;
}

struct DecodeOptions {
    bool error_correction = true;
    /// Sent payload. When present the frame length is taken from it and the
    /// accuracy fields of the report are filled in.
    std::optional<Bytes> truth;
};

struct DecodeReport {
    Bytes payload;
    std::optional<double> bit_accuracy_pct; // raw symbol bits, before Golay
    std::optional<std::size_t> char_errors;
    std::size_t body_start = 0;
    std::size_t tones_total = 0;
    std::size_t words_total = 0;
    std::size_t words_failed = 0;
    std::size_t corrected_bits_total = 0;
    std::vector<ToneMargins> per_tone_margin;

    friend bool operator==(const DecodeReport&, const DecodeReport&) = default;
};

/// Everything after alignment: the body start is given.
inline DecodeReport decode_body(const SampleBuffer& buffer, std::size_t body_start, const FrequencyPlan& plan,
                                const ModemConfig& cfg, const DecodeOptions& options = {}) {
    std::size_t words_needed = 0;
    if (options.truth) {
        words_needed = message_count_for(options.truth->size());
    } else {
        // The 16-bit header spans the first two words.
        const auto head = detect_body(buffer, body_start, 2 * kTonesPerWord, plan, cfg);
        const auto decoded = decode_words(codewords_of_tones(head, plan), options.error_correction);
        if (decoded.words_failed > 0) throw Error(ErrorKind::header_invalid, "length header is uncorrectable");
        words_needed = message_count_for(header_length(bits_of_messages(decoded.messages)));
        const auto layout = transmission_layout(cfg, words_needed * kTonesPerWord);
        const std::size_t last_end =
            body_start + (layout.body_tones - 1) * layout.symbol_samples() + layout.tone_samples;
        if (last_end > buffer.size()) {
            throw Error(ErrorKind::header_invalid, "declared length needs " + std::to_string(words_needed) +
                                                       " words, more than the audio holds");
        }
    }

    const auto tones = detect_body(buffer, body_start, words_needed * kTonesPerWord, plan, cfg);
    const auto words = codewords_of_tones(tones, plan);
    const auto decoded = decode_words(words, options.error_correction);
    const auto bits = bits_of_messages(decoded.messages);
    const std::size_t length = options.truth ? options.truth->size() : header_length(bits);

    DecodeReport report;
    report.payload = unpack_payload(bits, length);
    report.body_start = body_start;
    report.tones_total = tones.size();
    report.words_total = words.size();
    report.words_failed = decoded.words_failed;
    report.corrected_bits_total = decoded.corrected_bits;
    report.per_tone_margin.reserve(tones.size());
    for (const auto& t : tones) report.per_tone_margin.push_back(t.margins);

    if (options.truth) {
        const auto sent = encode_codewords(pack_payload(*options.truth));
        std::size_t correct = 0;
        for (std::size_t i = 0; i < sent.size(); ++i) correct += 24 - std::popcount((sent[i].bits ^ words[i].bits) & 0xFFFFFFu);
        report.bit_accuracy_pct = 100.0 * static_cast<double>(correct) / static_cast<double>(24 * sent.size());
        std::size_t errors = 0;
        for (std::size_t i = 0; i < length; ++i) errors += report.payload[i] != (*options.truth)[i] ? 1 : 0;
        report.char_errors = errors;
    }
    return report;
}

inline DecodeReport decode_transmission(const SampleBuffer& buffer, const FrequencyPlan& plan, const ModemConfig& cfg,
                                        const DecodeOptions& options = {}) {
    validate(cfg);
    return decode_body(buffer, align(buffer, plan, cfg), plan, cfg, options);
}

} // namespace vbmodem
