#pragma once

// Experiment plumbing: flat key=value configuration, report rendering,
// throughput arithmetic and seeded parameter sweeps with CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vbmodem/channel.hpp"
#include "vbmodem/detector.hpp"
#include "vbmodem/freqplan.hpp"
#include "vbmodem/modem.hpp"
#include "vbmodem/types.hpp"

namespace vbmodem {

// ---------------------------------------------------------------------------
// Throughput

/// Six raw bits per symbol period.
inline double raw_bit_rate(int tone_ms, int gap_ms) { return 6000.0 / static_cast<double>(tone_ms + gap_ms); }

/// Golay halves the raw rate.
inline double effective_bit_rate(int tone_ms, int gap_ms) { return raw_bit_rate(tone_ms, gap_ms) / 2.0; }

/// Message bits (after Golay) carried by whole symbols in a call of the given
/// length; the 16-bit frame header is part of this count.
inline long long message_bits_per_call(int call_seconds, int tone_ms, int gap_ms) {
    const long long symbols = static_cast<long long>(call_seconds) * 1000 / (tone_ms + gap_ms);
    return symbols * 6 / 2;
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
    ModemConfig modem;
    ChannelConfig channel;
};

using Settings = std::map<std::string, std::string>;

/// `key = value` lines; blank lines and `#` comments are ignored.
inline Settings parse_key_values(const std::string& text) {
    Settings out;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    auto trim = [](std::string s) {
        const auto first = s.find_first_not_of(" \t\r");
        if (first == std::string::npos) return std::string();
        const auto last = s.find_last_not_of(" \t\r");
        return s.substr(first, last - first + 1);
    };
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::invalid_argument, "config line " + std::to_string(number) + " has no '='");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline Settings read_settings_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_key_values(std::string(bytes.begin(), bytes.end()));
}

namespace harness_detail {

inline double to_double(const std::string& key, const std::string& value) {
    if (value == "inf" || value == "+inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_argument, key + ": not a number: " + value);
    }
}

inline bool to_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "off" || value == "no") return false;
    throw Error(ErrorKind::invalid_argument, key + ": not a boolean: " + value);
}

} // namespace harness_detail

inline const std::vector<std::string>& known_setting_keys() {
    static const std::vector<std::string> keys = {
        "tone_ms",     "gap_ms",          "carrier_hz",     "sample_rate",    "amplitude",
        "gain_a",      "gain_b",          "band_low_hz",    "band_high_hz",   "band_limit",     "noise",
        "snr_db",      "noise_profile",   "loss_prob",      "loss_frame_ms",  "agc",
        "agc_target_rms", "agc_time_constant_ms", "attenuation_db", "telephony_resample", "seed",
        "oversample",
    };
    return keys;
}

/// Builds a run configuration from flat settings on top of the defaults.
/// `noise` is none | white | profile; white noise is also implied by `snr_db`
/// alone, and profile noise by `noise_profile`.
inline RunConfig run_config_from(const Settings& settings) {
    using harness_detail::to_bool;
    using harness_detail::to_double;
    const auto& known = known_setting_keys();
    for (const auto& [key, value] : settings) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorKind::invalid_argument, "unknown setting: " + key);
        }
    }
    auto get = [&](const char* key) -> std::optional<std::string> {
        const auto it = settings.find(key);
        return it == settings.end() ? std::nullopt : std::optional<std::string>(it->second);
    };

    RunConfig rc;
    ModemConfig& m = rc.modem;
    ChannelConfig& c = rc.channel;
    if (auto v = get("tone_ms")) m.tone_ms = to_double("tone_ms", *v);
    if (auto v = get("gap_ms")) m.gap_ms = to_double("gap_ms", *v);
    if (auto v = get("carrier_hz")) {
        if (*v == "none" || *v == "0") {
            m.carrier_hz.reset();
        } else {
            m.carrier_hz = to_double("carrier_hz", *v);
        }
    }
    if (auto v = get("sample_rate")) m.sample_rate = to_double("sample_rate", *v);
    if (auto v = get("amplitude")) m.amplitude = to_double("amplitude", *v);

    if (auto v = get("gain_a")) c.gain_a = to_double("gain_a", *v);
    if (auto v = get("gain_b")) c.gain_b = to_double("gain_b", *v);
    if (auto v = get("band_low_hz")) c.band_low_hz = to_double("band_low_hz", *v);
    if (auto v = get("band_high_hz")) c.band_high_hz = to_double("band_high_hz", *v);
    if (auto v = get("band_limit")) c.band_limit = to_bool("band_limit", *v);
    if (auto v = get("attenuation_db")) c.attenuation_db = to_double("attenuation_db", *v);
    if (auto v = get("telephony_resample")) c.telephony_resample = to_bool("telephony_resample", *v);
    if (auto v = get("seed")) {
        try {
            c.seed = static_cast<std::uint64_t>(std::stoull(*v));
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_argument, "seed: not an integer: " + *v);
        }
    }
    if (auto v = get("oversample")) c.oversample = static_cast<int>(to_double("oversample", *v));

    std::string noise = "none";
    if (get("snr_db")) noise = "white";
    if (get("noise_profile")) noise = "profile";
    if (auto v = get("noise")) noise = *v;
    const double snr = get("snr_db") ? to_double("snr_db", *get("snr_db")) : 30.0;
    if (noise == "white") {
        c.noise = WhiteNoise{snr};
    } else if (noise == "profile") {
        const auto path = get("noise_profile");
        if (!path) throw Error(ErrorKind::invalid_argument, "noise=profile needs noise_profile");
        c.noise = ProfileNoise{load_noise_profile(*path), snr, *path};
    } else if (noise != "none") {
        throw Error(ErrorKind::invalid_argument, "noise must be none, white or profile");
    }

    if (get("loss_prob") || get("loss_frame_ms")) {
        PacketLoss loss;
        if (auto v = get("loss_prob")) loss.probability = to_double("loss_prob", *v);
        if (auto v = get("loss_frame_ms")) loss.frame_ms = to_double("loss_frame_ms", *v);
        c.loss = loss;
    }
    const bool agc_on = get("agc") ? to_bool("agc", *get("agc")) : (get("agc_target_rms") || get("agc_time_constant_ms"));
    if (agc_on) {
        AgcSpec agc;
        if (auto v = get("agc_target_rms")) agc.target_rms = to_double("agc_target_rms", *v);
        if (auto v = get("agc_time_constant_ms")) agc.time_constant_ms = to_double("agc_time_constant_ms", *v);
        c.agc = agc;
    }
    validate(rc.modem);
    validate(rc.channel, rc.modem.sample_rate);
    return rc;
}

// ---------------------------------------------------------------------------
// Reports

namespace harness_detail {

inline std::string fixed(double v, int digits = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

} // namespace harness_detail

/// Line-oriented key=value rendering of a decode report.
inline std::string format_report(const DecodeReport& r) {
    using harness_detail::fixed;
    std::ostringstream out;
    out << "payload_bytes=" << r.payload.size() << '\n';
    out << "body_start=" << r.body_start << '\n';
    out << "tones_total=" << r.tones_total << '\n';
    out << "words_total=" << r.words_total << '\n';
    out << "words_failed=" << r.words_failed << '\n';
    out << "corrected_bits_total=" << r.corrected_bits_total << '\n';
    if (r.bit_accuracy_pct) out << "bit_accuracy_pct=" << fixed(*r.bit_accuracy_pct) << '\n';
    if (r.char_errors) out << "char_errors=" << *r.char_errors << '\n';
    double min_margin = r.per_tone_margin.empty() ? 0.0 : detector_detail::kMarginCapDb;
    for (const auto& m : r.per_tone_margin) min_margin = std::min({min_margin, m.group_a_db, m.group_b_db});
    out << "min_margin_db=" << fixed(min_margin, 3) << '\n';
    return out.str();
}

inline nlohmann::json report_json(const DecodeReport& r) {
    nlohmann::json j;
    j["payload_bytes"] = r.payload.size();
    j["body_start"] = r.body_start;
    j["tones_total"] = r.tones_total;
    j["words_total"] = r.words_total;
    j["words_failed"] = r.words_failed;
    j["corrected_bits_total"] = r.corrected_bits_total;
    j["bit_accuracy_pct"] = r.bit_accuracy_pct ? nlohmann::json(*r.bit_accuracy_pct) : nlohmann::json(nullptr);
    j["char_errors"] = r.char_errors ? nlohmann::json(*r.char_errors) : nlohmann::json(nullptr);
    auto margins = nlohmann::json::array();
    for (const auto& m : r.per_tone_margin) margins.push_back({m.group_a_db, m.group_b_db});
    j["per_tone_margin_db"] = std::move(margins);
    return j;
}

// ---------------------------------------------------------------------------
// Sweeps

inline const std::string& reference_payload_text() {
    static const std::string text = "Quarterly figures: revenue up 12.5% YoY.";
    return text;
}

inline Bytes reference_payload() {
    const auto& t = reference_payload_text();
    return Bytes(t.begin(), t.end());
}

struct SweepSpec {
    std::vector<int> tone_ms_values{12, 16, 20, 30, 40, 50};
    std::vector<double> carrier_hz_values{15000, 18000, 20000};
    std::vector<double> snr_db_values{30};
    std::vector<double> loss_prob_values{0.0};
    std::vector<double> attenuation_db_values{0.0};
    int trials_per_cell = 3;
    std::uint64_t base_seed = 1;
};

struct SweepRow {
    int tone_ms = 0;
    int gap_ms = 0;
    double carrier_hz = 0.0;
    double snr_db = 0.0;
    double loss_prob = 0.0;
    double attenuation_db = 0.0;
    int trials = 0;
    double bit_accuracy_pct = 0.0;
    double char_errors = 0.0;             // Golay on, mean per trial
    double char_errors_uncorrected = 0.0; // Golay bypassed, same audio
    double words_failed = 0.0;
    double corrected_bits = 0.0;
    int alignment_failures = 0;
    double raw_bit_rate = 0.0;
    double effective_bit_rate = 0.0;
};

inline void validate(const SweepSpec& spec) {
    if (spec.tone_ms_values.empty() || spec.carrier_hz_values.empty() || spec.snr_db_values.empty() ||
        spec.loss_prob_values.empty() || spec.attenuation_db_values.empty()) {
        throw Error(ErrorKind::invalid_argument, "sweep lists must be non-empty");
    }
    if (spec.trials_per_cell < 1) throw Error(ErrorKind::invalid_argument, "trials_per_cell must be >= 1");
    for (int t : spec.tone_ms_values) {
        if (t <= 0) throw Error(ErrorKind::invalid_argument, "tone lengths must be positive");
    }
}

namespace harness_detail {

inline std::uint64_t bits_of(double v) {
    std::uint64_t out = 0;
    std::memcpy(&out, &v, sizeof out);
    return out;
}

} // namespace harness_detail

/// Depends only on the base seed and the cell's own parameters.
inline std::uint64_t cell_seed(std::uint64_t base_seed, int tone_ms, double carrier_hz, double snr_db, double loss_prob,
                               double attenuation_db) {
    using harness_detail::bits_of;
    std::uint64_t s = mix_seed(base_seed, static_cast<std::uint64_t>(tone_ms));
    s = mix_seed(s, bits_of(carrier_hz));
    s = mix_seed(s, bits_of(snr_db));
    s = mix_seed(s, bits_of(loss_prob));
    return mix_seed(s, bits_of(attenuation_db));
}

struct TrialOutcome {
    bool aligned = false;
    double bit_accuracy_pct = 0.0;
    std::size_t char_errors = 0;
    std::size_t char_errors_uncorrected = 0;
    std::size_t words_failed = 0;
    std::size_t corrected_bits = 0;
};

/// One seeded encode -> channel -> decode round trip. A transmission whose
/// preamble or frame cannot be recovered counts as every bit and character wrong.
inline TrialOutcome run_trial(const Bytes& payload, const FrequencyPlan& plan, const ModemConfig& modem,
                              const ChannelConfig& channel) {
    const auto tx = build_transmission(payload, plan, modem);
    const auto rx = simulate(tx, channel);
    TrialOutcome out;
    try {
        const std::size_t start = align(rx, plan, modem);
        DecodeOptions on;
        on.truth = payload;
        DecodeOptions off = on;
        off.error_correction = false;
        const auto corrected = decode_body(rx, start, plan, modem, on);
        const auto raw = decode_body(rx, start, plan, modem, off);
        out.aligned = true;
        out.bit_accuracy_pct = *corrected.bit_accuracy_pct;
        out.char_errors = *corrected.char_errors;
        out.char_errors_uncorrected = *raw.char_errors;
        out.words_failed = corrected.words_failed;
        out.corrected_bits = corrected.corrected_bits_total;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::preamble_not_found && e.kind() != ErrorKind::header_invalid) throw;
        out.char_errors = payload.size();
        out.char_errors_uncorrected = payload.size();
        out.words_failed = message_count_for(payload.size());
    }
    return out;
}

/// Runs every grid cell (grid order: tone, carrier, snr, loss, attenuation)
/// on `threads` workers. Rows come back in grid order regardless of timing.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const FrequencyPlan& plan,
                                       const ChannelConfig& channel_base = {}, const ModemConfig& modem_base = {},
                                       unsigned threads = 0) {
    validate(spec);
    std::vector<SweepRow> rows;
    for (int tone : spec.tone_ms_values) {
        for (double carrier : spec.carrier_hz_values) {
            for (double snr : spec.snr_db_values) {
                for (double loss : spec.loss_prob_values) {
                    for (double att : spec.attenuation_db_values) {
                        SweepRow row;
                        row.tone_ms = tone;
                        row.gap_ms = tone;
                        row.carrier_hz = carrier;
                        row.snr_db = snr;
                        row.loss_prob = loss;
                        row.attenuation_db = att;
                        row.trials = spec.trials_per_cell;
                        row.raw_bit_rate = raw_bit_rate(tone, tone);
                        row.effective_bit_rate = effective_bit_rate(tone, tone);
                        rows.push_back(row);
                    }
                }
            }
        }
    }

    const Bytes payload = reference_payload();
    auto run_cell = [&](SweepRow& row) {
        ModemConfig modem = modem_base;
        modem.tone_ms = row.tone_ms;
        modem.gap_ms = row.gap_ms;
        if (row.carrier_hz > 0.0) {
            modem.carrier_hz = row.carrier_hz;
        } else {
            modem.carrier_hz.reset();
        }
        const std::uint64_t seed =
            cell_seed(spec.base_seed, row.tone_ms, row.carrier_hz, row.snr_db, row.loss_prob, row.attenuation_db);
        double accuracy = 0.0;
        double chars = 0.0;
        double chars_raw = 0.0;
        double failed = 0.0;
        double corrected = 0.0;
        for (int t = 0; t < spec.trials_per_cell; ++t) {
            ChannelConfig channel = channel_base;
            channel.seed = mix_seed(seed, static_cast<std::uint64_t>(t));
            channel.attenuation_db = row.attenuation_db;
            if (std::isinf(row.snr_db) && row.snr_db > 0) {
                channel.noise = std::monostate{};
            } else {
                channel.noise = WhiteNoise{row.snr_db};
            }
            if (row.loss_prob > 0.0) {
                channel.loss = PacketLoss{channel_base.loss ? channel_base.loss->frame_ms : 20.0, row.loss_prob};
            } else {
                channel.loss.reset();
            }
            const auto outcome = run_trial(payload, plan, modem, channel);
            accuracy += outcome.bit_accuracy_pct;
            chars += static_cast<double>(outcome.char_errors);
            chars_raw += static_cast<double>(outcome.char_errors_uncorrected);
            failed += static_cast<double>(outcome.words_failed);
            corrected += static_cast<double>(outcome.corrected_bits);
            row.alignment_failures += outcome.aligned ? 0 : 1;
        }
        const double n = spec.trials_per_cell;
        row.bit_accuracy_pct = accuracy / n;
        row.char_errors = chars / n;
        row.char_errors_uncorrected = chars_raw / n;
        row.words_failed = failed / n;
        row.corrected_bits = corrected / n;
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    auto worker = [&](unsigned id) {
        try {
            for (std::size_t i = next++; i < rows.size(); i = next++) run_cell(rows[i]);
        } catch (...) {
            errors[id] = std::current_exception();
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return rows;
}

inline const char* sweep_csv_header() {
    return "tone_ms,gap_ms,carrier_hz,snr_db,loss_prob,attenuation_db,trials,bit_accuracy_pct,char_errors,"
           "char_errors_uncorrected,words_failed,corrected_bits,alignment_failures,raw_bit_rate,effective_bit_rate";
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    using harness_detail::fixed;
    std::ostringstream out;
    out << sweep_csv_header() << '\n';
    for (const auto& r : rows) {
        out << r.tone_ms << ',' << r.gap_ms << ',' << fixed(r.carrier_hz, 1) << ',' << fixed(r.snr_db, 2) << ','
            << fixed(r.loss_prob, 4) << ',' << fixed(r.attenuation_db, 2) << ',' << r.trials << ','
            << fixed(r.bit_accuracy_pct) << ',' << fixed(r.char_errors) << ',' << fixed(r.char_errors_uncorrected)
            << ',' << fixed(r.words_failed) << ',' << fixed(r.corrected_bits) << ',' << r.alignment_failures << ','
            << fixed(r.raw_bit_rate) << ',' << fixed(r.effective_bit_rate) << '\n';
    }
    return out.str();
}

} // namespace vbmodem
