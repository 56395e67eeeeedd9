// Command-line front end: freqplan | encode | channel | decode | roundtrip | sweep.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vbmodem/vbmodem.hpp"

namespace {

using namespace vbmodem;

std::string dashed(std::string key) {
    for (char& c : key) {
        if (c == '_') c = '-';
    }
    return key;
}

/// Flags named after the flat config keys, plus --config for a key=value file.
struct SettingFlags {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App& app) {
        app.add_option("--config", config_path, "flat key=value settings file");
        for (const auto& key : known_setting_keys()) {
            options[key] = app.add_option("--" + dashed(key), values[key], "setting " + key);
        }
    }

    // File first, then explicit flags on top.
    Settings collect() const {
        Settings s;
        if (!config_path.empty()) s = read_settings_file(config_path);
        for (const auto& [key, opt] : options) {
            if (opt->count() > 0) s[key] = values.at(key);
        }
        return s;
    }
};

void print_plan(const FrequencyPlan& plan) {
    const auto check = validate_plan(plan);
    std::printf("%-14s %-14s\n", "Group A (Hz)", "Group B (Hz)");
    const std::size_t rows = std::max(plan.group_a.size(), plan.group_b.size());
    for (std::size_t i = 0; i < rows; ++i) {
        const std::string a = i < plan.group_a.size() ? std::to_string(plan.group_a[i]) : "";
        const std::string b = i < plan.group_b.size() ? std::to_string(plan.group_b[i]) : "";
        std::printf("%-14s %-14s\n", a.c_str(), b.c_str());
    }
    for (int f : plan.group_a) std::printf("A,%d\n", f);
    for (int f : plan.group_b) std::printf("B,%d\n", f);
    std::printf("threshold_hz=%d\nvalid=%s\nmin_pairwise_gap_hz=%d\n", plan.threshold_hz, check.valid ? "true" : "false",
                check.min_pairwise_gap_hz);
    for (const auto& v : check.violations) {
        std::printf("violation=%s", to_string(v.kind));
        for (int f : v.frequencies) std::printf(",%d", f);
        std::printf("\n");
    }
}

void print_rates(const ModemConfig& m, std::size_t payload_bytes, const SampleBuffer& audio) {
    const auto tone = static_cast<int>(m.tone_ms);
    const auto gap = static_cast<int>(m.gap_ms);
    std::printf("tones=%zu\n", message_count_for(payload_bytes) * kTonesPerWord);
    std::printf("duration_s=%.6f\n", audio.duration_s());
    if (static_cast<double>(tone) == m.tone_ms && static_cast<double>(gap) == m.gap_ms) {
        std::printf("raw_bit_rate=%.6f\neffective_bit_rate=%.6f\n", raw_bit_rate(tone, gap), effective_bit_rate(tone, gap));
    } else {
        const double raw = 6000.0 / (m.tone_ms + m.gap_ms);
        std::printf("raw_bit_rate=%.6f\neffective_bit_rate=%.6f\n", raw, raw / 2.0);
    }
}

template <typename T>
std::vector<T> parse_list(const std::string& text) {
    std::vector<T> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        if constexpr (std::is_same_v<T, int>) {
            out.push_back(std::stoi(item));
        } else {
            out.push_back(item == "inf" ? std::numeric_limits<double>::infinity() : std::stod(item));
        }
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Voiceband dual-tone data modem and telephony channel simulator"};
    app.require_subcommand(1);

    auto* freqplan = app.add_subcommand("freqplan", "print or search a frequency plan");
    int threshold = 70;
    bool search = false;
    bool classic = false;
    freqplan->add_option("--threshold", threshold, "minimum separation in Hz");
    freqplan->add_flag("--search", search, "search integer base pairs instead of printing the built-in plan");
    freqplan->add_flag("--classic", classic, "print the classic 4x4 touch-tone groups");

    auto* encode = app.add_subcommand("encode", "payload file -> transmission WAV");
    std::string enc_in, enc_out;
    SettingFlags enc_flags;
    encode->add_option("--in", enc_in, "payload file")->required();
    encode->add_option("--out", enc_out, "output WAV")->required();
    enc_flags.attach(*encode);

    auto* channel = app.add_subcommand("channel", "WAV -> simulated received WAV");
    std::string ch_in, ch_out;
    SettingFlags ch_flags;
    channel->add_option("--in", ch_in, "input WAV")->required();
    channel->add_option("--out", ch_out, "output WAV")->required();
    ch_flags.attach(*channel);

    auto* decode = app.add_subcommand("decode", "received WAV -> payload file and report");
    std::string dec_in, dec_out, dec_truth, dec_json;
    bool no_correction = false;
    SettingFlags dec_flags;
    decode->add_option("--in", dec_in, "received WAV")->required();
    decode->add_option("--out", dec_out, "recovered payload file");
    decode->add_option("--truth", dec_truth, "sent payload, enables accuracy metrics");
    decode->add_option("--json", dec_json, "write the report as JSON");
    decode->add_flag("--no-correction", no_correction, "read message bits without Golay correction");
    dec_flags.attach(*decode);

    auto* roundtrip = app.add_subcommand("roundtrip", "encode, simulate and decode in memory");
    std::string rt_in, rt_wav;
    SettingFlags rt_flags;
    roundtrip->add_option("--in", rt_in, "payload file")->required();
    roundtrip->add_option("--wav", rt_wav, "also write the received audio");
    rt_flags.attach(*roundtrip);

    auto* sweep = app.add_subcommand("sweep", "seeded parameter sweep -> CSV");
    std::string sw_out, sw_tones = "12,16,20,30,40,50", sw_carriers = "15000,18000,20000", sw_snrs = "30",
                        sw_losses = "0", sw_atts = "0";
    int sw_trials = 3;
    std::uint64_t sw_seed = 1;
    unsigned sw_threads = 0;
    sweep->add_option("--out", sw_out, "CSV output (stdout when omitted)");
    sweep->add_option("--tones", sw_tones, "tone lengths in ms; gap equals tone");
    sweep->add_option("--carriers", sw_carriers, "carrier frequencies in Hz, 0 for baseband");
    sweep->add_option("--snrs", sw_snrs, "SNR values in dB, inf for no noise");
    sweep->add_option("--losses", sw_losses, "frame loss probabilities");
    sweep->add_option("--attenuations", sw_atts, "attenuation values in dB");
    sweep->add_option("--trials", sw_trials, "trials per cell");
    sweep->add_option("--seed", sw_seed, "base seed");
    sweep->add_option("--threads", sw_threads, "worker threads, 0 for all cores");

    CLI11_PARSE(app, argc, argv);

    try {
        if (freqplan->parsed()) {
            if (classic) {
                print_plan(classic_dtmf_plan());
            } else if (search) {
                const auto plan = search_plan(threshold);
                if (!plan) {
                    std::printf("no plan satisfies threshold %d Hz\n", threshold);
                    return 2;
                }
                print_plan(*plan);
            } else {
                auto plan = expanded_plan();
                plan.threshold_hz = threshold;
                print_plan(plan);
            }
        } else if (encode->parsed()) {
            const auto rc = run_config_from(enc_flags.collect());
            const auto payload = read_file(enc_in);
            const auto audio = build_transmission(payload, expanded_plan(), rc.modem);
            write_wav(enc_out, audio);
            print_rates(rc.modem, payload.size(), audio);
        } else if (channel->parsed()) {
            const auto rc = run_config_from(ch_flags.collect());
            const auto in = read_wav(ch_in);
            write_wav(ch_out, simulate(in, rc.channel));
        } else if (decode->parsed()) {
            const auto rc = run_config_from(dec_flags.collect());
            const auto audio = read_wav(dec_in);
            ModemConfig modem = rc.modem;
            modem.sample_rate = audio.sample_rate;
            DecodeOptions options;
            options.error_correction = !no_correction;
            if (!dec_truth.empty()) options.truth = read_file(dec_truth);
            const auto report = decode_transmission(audio, expanded_plan(), modem, options);
            if (!dec_out.empty()) write_file(dec_out, report.payload);
            if (!dec_json.empty()) {
                const auto text = report_json(report).dump();
                write_file(dec_json, Bytes(text.begin(), text.end()));
            }
            std::fputs(format_report(report).c_str(), stdout);
        } else if (roundtrip->parsed()) {
            const auto rc = run_config_from(rt_flags.collect());
            const auto payload = read_file(rt_in);
            const auto plan = expanded_plan();
            const auto tx = build_transmission(payload, plan, rc.modem);
            const auto rx = simulate(tx, rc.channel);
            if (!rt_wav.empty()) write_wav(rt_wav, rx);
            DecodeOptions options;
            options.truth = payload;
            const auto report = decode_transmission(rx, plan, rc.modem, options);
            print_rates(rc.modem, payload.size(), tx);
            std::fputs(format_report(report).c_str(), stdout);
            std::printf("payload_exact=%s\n", report.payload == payload ? "true" : "false");
        } else if (sweep->parsed()) {
            SweepSpec spec;
            spec.tone_ms_values = parse_list<int>(sw_tones);
            spec.carrier_hz_values = parse_list<double>(sw_carriers);
            spec.snr_db_values = parse_list<double>(sw_snrs);
            spec.loss_prob_values = parse_list<double>(sw_losses);
            spec.attenuation_db_values = parse_list<double>(sw_atts);
            spec.trials_per_cell = sw_trials;
            spec.base_seed = sw_seed;
            const auto csv = sweep_csv(run_sweep(spec, expanded_plan(), {}, {}, sw_threads));
            if (sw_out.empty()) {
                std::fputs(csv.c_str(), stdout);
            } else {
                write_file(sw_out, Bytes(csv.begin(), csv.end()));
            }
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
