#pragma once

// Receive-path simulation: microphone square-law response, voiceband
// band-limiting, optional 8 kHz telephony resampling, additive noise, frame
// drops and automatic gain control.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "vbmodem/dsp.hpp"
#include "vbmodem/types.hpp"
#include "vbmodem/wav.hpp"

namespace vbmodem {

/// splitmix64 finalizer over the combined value.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

struct WhiteNoise {
    double snr_db = 30.0;
};

struct ProfileNoise {
    SampleBuffer profile;
    double snr_db = 30.0;
    std::string source;
};

using NoiseSpec = std::variant<std::monostate, WhiteNoise, ProfileNoise>;

struct PacketLoss {
    double frame_ms = 20.0;
    double probability = 0.0;
};

struct AgcSpec {
    double target_rms = 0.1;
    double time_constant_ms = 200.0;
};

struct ChannelConfig {
    double gain_a = 1.0;
    double gain_b = 0.3;
    double band_low_hz = 300.0;
    double band_high_hz = 3400.0;
    bool band_limit = true; // false skips the voiceband filter
    NoiseSpec noise;
    std::optional<PacketLoss> loss;
    std::optional<AgcSpec> agc;
    double attenuation_db = 0.0;
    bool telephony_resample = false;
    std::uint64_t seed = 1;
    int oversample = 4; // internal rate factor for the square-law step
};

/// Distance labels used by sweeps. Labels only; no acoustic model behind them.
inline std::optional<double> attenuation_for_distance_inches(int inches) {
    switch (inches) {
    case 0: return 0.0;
    case 25: return 6.0;
    case 50: return 10.0;
    case 100: return 14.0;
    default: return std::nullopt;
    }
}

inline void validate(const ChannelConfig& cfg, double sample_rate) {
    if (!(cfg.gain_b >= 0.0)) throw Error(ErrorKind::invalid_argument, "gain_b must be >= 0");
    if (!(cfg.band_low_hz > 0.0 && cfg.band_low_hz < cfg.band_high_hz && cfg.band_high_hz < sample_rate / 2.0)) {
        throw Error(ErrorKind::invalid_argument, "need 0 < band_low < band_high < sample_rate/2");
    }
    if (cfg.loss) {
        if (!(cfg.loss->probability >= 0.0 && cfg.loss->probability <= 1.0)) {
            throw Error(ErrorKind::invalid_argument, "loss probability must be in [0, 1]");
        }
        if (!(cfg.loss->frame_ms > 0.0)) throw Error(ErrorKind::invalid_argument, "loss frame_ms must be > 0");
    }
    if (cfg.agc && !(cfg.agc->target_rms > 0.0 && cfg.agc->time_constant_ms > 0.0)) {
        throw Error(ErrorKind::invalid_argument, "agc needs target_rms > 0 and time_constant_ms > 0");
    }
    if (cfg.oversample < 1) throw Error(ErrorKind::invalid_argument, "oversample must be >= 1");
}

inline SampleBuffer scale(const SampleBuffer& input, double gain) {
    SampleBuffer out = input;
    for (double& s : out.samples) s *= gain;
    return out;
}

namespace channel_detail {

// Anti-image / anti-alias low-pass at the original Nyquist, designed at the
// oversampled rate: flat to 0.465 fs, 80 dB down from 0.535 fs.
inline std::vector<double> oversampling_taps(double sample_rate, int factor) {
    const double rate = sample_rate * factor;
    return dsp::lowpass_taps(0.5 * sample_rate, 0.07 * sample_rate, 80.0, rate);
}

} // namespace channel_detail

/// s_out = A*s + B*s^2, with the square taken at `oversample` times the input
/// rate so that sum products above the input Nyquist are removed rather than
/// folded back. Output length equals input length.
inline SampleBuffer mic_nonlinearity(const SampleBuffer& input, double gain_a, double gain_b, int oversample = 4) {
    if (input.empty()) throw Error(ErrorKind::invalid_argument, "mic_nonlinearity needs a non-empty buffer");
    if (oversample < 1) throw Error(ErrorKind::invalid_argument, "oversample must be >= 1");
    if (gain_b == 0.0) return scale(input, gain_a);

    SampleBuffer out;
    out.sample_rate = input.sample_rate;
    out.samples.resize(input.size());
    if (oversample == 1) {
        for (std::size_t i = 0; i < input.size(); ++i) {
            const double s = input.samples[i];
            out.samples[i] = gain_a * s + gain_b * s * s;
        }
        return out;
    }

    const auto r = static_cast<std::size_t>(oversample);
    const dsp::FftFilter lowpass(channel_detail::oversampling_taps(input.sample_rate, oversample));
    const std::size_t half = (lowpass.taps().size() - 1) / 2;
    // Input samples of context needed on each side of a chunk: one filter
    // half-length before and one after the square.
    const std::size_t margin = 2 * ((half + r - 1) / r) + 2;
    const std::size_t chunk = 1u << 14;
    const auto gain = static_cast<double>(oversample);

    std::vector<double> up;
    for (std::size_t start = 0; start < input.size(); start += chunk) {
        const std::size_t len = std::min(chunk, input.size() - start);
        const std::size_t lead = std::min(margin, start);
        const std::size_t from = start - lead;
        const std::size_t to = std::min(input.size(), start + len + margin);
        up.assign((to - from) * r, 0.0);
        for (std::size_t i = from; i < to; ++i) up[(i - from) * r] = gain * input.samples[i];
        auto smooth = lowpass.apply(up);
        for (double& s : smooth) s = gain_a * s + gain_b * s * s;
        const auto filtered = lowpass.apply(smooth);
        for (std::size_t i = 0; i < len; ++i) out.samples[start + i] = filtered[(lead + i) * r];
    }
    return out;
}

/// Linear-phase band-pass, -6 dB at the band edges with a 300 Hz transition.
inline SampleBuffer voiceband_filter(const SampleBuffer& input, double low_hz, double high_hz) {
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < input.sample_rate / 2.0)) {
        throw Error(ErrorKind::invalid_argument, "need 0 < low < high < Nyquist");
    }
    const double transition = std::min(300.0, low_hz);
    const dsp::FftFilter filter(dsp::bandpass_taps(low_hz, high_hz, transition, 60.0, input.sample_rate));
    return SampleBuffer{input.sample_rate, filter.apply(input.samples)};
}

/// Down to 8 kHz and back up with linear-phase anti-alias filtering. The
/// input rate must be an integer multiple of 8 kHz.
inline SampleBuffer telephony_resample(const SampleBuffer& input) {
    constexpr double kTelephonyRate = 8000.0;
    const double ratio = input.sample_rate / kTelephonyRate;
    const auto factor = static_cast<std::size_t>(std::lround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9) {
        throw Error(ErrorKind::invalid_argument, "telephony resampling needs a multiple of 8000 Hz");
    }
    if (factor == 1 || input.empty()) return input;
    const dsp::FftFilter lowpass(dsp::lowpass_taps(3800.0, 400.0, 60.0, input.sample_rate));
    const auto band_limited = lowpass.apply(input.samples);
    std::vector<double> stuffed(input.size(), 0.0);
    for (std::size_t i = 0; i < input.size(); i += factor) {
        stuffed[i] = static_cast<double>(factor) * band_limited[i];
    }
    return SampleBuffer{input.sample_rate, lowpass.apply(stuffed)};
}

/// Indices [first, last) spanning every sample above 1e-3 of the peak.
inline std::pair<std::size_t, std::size_t> active_span(std::span<const double> x) {
    const double threshold = 1e-3 * dsp::peak(x);
    if (threshold == 0.0) return {0, 0};
    std::size_t first = 0;
    while (first < x.size() && std::abs(x[first]) <= threshold) ++first;
    std::size_t last = x.size();
    while (last > first && std::abs(x[last - 1]) <= threshold) --last;
    return {first, last};
}

inline SampleBuffer load_noise_profile(const std::filesystem::path& path) {
    auto profile = read_wav(path);
    if (profile.empty()) throw Error(ErrorKind::empty_noise_profile, path.string());
    return profile;
}

namespace channel_detail {

inline std::vector<double> resample_linear(const SampleBuffer& in, double rate) {
    if (in.sample_rate == rate) return in.samples;
    const double step = in.sample_rate / rate;
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(in.size() - 1) / step)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) * step;
        const auto k = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(k);
        const double next = k + 1 < in.size() ? in.samples[k + 1] : in.samples[k];
        out[i] = in.samples[k] + frac * (next - in.samples[k]);
    }
    return out;
}

inline std::vector<double> noise_samples(const NoiseSpec& spec, std::size_t n, double rate, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> noise(n);
    if (std::holds_alternative<WhiteNoise>(spec)) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (double& v : noise) v = gauss(rng);
    } else if (const auto* p = std::get_if<ProfileNoise>(&spec)) {
        if (p->profile.empty()) throw Error(ErrorKind::empty_noise_profile, p->source);
        const auto looped = resample_linear(p->profile, rate);
        std::size_t at = static_cast<std::size_t>(rng() % looped.size());
        for (double& v : noise) {
            v = looped[at];
            at = (at + 1) % looped.size();
        }
    }
    return noise;
}

} // namespace channel_detail

/// Mixes noise so that signal RMS over the active span is `snr_db` above the
/// noise RMS over the same span. Deterministic for a fixed seed.
inline SampleBuffer add_noise(const SampleBuffer& input, const NoiseSpec& spec, std::uint64_t seed) {
    if (std::holds_alternative<std::monostate>(spec)) return input;
    const double snr_db = std::visit(
        [](const auto& s) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(s)>, std::monostate>) {
                return 0.0;
            } else {
                return s.snr_db;
            }
        },
        spec);
    if (std::isinf(snr_db) && snr_db > 0) return input;
    if (!std::isfinite(snr_db)) throw Error(ErrorKind::invalid_argument, "snr_db must be finite");

    SampleBuffer out = input;
    if (input.empty()) return out;
    const auto noise = channel_detail::noise_samples(spec, input.size(), input.sample_rate, seed);
    auto [first, last] = active_span(input.samples);
    if (first == last) return out;
    const std::span<const double> signal_span(input.samples.data() + first, last - first);
    const std::span<const double> noise_span(noise.data() + first, last - first);
    const double noise_rms = dsp::rms(noise_span);
    if (noise_rms == 0.0) return out;
    const double wanted = dsp::rms(signal_span) / std::pow(10.0, snr_db / 20.0);
    const double k = wanted / noise_rms;
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += k * noise[i];
    return out;
}

/// Zeroes each `frame_ms` frame independently with the given probability.
inline SampleBuffer drop_packets(const SampleBuffer& input, double frame_ms, double probability, std::uint64_t seed) {
    if (!(probability >= 0.0 && probability <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "probability must be in [0, 1]");
    }
    const std::size_t frame = std::max<std::size_t>(1, samples_for_ms(frame_ms, input.sample_rate));
    SampleBuffer out = input;
    std::mt19937_64 rng(seed);
    for (std::size_t start = 0; start < out.size(); start += frame) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u < probability) {
            const std::size_t end = std::min(out.size(), start + frame);
            std::fill(out.samples.begin() + static_cast<std::ptrdiff_t>(start),
                      out.samples.begin() + static_cast<std::ptrdiff_t>(end), 0.0);
        }
    }
    return out;
}

/// Feed-forward AGC. The power estimate and the applied gain both follow
/// first-order smoothing with the given time constant; gain stays in [0.1, 10].
inline SampleBuffer apply_agc(const SampleBuffer& input, double target_rms, double time_constant_ms) {
    if (!(target_rms > 0.0)) throw Error(ErrorKind::invalid_argument, "target_rms must be > 0");
    if (!(time_constant_ms > 0.0)) throw Error(ErrorKind::invalid_argument, "time_constant_ms must be > 0");
    constexpr double kMinGain = 0.1;
    constexpr double kMaxGain = 10.0;
    const double alpha = std::exp(-1000.0 / (time_constant_ms * input.sample_rate));
    double power = target_rms * target_rms;
    double gain = 1.0;
    SampleBuffer out = input;
    for (double& s : out.samples) {
        power = alpha * power + (1.0 - alpha) * s * s;
        const double wanted = power > 0.0 ? std::clamp(target_rms / std::sqrt(power), kMinGain, kMaxGain) : kMaxGain;
        gain = alpha * gain + (1.0 - alpha) * wanted;
        s *= gain;
    }
    return out;
}

inline SampleBuffer simulate(const SampleBuffer& input, const ChannelConfig& cfg) {
    validate(cfg, input.sample_rate);
    if (input.empty()) return input;
    SampleBuffer x = scale(input, std::pow(10.0, -cfg.attenuation_db / 20.0));
    x = mic_nonlinearity(x, cfg.gain_a, cfg.gain_b, cfg.oversample);
    if (cfg.band_limit) x = voiceband_filter(x, cfg.band_low_hz, cfg.band_high_hz);
    if (cfg.telephony_resample) x = telephony_resample(x);
    x = add_noise(x, cfg.noise, mix_seed(cfg.seed, 1));
    if (cfg.loss) x = drop_packets(x, cfg.loss->frame_ms, cfg.loss->probability, mix_seed(cfg.seed, 2));
    if (cfg.agc) x = apply_agc(x, cfg.agc->target_rms, cfg.agc->time_constant_ms);
    return x;
}

} // namespace vbmodem
