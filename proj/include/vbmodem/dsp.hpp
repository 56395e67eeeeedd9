#pragma once

// FIR design and FFT-based linear-phase filtering used by the channel model.

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <type_traits>
#include <vector>

#include "vbmodem/types.hpp"

namespace vbmodem::dsp {

inline double rms(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc / static_cast<double>(x.size()));
}

inline double peak(std::span<const double> x) {
    double p = 0.0;
    for (double v : x) p = std::max(p, std::abs(v));
    return p;
}

inline double db_from_power_ratio(double ratio) { return 10.0 * std::log10(ratio); }

// Kaiser's empirical formulas.
inline double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0) return 0.5842 * std::pow(atten_db - 21.0, 0.4) + 0.07886 * (atten_db - 21.0);
    return 0.0;
}

inline std::size_t kaiser_length(double atten_db, double transition_hz, double sample_rate) {
    const double dw = 2.0 * std::numbers::pi * transition_hz / sample_rate;
    auto n = static_cast<std::size_t>(std::ceil((atten_db - 8.0) / (2.285 * dw))) + 1;
    if (n % 2 == 0) ++n;
    return std::max<std::size_t>(n, 3);
}

inline std::vector<double> kaiser_window(std::size_t n, double beta) {
    std::vector<double> w(n);
    const double denom = std::cyl_bessel_i(0.0, beta);
    const double m = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = 2.0 * static_cast<double>(i) / m - 1.0;
        w[i] = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / denom;
    }
    return w;
}

/// Windowed-sinc low-pass; `cutoff_hz` is the -6 dB point, `transition_hz`
/// the full transition width.
inline std::vector<double> lowpass_taps(double cutoff_hz, double transition_hz, double atten_db,
                                        double sample_rate) {
    const std::size_t n = kaiser_length(atten_db, transition_hz, sample_rate);
    const auto w = kaiser_window(n, kaiser_beta(atten_db));
    const double fc = cutoff_hz / sample_rate;
    const double mid = static_cast<double>(n - 1) / 2.0;
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) - mid;
        const double sinc = t == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * t) / (std::numbers::pi * t);
        h[i] = sinc * w[i];
    }
    return h;
}

inline std::vector<double> bandpass_taps(double low_hz, double high_hz, double transition_hz, double atten_db,
                                         double sample_rate) {
    auto hi = lowpass_taps(high_hz, transition_hz, atten_db, sample_rate);
    const auto lo = lowpass_taps(low_hz, transition_hz, atten_db, sample_rate);
    for (std::size_t i = 0; i < hi.size(); ++i) hi[i] -= lo[i];
    return hi;
}

namespace detail {

// The FFTW planner is not re-entrant; execution on distinct arrays is.
inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using FftwArray = std::unique_ptr<T[], FftwFree>;

template <typename T>
FftwArray<T> fftw_array(std::size_t n) {
    auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * n));
    if (p == nullptr) throw std::bad_alloc();
    return FftwArray<T>(p);
}

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(p);
    }
};

using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

} // namespace detail

/// Linear-phase FIR applied by overlap-add FFT convolution. The output is
/// aligned with the input (group delay removed) and has the same length.
class FftFilter {
public:
    explicit FftFilter(std::vector<double> taps) : taps_(std::move(taps)) {
        if (taps_.empty() || taps_.size() % 2 == 0) {
            throw Error(ErrorKind::invalid_argument, "FftFilter needs an odd, non-empty tap count");
        }
        fft_size_ = std::bit_ceil(std::max<std::size_t>(4 * taps_.size(), 1u << 14));
        block_ = fft_size_ - taps_.size() + 1;
        bins_ = fft_size_ / 2 + 1;
        time_ = detail::fftw_array<double>(fft_size_);
        freq_ = detail::fftw_array<fftw_complex>(bins_);
        response_.resize(bins_);
        {
            std::lock_guard lock(detail::planner_mutex());
            forward_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(fft_size_), time_.get(), freq_.get(), FFTW_ESTIMATE));
            inverse_.reset(fftw_plan_dft_c2r_1d(static_cast<int>(fft_size_), freq_.get(), time_.get(), FFTW_ESTIMATE));
        }
        std::fill(time_.get(), time_.get() + fft_size_, 0.0);
        std::copy(taps_.begin(), taps_.end(), time_.get());
        fftw_execute_dft_r2c(forward_.get(), time_.get(), freq_.get());
        const double scale = 1.0 / static_cast<double>(fft_size_);
        for (std::size_t k = 0; k < bins_; ++k) {
            response_[k] = std::complex<double>(freq_[k][0], freq_[k][1]) * scale;
        }
    }

    FftFilter(const FftFilter&) = delete;
    FftFilter& operator=(const FftFilter&) = delete;

    const std::vector<double>& taps() const noexcept { return taps_; }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> y(x.size(), 0.0);
        if (x.empty()) return y;
        const std::size_t delay = (taps_.size() - 1) / 2;
        auto time = detail::fftw_array<double>(fft_size_);
        auto freq = detail::fftw_array<fftw_complex>(bins_);

        for (std::size_t start = 0; start < x.size(); start += block_) {
            const std::size_t len = std::min(block_, x.size() - start);
            std::fill(time.get(), time.get() + fft_size_, 0.0);
            std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(start), len, time.get());
            fftw_execute_dft_r2c(forward_.get(), time.get(), freq.get());
            for (std::size_t k = 0; k < bins_; ++k) {
                const std::complex<double> v = std::complex<double>(freq[k][0], freq[k][1]) * response_[k];
                freq[k][0] = v.real();
                freq[k][1] = v.imag();
            }
            fftw_execute_dft_c2r(inverse_.get(), freq.get(), time.get());
            // Full-convolution index start + i maps to output index start + i - delay.
            const std::size_t produced = len + taps_.size() - 1;
            for (std::size_t i = 0; i < produced; ++i) {
                const std::size_t full = start + i;
                if (full < delay) continue;
                const std::size_t out = full - delay;
                if (out >= y.size()) break;
                y[out] += time[i];
            }
        }
        return y;
    }

private:
    std::vector<double> taps_;
    std::size_t fft_size_ = 0;
    std::size_t block_ = 0;
    std::size_t bins_ = 0;
    detail::FftwArray<double> time_;
    detail::FftwArray<fftw_complex> freq_;
    std::vector<std::complex<double>> response_;
    detail::Plan forward_;
    detail::Plan inverse_;
};

/// Frequency response magnitude of an FIR at one frequency.
inline double fir_gain(std::span<const double> taps, double freq_hz, double sample_rate) {
    std::complex<double> acc{0.0, 0.0};
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        acc += taps[i] * std::polar(1.0, -w * static_cast<double>(i));
    }
    return std::abs(acc);
}

} // namespace vbmodem::dsp
