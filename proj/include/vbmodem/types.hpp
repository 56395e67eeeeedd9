#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vbmodem {

enum class ErrorKind {
    invalid_argument,
    payload_too_long,
    nyquist_violation,
    preamble_not_found,
    header_invalid,
    frequency_not_in_plan,
    io_error,
    malformed_wav,
    empty_noise_profile,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::payload_too_long: return "payload_too_long";
    case ErrorKind::nyquist_violation: return "nyquist_violation";
    case ErrorKind::preamble_not_found: return "preamble_not_found";
    case ErrorKind::header_invalid: return "header_invalid";
    case ErrorKind::frequency_not_in_plan: return "frequency_not_in_plan";
    case ErrorKind::io_error: return "io_error";
    case ErrorKind::malformed_wav: return "malformed_wav";
    case ErrorKind::empty_noise_profile: return "empty_noise_profile";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// One bit per element, values 0 or 1, transmission order.
using BitVector = std::vector<std::uint8_t>;

using Bytes = std::vector<std::uint8_t>;

/// Mono audio. Samples are nominally in [-1, 1].
struct SampleBuffer {
    double sample_rate = 48000.0;
    std::vector<double> samples;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    double duration_s() const noexcept { return static_cast<double>(samples.size()) / sample_rate; }
};

inline std::size_t samples_for_ms(double ms, double sample_rate) {
    return static_cast<std::size_t>(ms * sample_rate / 1000.0 + 0.5);
}

} // namespace vbmodem
