#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace ecgsim {

// One second-order section, normalized so a0 == 1. First-order designs leave
// b2 and a2 at zero.
struct FilterCoefficients {
    double b0 = 1.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
};

enum class FilterKind { lowpass, highpass };

// Notch at f0 with quality factor q, discretized by the bilinear transform
// with the center frequency prewarped so the zero lands exactly on f0.
// Throws std::invalid_argument unless 0 < f0 < fs/2 and q > 0.
FilterCoefficients design_biquad_notch(double f0_hz, double q, double fs);

// First-order low/highpass, bilinear transform with prewarped cutoff.
// The -3.01 dB point of the discrete filter sits on fc by construction.
FilterCoefficients design_first_order(FilterKind kind, double fc_hz, double fs);

// Bandpass centered on the geometric mean of the band edges with
// q = f_center / (f_hi - f_lo). Used by the QRS front end.
FilterCoefficients design_biquad_bandpass(double f_lo_hz, double f_hi_hz, double fs);

// |H(e^{j 2 pi f / fs})| evaluated analytically.
double magnitude_response(const FilterCoefficients& c, double f_hz, double fs);
double magnitude_response_db(const FilterCoefficients& c, double f_hz, double fs);

// Streaming direct-form-II-transposed section. State is per instance and
// mutates as samples flow through; the coefficients never change.
class BiquadFilter {
public:
    BiquadFilter() = default;
    explicit BiquadFilter(const FilterCoefficients& c) : c_(c) {}

    double step(double x) {
        const double y = c_.b0 * x + s1_;
        s1_ = c_.b1 * x - c_.a1 * y + s2_;
        s2_ = c_.b2 * x - c_.a2 * y;
        return y;
    }

    void process(std::span<const double> in, std::span<double> out) {
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = step(in[i]);
    }

    void reset() { s1_ = s2_ = 0.0; }

    // Puts the section in the state it would reach after an infinitely long
    // run of constant input x0: the next step(x0) returns the DC response
    // with no transient. Used to re-center the signal chain instantly.
    void reset_to_steady_state(double x0);

    const FilterCoefficients& coefficients() const { return c_; }

private:
    FilterCoefficients c_{};
    double s1_ = 0.0;
    double s2_ = 0.0;
};

// CSV export, columns "frequency_hz,gain_db", log-spaced points.
void write_response_csv(const FilterCoefficients& c, double fs, double f_lo_hz,
                        double f_hi_hz, std::size_t points,
                        const std::filesystem::path& path);

} // namespace ecgsim
