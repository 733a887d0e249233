#include "ecgsim/filter.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ecgsim/errors.hpp"

namespace ecgsim {

namespace {

void check_band(double f_hz, double fs, const char* what) {
    if (!(fs > 0.0)) {
        throw std::invalid_argument(std::string(what) + ": fs must be positive");
    }
    if (!(f_hz > 0.0) || !(f_hz < fs / 2.0)) {
        throw std::invalid_argument(std::string(what) + ": frequency " +
                                    std::to_string(f_hz) +
                                    " Hz must lie in (0, fs/2) at fs=" +
                                    std::to_string(fs));
    }
}

} // namespace

FilterCoefficients design_biquad_notch(double f0_hz, double q, double fs) {
    check_band(f0_hz, fs, "design_biquad_notch");
    if (!(q > 0.0)) {
        throw std::invalid_argument("design_biquad_notch: q must be positive");
    }

    // Bilinear transform of (s^2 + w0^2) / (s^2 + w0/q s + w0^2). Working in
    // the warped frequency variable directly places the unit-circle zero pair
    // at exactly f0, so the discrete notch is centered with no cutoff shift.
    const double w0 = 2.0 * std::numbers::pi * f0_hz / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;

    FilterCoefficients c;
    c.b0 = 1.0 / a0;
    c.b1 = -2.0 * std::cos(w0) / a0;
    c.b2 = 1.0 / a0;
    c.a1 = -2.0 * std::cos(w0) / a0;
    c.a2 = (1.0 - alpha) / a0;
    return c;
}

FilterCoefficients design_first_order(FilterKind kind, double fc_hz, double fs) {
    check_band(fc_hz, fs, "design_first_order");

    const double k = std::tan(std::numbers::pi * fc_hz / fs); // prewarped cutoff
    const double a0 = k + 1.0;

    FilterCoefficients c;
    c.a1 = (k - 1.0) / a0;
    if (kind == FilterKind::lowpass) {
        c.b0 = k / a0;
        c.b1 = k / a0;
    } else {
        c.b0 = 1.0 / a0;
        c.b1 = -1.0 / a0;
    }
    return c;
}

FilterCoefficients design_biquad_bandpass(double f_lo_hz, double f_hi_hz, double fs) {
    if (!(f_lo_hz > 0.0) || !(f_hi_hz > f_lo_hz)) {
        throw std::invalid_argument("design_biquad_bandpass: need 0 < f_lo < f_hi");
    }
    check_band(f_hi_hz, fs, "design_biquad_bandpass");

    const double f0 = std::sqrt(f_lo_hz * f_hi_hz);
    const double q = f0 / (f_hi_hz - f_lo_hz);
    const double w0 = 2.0 * std::numbers::pi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;

    FilterCoefficients c;
    c.b0 = alpha / a0;
    c.b1 = 0.0;
    c.b2 = -alpha / a0;
    c.a1 = -2.0 * std::cos(w0) / a0;
    c.a2 = (1.0 - alpha) / a0;
    return c;
}

double magnitude_response(const FilterCoefficients& c, double f_hz, double fs) {
    if (!(fs > 0.0)) {
        throw std::invalid_argument("magnitude_response: fs must be positive");
    }
    const double w = 2.0 * std::numbers::pi * f_hz / fs;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    const std::complex<double> num = c.b0 + c.b1 * z1 + c.b2 * z2;
    const std::complex<double> den = 1.0 + c.a1 * z1 + c.a2 * z2;
    return std::abs(num / den);
}

double magnitude_response_db(const FilterCoefficients& c, double f_hz, double fs) {
    return 20.0 * std::log10(magnitude_response(c, f_hz, fs));
}

void BiquadFilter::reset_to_steady_state(double x0) {
    const double den = 1.0 + c_.a1 + c_.a2;
    const double y_inf = den != 0.0 ? x0 * (c_.b0 + c_.b1 + c_.b2) / den : 0.0;
    s1_ = y_inf - c_.b0 * x0;
    s2_ = c_.b2 * x0 - c_.a2 * y_inf;
}

void write_response_csv(const FilterCoefficients& c, double fs, double f_lo_hz,
                        double f_hi_hz, std::size_t points,
                        const std::filesystem::path& path) {
    if (!(f_lo_hz > 0.0) || !(f_hi_hz > f_lo_hz) || points < 2) {
        throw std::invalid_argument("write_response_csv: bad frequency range");
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "frequency_hz,gain_db\n";
    out.precision(10);
    const double ratio = std::log(f_hi_hz / f_lo_hz);
    for (std::size_t i = 0; i < points; ++i) {
        const double frac = static_cast<double>(i) / static_cast<double>(points - 1);
        const double f = f_lo_hz * std::exp(ratio * frac);
        out << f << ',' << magnitude_response_db(c, f, fs) << '\n';
    }
}

} // namespace ecgsim
