#pragma once

#include "ecgsim/trace.hpp"

namespace ecgsim {

struct AdcConfig {
    int bits = 12;
    double v_low = 0.0;
    double v_high = 3.0;
    double fs = 1000.0; // sampling rate the converter runs at
};

void validate(const AdcConfig& cfg);

int max_code(const AdcConfig& cfg);

// Width of one step: (v_high - v_low) / (2^bits - 1).
double lsb(const AdcConfig& cfg);

// Uniform quantizer: scale into [0, 2^bits - 1], round half away from zero,
// clamp at the rails. Input must be in volts at the converter's rate.
SampleTrace quantize(const SampleTrace& volts, const AdcConfig& cfg);

// Maps codes back onto the voltage grid. Throws std::invalid_argument when a
// value is not an integer code within range.
SampleTrace dequantize(const SampleTrace& codes, const AdcConfig& cfg);

} // namespace ecgsim
