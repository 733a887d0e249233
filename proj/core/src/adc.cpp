#include "ecgsim/adc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ecgsim {

void validate(const AdcConfig& cfg) {
    if (cfg.bits < 1 || cfg.bits > 24) {
        throw std::invalid_argument("AdcConfig: bits must lie in [1, 24]");
    }
    if (!(cfg.v_low < cfg.v_high)) {
        throw std::invalid_argument("AdcConfig: need v_low < v_high");
    }
    if (!(cfg.fs > 0.0)) {
        throw std::invalid_argument("AdcConfig: fs must be positive");
    }
}

int max_code(const AdcConfig& cfg) {
    return (1 << cfg.bits) - 1;
}

double lsb(const AdcConfig& cfg) {
    return (cfg.v_high - cfg.v_low) / static_cast<double>(max_code(cfg));
}

SampleTrace quantize(const SampleTrace& volts, const AdcConfig& cfg) {
    validate(volts);
    require_unit(volts, Unit::volt, "quantize");
    validate(cfg);

    const double full_scale = static_cast<double>(max_code(cfg));
    const double range = cfg.v_high - cfg.v_low;

    SampleTrace out = volts;
    out.unit = Unit::adc_code;
    for (auto& v : out.samples) {
        const double scaled = (v - cfg.v_low) / range * full_scale;
        // std::round ties away from zero, which is the wanted mid-rail
        // behavior (1.5 V on a 12-bit 0..3 V converter lands on 2048).
        const double code = std::round(scaled);
        v = std::clamp(code, 0.0, full_scale);
    }
    return out;
}

SampleTrace dequantize(const SampleTrace& codes, const AdcConfig& cfg) {
    validate(codes);
    require_unit(codes, Unit::adc_code, "dequantize");
    validate(cfg);

    const double full_scale = static_cast<double>(max_code(cfg));
    const double range = cfg.v_high - cfg.v_low;

    SampleTrace out = codes;
    out.unit = Unit::volt;
    for (auto& v : out.samples) {
        if (v < 0.0 || v > full_scale || v != std::floor(v)) {
            throw std::invalid_argument("dequantize: " + std::to_string(v) +
                                        " is not a code in [0, " +
                                        std::to_string(max_code(cfg)) + "]");
        }
        v = cfg.v_low + v / full_scale * range;
    }
    return out;
}

} // namespace ecgsim
