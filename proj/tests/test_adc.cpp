#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ecgsim/adc.hpp"
#include "test_util.hpp"

using namespace ecgsim;

TEST_CASE("code range and step size follow from bits and rails") {
    AdcConfig cfg;
    CHECK(max_code(cfg) == 4095);
    CHECK(lsb(cfg) == doctest::Approx(3.0 / 4095.0));

    cfg.bits = 8;
    cfg.v_low = -1.0;
    cfg.v_high = 1.0;
    CHECK(max_code(cfg) == 255);
    CHECK(lsb(cfg) == doctest::Approx(2.0 / 255.0));
}

TEST_CASE("every code is a fixed point of quantize(dequantize(code))") {
    AdcConfig cfg;
    auto codes = make_trace(cfg.fs, Unit::adc_code, 4096);
    for (int c = 0; c <= max_code(cfg); ++c) {
        codes.samples[static_cast<std::size_t>(c)] = static_cast<double>(c);
    }
    const auto volts = dequantize(codes, cfg);
    CHECK(volts.unit == Unit::volt);
    const auto back = quantize(volts, cfg);
    CHECK(back.unit == Unit::adc_code);
    REQUIRE(back.size() == codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
        CHECK(back.samples[i] == codes.samples[i]);
    }
}

TEST_CASE("round trip error never exceeds half an LSB inside the rails") {
    AdcConfig cfg;
    const double step = lsb(cfg);
    const std::size_t n = 100000;
    auto volts = make_trace(cfg.fs, Unit::volt, n);
    for (std::size_t i = 0; i < n; ++i) {
        volts.samples[i] = 3.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    const auto codes = quantize(volts, cfg);
    const auto back = dequantize(codes, cfg);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(back.samples[i] - volts.samples[i]) <= step / 2.0 + 1e-12);
    }
}

TEST_CASE("inputs beyond the rails clamp to the end codes") {
    AdcConfig cfg;
    auto volts = make_trace(cfg.fs, Unit::volt, 4);
    volts.samples = {-0.5, 0.0, 3.0, 42.0};
    const auto codes = quantize(volts, cfg);
    CHECK(codes.samples[0] == 0.0);
    CHECK(codes.samples[1] == 0.0);
    CHECK(codes.samples[2] == 4095.0);
    CHECK(codes.samples[3] == 4095.0);
}

TEST_CASE("rounding is half away from zero on the code grid") {
    // a 1-bit converter on 0..1 V makes the scaled value exact in floating
    // point, so the tie at 0.5 discriminates away-from-zero (-> 1) from
    // round-half-even (-> 0)
    AdcConfig cfg;
    cfg.bits = 1;
    cfg.v_low = 0.0;
    cfg.v_high = 1.0;
    auto volts = make_trace(cfg.fs, Unit::volt, 3);
    volts.samples = {0.5, 0.499, 0.501};
    const auto codes = quantize(volts, cfg);
    CHECK(codes.samples[0] == 1.0);
    CHECK(codes.samples[1] == 0.0);
    CHECK(codes.samples[2] == 1.0);

    // the documented mid-rail example: 1.5 V on a 12-bit 0..3 V converter
    AdcConfig mid;
    auto rail = make_trace(mid.fs, Unit::volt, 1, 1.5);
    CHECK(quantize(rail, mid).samples[0] == 2048.0);
}

TEST_CASE("dequantize rejects values that are not valid codes") {
    AdcConfig cfg;
    auto codes = make_trace(cfg.fs, Unit::adc_code, 1);

    codes.samples[0] = 17.5;
    CHECK_THROWS_AS(dequantize(codes, cfg), std::invalid_argument);
    codes.samples[0] = -1.0;
    CHECK_THROWS_AS(dequantize(codes, cfg), std::invalid_argument);
    codes.samples[0] = 4096.0;
    CHECK_THROWS_AS(dequantize(codes, cfg), std::invalid_argument);
    codes.samples[0] = 4095.0;
    CHECK_NOTHROW(dequantize(codes, cfg));
}

TEST_CASE("converter validation rejects inconsistent settings") {
    AdcConfig cfg;
    cfg.bits = 0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.bits = 33;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.v_high = cfg.v_low;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    cfg = {};
    cfg.fs = -1.0;
    CHECK_THROWS_AS(validate(cfg), std::invalid_argument);

    // units are enforced on both directions
    const auto wrong = make_trace(1000.0, Unit::millivolt, 1);
    CHECK_THROWS_AS(quantize(wrong, AdcConfig{}), std::invalid_argument);
    CHECK_THROWS_AS(dequantize(wrong, AdcConfig{}), std::invalid_argument);
}
