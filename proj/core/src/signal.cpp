#include "ecgsim/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "ecgsim/filter.hpp"
#include "ecgsim/rng.hpp"

namespace ecgsim {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// Sub-seed streams, one per interference component.
enum SeedStream : std::uint64_t {
    stream_powerline = 1,
    stream_wander = 2,
    stream_motion = 3,
    stream_lead_off = 4,
    stream_white = 5,
    stream_rr = 6,
};

double gaussian_bump(double t, double center, double sigma) {
    const double z = (t - center) / sigma;
    return std::exp(-0.5 * z * z);
}

// Peak-to-peak of one isolated beat, sampled densely. Used to rescale the
// template so the output hits the requested peak-to-peak no matter what
// bump amplitudes the caller provided.
double template_peak_to_peak(const std::vector<GaussianBump>& morphology, double rr_s) {
    const double fs_dense = 8000.0;
    const auto n = static_cast<std::size_t>(std::ceil(rr_s * fs_dense));
    double lo = 0.0;
    double hi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs_dense;
        double v = 0.0;
        for (const auto& bump : morphology) {
            v += bump.amplitude_mv * gaussian_bump(t, bump.center_phase * rr_s, bump.width_s);
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return hi - lo;
}

std::size_t clamp_index(double t, double fs, std::size_t n) {
    if (t <= 0.0) return 0;
    const double idx = std::ceil(t * fs - 1e-9);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, idx)));
}

} // namespace

std::vector<GaussianBump> default_morphology() {
    // P, Q, R, S, T as Gaussian bumps; amplitudes relative to R = +1.
    return {
        {0.200, 0.030, 0.12},
        {0.365, 0.012, -0.14},
        {0.400, 0.014, 1.00},
        {0.435, 0.012, -0.20},
        {0.630, 0.055, 0.32},
    };
}

void validate(const EcgParams& params) {
    if (!(params.heart_rate_bpm > 0.0)) {
        throw std::invalid_argument("EcgParams: heart_rate_bpm must be positive");
    }
    if (params.morphology.empty()) {
        throw std::invalid_argument("EcgParams: morphology must not be empty");
    }
    for (const auto& bump : params.morphology) {
        if (!(bump.width_s > 0.0)) {
            throw std::invalid_argument("EcgParams: bump widths must be positive");
        }
        if (bump.center_phase < 0.0 || bump.center_phase >= 1.0) {
            throw std::invalid_argument("EcgParams: bump center phases must lie in [0, 1)");
        }
    }
    if (!(params.peak_to_peak_mv > 0.0) || params.peak_to_peak_mv > 3.0) {
        throw std::invalid_argument("EcgParams: peak_to_peak_mv must lie in (0, 3] mV");
    }
    if (params.rr_jitter < 0.0 || params.rr_jitter > 0.2) {
        throw std::invalid_argument("EcgParams: rr_jitter must lie in [0, 0.2]");
    }
}

EcgSignal synthesize_ecg_with_truth(const EcgParams& params, double duration_s,
                                    double fs, std::uint64_t seed) {
    validate(params);
    const std::size_t n = sample_count(duration_s, fs);

    EcgSignal out;
    out.trace.fs = fs;
    out.trace.unit = Unit::millivolt;
    out.trace.samples.assign(n, 0.0);

    const double rr_nominal = 60.0 / params.heart_rate_bpm;
    const double raw_p2p = template_peak_to_peak(params.morphology, rr_nominal);
    if (!(raw_p2p > 0.0)) {
        throw std::invalid_argument("EcgParams: morphology is flat");
    }
    const double scale = params.peak_to_peak_mv / raw_p2p;

    // The bump with the largest amplitude is the R wave; its position within
    // each beat is the ground truth we report.
    const auto r_bump = std::max_element(
        params.morphology.begin(), params.morphology.end(),
        [](const GaussianBump& a, const GaussianBump& b) {
            return a.amplitude_mv < b.amplitude_mv;
        });
    const double r_phase = r_bump->center_phase;

    std::mt19937_64 rng(derive_seed(seed, stream_rr));
    std::normal_distribution<double> unit_normal(0.0, 1.0);

    double beat_start = 0.0;
    while (beat_start < duration_s) {
        double rr = rr_nominal;
        if (params.rr_jitter > 0.0) {
            const double factor = 1.0 + params.rr_jitter * unit_normal(rng);
            rr = rr_nominal * std::clamp(factor, 0.3, 2.0);
        }

        const double r_time = beat_start + r_phase * rr;
        if (r_time < duration_s) {
            out.r_peak_times_s.push_back(r_time);
        }

        for (const auto& bump : params.morphology) {
            const double center = beat_start + bump.center_phase * rr;
            const double reach = 6.0 * bump.width_s;
            const std::size_t i0 = clamp_index(center - reach, fs, n);
            const std::size_t i1 = clamp_index(center + reach, fs, n);
            const double amp = scale * bump.amplitude_mv;
            for (std::size_t i = i0; i < i1; ++i) {
                const double t = static_cast<double>(i) / fs;
                out.trace.samples[i] += amp * gaussian_bump(t, center, bump.width_s);
            }
        }
        beat_start += rr;
    }
    return out;
}

SampleTrace synthesize_ecg(const EcgParams& params, double duration_s, double fs,
                           std::uint64_t seed) {
    return synthesize_ecg_with_truth(params, duration_s, fs, seed).trace;
}

void validate(const InterferenceSpec& spec) {
    if (spec.powerline) {
        if (!(spec.powerline->frequency_hz > 0.0) || !(spec.powerline->amplitude_v >= 0.0)) {
            throw std::invalid_argument("InterferenceSpec: bad powerline entry");
        }
    }
    if (spec.baseline_wander) {
        if (!(spec.baseline_wander->frequency_hz > 0.0) ||
            !(spec.baseline_wander->amplitude_mv >= 0.0)) {
            throw std::invalid_argument("InterferenceSpec: bad baseline wander entry");
        }
    }
    for (const auto& burst : spec.motion_bursts) {
        if (!(burst.duration_s > 0.0) || !(burst.amplitude_mv >= 0.0) ||
            !(burst.band_lo_hz > 0.0) || !(burst.band_hi_hz > burst.band_lo_hz)) {
            throw std::invalid_argument("InterferenceSpec: bad motion burst entry");
        }
    }
    auto events = spec.lead_off_events;
    std::sort(events.begin(), events.end(),
              [](const LeadOffEvent& a, const LeadOffEvent& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (!(events[i].duration_s > 0.0) || events[i].start_s < 0.0) {
            throw std::invalid_argument("InterferenceSpec: bad lead-off event entry");
        }
        if (i > 0 && events[i].start_s < events[i - 1].start_s + events[i - 1].duration_s) {
            throw std::invalid_argument("InterferenceSpec: lead-off events overlap");
        }
    }
    if (spec.white_noise_rms_uv < 0.0) {
        throw std::invalid_argument("InterferenceSpec: white_noise_rms_uv must be >= 0");
    }
}

const char* interference_kind_name(InterferenceKind kind) {
    switch (kind) {
    case InterferenceKind::powerline: return "powerline";
    case InterferenceKind::baseline_wander: return "baseline_wander";
    case InterferenceKind::motion: return "motion";
    case InterferenceKind::lead_off: return "lead_off";
    case InterferenceKind::white_noise: return "white_noise";
    }
    return "unknown";
}

std::pair<SampleTrace, InterferenceTruth>
inject_interference(const SampleTrace& clean, const InterferenceSpec& spec,
                    std::uint64_t seed) {
    validate(clean);
    require_unit(clean, Unit::millivolt, "inject_interference");
    validate(spec);

    const std::size_t n = clean.size();
    const double fs = clean.fs;

    InterferenceTruth truth;
    auto add_component = [&](InterferenceKind kind, SampleTrace&& trace) {
        truth.components.push_back({kind, std::move(trace)});
    };

    if (spec.powerline && spec.powerline->amplitude_v > 0.0) {
        SampleTrace c = make_trace(fs, Unit::millivolt, n);
        const double amp_mv = spec.powerline->amplitude_v * 1000.0;
        const double w = two_pi * spec.powerline->frequency_hz;
        for (std::size_t i = 0; i < n; ++i) {
            c.samples[i] = amp_mv * std::sin(w * static_cast<double>(i) / fs);
        }
        add_component(InterferenceKind::powerline, std::move(c));
    }

    if (spec.baseline_wander && spec.baseline_wander->amplitude_mv > 0.0) {
        SampleTrace c = make_trace(fs, Unit::millivolt, n);
        const double w = two_pi * spec.baseline_wander->frequency_hz;
        for (std::size_t i = 0; i < n; ++i) {
            c.samples[i] =
                spec.baseline_wander->amplitude_mv * std::sin(w * static_cast<double>(i) / fs);
        }
        add_component(InterferenceKind::baseline_wander, std::move(c));
    }

    if (!spec.motion_bursts.empty()) {
        SampleTrace c = make_trace(fs, Unit::millivolt, n);
        bool any = false;
        const std::uint64_t motion_seed = derive_seed(seed, stream_motion);
        for (std::size_t b = 0; b < spec.motion_bursts.size(); ++b) {
            const auto& burst = spec.motion_bursts[b];
            if (burst.band_hi_hz >= fs / 2.0) {
                throw std::invalid_argument("inject_interference: motion band exceeds Nyquist");
            }
            if (burst.amplitude_mv <= 0.0) continue;
            const std::size_t i0 = clamp_index(burst.start_s, fs, n);
            const std::size_t i1 = clamp_index(burst.start_s + burst.duration_s, fs, n);
            if (i0 >= i1) continue;

            std::mt19937_64 rng(derive_seed(motion_seed, b));
            std::normal_distribution<double> unit_normal(0.0, 1.0);
            BiquadFilter bp(design_biquad_bandpass(burst.band_lo_hz, burst.band_hi_hz, fs));

            std::vector<double> shaped(i1 - i0);
            double peak = 0.0;
            for (auto& v : shaped) {
                v = bp.step(unit_normal(rng));
                peak = std::max(peak, std::abs(v));
            }
            if (peak <= 0.0) continue;
            const double gain = burst.amplitude_mv / peak;
            for (std::size_t i = i0; i < i1; ++i) {
                c.samples[i] += gain * shaped[i - i0];
            }
            any = true;
        }
        if (any) add_component(InterferenceKind::motion, std::move(c));
    }

    if (!spec.lead_off_events.empty() && spec.lead_off_offset_mv != 0.0) {
        SampleTrace c = make_trace(fs, Unit::millivolt, n);
        bool any = false;
        for (const auto& event : spec.lead_off_events) {
            const std::size_t i0 = clamp_index(event.start_s, fs, n);
            const std::size_t i1 = clamp_index(event.start_s + event.duration_s, fs, n);
            for (std::size_t i = i0; i < i1; ++i) {
                c.samples[i] = spec.lead_off_offset_mv;
            }
            any = any || i0 < i1;
        }
        if (any) add_component(InterferenceKind::lead_off, std::move(c));
    }

    if (spec.white_noise_rms_uv > 0.0) {
        SampleTrace c = make_trace(fs, Unit::millivolt, n);
        std::mt19937_64 rng(derive_seed(seed, stream_white));
        std::normal_distribution<double> noise(0.0, spec.white_noise_rms_uv / 1000.0);
        for (auto& v : c.samples) v = noise(rng);
        add_component(InterferenceKind::white_noise, std::move(c));
    }

    truth.total = make_trace(fs, Unit::millivolt, n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (const auto& component : truth.components) {
            sum += component.trace.samples[i];
        }
        truth.total.samples[i] = sum;
    }

    SampleTrace corrupted = clean;
    for (std::size_t i = 0; i < n; ++i) {
        corrupted.samples[i] = clean.samples[i] + truth.total.samples[i];
    }
    return {std::move(corrupted), std::move(truth)};
}

SampleTrace common_mode_signal(const InterferenceSpec& spec, double duration_s,
                               double fs, std::uint64_t seed) {
    validate(spec);
    const std::size_t n = sample_count(duration_s, fs);
    SampleTrace cm = make_trace(fs, Unit::volt, n);

    if (spec.powerline && spec.powerline->amplitude_v > 0.0) {
        const double w = two_pi * spec.powerline->frequency_hz;
        for (std::size_t i = 0; i < n; ++i) {
            cm.samples[i] = spec.powerline->amplitude_v * std::sin(w * static_cast<double>(i) / fs);
        }
    }
    if (spec.white_noise_rms_uv > 0.0) {
        std::mt19937_64 rng(derive_seed(seed, stream_white));
        std::normal_distribution<double> noise(0.0, spec.white_noise_rms_uv * 1e-6);
        for (auto& v : cm.samples) v += noise(rng);
    }
    return cm;
}

} // namespace ecgsim
