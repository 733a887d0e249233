#include "ecgsim/screening.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "ecgsim/errors.hpp"
#include "ecgsim/filter.hpp"

namespace ecgsim {

namespace {

// Fixed-size running median over a sliding window: two multisets balanced so
// the lower half is one element larger; its maximum is the median.
class RunningMedian {
public:
    void insert(double x) {
        if (lo_.empty() || x <= *lo_.rbegin()) {
            lo_.insert(x);
        } else {
            hi_.insert(x);
        }
        rebalance();
    }

    void erase(double x) {
        auto it = lo_.find(x);
        if (it != lo_.end()) {
            lo_.erase(it);
        } else {
            hi_.erase(hi_.find(x));
        }
        rebalance();
    }

    double median() const { return *lo_.rbegin(); }

private:
    void rebalance() {
        while (lo_.size() > hi_.size() + 1) {
            auto it = std::prev(lo_.end());
            hi_.insert(*it);
            lo_.erase(it);
        }
        while (hi_.size() > lo_.size()) {
            auto it = hi_.begin();
            lo_.insert(*it);
            hi_.erase(it);
        }
    }

    std::multiset<double> lo_;
    std::multiset<double> hi_;
};

std::vector<double> median_baseline(const SampleTrace& trace, double window_s) {
    const auto n = static_cast<std::ptrdiff_t>(trace.size());
    auto w = static_cast<std::ptrdiff_t>(std::llround(window_s * trace.fs));
    if (w % 2 == 0) ++w;
    if (w < 3) {
        throw std::invalid_argument("remove_baseline: window shorter than 3 samples");
    }
    const std::ptrdiff_t half = w / 2;

    std::vector<double> baseline(static_cast<std::size_t>(n));
    if (n == 0) return baseline;

    auto value_at = [&](std::ptrdiff_t j) {
        return trace.samples[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(j, 0, n - 1))];
    };

    RunningMedian median;
    for (std::ptrdiff_t j = -half; j <= half; ++j) median.insert(value_at(j));
    baseline[0] = median.median();
    for (std::ptrdiff_t i = 1; i < n; ++i) {
        median.erase(value_at(i - half - 1));
        median.insert(value_at(i + half));
        baseline[static_cast<std::size_t>(i)] = median.median();
    }
    return baseline;
}

double median_of(std::vector<double> values) {
    const auto mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    double m = values[mid];
    if (values.size() % 2 == 0) {
        std::nth_element(values.begin(),
                         values.begin() + static_cast<std::ptrdiff_t>(mid) - 1,
                         values.end());
        m = 0.5 * (m + values[mid - 1]);
    }
    return m;
}

std::vector<TimeRange> merge_ranges(std::vector<TimeRange> ranges) {
    std::sort(ranges.begin(), ranges.end(),
              [](const TimeRange& a, const TimeRange& b) { return a.start_s < b.start_s; });
    std::vector<TimeRange> merged;
    for (const auto& r : ranges) {
        if (!merged.empty() && r.start_s <= merged.back().end_s + 1e-12) {
            merged.back().end_s = std::max(merged.back().end_s, r.end_s);
        } else {
            merged.push_back(r);
        }
    }
    return merged;
}

} // namespace

void validate(const ScreeningConfig& cfg) {
    if (!(cfg.brady_threshold_bpm > 0.0) ||
        !(cfg.tachy_threshold_bpm > cfg.brady_threshold_bpm)) {
        throw std::invalid_argument(
            "ScreeningConfig: need 0 < brady_threshold < tachy_threshold");
    }
    if (!(cfg.missed_pulse_factor > 1.0)) {
        throw std::invalid_argument("ScreeningConfig: missed_pulse_factor must exceed 1");
    }
    if (!(cfg.qrs_band_lo_hz > 0.0) || !(cfg.qrs_band_hi_hz > cfg.qrs_band_lo_hz)) {
        throw std::invalid_argument("ScreeningConfig: bad QRS band");
    }
    if (!(cfg.refractory_s > 0.0)) {
        throw std::invalid_argument("ScreeningConfig: refractory must be positive");
    }
}

void validate(const MarConfig& cfg) {
    if (!(cfg.baseline_window_s > 0.0)) {
        throw std::invalid_argument("MarConfig: baseline_window_s must be positive");
    }
    if (cfg.adaptive_taps < 1 || cfg.adaptive_taps > 1024) {
        throw std::invalid_argument("MarConfig: adaptive_taps must lie in [1, 1024]");
    }
    if (!(cfg.adaptive_step > 0.0) || cfg.adaptive_step >= 2.0) {
        throw std::invalid_argument("MarConfig: adaptive_step must lie in (0, 2)");
    }
    if (cfg.baseline_gate_mv < 0.0 || !(cfg.clip_limit_mv > 0.0)) {
        throw std::invalid_argument("MarConfig: bad gate or clip limit");
    }
}

const char* rhythm_flag_kind_name(RhythmFlagKind kind) {
    switch (kind) {
    case RhythmFlagKind::tachycardia: return "tachycardia";
    case RhythmFlagKind::bradycardia: return "bradycardia";
    case RhythmFlagKind::missed_pulse: return "missed_pulse";
    }
    return "unknown";
}

SampleTrace remove_baseline(const SampleTrace& trace, const MarConfig& cfg) {
    validate(trace);
    validate(cfg);

    const auto baseline = median_baseline(trace, cfg.baseline_window_s);
    SampleTrace out = trace;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.samples[i] -= baseline[i];
    }
    return out;
}

SampleTrace remove_motion_artifact(const SampleTrace& trace,
                                   const SampleTrace* reference,
                                   const MarConfig& cfg) {
    validate(trace);
    validate(cfg);

    SampleTrace out = trace;

    if (cfg.use_reference) {
        if (reference == nullptr) {
            throw std::invalid_argument(
                "remove_motion_artifact: use_reference is set but no reference given");
        }
        if (reference->fs != trace.fs || reference->size() != trace.size()) {
            throw std::invalid_argument(
                "remove_motion_artifact: reference is misaligned with the trace");
        }

        // Normalized LMS identifies the reference-to-artifact response. The
        // instantaneous weights jitter around the converged response because
        // the cardiac spikes act as gradient noise in the update, so taking
        // the running error as the output leaves that jitter in the signal.
        // This path runs offline over a full record, which allows a second
        // pass: average the weights over the second half of the adaptation
        // and subtract the averaged response everywhere. With a zero
        // reference the weights never move and the result is an exact no-op.
        const auto taps = static_cast<std::size_t>(cfg.adaptive_taps);
        std::vector<double> weights(taps, 0.0);
        std::vector<double> averaged(taps, 0.0);
        std::vector<double> history(taps, 0.0);
        std::size_t averaged_over = 0;
        for (std::size_t n = 0; n < trace.size(); ++n) {
            for (std::size_t k = taps - 1; k > 0; --k) history[k] = history[k - 1];
            history[0] = reference->samples[n];

            double estimate = 0.0;
            double energy = 0.0;
            for (std::size_t k = 0; k < taps; ++k) {
                estimate += weights[k] * history[k];
                energy += history[k] * history[k];
            }
            const double error = trace.samples[n] - estimate;
            if (energy > 0.0) {
                const double step = cfg.adaptive_step * error / (1e-12 + energy);
                for (std::size_t k = 0; k < taps; ++k) {
                    weights[k] += step * history[k];
                }
            }
            if (n >= trace.size() / 2) {
                for (std::size_t k = 0; k < taps; ++k) averaged[k] += weights[k];
                ++averaged_over;
            }
        }
        if (averaged_over > 0) {
            for (auto& w : averaged) w /= static_cast<double>(averaged_over);
        }

        std::fill(history.begin(), history.end(), 0.0);
        for (std::size_t n = 0; n < trace.size(); ++n) {
            for (std::size_t k = taps - 1; k > 0; --k) history[k] = history[k - 1];
            history[0] = reference->samples[n];
            double estimate = 0.0;
            for (std::size_t k = 0; k < taps; ++k) {
                estimate += averaged[k] * history[k];
            }
            out.samples[n] = trace.samples[n] - estimate;
        }
    }

    if (out.size() >= 3) {
        // Conservative fallback: subtract only the part of the baseline that
        // clearly is baseline (soft threshold against the gate), then clamp
        // anything beyond physiological amplitude.
        const auto baseline = median_baseline(out, cfg.baseline_window_s);
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double b = baseline[i];
            const double excess = std::abs(b) - cfg.baseline_gate_mv;
            if (excess > 0.0) {
                out.samples[i] -= std::copysign(excess, b);
            }
            out.samples[i] =
                std::clamp(out.samples[i], -cfg.clip_limit_mv, cfg.clip_limit_mv);
        }
    }
    return out;
}

std::vector<std::size_t> detect_qrs(const SampleTrace& trace, const ScreeningConfig& cfg) {
    validate(trace);
    validate(cfg);
    if (trace.duration_s() < 2.0) {
        throw std::invalid_argument("detect_qrs: need at least 2 seconds of signal");
    }
    if (cfg.qrs_band_hi_hz >= trace.fs / 2.0) {
        throw std::invalid_argument("detect_qrs: QRS band exceeds Nyquist");
    }

    const std::size_t n = trace.size();
    const double fs = trace.fs;

    // Stage 1: isolate QRS energy.
    std::vector<double> bp(n);
    BiquadFilter bandpass(design_biquad_bandpass(cfg.qrs_band_lo_hz, cfg.qrs_band_hi_hz, fs));
    for (std::size_t i = 0; i < n; ++i) bp[i] = bandpass.step(trace.samples[i]);

    // Stage 2: five-point derivative, squared.
    auto bp_at = [&](std::ptrdiff_t i) {
        return bp[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
            i, 0, static_cast<std::ptrdiff_t>(n) - 1))];
    };
    std::vector<double> energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = static_cast<std::ptrdiff_t>(i);
        const double d =
            (2.0 * bp_at(s) + bp_at(s - 1) - bp_at(s - 3) - 2.0 * bp_at(s - 4)) / 8.0;
        energy[i] = d * d;
    }

    // Stage 3: moving-window integration over ~150 ms.
    const auto mwi_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.15 * fs)));
    std::vector<double> mwi(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += energy[i];
        if (i >= mwi_w) acc -= energy[i - mwi_w];
        mwi[i] = acc / static_cast<double>(std::min(i + 1, mwi_w));
    }

    // Stage 4: adaptive threshold over local maxima. Every level is derived
    // from the data itself, so scaling the input changes nothing.
    const auto learn_n = std::min(n, static_cast<std::size_t>(std::llround(2.0 * fs)));
    double learn_max = 0.0;
    double learn_mean = 0.0;
    for (std::size_t i = 0; i < learn_n; ++i) {
        learn_max = std::max(learn_max, mwi[i]);
        learn_mean += mwi[i];
    }
    learn_mean /= static_cast<double>(learn_n);

    double spk = 0.5 * learn_max;
    double npk = 0.5 * learn_mean;
    const auto refractory =
        static_cast<std::size_t>(std::llround(cfg.refractory_s * fs));

    std::vector<std::size_t> peaks;
    std::deque<double> recent_rr;
    std::vector<std::pair<std::size_t, double>> rejected; // since last detection

    auto locate_r = [&](std::size_t mwi_idx) {
        const std::size_t lo = mwi_idx >= mwi_w ? mwi_idx - mwi_w : 0;
        std::size_t best = lo;
        for (std::size_t j = lo; j <= mwi_idx; ++j) {
            if (std::abs(bp[j]) > std::abs(bp[best])) best = j;
        }
        return best;
    };

    auto accept = [&](std::size_t mwi_idx, double value, double weight) {
        spk = weight * value + (1.0 - weight) * spk;
        const std::size_t r = locate_r(mwi_idx);
        if (!peaks.empty()) {
            if (r <= peaks.back() || r - peaks.back() < refractory) return;
            recent_rr.push_back(static_cast<double>(r - peaks.back()) / fs);
            if (recent_rr.size() > 8) recent_rr.pop_front();
        }
        peaks.push_back(r);
        rejected.clear();
    };

    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(mwi[i] > mwi[i - 1]) || mwi[i] < mwi[i + 1]) continue; // not a local max

        const double threshold = npk + 0.25 * (spk - npk);
        const bool clear_of_refractory =
            peaks.empty() || (i > peaks.back() && i - peaks.back() >= refractory);

        if (mwi[i] > threshold && mwi[i] > 0.0 && clear_of_refractory) {
            accept(i, mwi[i], 0.125);
            continue;
        }
        npk = 0.125 * mwi[i] + 0.875 * npk;
        rejected.emplace_back(i, mwi[i]);

        // Searchback: when more than 1.66 mean RR passed without a beat,
        // take the strongest rejected candidate above half threshold.
        if (!peaks.empty() && recent_rr.size() >= 2) {
            const double rr_avg =
                std::accumulate(recent_rr.begin(), recent_rr.end(), 0.0) /
                static_cast<double>(recent_rr.size());
            if (static_cast<double>(i - peaks.back()) / fs > 1.66 * rr_avg) {
                auto best = rejected.end();
                for (auto it = rejected.begin(); it != rejected.end(); ++it) {
                    if (it->first > peaks.back() && it->first - peaks.back() >= refractory &&
                        it->second > 0.5 * threshold &&
                        (best == rejected.end() || it->second > best->second)) {
                        best = it;
                    }
                }
                if (best != rejected.end()) {
                    accept(best->first, best->second, 0.25);
                }
            }
        }
    }
    return peaks;
}

std::vector<RhythmFlag> classify_rhythm(std::span<const double> rr_intervals_s,
                                        const ScreeningConfig& cfg) {
    validate(cfg);
    if (rr_intervals_s.size() < 3) {
        throw InsufficientDataError("classify_rhythm: need at least 3 RR intervals");
    }
    for (double rr : rr_intervals_s) {
        if (!(rr > 0.0)) {
            throw std::invalid_argument("classify_rhythm: RR intervals must be positive");
        }
    }

    const std::size_t n = rr_intervals_s.size();
    constexpr std::size_t window = 8;

    // Beat clock: interval k spans [t[k], t[k+1]).
    std::vector<double> t(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) t[k + 1] = t[k] + rr_intervals_s[k];

    std::vector<TimeRange> tachy;
    std::vector<TimeRange> brady;
    std::vector<TimeRange> missed;

    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k + 1 >= window ? k + 1 - window : 0;
        const std::size_t count = k - lo + 1;
        if (count >= 3) {
            double sum = 0.0;
            for (std::size_t j = lo; j <= k; ++j) sum += rr_intervals_s[j];
            const double mean_hr = 60.0 * static_cast<double>(count) / sum;
            if (mean_hr > cfg.tachy_threshold_bpm) tachy.push_back({t[lo], t[k + 1]});
            if (mean_hr < cfg.brady_threshold_bpm) brady.push_back({t[lo], t[k + 1]});
        }
        if (k >= 3) {
            const std::size_t plo = k >= window ? k - window : 0;
            std::vector<double> previous(rr_intervals_s.begin() + static_cast<std::ptrdiff_t>(plo),
                                         rr_intervals_s.begin() + static_cast<std::ptrdiff_t>(k));
            if (rr_intervals_s[k] > cfg.missed_pulse_factor * median_of(std::move(previous))) {
                missed.push_back({t[k], t[k + 1]});
            }
        }
    }

    std::vector<RhythmFlag> flags;
    auto append = [&](RhythmFlagKind kind, std::vector<TimeRange> ranges) {
        for (const auto& r : merge_ranges(std::move(ranges))) {
            flags.push_back({kind, r.start_s, r.end_s});
        }
    };
    append(RhythmFlagKind::tachycardia, std::move(tachy));
    append(RhythmFlagKind::bradycardia, std::move(brady));
    append(RhythmFlagKind::missed_pulse, std::move(missed));
    std::sort(flags.begin(), flags.end(), [](const RhythmFlag& a, const RhythmFlag& b) {
        return a.start_s < b.start_s;
    });
    return flags;
}

ScreeningReport screen_trace(const SampleTrace& trace, const ScreeningConfig& cfg,
                             const MarConfig& mar_cfg, const SampleTrace* reference) {
    validate(trace);
    require_unit(trace, Unit::millivolt, "screen_trace");

    ScreeningReport report;
    SampleTrace cleaned = remove_baseline(trace, mar_cfg);
    cleaned = remove_motion_artifact(cleaned, reference, mar_cfg);

    report.r_peaks = detect_qrs(cleaned, cfg);
    for (std::size_t j = 1; j < report.r_peaks.size(); ++j) {
        report.rr_intervals_s.push_back(
            static_cast<double>(report.r_peaks[j] - report.r_peaks[j - 1]) / trace.fs);
    }
    if (!report.rr_intervals_s.empty()) {
        double sum = 0.0;
        for (double rr : report.rr_intervals_s) sum += rr;
        report.mean_hr_bpm = 60.0 * static_cast<double>(report.rr_intervals_s.size()) / sum;
    }

    if (report.rr_intervals_s.size() >= 3) {
        const double offset = static_cast<double>(report.r_peaks.front()) / trace.fs;
        report.flags = classify_rhythm(report.rr_intervals_s, cfg);
        std::vector<TimeRange> ranges;
        for (auto& flag : report.flags) {
            flag.start_s += offset;
            flag.end_s += offset;
            ranges.push_back({flag.start_s, flag.end_s});
        }
        report.marked_segments = merge_ranges(std::move(ranges));
    }
    return report;
}

void write_screening_ndjson(const ScreeningReport& report,
                            const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    nlohmann::json summary = {
        {"record", "summary"},
        {"r_peaks", report.r_peaks.size()},
        {"rr_intervals", report.rr_intervals_s.size()},
        {"mean_hr_bpm", report.mean_hr_bpm},
        {"flags", report.flags.size()},
    };
    out << summary.dump() << '\n';
    for (const auto& flag : report.flags) {
        nlohmann::json record = {
            {"kind", rhythm_flag_kind_name(flag.kind)},
            {"start_s", flag.start_s},
            {"end_s", flag.end_s},
        };
        out << record.dump() << '\n';
    }
}

void write_r_peaks_csv(const ScreeningReport& report, double fs,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "sample_index,t_seconds\n";
    out.precision(12);
    for (std::size_t idx : report.r_peaks) {
        out << idx << ',' << static_cast<double>(idx) / fs << '\n';
    }
}

} // namespace ecgsim
