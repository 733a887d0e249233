#include "ecgsim/trace.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "ecgsim/errors.hpp"

namespace ecgsim {

std::string unit_name(Unit u) {
    switch (u) {
    case Unit::microvolt: return "microvolt";
    case Unit::millivolt: return "millivolt";
    case Unit::volt: return "volt";
    case Unit::adc_code: return "adc-code";
    case Unit::milliamp: return "milliamp";
    }
    return "unknown";
}

SampleTrace make_trace(double fs, Unit unit, std::size_t n, double value) {
    SampleTrace t;
    t.fs = fs;
    t.unit = unit;
    t.samples.assign(n, value);
    return t;
}

void validate(const SampleTrace& trace) {
    if (!(trace.fs > 0.0)) {
        throw std::invalid_argument("SampleTrace: fs must be positive, got " +
                                    std::to_string(trace.fs));
    }
}

void require_unit(const SampleTrace& trace, Unit expected, const std::string& context) {
    if (trace.unit != expected) {
        throw std::invalid_argument(context + ": expected trace in " + unit_name(expected) +
                                    ", got " + unit_name(trace.unit));
    }
}

std::size_t sample_count(double duration_s, double fs) {
    if (duration_s < 0.0) {
        throw std::invalid_argument("duration must be non-negative");
    }
    if (!(fs > 0.0)) {
        throw std::invalid_argument("fs must be positive");
    }
    return static_cast<std::size_t>(std::floor(duration_s * fs + 1e-9));
}

SampleTrace resample(const SampleTrace& trace, double new_fs) {
    validate(trace);
    if (!(new_fs > 0.0)) {
        throw std::invalid_argument("resample: target fs must be positive");
    }
    if (new_fs == trace.fs) {
        return trace;
    }
    if (trace.empty()) {
        SampleTrace out = trace;
        out.fs = new_fs;
        return out;
    }

    SampleTrace out;
    out.fs = new_fs;
    out.t0 = trace.t0;
    out.unit = trace.unit;

    const double down = trace.fs / new_fs;
    const double up = new_fs / trace.fs;
    const double rounded_down = std::round(down);
    const double rounded_up = std::round(up);

    if (down > 1.0 && std::abs(down - rounded_down) < 1e-9) {
        // integer decimation: keep every k-th sample
        const auto k = static_cast<std::size_t>(rounded_down);
        for (std::size_t i = 0; i < trace.size(); i += k) {
            out.samples.push_back(trace.samples[i]);
        }
        return out;
    }
    if (up > 1.0 && std::abs(up - rounded_up) < 1e-9) {
        // integer upsampling: hold each sample k times
        const auto k = static_cast<std::size_t>(rounded_up);
        out.samples.reserve(trace.size() * k);
        for (double v : trace.samples) {
            for (std::size_t j = 0; j < k; ++j) out.samples.push_back(v);
        }
        return out;
    }

    const std::size_t n = sample_count(trace.duration_s(), new_fs);
    out.samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double src = static_cast<double>(i) * trace.fs / new_fs;
        const auto lo = static_cast<std::size_t>(src);
        if (lo + 1 >= trace.size()) {
            out.samples.push_back(trace.samples.back());
            continue;
        }
        const double frac = src - static_cast<double>(lo);
        out.samples.push_back(trace.samples[lo] * (1.0 - frac) +
                              trace.samples[lo + 1] * frac);
    }
    return out;
}

void write_trace_csv(const SampleTrace& trace, const std::filesystem::path& path) {
    validate(trace);
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "t_seconds,value\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << trace.time_at(i) << ',' << trace.samples[i] << '\n';
    }
    if (!out) {
        throw IoError("write failed for " + path.string(), /*partial_file=*/true);
    }
}

SampleTrace read_trace_csv(const std::filesystem::path& path, Unit unit, double fs_fallback) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string() + " for reading");
    }

    SampleTrace trace;
    trace.unit = unit;
    trace.fs = fs_fallback;

    std::string line;
    if (!std::getline(in, line)) {
        return trace; // empty file: zero samples
    }
    // tolerate files with or without the header row
    double first_t = 0.0;
    double second_t = 0.0;
    bool have_first = false;
    bool have_second = false;
    auto parse_row = [&](const std::string& row) {
        const auto comma = row.find(',');
        if (comma == std::string::npos) {
            throw IoError("malformed trace CSV row in " + path.string() + ": " + row);
        }
        const double t = std::stod(row.substr(0, comma));
        const double v = std::stod(row.substr(comma + 1));
        if (!have_first) {
            first_t = t;
            have_first = true;
        } else if (!have_second) {
            second_t = t;
            have_second = true;
        }
        trace.samples.push_back(v);
    };

    if (line.rfind("t_seconds", 0) != 0) {
        parse_row(line);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        parse_row(line);
    }

    if (have_second && second_t > first_t) {
        trace.fs = 1.0 / (second_t - first_t);
    }
    if (have_first) {
        trace.t0 = first_t;
    }
    return trace;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double rms(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

} // namespace ecgsim
