#pragma once

#include <qpq/errors.hpp>
#include <qpq/random.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace qpq::harness {

using json = nlohmann::ordered_json;

struct metric {
    std::string name;
    std::size_t count = 0;
    double mean = 0.0;
    double std_error = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Running mean / variance / range. Observations are folded in the order
// they are added, so callers that need bitwise reproducibility add them in
// trial order.
class accumulator {
public:
    void add(double x) {
        ++count_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta * (x - mean_);
        min_ = std::min(min_, x);
        max_ = std::max(max_, x);
    }

    std::size_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }

    double std_error() const noexcept {
        if (count_ < 2) return 0.0;
        const double var = m2_ / static_cast<double>(count_ - 1);
        return std::sqrt(var / static_cast<double>(count_));
    }

    metric to_metric(std::string name) const {
        if (count_ == 0) return {std::move(name), 0, 0.0, 0.0, 0.0, 0.0};
        return {std::move(name), count_, mean_, std_error(), min_, max_};
    }

private:
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double min_ = std::numeric_limits<double>::infinity();
    double max_ = -std::numeric_limits<double>::infinity();
};

inline metric single_value(std::string name, double value) { return {std::move(name), 1, value, 0.0, value, value}; }

struct verdict {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct stat_report {
    std::string command;
    json config = json::object();
    std::vector<metric> metrics;
    std::vector<verdict> verdicts;
    std::uint64_t seed = 0;
    std::size_t channel_failures = 0;

    bool all_passed() const {
        return std::all_of(verdicts.begin(), verdicts.end(), [](const verdict& v) { return v.passed; });
    }

    const metric* find(const std::string& name) const {
        for (const auto& m : metrics)
            if (m.name == name) return &m;
        return nullptr;
    }
};

enum class report_format { json, csv };

inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

// 12 significant digits; non-finite values become null.
inline json json_number(double x) {
    if (!std::isfinite(x)) return nullptr;
    return std::strtod(format_number(x).c_str(), nullptr);
}

inline std::string render_report(const stat_report& rep, report_format fmt) {
    if (fmt == report_format::csv) {
        std::ostringstream os;
        os << "name,count,mean,stderr,min,max\n";
        for (const auto& m : rep.metrics) {
            os << m.name << ',' << m.count << ',' << format_number(m.mean) << ',' << format_number(m.std_error) << ','
               << format_number(m.min) << ',' << format_number(m.max) << '\n';
        }
        return os.str();
    }

    json doc;
    doc["config"] = rep.config;
    doc["metrics"] = json::array();
    for (const auto& m : rep.metrics) {
        doc["metrics"].push_back({{"name", m.name},
                                  {"count", m.count},
                                  {"mean", json_number(m.mean)},
                                  {"stderr", json_number(m.std_error)},
                                  {"min", json_number(m.min)},
                                  {"max", json_number(m.max)}});
    }
    doc["verdicts"] = json::array();
    for (const auto& v : rep.verdicts) doc["verdicts"].push_back({{"name", v.name}, {"passed", v.passed}, {"detail", v.detail}});
    doc["seed"] = rep.seed;
    doc["rng"] = rng_algorithm;
    doc["channel_failures"] = rep.channel_failures;
    return doc.dump(2) + "\n";
}

// Writes the report to `path`, or to `console` when path is "-".
inline void emit_report(const stat_report& rep, report_format fmt, const std::string& path, std::ostream& console = std::cout) {
    const std::string text = render_report(rep, fmt);
    if (path == "-") {
        console << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open report file " + path);
    f << text;
    if (!f) throw io_error("cannot write report file " + path);
}

} // namespace qpq::harness
