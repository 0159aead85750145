#include "oilcast/series.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "oilcast/errors.hpp"
#include "text_util.hpp"

namespace oilcast {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

std::string_view strip_cr(std::string_view line) {
    if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
    }
    return line;
}

} // namespace

Date make_date(int year, unsigned month, unsigned day) {
    const Date date{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!date.ok()) {
        throw DomainError("invalid calendar date " + format_date(date));
    }
    return date;
}

Date parse_date(std::string_view text) {
    // YYYY-MM-DD, digits only in each field.
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !all_digits(text.substr(0, 4)) ||
        !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
        throw ParseError("malformed date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    const int year = static_cast<int>(detail::parse_int(text.substr(0, 4), "date"));
    const auto month = static_cast<unsigned>(detail::parse_int(text.substr(5, 2), "date"));
    const auto day = static_cast<unsigned>(detail::parse_int(text.substr(8, 2), "date"));
    const Date date{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!date.ok()) {
        throw ParseError("impossible calendar date '" + std::string(text) + "'");
    }
    return date;
}

std::string format_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

std::vector<double> PriceSeries::values() const {
    std::vector<double> out;
    out.reserve(observations.size());
    for (const auto& obs : observations) {
        out.push_back(obs.value);
    }
    return out;
}

PriceSeries parse_price_csv(std::istream& in) {
    std::string line;
    bool header_seen = false;
    std::size_t row = 0;
    PriceSeries series;

    while (std::getline(in, line)) {
        const std::string_view text = strip_cr(line);
        if (text.empty()) {
            continue;
        }
        if (!header_seen) {
            if (text != "date,price") {
                throw ParseError("header: expected 'date,price', got '" + std::string(text) + "'");
            }
            header_seen = true;
            continue;
        }
        ++row;
        const std::string context = "row " + std::to_string(row);
        const auto comma = text.find(',');
        if (comma == std::string_view::npos) {
            throw ParseError(context + ": missing ',' separator");
        }
        Observation obs;
        try {
            obs.date = parse_date(text.substr(0, comma));
        } catch (const ParseError& e) {
            throw ParseError(context + ": " + e.what());
        }
        obs.value = detail::parse_double(text.substr(comma + 1), context);
        if (!(obs.value > 0.0)) {
            throw DomainError(context + ": non-positive price " +
                              detail::format_double(obs.value));
        }
        series.observations.push_back(obs);
    }

    if (!header_seen) {
        throw ParseError("empty input: missing 'date,price' header");
    }
    if (series.observations.empty()) {
        throw ParseError("no data rows after the header");
    }

    std::stable_sort(series.observations.begin(), series.observations.end(),
                     [](const Observation& a, const Observation& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < series.observations.size(); ++i) {
        if (series.observations[i].date == series.observations[i - 1].date) {
            throw DuplicateDateError("duplicate date " +
                                     format_date(series.observations[i].date));
        }
    }
    return series;
}

PriceSeries parse_price_csv(const std::string& text) {
    std::istringstream in(text);
    return parse_price_csv(in);
}

PriceSeries slice_date_range(const PriceSeries& series, const Date& start, const Date& end) {
    if (start > end) {
        throw UsageError("slice start " + format_date(start) + " is after end " +
                         format_date(end));
    }
    PriceSeries out;
    out.scale = series.scale;
    for (const auto& obs : series.observations) {
        if (obs.date >= start && obs.date <= end) {
            out.observations.push_back(obs);
        }
    }
    if (out.observations.empty()) {
        throw DataError("empty slice: no observations in [" + format_date(start) + ", " +
                        format_date(end) + "]");
    }
    return out;
}

PriceSeries resample_monthly(const PriceSeries& series) {
    if (series.empty()) {
        throw UsageError("resample_monthly: empty series");
    }
    PriceSeries out;
    out.scale = series.scale;

    auto month_key = [](const Date& d) {
        return std::pair{d.year(), d.month()};
    };

    std::size_t i = 0;
    while (i < series.observations.size()) {
        const auto key = month_key(series.observations[i].date);
        double sum = 0.0;
        std::size_t count = 0;
        while (i < series.observations.size() && month_key(series.observations[i].date) == key) {
            sum += series.observations[i].value;
            ++count;
            ++i;
        }
        out.observations.push_back(
            {Date{key.first, key.second, std::chrono::day{1}}, sum / static_cast<double>(count)});
    }
    return out;
}

PriceSeries log_transform(const PriceSeries& series, bool inverse) {
    if (!inverse && series.scale != ScaleKind::raw) {
        throw DomainError("log_transform: series is already log-scaled");
    }
    if (inverse && series.scale != ScaleKind::log_scale) {
        throw DomainError("log_transform: inverse needs a log-scaled series");
    }
    PriceSeries out;
    out.scale = inverse ? ScaleKind::raw : ScaleKind::log_scale;
    out.observations.reserve(series.observations.size());
    for (const auto& obs : series.observations) {
        if (!inverse && !(obs.value > 0.0)) {
            throw DomainError("log_transform: non-positive value at " + format_date(obs.date));
        }
        out.observations.push_back(
            {obs.date, inverse ? std::exp(obs.value) : std::log(obs.value)});
    }
    return out;
}

void write_series_csv(std::ostream& out, const PriceSeries& series) {
    if (series.empty()) {
        throw UsageError("write_series_csv: empty series");
    }
    out << "date,price\n";
    for (const auto& obs : series.observations) {
        out << format_date(obs.date) << ',' << detail::format_double_sig(obs.value, 12) << '\n';
    }
}

std::string write_series_csv(const PriceSeries& series) {
    std::ostringstream out;
    write_series_csv(out, series);
    return out.str();
}

} // namespace oilcast
