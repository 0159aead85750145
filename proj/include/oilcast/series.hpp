#pragma once

#include <chrono>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace oilcast {

using Date = std::chrono::year_month_day;

Date make_date(int year, unsigned month, unsigned day);

// Parses "YYYY-MM-DD"; rejects impossible calendar dates.
Date parse_date(std::string_view text);
std::string format_date(const Date& date);

enum class ScaleKind { raw, log_scale };

struct Observation {
    Date date;
    double value = 0.0;
};

// Ordered daily price observations, USD/barrel when raw, ln(USD/barrel)
// when log-transformed. Dates are strictly increasing; raw values are
// strictly positive.
struct PriceSeries {
    std::vector<Observation> observations;
    ScaleKind scale = ScaleKind::raw;

    std::size_t size() const { return observations.size(); }
    bool empty() const { return observations.empty(); }

    std::vector<double> values() const;
};

// CSV contract: header "date,price", rows "YYYY-MM-DD,<decimal>".
// Reads LF or CRLF, skips blank lines, sorts rows by date.
PriceSeries parse_price_csv(std::istream& in);
PriceSeries parse_price_csv(const std::string& text);

// Observations with start <= date <= end. Empty result is an error.
PriceSeries slice_date_range(const PriceSeries& series, const Date& start, const Date& end);

// One observation per calendar month present in the input, dated the
// first of the month, valued at that month's arithmetic mean. Months
// with no data are omitted.
PriceSeries resample_monthly(const PriceSeries& series);

// Natural log of every value (forward) or exp (inverse); flips the
// scale tag. Applying the wrong direction for the tag is an error.
PriceSeries log_transform(const PriceSeries& series, bool inverse = false);

// Emits the same format parse_price_csv accepts, LF line endings,
// values with up to 12 significant digits.
void write_series_csv(std::ostream& out, const PriceSeries& series);
std::string write_series_csv(const PriceSeries& series);

} // namespace oilcast
