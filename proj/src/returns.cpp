#include "scopt/returns.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "scopt/errors.hpp"

namespace scopt {

namespace {

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_iso_date(const std::string& s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return false;
    }
    for (const std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') {
            return false;
        }
    }
    return true;
}

std::vector<std::string> split(const std::string& line)
{
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

} // namespace

ReturnSeries ingest_returns(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw MalformedCsv(1, "empty file");
    }
    ++line_no;
    const auto header = split(line);
    if (header != std::vector<std::string>{"date", "ticker", "close"}) {
        throw MalformedCsv(line_no, "expected header date,ticker,close");
    }

    std::map<std::string, std::map<std::string, double>> closes;  // ticker -> date -> close
    std::set<std::string> all_dates;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split(line);
        if (fields.size() != 3) {
            throw MalformedCsv(line_no, "expected 3 fields, got " + std::to_string(fields.size()));
        }
        const std::string& date = fields[0];
        const std::string& ticker = fields[1];
        if (!is_iso_date(date)) {
            throw MalformedCsv(line_no, "date '" + date + "' is not YYYY-MM-DD");
        }
        if (ticker.empty()) {
            throw MalformedCsv(line_no, "empty ticker");
        }
        double close = 0.0;
        try {
            std::size_t used = 0;
            close = std::stod(fields[2], &used);
            if (used != fields[2].size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw MalformedCsv(line_no, "close '" + fields[2] + "' is not a number");
        }
        if (!(close > 0.0) || !std::isfinite(close)) {
            throw MalformedCsv(line_no, "close must be positive and finite");
        }
        if (!closes[ticker].emplace(date, close).second) {
            throw MalformedCsv(line_no, "duplicate row for " + ticker + " on " + date);
        }
        all_dates.insert(date);
    }
    if (closes.empty()) {
        throw MalformedCsv(line_no, "no data rows");
    }

    ReturnSeries out;
    for (const auto& [ticker, series] : closes) {
        if (series.size() == all_dates.size()) {
            out.tickers.push_back(ticker);
        } else {
            out.dropped.push_back(ticker);
        }
    }
    if (all_dates.size() < 2 || out.tickers.empty()) {
        throw TooFewDates(out.tickers.empty() ? 0 : all_dates.size());
    }

    const std::vector<std::string> dates(all_dates.begin(), all_dates.end());
    out.dates.assign(dates.begin() + 1, dates.end());
    const auto periods = static_cast<Eigen::Index>(dates.size() - 1);
    out.returns.resize(periods, static_cast<Eigen::Index>(out.tickers.size()));
    for (std::size_t a = 0; a < out.tickers.size(); ++a) {
        const auto& series = closes.at(out.tickers[a]);
        for (Eigen::Index t = 0; t < periods; ++t) {
            const double prev = series.at(dates[static_cast<std::size_t>(t)]);
            const double next = series.at(dates[static_cast<std::size_t>(t) + 1]);
            out.returns(t, static_cast<Eigen::Index>(a)) = next / prev - 1.0;
        }
    }
    return out;
}

ReturnSeries ingest_returns(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return ingest_returns(in);
}

std::vector<Vector> return_samples(const ReturnSeries& series, bool center)
{
    Matrix data = series.returns;
    if (center) {
        data.rowwise() -= data.colwise().mean();
    }
    std::vector<Vector> samples;
    samples.reserve(static_cast<std::size_t>(data.rows()));
    for (Eigen::Index t = 0; t < data.rows(); ++t) {
        samples.emplace_back(data.row(t).transpose());
    }
    return samples;
}

} // namespace scopt
