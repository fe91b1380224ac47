#pragma once

#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "scopt/linalg.hpp"

namespace scopt {

struct ReturnSeries
{
    std::vector<std::string> tickers;
    std::vector<std::string> dates;    ///< period end dates, strictly increasing
    Matrix returns;                    ///< (dates.size()) x (tickers.size())
    std::vector<std::string> dropped;  ///< tickers removed because of missing dates
};

/// Parses `date,ticker,close` rows (ISO dates, header required) into simple
/// returns close_t / close_{t-1} - 1. Assets that do not have a close on every
/// date are dropped and listed. Throws MalformedCsv with the offending line
/// number and TooFewDates when fewer than two dates remain.
ReturnSeries ingest_returns(std::istream& in);
ReturnSeries ingest_returns(const std::filesystem::path& path);

/// Rows of the return matrix as samples, optionally centered by the column mean.
std::vector<Vector> return_samples(const ReturnSeries& series, bool center);

} // namespace scopt
