#pragma once

#include <string>
#include <vector>

#include "bcm/calib.hpp"

namespace bcm {

// Header `strike,maturity,mid[,bid,ask]`; bid/ask cells may be empty.
// Throws DataError with the offending line number.
std::vector<OptionQuote> parse_quotes_csv(const std::string& text);
std::vector<OptionQuote> read_quotes_csv(const std::string& path);

// Header `date,<asset>,...` with ISO dates (YYYY-MM-DD), one row per trading
// day. Row j maps to t_j = j / 252.
struct PriceHistory {
  std::vector<std::string> dates;
  std::vector<std::string> names;
  HistoricalSeries series;
};
PriceHistory parse_history_csv(const std::string& text);
PriceHistory read_history_csv(const std::string& path);
std::string format_history_csv(const PriceHistory& h);

// Weekday dates starting at `first` (YYYY-MM-DD), count of them.
std::vector<std::string> business_days(const std::string& first, std::size_t count);

std::string read_text_file(const std::string& path);

}  // namespace bcm
