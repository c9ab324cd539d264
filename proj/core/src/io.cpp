#include "bcm/io.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "bcm/errors.hpp"

namespace bcm {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t c = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, c == std::string::npos ? std::string::npos : c - start)));
    if (c == std::string::npos) break;
    start = c + 1;
  }
  return out;
}

// Non-empty, non-comment lines paired with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    out.emplace_back(no, t);
  }
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError("line " + std::to_string(line) + ": not a number: '" + s + "'");
  return v;
}

std::chrono::sys_days parse_date(const std::string& s, std::size_t line) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (s.size() != 10 || std::sscanf(s.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
    throw DataError("line " + std::to_string(line) + ": expected a YYYY-MM-DD date, got '" + s + "'");
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw DataError("line " + std::to_string(line) + ": invalid date '" + s + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
  return buf;
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<OptionQuote> parse_quotes_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw DataError("quotes: empty file");
  const auto header = split_csv(lines[0].second);
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return int(i);
    return -1;
  };
  const int ck = col("strike"), ct = col("maturity"), cm = col("mid"), cb = col("bid"), ca = col("ask");
  if (ck < 0 || ct < 0 || cm < 0) throw DataError("quotes: header must contain strike,maturity,mid");
  if ((cb < 0) != (ca < 0)) throw DataError("quotes: bid and ask columns come together");
  std::vector<OptionQuote> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const auto f = split_csv(line);
    if (f.size() != header.size())
      throw DataError("line " + std::to_string(no) + ": expected " + std::to_string(header.size()) + " fields");
    OptionQuote q;
    q.strike = to_double(f[std::size_t(ck)], no);
    q.maturity = to_double(f[std::size_t(ct)], no);
    q.price = to_double(f[std::size_t(cm)], no);
    if (cb >= 0 && !f[std::size_t(cb)].empty()) q.bid = to_double(f[std::size_t(cb)], no);
    if (ca >= 0 && !f[std::size_t(ca)].empty()) q.ask = to_double(f[std::size_t(ca)], no);
    out.push_back(q);
  }
  validate_quotes(out);
  return out;
}

std::vector<OptionQuote> read_quotes_csv(const std::string& path) { return parse_quotes_csv(read_text_file(path)); }

PriceHistory parse_history_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.size() < 3) throw DataError("history: need a header and at least two rows");
  const auto header = split_csv(lines[0].second);
  if (header.size() < 2 || header[0] != "date") throw DataError("history: header must be date,<asset>,...");
  PriceHistory h;
  h.names.assign(header.begin() + 1, header.end());
  const std::size_t n = h.names.size();
  h.series.prices.assign(n, {});
  std::chrono::sys_days prev{};
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto [no, line] = lines[i];
    const auto f = split_csv(line);
    if (f.size() != n + 1)
      throw DataError("line " + std::to_string(no) + ": expected " + std::to_string(n + 1) + " fields");
    const auto day = parse_date(f[0], no);
    if (i > 1 && !(day > prev)) throw DataError("line " + std::to_string(no) + ": dates must increase strictly");
    prev = day;
    h.dates.push_back(f[0]);
    h.series.times.push_back(double(i - 1) / kTradingDaysPerYear);
    for (std::size_t k = 0; k < n; ++k) {
      const double v = to_double(f[k + 1], no);
      if (!(v > 0.0)) throw DataError("line " + std::to_string(no) + ": prices must be positive");
      h.series.prices[k].push_back(v);
    }
  }
  validate_series(h.series);
  return h;
}

PriceHistory read_history_csv(const std::string& path) { return parse_history_csv(read_text_file(path)); }

std::string format_history_csv(const PriceHistory& h) {
  std::ostringstream out;
  out.precision(12);
  out << "date";
  for (const auto& n : h.names) out << ',' << n;
  out << '\n';
  for (std::size_t j = 0; j < h.dates.size(); ++j) {
    out << h.dates[j];
    for (const auto& p : h.series.prices) out << ',' << p[j];
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> business_days(const std::string& first, std::size_t count) {
  auto day = parse_date(first, 0);
  std::vector<std::string> out;
  while (out.size() < count) {
    const std::chrono::weekday wd{day};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.push_back(format_date(day));
    day += std::chrono::days{1};
  }
  return out;
}

}  // namespace bcm
