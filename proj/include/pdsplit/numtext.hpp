#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

namespace pdsplit::numtext {

/// Locale-independent numeric text: '.' decimal point regardless of any
/// global locale the host process may have set.

// from_chars accepts no leading '+', which the text formats use on labels
inline std::string_view strip_plus(std::string_view s) {
  if (s.size() > 1 && s[0] == '+' && s[1] != '-' && s[1] != '+')
    return s.substr(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view raw) {
  const std::string_view s = strip_plus(raw);
  double value;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return value;
}

inline std::optional<long long> parse_longlong(std::string_view raw) {
  const std::string_view s = strip_plus(raw);
  long long value;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  return value;
}

/// 17 significant digits, enough to reproduce any double exactly.
inline std::string format_g17(double v) {
  char buf[40];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace pdsplit::numtext
