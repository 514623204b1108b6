#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gbsde {

/// Shortest round-trip decimal form; parsing it back recovers the exact bits.
inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

/// CSV writer with a fixed layout: one header row, data rows, and a trailing
/// comment line carrying the hash of the producing configuration.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::uint64_t config_hash)
      : out_(path), config_hash_(config_hash) {
    if (!out_) throw std::runtime_error("cannot open output file " + path);
  }

  void header(std::span<const std::string> names) { row_of_strings(names); }

  void header(std::initializer_list<std::string> names) {
    row_of_strings(std::vector<std::string>(names));
  }

  void row(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i) out_ << ',';
      out_ << format_double(values[i]);
    }
    out_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    row(std::span<const double>(values.begin(), values.size()));
  }

  void row_of_strings(std::span<const std::string> cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  ~CsvWriter() { out_ << "# config-hash = " << hex64(config_hash_) << '\n'; }

 private:
  std::ofstream out_;
  std::uint64_t config_hash_;
};

}  // namespace gbsde
