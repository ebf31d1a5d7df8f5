#pragma once

// Minimal CSV emitter. Doubles use the shortest round-trip representation,
// so identical values always produce identical bytes.

#include <array>
#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gsde {

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names) {
    for (const auto& n : names) field(std::string_view(n));
    end_row();
  }

  CsvWriter& field(double v) { return raw(format_double(v)); }
  CsvWriter& field(std::size_t v) { return raw(std::to_string(v)); }
  CsvWriter& field(int v) { return raw(std::to_string(v)); }
  CsvWriter& field(bool v) { return raw(v ? "true" : "false"); }
  CsvWriter& field(const char* v) { return field(std::string_view(v)); }
  CsvWriter& field(const std::string& v) { return field(std::string_view(v)); }
  CsvWriter& field(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return raw(v);
    std::string q = "\"";
    for (char c : v) {
      if (c == '"') q += '"';
      q += c;
    }
    q += '"';
    return raw(q);
  }

  void end_row() {
    os_ << '\n';
    first_ = true;
  }

 private:
  CsvWriter& raw(std::string_view v) {
    if (!first_) os_ << ',';
    os_ << v;
    first_ = false;
    return *this;
  }

  std::ostream& os_;
  bool first_ = true;
};

}  // namespace gsde
