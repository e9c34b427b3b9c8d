#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "stickymv/error.hpp"

namespace stickymv {

// Shortest round-trip decimal form; nan/inf spelled out.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : cols_(header.size()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) text_ += ',';
      text_ += header[i];
    }
    text_ += '\n';
  }

  // Cells are numbers or preformatted text.
  struct Cell {
    std::string s;
    Cell(double v) : s(format_number(v)) {}
    Cell(int v) : s(std::to_string(v)) {}
    Cell(std::size_t v) : s(std::to_string(v)) {}
    Cell(const char* v) : s(v) {}
    Cell(std::string v) : s(std::move(v)) {}
  };

  void row(std::initializer_list<Cell> cells) {
    if (cells.size() != cols_) fail(ErrorKind::ShapeMismatch, "csv row width");
    bool first = true;
    for (const auto& c : cells) {
      if (!first) text_ += ',';
      first = false;
      text_ += c.s;
    }
    text_ += '\n';
    ++rows_;
  }

  const std::string& str() const { return text_; }
  std::size_t rows() const { return rows_; }

 private:
  std::size_t cols_;
  std::size_t rows_ = 0;
  std::string text_;
};

inline void write_text_file(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::ConfigInvalid, "cannot write " + p.string());
  out.write(text.data(), std::streamsize(text.size()));
}

}  // namespace stickymv
