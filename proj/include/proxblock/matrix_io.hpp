#pragma once

#include "proxblock/io_util.hpp"
#include "proxblock/types.hpp"

#include <bit>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace proxblock {

/// Csv: plain text, one row per line, comma separated.
/// Bin: "PBM1" magic, u64 little-endian rows and cols, row-major doubles.
enum class MatrixFormat { Csv, Bin };

inline MatrixFormat matrix_format_from_name(const std::string& name) {
  if (name == "csv") return MatrixFormat::Csv;
  if (name == "bin" || name == "pbm") return MatrixFormat::Bin;
  throw InputError("unknown matrix format '" + name + "' (expected csv, bin, or pbm)");
}

inline MatrixFormat matrix_format_from_path(const std::string& path) {
  auto dot = path.rfind('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == "csv" ? MatrixFormat::Csv : MatrixFormat::Bin;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline double parse_double(std::string_view token, const std::string& where) {
  token = trim(token);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    throw InputError(where + ": invalid number '" + std::string(token) + "'");
  return value;
}

inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline Matrix parse_csv_matrix(const std::string& text, const std::string& origin = "<csv>") {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line(text.data() + pos,
                          (eol == std::string::npos ? text.size() : eol) - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) {
      // Blank lines are only tolerated at the end of the file.
      std::string_view rest = detail::trim(std::string_view(text).substr(pos));
      if (rest.empty()) break;
      throw InputError(origin + ":" + std::to_string(line_no) + ": blank line inside matrix");
    }
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      std::string_view token = line.substr(start, comma == std::string_view::npos
                                                      ? std::string_view::npos
                                                      : comma - start);
      row.push_back(detail::parse_double(token, origin + ":" + std::to_string(line_no)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(origin + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns, got " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(origin + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline constexpr char kBinMagic[4] = {'P', 'B', 'M', '1'};

inline Matrix parse_bin_matrix(const std::string& bytes, const std::string& origin = "<bin>") {
  if (bytes.size() < 20) throw InputError(origin + ": truncated header");
  if (bytes.compare(0, 4, kBinMagic, 4) != 0)
    throw InputError(origin + ": bad magic (not a PBM1 file)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  std::uint64_t rows = detail::get_u64_le(p + 4);
  std::uint64_t cols = detail::get_u64_le(p + 12);
  if (rows == 0 || cols == 0) throw InputError(origin + ": zero matrix dimension");
  std::uint64_t avail = (bytes.size() - 20) / 8;
  // avail == rows * cols, phrased by division to stay overflow-safe on
  // hostile headers.
  if ((bytes.size() - 20) % 8 != 0 || avail % rows != 0 || avail / rows != cols)
    throw InputError(origin + ": truncated file: header says " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", payload holds " + std::to_string(avail) +
                     " values");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* d = p + 20;
  for (std::uint64_t i = 0; i < rows; ++i)
    for (std::uint64_t j = 0; j < cols; ++j) {
      std::uint64_t bits = detail::get_u64_le(d + (i * cols + j) * 8);
      m(static_cast<Index>(i), static_cast<Index>(j)) = std::bit_cast<double>(bits);
    }
  return m;
}

inline std::string matrix_to_bin(const Matrix& m) {
  require(m.rows() > 0 && m.cols() > 0, "matrix_to_bin: matrix must be non-empty");
  std::string out(kBinMagic, 4);
  detail::put_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  detail::put_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      detail::put_u64_le(out, std::bit_cast<std::uint64_t>(m(i, j)));
  return out;
}

inline Matrix load_matrix(const std::string& path, MatrixFormat fmt) {
  std::string data = read_file(path);
  return fmt == MatrixFormat::Csv ? parse_csv_matrix(data, path) : parse_bin_matrix(data, path);
}

inline Matrix load_matrix(const std::string& path) {
  return load_matrix(path, matrix_format_from_path(path));
}

inline void save_matrix(const std::string& path, const Matrix& m, MatrixFormat fmt) {
  atomic_write_file(path, fmt == MatrixFormat::Csv ? matrix_to_csv(m) : matrix_to_bin(m));
}

inline void save_matrix(const std::string& path, const Matrix& m) {
  save_matrix(path, m, matrix_format_from_path(path));
}

}  // namespace proxblock
