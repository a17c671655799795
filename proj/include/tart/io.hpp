#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "tart/types.hpp"

namespace tart {

// Little-endian binary streams for the TADS / TATC / TAMD file formats.

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void bytes(const void* data, std::size_t len);
  /// Row-major f64 dump of a dense matrix.
  void matrix(const Matrix& m);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  void bytes(void* data, std::size_t len);
  Matrix matrix(Index rows, Index cols);
  /// Throws FormatError unless the next bytes equal `magic`.
  void expect_magic(const char magic[4], const std::string& what);
  bool at_eof();

 private:
  std::ifstream in_;
  std::string path_;
};

/// Shortest decimal string that round-trips the exact double value.
std::string format_double(double v);

/// Writes one CSV row; numeric cells should already be formatted.
void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace tart
