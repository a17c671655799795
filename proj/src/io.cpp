#include "tart/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>

namespace tart {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte-swapping is not implemented");

BinaryWriter::BinaryWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw IoError("cannot open for writing: " + path);
}

void BinaryWriter::u8(std::uint8_t v) { bytes(&v, 1); }
void BinaryWriter::u32(std::uint32_t v) { bytes(&v, 4); }
void BinaryWriter::u64(std::uint64_t v) { bytes(&v, 8); }
void BinaryWriter::f64(double v) { bytes(&v, 8); }

void BinaryWriter::bytes(const void* data, std::size_t len) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  if (!out_) throw IoError("write failed: " + path_);
}

void BinaryWriter::matrix(const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
}

void BinaryWriter::close() {
  out_.close();
  if (!out_) throw IoError("close failed: " + path_);
}

BinaryReader::BinaryReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw IoError("cannot open for reading: " + path);
}

void BinaryReader::bytes(void* data, std::size_t len) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
  if (static_cast<std::size_t>(in_.gcount()) != len)
    throw FormatError("truncated file: " + path_);
}

std::uint8_t BinaryReader::u8() {
  std::uint8_t v;
  bytes(&v, 1);
  return v;
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  bytes(&v, 4);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  bytes(&v, 8);
  return v;
}

double BinaryReader::f64() {
  double v;
  bytes(&v, 8);
  return v;
}

Matrix BinaryReader::matrix(Index rows, Index cols) {
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = f64();
  return m;
}

void BinaryReader::expect_magic(const char magic[4], const std::string& what) {
  char got[4];
  bytes(got, 4);
  if (std::memcmp(got, magic, 4) != 0)
    throw FormatError("bad magic in " + path_ + " (expected " + what + ")");
}

bool BinaryReader::at_eof() {
  return in_.peek() == std::ifstream::traits_type::eof();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

}  // namespace tart
