#include "fogperc/serialize.hpp"

#include <bit>
#include <cstring>
#include <stdexcept>

#include "fogperc/error.hpp"

namespace fogperc {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

void BinaryWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v = 0;
  if (!in_.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated checkpoint");
  return v;
}

double BinaryReader::f64() {
  double v = 0;
  if (!in_.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated checkpoint");
  return v;
}

std::string BinaryReader::str() {
  const auto n = u64();
  if (n > (1ULL << 32)) throw std::runtime_error("corrupt checkpoint string");
  std::string s(n, '\0');
  if (!in_.read(s.data(), static_cast<std::streamsize>(n))) throw std::runtime_error("truncated checkpoint");
  return s;
}

Eigen::MatrixXd BinaryReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (rows * cols > (1ULL << 31)) throw std::runtime_error("corrupt checkpoint matrix");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  return m;
}

void BinaryReader::matrix_into(Eigen::MatrixXd& m) {
  Eigen::MatrixXd read = matrix();
  if (read.rows() != m.rows() || read.cols() != m.cols()) throw ShapeError("checkpoint matrix shape mismatch");
  m = std::move(read);
}

void BinaryReader::expect(std::uint64_t v, const char* what) {
  if (u64() != v) throw ShapeError(std::string("checkpoint mismatch: ") + what);
}

}  // namespace fogperc
