#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include <Eigen/Dense>

namespace fogperc {

/// Little-endian flat binary stream. Matrices are written as
/// (u64 rows, u64 cols, rows*cols f64 in row-major order).
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void u64(std::uint64_t v);
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v);
  void str(const std::string& s);
  void matrix(const Eigen::MatrixXd& m);

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  std::string str();
  Eigen::MatrixXd matrix();
  /// Reads a matrix and checks it against the expected shape.
  void matrix_into(Eigen::MatrixXd& m);
  void expect(std::uint64_t v, const char* what);

 private:
  std::istream& in_;
};

}  // namespace fogperc
