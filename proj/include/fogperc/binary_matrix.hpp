#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace fogperc {

/// Dense 0/1 matrix used for the x, e and a decision variables.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  BinaryMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v = true) { bits_[r * cols_ + c] = v ? 1 : 0; }

  void clear_row(std::size_t r) {
    for (std::size_t c = 0; c < cols_; ++c) bits_[r * cols_ + c] = 0;
  }

  std::size_t row_sum(std::size_t r) const {
    std::size_t s = 0;
    for (std::size_t c = 0; c < cols_; ++c) s += bits_[r * cols_ + c];
    return s;
  }
  std::size_t col_sum(std::size_t c) const {
    std::size_t s = 0;
    for (std::size_t r = 0; r < rows_; ++r) s += bits_[r * cols_ + c];
    return s;
  }

  /// Lowest column set in row `r`, if any.
  std::optional<std::size_t> first_in_row(std::size_t r) const {
    for (std::size_t c = 0; c < cols_; ++c)
      if (bits_[r * cols_ + c]) return c;
    return std::nullopt;
  }

  friend bool operator==(const BinaryMatrix&, const BinaryMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace fogperc
