#pragma once

// Fixed-width bit vectors and dense GF(2) linear algebra, desk scale
// (widths up to 64). Bit index 0 is the first input / leftmost character
// of the textual form, stored as the least significant bit of the word.

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrlab {

class BitString {
 public:
  BitString() : word_(0), width_(1) {}
  BitString(std::uint64_t word, int width) : word_(word), width_(width) {
    if (width < 1 || width > 64) throw std::invalid_argument("BitString: width out of range");
    if (width < 64) word_ &= (std::uint64_t{1} << width) - 1;
  }

  static BitString zeros(int width) { return BitString(0, width); }

  static BitString parse(const std::string& s) {
    if (s.empty() || s.size() > 64) throw std::invalid_argument("BitString: bad text");
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '1')
        w |= std::uint64_t{1} << i;
      else if (s[i] != '0')
        throw std::invalid_argument("BitString: bad character");
    }
    return BitString(w, static_cast<int>(s.size()));
  }

  int width() const { return width_; }
  std::uint64_t word() const { return word_; }
  bool all_zero() const { return word_ == 0; }

  int bit(int i) const {
    if (i < 0 || i >= width_) throw std::out_of_range("BitString: index");
    return static_cast<int>((word_ >> i) & 1);
  }

  BitString with_bit(int i, int v) const {
    if (i < 0 || i >= width_) throw std::out_of_range("BitString: index");
    std::uint64_t w = word_;
    if (v)
      w |= std::uint64_t{1} << i;
    else
      w &= ~(std::uint64_t{1} << i);
    return BitString(w, width_);
  }

  std::string str() const {
    std::string s(static_cast<std::size_t>(width_), '0');
    for (int i = 0; i < width_; ++i)
      if ((word_ >> i) & 1) s[static_cast<std::size_t>(i)] = '1';
    return s;
  }

  BitString operator^(const BitString& o) const {
    require_same_width(o);
    return BitString(word_ ^ o.word_, width_);
  }

  bool operator==(const BitString& o) const { return width_ == o.width_ && word_ == o.word_; }
  bool operator!=(const BitString& o) const { return !(*this == o); }
  bool operator<(const BitString& o) const {
    return width_ != o.width_ ? width_ < o.width_ : word_ < o.word_;
  }

  /// First `k` bits (indices 0..k-1).
  BitString prefix(int k) const {
    if (k < 1 || k > width_) throw std::invalid_argument("BitString: prefix length");
    return BitString(word_, k);
  }

  /// Last `width-k` bits.
  BitString suffix_from(int k) const {
    if (k < 0 || k >= width_) throw std::invalid_argument("BitString: suffix start");
    return BitString(word_ >> k, width_ - k);
  }

  BitString concat(const BitString& o) const {
    if (width_ + o.width_ > 64) throw std::invalid_argument("BitString: concat overflow");
    return BitString(word_ | (o.word_ << width_), width_ + o.width_);
  }

  void require_same_width(const BitString& o) const {
    if (width_ != o.width_) throw std::invalid_argument("BitString: width mismatch");
  }

 private:
  std::uint64_t word_;
  int width_;
};

/// Inner product mod 2.
inline int dot2(const BitString& x, const BitString& y) {
  x.require_same_width(y);
  return std::popcount(x.word() & y.word()) & 1;
}

class Gf2Matrix {
 public:
  Gf2Matrix(int rows, int cols) : cols_(cols), rows_(static_cast<std::size_t>(rows), 0) {
    if (cols < 1 || cols > 64 || rows < 0) throw std::invalid_argument("Gf2Matrix: shape");
  }

  static Gf2Matrix from_rows(const std::vector<BitString>& rows) {
    if (rows.empty()) throw std::invalid_argument("Gf2Matrix: empty row list");
    Gf2Matrix m(static_cast<int>(rows.size()), rows[0].width());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].width() != m.cols_) throw std::invalid_argument("Gf2Matrix: ragged rows");
      m.rows_[i] = rows[i].word();
    }
    return m;
  }

  int rows() const { return static_cast<int>(rows_.size()); }
  int cols() const { return cols_; }

  void append_row(const BitString& r) {
    if (r.width() != cols_) throw std::invalid_argument("Gf2Matrix: row width");
    rows_.push_back(r.word());
  }

  BitString row(int i) const { return BitString(rows_[static_cast<std::size_t>(i)], cols_); }

  int rank() const {
    auto [echelon, pivots] = reduce();
    (void)echelon;
    return static_cast<int>(pivots.size());
  }

  /// Basis of {v : Mv = 0}. Gaussian elimination with deterministic
  /// leftmost-pivot tie-breaking; free columns ascending, so output order
  /// is reproducible.
  std::vector<BitString> nullspace() const {
    auto [echelon, pivots] = reduce();
    std::vector<int> pivot_of_col(static_cast<std::size_t>(cols_), -1);
    for (std::size_t r = 0; r < pivots.size(); ++r) pivot_of_col[static_cast<std::size_t>(pivots[r])] = static_cast<int>(r);

    std::vector<BitString> basis;
    for (int c = 0; c < cols_; ++c) {
      if (pivot_of_col[static_cast<std::size_t>(c)] >= 0) continue;
      std::uint64_t v = std::uint64_t{1} << c;
      // Back-substitute: pivot column p gets the value of column c in row p's equation.
      for (std::size_t r = 0; r < pivots.size(); ++r) {
        if ((echelon[r] >> c) & 1) v |= std::uint64_t{1} << pivots[r];
      }
      basis.emplace_back(v, cols_);
    }
    return basis;
  }

  /// Mv over GF(2) (v as column vector), returned as one bit per row.
  BitString multiply(const BitString& v) const {
    if (v.width() != cols_) throw std::invalid_argument("Gf2Matrix: vector width");
    if (rows_.empty() || rows_.size() > 64) throw std::invalid_argument("Gf2Matrix: multiply shape");
    std::uint64_t out = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i)
      out |= static_cast<std::uint64_t>(std::popcount(rows_[i] & v.word()) & 1) << i;
    return BitString(out, static_cast<int>(rows_.size()));
  }

 private:
  // Row-reduce; returns (echelon rows, pivot column per echelon row).
  std::pair<std::vector<std::uint64_t>, std::vector<int>> reduce() const {
    std::vector<std::uint64_t> ech;
    std::vector<int> pivots;
    std::vector<std::uint64_t> work = rows_;
    for (int c = 0; c < cols_; ++c) {
      std::size_t found = work.size();
      for (std::size_t r = 0; r < work.size(); ++r) {
        if ((work[r] >> c) & 1) {
          found = r;
          break;
        }
      }
      if (found == work.size()) continue;
      std::uint64_t p = work[found];
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(found));
      for (auto& w : work)
        if ((w >> c) & 1) w ^= p;
      for (std::size_t r = 0; r < ech.size(); ++r)
        if ((ech[r] >> c) & 1) ech[r] ^= p;
      ech.push_back(p);
      pivots.push_back(c);
    }
    return {ech, pivots};
  }

  int cols_;
  std::vector<std::uint64_t> rows_;
};

/// Incremental GF(2) row space, for rank tracking in the Simon solvers.
class Gf2Echelon {
 public:
  explicit Gf2Echelon(int cols) : cols_(cols) {}

  /// Returns true when v enlarged the span.
  bool insert(const BitString& v) {
    if (v.width() != cols_) throw std::invalid_argument("Gf2Echelon: width");
    std::uint64_t w = v.word();
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      std::uint64_t low = rows_[i] & (~rows_[i] + 1);
      if (w & low) w ^= rows_[i];
    }
    if (w == 0) return false;
    rows_.push_back(w);
    return true;
  }

  int rank() const { return static_cast<int>(rows_.size()); }

  std::vector<BitString> rows() const {
    std::vector<BitString> out;
    out.reserve(rows_.size());
    for (auto w : rows_) out.emplace_back(w, cols_);
    return out;
  }

 private:
  int cols_;
  std::vector<std::uint64_t> rows_;
};

}  // namespace qrlab
