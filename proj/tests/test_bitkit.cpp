#include <catch2/catch_amalgamated.hpp>

#include "qrlab/bitstring.hpp"
#include "qrlab/rng.hpp"

using namespace qrlab;

namespace {

// Brute-force kernel membership, the independent route for nullspace checks.
std::vector<std::uint64_t> kernel_by_enumeration(const Gf2Matrix& m) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << m.cols()); ++v) {
    BitString vec(v, m.cols());
    if (m.multiply(vec).all_zero()) out.push_back(v);
  }
  return out;
}

}  // namespace

TEST_CASE("BitString basics and textual form") {
  BitString x = BitString::parse("101");
  CHECK(x.width() == 3);
  CHECK(x.bit(0) == 1);
  CHECK(x.bit(1) == 0);
  CHECK(x.bit(2) == 1);
  CHECK(x.str() == "101");
  CHECK((x ^ x).all_zero());
  CHECK_THROWS_AS(x ^ BitString::parse("10"), std::invalid_argument);
  CHECK_THROWS_AS(BitString::parse("10x"), std::invalid_argument);

  CHECK(x.prefix(2).str() == "10");
  CHECK(x.suffix_from(1).str() == "01");
  CHECK(BitString::parse("10").concat(BitString::parse("01")).str() == "1001");
}

TEST_CASE("dot2 examples") {
  CHECK(dot2(BitString::parse("101"), BitString::parse("011")) == 1);
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    BitString x(rng.next_u64(), 8);
    CHECK(dot2(x, BitString::zeros(8)) == 0);
  }
  CHECK_THROWS_AS(dot2(BitString::parse("1"), BitString::parse("10")), std::invalid_argument);
}

TEST_CASE("dot2 bilinearity under concatenation, width 8") {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    BitString x(rng.next_u64(), 8), y(rng.next_u64(), 8);
    int whole = dot2(x, y);
    int split = dot2(x.prefix(4), y.prefix(4)) ^ dot2(x.suffix_from(4), y.suffix_from(4));
    CHECK(whole == split);
  }
}

TEST_CASE("nullspace: single row 11 at n=2") {
  Gf2Matrix m = Gf2Matrix::from_rows({BitString::parse("11")});
  auto basis = m.nullspace();
  REQUIRE(basis.size() == 1);
  CHECK(basis[0].str() == "11");
  // Brute force: kernel is {00, 11}.
  CHECK(kernel_by_enumeration(m) == std::vector<std::uint64_t>{0, 3});
}

TEST_CASE("nullspace: identity and zero matrix") {
  for (int n : {2, 3, 5}) {
    Gf2Matrix ident(0, n);
    for (int i = 0; i < n; ++i) ident.append_row(BitString(std::uint64_t{1} << i, n));
    CHECK(ident.rank() == n);
    CHECK(ident.nullspace().empty());
  }
  Gf2Matrix zero(1, 3);
  CHECK(zero.rank() == 0);
  CHECK(zero.nullspace().size() == 3);
}

TEST_CASE("nullspace basis vectors all satisfy Mb=0, random matrices cols<=12") {
  Rng rng(21);
  for (int trial = 0; trial < 60; ++trial) {
    int cols = 2 + static_cast<int>(rng.below(11));
    int rows = 1 + static_cast<int>(rng.below(10));
    Gf2Matrix m(0, cols);
    for (int r = 0; r < rows; ++r)
      m.append_row(BitString(rng.next_u64(), cols));
    auto basis = m.nullspace();
    CHECK(static_cast<int>(basis.size()) == cols - m.rank());
    for (const auto& b : basis) CHECK(m.multiply(b).all_zero());
    // Basis spans the brute-force kernel: counts match and members verify.
    CHECK(kernel_by_enumeration(m).size() == (std::uint64_t{1} << basis.size()));
    Gf2Echelon ech(cols);
    for (const auto& b : basis) CHECK(ech.insert(b));
  }
}

TEST_CASE("Simon systems: n-1 independent vectors orthogonal to s pin s") {
  Rng rng(33);
  for (int n = 2; n <= 10; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      std::uint64_t s = 1 + rng.below((std::uint64_t{1} << n) - 1);
      BitString secret(s, n);
      Gf2Matrix m(0, n);
      Gf2Echelon ech(n);
      while (ech.rank() < n - 1) {
        BitString y(rng.next_u64(), n);
        if (dot2(y, secret) != 0) continue;
        if (ech.insert(y)) m.append_row(y);
      }
      auto basis = m.nullspace();
      REQUIRE(basis.size() == 1);
      CHECK(basis[0] == secret);
      // Brute force agreement: the only nonzero kernel member is s.
      auto kern = kernel_by_enumeration(m);
      REQUIRE(kern.size() == 2);
      CHECK(kern[1] == s);
    }
  }
}
