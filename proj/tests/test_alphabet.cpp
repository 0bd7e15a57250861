#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "faeq/alphabet.hpp"
#include "faeq/rng.hpp"

using namespace faeq;

TEST_CASE("alphabet_values enumerates the odd integers") {
  REQUIRE(alphabet_values(1).values == std::vector<int>{-1, 1});
  REQUIRE(alphabet_values(2).values == std::vector<int>{-3, -1, 1, 3});
  REQUIRE(alphabet_values(3).values == std::vector<int>{-7, -5, -3, -1, 1, 3, 5, 7});
  for (int k = 1; k <= 8; ++k) {
    const auto a = alphabet_values(k);
    REQUIRE(int(a.values.size()) == (1 << k));
    for (size_t i = 0; i < a.values.size(); ++i) {
      REQUIRE(a.values[i] % 2 != 0);
      REQUIRE(a.values[i] == -a.values[a.values.size() - 1 - i]);  // symmetric
      if (i > 0) REQUIRE(a.values[i] - a.values[i - 1] == 2);      // spacing 2
    }
  }
  REQUIRE_THROWS_AS(alphabet_values(0), std::invalid_argument);
  REQUIRE_THROWS_AS(alphabet_values(9), std::invalid_argument);
}

TEST_CASE("quantize_to_alphabet picks the nearest value") {
  REQUIRE(quantize_to_alphabet(2.2, 2) == 3);
  REQUIRE(quantize_to_alphabet(-5.0, 2) == -3);  // clip
  REQUIRE(quantize_to_alphabet(100.0, 3) == 7);
  REQUIRE(quantize_to_alphabet(-100.0, 3) == -7);
}

TEST_CASE("quantize_to_alphabet breaks exact ties toward positive infinity") {
  for (int k = 1; k <= 8; ++k) REQUIRE(quantize_to_alphabet(0.0, k) == 1);
  REQUIRE(quantize_to_alphabet(2.0, 2) == 3);
  REQUIRE(quantize_to_alphabet(-2.0, 2) == -1);
  REQUIRE(quantize_to_alphabet(4.0, 3) == 5);
  REQUIRE(quantize_to_alphabet(-4.0, 3) == -3);
}

TEST_CASE("quantize_to_alphabet rejects non-finite input") {
  REQUIRE_THROWS_AS(quantize_to_alphabet(std::numeric_limits<double>::quiet_NaN(), 2),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(quantize_to_alphabet(std::numeric_limits<double>::infinity(), 2),
                    std::invalid_argument);
}

TEST_CASE("quantize_to_alphabet is idempotent on alphabet members") {
  for (int k = 1; k <= 8; ++k)
    for (int v : alphabet_values(k).values) REQUIRE(quantize_to_alphabet(double(v), k) == v);
}

TEST_CASE("quantize_to_alphabet is nondecreasing") {
  Rng rng(31);
  for (int k = 1; k <= 4; ++k) {
    double prev_z = -20.0;
    int prev_q = quantize_to_alphabet(prev_z, k);
    for (int i = 0; i < 2000; ++i) {
      const double z = prev_z + rng.uniform() * 0.05;
      const int q = quantize_to_alphabet(z, k);
      REQUIRE(q >= prev_q);
      prev_z = z;
      prev_q = q;
    }
  }
}

TEST_CASE("bitplane_encode matches hand-worked examples") {
  const BitPlanes p3 = bitplane_encode(3, 2);
  REQUIRE(p3.sign[0] == 1);
  REQUIRE(p3.sign[1] == 1);
  const BitPlanes m1 = bitplane_encode(-1, 2);
  REQUIRE(m1.sign[0] == 1);
  REQUIRE(m1.sign[1] == -1);
  const BitPlanes p1 = bitplane_encode(1, 1);
  REQUIRE(p1.sign[0] == 1);
}

TEST_CASE("bitplane round trip over every alphabet") {
  for (int k = 1; k <= 8; ++k)
    for (int v : alphabet_values(k).values) REQUIRE(bitplane_decode(bitplane_encode(v, k)) == v);
}

TEST_CASE("bitplane_encode rejects values outside the alphabet") {
  REQUIRE_THROWS_AS(bitplane_encode(0, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(bitplane_encode(2, 2), std::invalid_argument);
  REQUIRE_THROWS_AS(bitplane_encode(5, 2), std::invalid_argument);
}

TEST_CASE("FixedPointVector validates word length and range") {
  const FixedPointVector v(4, {-8, 7, 0});
  REQUIRE(v.size() == 3);
  REQUIRE(FixedPointVector::min_value(4) == -8);
  REQUIRE(FixedPointVector::max_value(4) == 7);
  REQUIRE_THROWS_AS(FixedPointVector(4, {8}), std::out_of_range);
  REQUIRE_THROWS_AS(FixedPointVector(4, {-9}), std::out_of_range);
  REQUIRE_THROWS_AS(FixedPointVector(1, {0}), std::invalid_argument);
  REQUIRE_THROWS_AS(FixedPointVector(32, {0}), std::invalid_argument);
}

TEST_CASE("quantize_input rounds half away from zero and saturates") {
  ComplexVector y(3);
  y << Complex(3.4, -8.7), Complex(7.9, 2.5), Complex(-2.5, 0.0);
  const auto [re, im] = quantize_input(y, 4, 1.0);
  REQUIRE(re.values == std::vector<int32_t>{3, 7, -3});
  REQUIRE(im.values == std::vector<int32_t>{-8, 3, 0});
  REQUIRE_THROWS_AS(quantize_input(y, 4, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(quantize_input(y, 4, -1.0), std::invalid_argument);

  const auto [re2, im2] = quantize_input(y, 4, 2.0);  // scale divides first
  REQUIRE(re2.values == std::vector<int32_t>{2, 4, -1});
  REQUIRE(im2.values == std::vector<int32_t>{-4, 1, 0});
}

TEST_CASE("extract_bitplane returns two's-complement planes") {
  const FixedPointVector m3(3, {-3});
  REQUIRE(extract_bitplane(m3, 2) == std::vector<uint8_t>{1});
  REQUIRE(extract_bitplane(m3, 1) == std::vector<uint8_t>{0});
  REQUIRE(extract_bitplane(m3, 0) == std::vector<uint8_t>{1});

  const FixedPointVector zero(4, {0, 0});
  for (int plane = 0; plane < 4; ++plane)
    REQUIRE(extract_bitplane(zero, plane) == std::vector<uint8_t>{0, 0});

  const FixedPointVector m1(4, {-1});
  for (int plane = 0; plane < 4; ++plane)
    REQUIRE(extract_bitplane(m1, plane) == std::vector<uint8_t>{1});

  REQUIRE_THROWS_AS(extract_bitplane(m1, 4), std::out_of_range);
  REQUIRE_THROWS_AS(extract_bitplane(m1, -1), std::out_of_range);
}

TEST_CASE("bit planes weighted by -2^(L-1), 2^l reconstruct every entry") {
  Rng rng(77);
  for (int l : {2, 4, 7, 12}) {
    std::vector<int32_t> vals;
    for (int i = 0; i < 50; ++i) {
      const int32_t span = FixedPointVector::max_value(l) - FixedPointVector::min_value(l);
      vals.push_back(FixedPointVector::min_value(l) + int32_t(rng.uniform_int(uint64_t(span + 1))));
    }
    const FixedPointVector v(l, vals);
    for (size_t i = 0; i < vals.size(); ++i) {
      int64_t acc = 0;
      for (int plane = 0; plane < l; ++plane) {
        const int64_t weight = (plane == l - 1) ? -(int64_t(1) << plane) : (int64_t(1) << plane);
        acc += weight * extract_bitplane(v, plane)[i];
      }
      REQUIRE(acc == vals[i]);
    }
  }
}
