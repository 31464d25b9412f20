// tests/test_common.cpp

#include "cogseg/common.hpp"

#include <cmath>

#include "doctest.h"

using namespace cogseg;

TEST_SUITE("common") {

TEST_CASE("log_add handles infinities and magnitudes") {
  CHECK(log_add(kNegInf, kNegInf) == kNegInf);
  CHECK(log_add(0.0, kNegInf) == 0.0);
  CHECK(log_add(std::log(0.25), std::log(0.75)) ==
        doctest::Approx(0.0).epsilon(1e-12));
  CHECK(log_add(-1000.0, -1000.0) ==
        doctest::Approx(-1000.0 + std::log(2.0)));
  // Asymmetric magnitudes keep the larger operand.
  CHECK(log_add(-2.0, -800.0) == doctest::Approx(-2.0));
}

TEST_CASE("log_sum_exp over vectors") {
  std::vector<double> v = {std::log(0.1), std::log(0.2), std::log(0.7)};
  CHECK(log_sum_exp(v) == doctest::Approx(0.0).epsilon(1e-12));
  std::vector<double> empty;
  CHECK(log_sum_exp(empty) == kNegInf);
}

TEST_CASE("signed log arithmetic") {
  const SLog a = SLog::from_double(3.0);
  const SLog b = SLog::from_double(-2.0);
  CHECK(sl_add(a, b).to_double() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sl_add(b, a).to_double() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sl_add(a, SLog::from_double(-3.0)).to_double() == 0.0);
  CHECK(sl_mul_log(a, std::log(2.0)).to_double() ==
        doctest::Approx(6.0).epsilon(1e-12));
  CHECK(sl_add(SLog::zero(), b).to_double() == doctest::Approx(-2.0));
  // Huge magnitudes survive in log space.
  const SLog huge = SLog::from_log(800.0, -1.0);
  CHECK(sl_add(huge, SLog::from_log(790.0)).sign == -1.0);
}

TEST_CASE("utf8_split keeps multi-byte code points together") {
  const auto parts = utf8_split("aþū𐍈!");
  REQUIRE(parts.size() == 5);
  CHECK(parts[0] == "a");
  CHECK(parts[1] == "þ");
  CHECK(parts[2] == "ū");
  CHECK(parts[3] == "𐍈");
  CHECK(parts[4] == "!");
}

TEST_CASE("rng streams are independent and reproducible") {
  auto a1 = make_rng(5, "alpha");
  auto a2 = make_rng(5, "alpha");
  auto b = make_rng(5, "beta");
  CHECK(a1() == a2());
  CHECK(a1() != b());
  CHECK(derive_stream(1, "x") != derive_stream(2, "x"));
  CHECK(derive_stream(1, "x") != derive_stream(1, "y"));
}

}  // TEST_SUITE
