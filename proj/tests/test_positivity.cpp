#include "doctest.h"

#include <cmath>
#include <random>

#include "printed_formulas.hpp"
#include "vnw/errors.hpp"
#include "vnw/positivity.hpp"

using namespace vnw;
using vnw::testing::printed_q;
using R = RingElement;

TEST_CASE("outer bound") {
  const auto ob = outer_bound(printed_q(-10), -10);
  CHECK(std::isfinite(ob.radius));
  CHECK(ob.radius > 0);
  CHECK(ob.margin < 0);

  double previous = std::numeric_limits<double>::infinity();
  for (const long C : {5L, 0L, -1L, -10L, -100L, -1000L}) {
    const double r = outer_bound(printed_q(C), C).radius;
    CHECK(r <= previous);
    previous = r;
  }

  // Spot-check the claim itself on a few far points.
  const CompiledElement q(printed_q(-10));
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> angle(0, 2 * M_PI);
  for (int i = 0; i < 2000; ++i) {
    const double t = angle(rng);
    const double s = ob.radius * (1.0 + i * 0.01);
    const double x = s * std::cos(t) / std::max(std::fabs(std::cos(t)), std::fabs(std::sin(t)));
    const double y = s * std::sin(t) / std::max(std::fabs(std::cos(t)), std::fabs(std::sin(t)));
    CHECK(q(x, y) <= ob.margin);
  }
}

TEST_CASE("outer bound rejects the wrong leading part") {
  const R flipped = printed_q(-10) + Rational(2) * pow(R::x(), 4);
  CHECK_THROWS_AS(outer_bound(flipped, -10), LeadingPartError);
  CHECK_THROWS_AS(outer_bound(printed_q(-10) + pow(R::x(), 5), -10), LeadingPartError);
  CHECK_THROWS_AS(certify(pow(R::x(), 4) + pow(R::y(), 4), -10), LeadingPartError);
}

TEST_CASE("C = 0 fails with a witness") {
  const R q = printed_q(0);
  const auto cert = certify(q, 0);
  CHECK_FALSE(cert.certified);
  REQUIRE(cert.witness.has_value());
  CHECK(q.eval(cert.witness->first, cert.witness->second) >= 0);
  CHECK(cert.witness_value == q.eval(cert.witness->first, cert.witness->second));
  CHECK_FALSE(revalidate(q, cert));
  const auto again = certify(q, 0);
  CHECK(again.witness == cert.witness);
}

TEST_CASE("threshold search") {
  const auto result = threshold_C(builtin_q_family());
  CHECK(result.C_star <= -1);
  CHECK(result.at_threshold.certified);
  CHECK(result.below.certified);
  CHECK_FALSE(result.above.certified);
  CHECK(result.monotone);
  for (const auto& step : result.path) {
    if (step.C <= result.C_star) CHECK(step.verdict == "certified");
    if (step.C > result.C_star) CHECK(step.verdict != "certified");
  }
  MESSAGE("C* = " << result.C_star.get_str());

  // Deterministic across thread counts.
  CertifyOptions serial;
  serial.threads = 1;
  const auto again = threshold_C(builtin_q_family(), serial);
  CHECK(again.C_star == result.C_star);
  CHECK(again.at_threshold.inner_margin == result.at_threshold.inner_margin);
  CHECK(again.at_threshold.cell_count == result.at_threshold.cell_count);
}

TEST_CASE("certified runs survive random probing and revalidate") {
  const auto family = builtin_q_family();
  const long C_star = threshold_C(family).C_star.get_num().get_si();
  for (const long C : {C_star, C_star - 1, C_star - 10}) {
    const R q = family(C);
    const auto cert = certify(q, C);
    REQUIRE(cert.certified);
    CHECK(cert.outer_margin < 0);
    CHECK(cert.inner_margin < 0);
    CHECK(revalidate(q, cert));

    const CompiledElement fast(q);
    std::mt19937 rng(static_cast<unsigned>(-C));
    const double R0 = cert.outer_radius;
    std::uniform_real_distribution<double> inner(-R0, R0);
    std::uniform_real_distribution<double> outer(-10 * R0, 10 * R0);
    int nonnegative = 0;
    for (int i = 0; i < 1000000; ++i) {
      const bool near = i % 2 == 0;
      const double x = near ? inner(rng) : outer(rng);
      const double y = near ? inner(rng) : outer(rng);
      if (fast(x, y) >= 0) ++nonnegative;
    }
    CHECK(nonnegative == 0);
  }
}

TEST_CASE("revalidation detects tampering") {
  const R q = printed_q(-3);
  auto cert = certify(q, -3);
  REQUIRE(cert.certified);
  REQUIRE(!cert.cells.empty());
  auto dropped = cert;
  dropped.cells.pop_back();
  dropped.cell_count -= 1;
  CHECK_FALSE(revalidate(q, dropped));
  auto shifted = cert;
  shifted.inner_margin -= 1.0;
  CHECK_FALSE(revalidate(q, shifted));
  // A certificate for one C says nothing about a larger C.
  CHECK_FALSE(revalidate(printed_q(0), cert));
}

TEST_CASE("too coarse a minimum spacing is inconclusive") {
  CertifyOptions coarse;
  coarse.min_spacing = 0.1;
  CHECK_THROWS_AS(certify(printed_q(-2), -2, coarse), InconclusiveError);
}

TEST_CASE("certificate JSON") {
  const auto cert = certify(printed_q(-10), -10);
  const nlohmann::json j = cert;
  CHECK(j["C"] == "-10/1");
  CHECK(j["verdict"] == "certified");
  CHECK(j["witness"].is_null());
  CHECK(j["inner_margin"].get<double>() < 0);
  const nlohmann::json failed = certify(printed_q(0), 0);
  CHECK(failed["verdict"] == "failed");
  CHECK(failed["witness"].size() == 2);
}
