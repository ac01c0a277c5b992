#include "phicyc/common.hpp"
#include "phicyc/expr.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <numbers>
#include <vector>

using phicyc::Error;
using phicyc::ErrorKind;
using phicyc::Expr;

namespace {

double ev(const std::string& src, std::vector<std::string> vars = {}, std::vector<double> vals = {},
          std::map<std::string, double> consts = {}) {
  return Expr::parse(src, vars, consts).eval(vals);
}

}  // namespace

TEST_CASE("arithmetic and precedence") {
  CHECK(ev("1 + 2*3") == doctest::Approx(7.0));
  CHECK(ev("(1 + 2)*3") == doctest::Approx(9.0));
  CHECK(ev("2^3^2") == doctest::Approx(512.0));
  CHECK(ev("-2^2") == doctest::Approx(-4.0));
  CHECK(ev("7/24") == doctest::Approx(7.0 / 24.0));
  CHECK(ev("1e-3 * 2") == doctest::Approx(2e-3));
}

TEST_CASE("variables, constants and functions") {
  CHECK(ev("x*y + z", {"x", "y", "z"}, {2, 3, 4}) == doctest::Approx(10.0));
  CHECK(ev("pi") == doctest::Approx(std::numbers::pi));
  CHECK(ev("2*pi*t/T", {"t"}, {0.5}, {{"T", 2.0}}) == doctest::Approx(std::numbers::pi / 2));
  CHECK(ev("sin(0.3)") == doctest::Approx(std::sin(0.3)));
  CHECK(ev("cos(0.3) + tan(0.2)") == doctest::Approx(std::cos(0.3) + std::tan(0.2)));
  CHECK(ev("exp(1) * log(2)") == doctest::Approx(std::exp(1.0) * std::log(2.0)));
  CHECK(ev("sqrt(2) + abs(-3)") == doctest::Approx(std::sqrt(2.0) + 3.0));
  CHECK(ev("tanh(0.5)") == doctest::Approx(std::tanh(0.5)));
  CHECK(ev("arctan(2)") == doctest::Approx(std::atan(2.0)));
  CHECK(ev("atan(2)") == doctest::Approx(std::atan(2.0)));
}

TEST_CASE("parse errors carry the column") {
  auto kind_and_text = [](const std::string& src) {
    try {
      Expr::parse(src, {"x"});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
      return std::string(e.what());
    }
    FAIL("no error for " << src);
    return std::string();
  };
  CHECK(kind_and_text("1 +").find("column") != std::string::npos);
  CHECK(kind_and_text("y + 1").find("column 1") != std::string::npos);
  CHECK(kind_and_text("sin(x").find("column") != std::string::npos);
  CHECK(kind_and_text("x $ 2").find("column 3") != std::string::npos);
  CHECK(kind_and_text("foo(x)").find("column") != std::string::npos);
}

TEST_CASE("copies share the compiled tree") {
  const Expr e = Expr::parse("x^2", {"x"});
  const Expr f = e;
  const double v = 3.0;
  CHECK(f.eval(std::span<const double>(&v, 1)) == doctest::Approx(9.0));
  CHECK(f.source() == "x^2");
  CHECK(Expr().empty());
}
