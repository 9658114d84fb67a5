#include <gtest/gtest.h>

#include <cmath>

#include "jss/expr.hpp"

using jss::Expr;
using jss::Var;

TEST(Expr, ArithmeticAndPrecedence) {
  EXPECT_DOUBLE_EQ(Expr::parse("1 + 2*3").eval({}), 7.0);
  EXPECT_DOUBLE_EQ(Expr::parse("-2^2").eval({}), -4.0);
  EXPECT_DOUBLE_EQ(Expr::parse("2^3^2").eval({}), 512.0);
  EXPECT_DOUBLE_EQ(Expr::parse("(1+2)/4").eval({}), 0.75);
  EXPECT_NEAR(Expr::parse("cos(pi)").eval({}), -1.0, 1e-15);
}

TEST(Expr, Variables) {
  auto e = Expr::parse("x*y + t - r");
  EXPECT_DOUBLE_EQ(e.eval({2, 3, 4, 5}), 5.0);
}

TEST(Expr, SymbolicDerivativesMatchCentralDifferences) {
  const char* cases[] = {"exp(2*x)*cos(y)", "1/(1-2/r)", "sinh(x)^2 + log(1+x^2)", "sqrt(1+x^2)*tan(x/3)",
                         "x^y", "cosh(x*y)/(2+sin(x))"};
  for (const char* c : cases) {
    auto e = Expr::parse(c);
    for (Var v : {Var::x, Var::y, Var::r}) {
      auto d = e.derivative(v);
      jss::VarValues p{0.3, 0.7, 0.0, 3.1};
      jss::VarValues a = p, b = p;
      double h = 1e-5;
      a[static_cast<int>(v)] += h;
      b[static_cast<int>(v)] -= h;
      double fd = (e.eval(a) - e.eval(b)) / (2 * h);
      EXPECT_NEAR(d.eval(p), fd, 1e-8 * (1 + std::abs(fd))) << c;
    }
  }
}

TEST(Expr, ParseErrorsCarryColumn) {
  try {
    Expr::parse("1 + foo(x)", 4, 10);
    FAIL();
  } catch (const jss::ParseError& e) {
    EXPECT_EQ(e.line, 4);
    EXPECT_EQ(e.column, 14);
  }
  EXPECT_THROW(Expr::parse("(1+2"), jss::ParseError);
  EXPECT_THROW(Expr::parse("1 2"), jss::ParseError);
}
