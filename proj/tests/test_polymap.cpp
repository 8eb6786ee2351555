#include "oracles.hpp"

#include "magnify/polymap.hpp"

#include <doctest.h>

#include <random>

using namespace magnify;
using oracle::vec;

namespace {

const char* kCsq = "dim 2\nf1 = x1^2 - x2^2\nf2 = 2*x1*x2\n";

Monomial mono(long num, long den, Exponents e) { return {Rational(num, den), std::move(e)}; }

std::vector<Rational> rational_point(std::initializer_list<Rational> values) { return values; }

// Random map of total degree <= 3 with small rational coefficients.
PolynomialMap random_map(std::mt19937_64& engine, int n) {
  std::uniform_int_distribution<int> coef(-9, 9);
  std::uniform_int_distribution<int> den(1, 6);
  std::uniform_int_distribution<int> terms(0, 5);
  std::uniform_int_distribution<int> exponent(0, 3);
  std::vector<std::vector<Monomial>> comps(static_cast<std::size_t>(n));
  for (auto& comp : comps) {
    const int count = terms(engine);
    for (int t = 0; t < count; ++t) {
      Exponents e(static_cast<std::size_t>(n), 0);
      unsigned budget = static_cast<unsigned>(exponent(engine));
      for (unsigned k = 0; k < budget; ++k) e[static_cast<std::size_t>(engine() % static_cast<unsigned>(n))] += 1;
      comp.push_back({Rational(coef(engine), den(engine)), e});
    }
  }
  return PolynomialMap(n, comps);
}

}  // namespace

TEST_CASE("parse_map reads the complex square") {
  const PolynomialMap m = parse_map(kCsq);
  CHECK(m.dimension() == 2);
  const std::vector<Monomial> f1 = {mono(1, 1, {2, 0}), mono(-1, 1, {0, 2})};
  const std::vector<Monomial> f2 = {mono(2, 1, {1, 1})};
  CHECK(m.components()[0] == f1);
  CHECK(m.components()[1] == f2);
  CHECK(m.total_degree() == 2);
}

TEST_CASE("parse_map reads a one-dimensional map") {
  const PolynomialMap m = parse_map("dim 1\nf1 = x1 + x1^2");
  CHECK(m.components()[0] == std::vector<Monomial>{mono(1, 1, {2}), mono(1, 1, {1})});
}

TEST_CASE("parse_map rejects out-of-range variables") {
  CHECK_THROWS_WITH_AS(parse_map("dim 2\nf1 = x3"), doctest::Contains("exceeds dimension"), ParseError);
}

TEST_CASE("parse_map reports positions and duplicates") {
  try {
    parse_map("dim 2\nf1 = x1 + * x2\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 11);  // the stray '*'
  }
  CHECK_THROWS_WITH_AS(parse_map("dim 1\nf1 = x1\nf1 = x1^2\n"), doctest::Contains("duplicate"), ParseError);
  CHECK_THROWS_AS(parse_map("f1 = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_map(""), ParseError);
  CHECK_THROWS_AS(parse_map("dim 1\nf2 = x1\n"), ParseError);
  CHECK_THROWS_AS(parse_map("dim 1\nf1 = 1/0\n"), ParseError);
  CHECK_THROWS_AS(parse_map("dim 1\nf1 = (x1 + 1\n"), ParseError);
}

TEST_CASE("parse_map collects like terms, expands products and reads decimals exactly") {
  const PolynomialMap m = parse_map("dim 2\n# comment\n\nf1 = 0.1*x1 + x1*x2 - x2*x1 + 2*(x1 + 3/4)*x1\nf2 = -1.5e-1\n");
  CHECK(m.components()[0] == std::vector<Monomial>{mono(2, 1, {2, 0}), mono(8, 5, {1, 0})});
  CHECK(m.components()[1] == std::vector<Monomial>{mono(-3, 20, {0, 0})});
  CHECK(parse_decimal("0.1") == Rational(1, 10));
  CHECK(parse_decimal("2.5e3") == Rational(2500));
}

TEST_CASE("missing components are zero") {
  const PolynomialMap m = parse_map("dim 2\nf2 = x1\n");
  CHECK(m.components()[0].empty());
  CHECK(m.evaluate(vec({3.0, 4.0})) == vec({0.0, 3.0}));
}

TEST_CASE("evaluate matches direct substitution") {
  const PolynomialMap csq = parse_map(kCsq);
  CHECK(csq.evaluate(vec({1.0, 1.0})) == vec({0.0, 2.0}));
  CHECK(csq.evaluate(vec({0.0, 0.0})).norm() == 0.0);
  const PolynomialMap q = parse_map("dim 1\nf1 = x1 + x1^2\n");
  CHECK(q.evaluate(vec({0.178233}))[0] == doctest::Approx(0.21).epsilon(1e-5));
  CHECK_THROWS_AS(csq.evaluate(vec({1.0})), DimensionError);
}

TEST_CASE("exact_expansion gives the symbolic Taylor data") {
  SUBCASE("complex square") {
    const Expansion e = exact_expansion(parse_map(kCsq), vec({0.0, 0.0}), 2);
    CHECK(e.linear.norm() == 0.0);
    const Vector v = vec({0.3, -0.7});
    const Vector w = vec({1.1, 0.4});
    CHECK((bilinear(*e.quadratic, v, w) - vec({v[0] * w[0] - v[1] * w[1], v[0] * w[1] + v[1] * w[0]})).norm() <
          1e-15);
  }
  SUBCASE("identity") {
    const Expansion e = exact_expansion(PolynomialMap::identity(3), vec({1.0, -2.0, 0.5}), 2);
    CHECK(e.linear == Matrix::Identity(3, 3));
    CHECK(e.quadratic->norm() == 0.0);
  }
  SUBCASE("coordinate squares") {
    const Expansion e = exact_expansion(parse_map("dim 2\nf1 = x1^2\nf2 = x2^2\n"), vec({0.0, 0.0}), 2);
    CHECK(e.linear.norm() == 0.0);
    const Vector v = vec({0.3, -0.7});
    const Vector w = vec({1.1, 0.4});
    CHECK(bilinear(*e.quadratic, v, w) == vec({v[0] * w[0], v[1] * w[1]}));
  }
  CHECK_THROWS_AS(exact_expansion(parse_map(kCsq), vec({0.0, 0.0}), 4), std::invalid_argument);
  CHECK_THROWS_AS(exact_expansion(parse_map(kCsq), vec({0.0, 0.0}), 0), std::invalid_argument);
}

TEST_CASE("rational reconstruction equals evaluation for degree <= 3 maps") {
  std::mt19937_64 engine(11);
  std::uniform_int_distribution<int> num(-20, 20);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 4;
    const PolynomialMap m = random_map(engine, n);
    std::vector<Rational> x, v, y;
    for (int i = 0; i < n; ++i) {
      x.emplace_back(num(engine), 7);
      v.emplace_back(num(engine), 5);
      y.push_back(x.back() + v.back());
    }
    const RationalExpansion e = exact_expansion_rational(m, x, 3);
    CHECK(e.reconstruct(v) == m.evaluate(y));
    if (m.total_degree() <= 2) CHECK(exact_expansion_rational(m, x, 2).reconstruct(v) == m.evaluate(y));
  }
}

TEST_CASE("floating reconstruction matches evaluation to 1e-12 for |v| <= 1") {
  std::mt19937_64 engine(5);
  std::normal_distribution<double> normal;
  for (const auto& s : oracle::suite()) {
    const PolynomialMap m = parse_map(s.text);
    const Vector x = vec(s.point);
    const Expansion e = exact_expansion(m, x, 3);
    for (int t = 0; t < 20; ++t) {
      Vector v(m.dimension());
      for (int i = 0; i < m.dimension(); ++i) v[i] = normal(engine);
      v = v.normalized() * (t + 1) / 20.0;
      const Vector direct = m.evaluate(x + v);
      CHECK((e.predict(v) - direct).norm() <= 1e-12 * std::max(1.0, direct.norm()));
    }
  }
}

TEST_CASE("exact_expansion rational data matches the rounded expansion") {
  const PolynomialMap m = parse_map("dim 2\nf1 = 1/3*x1^3 + x2\nf2 = x1*x2^2 - 2/7\n");
  const RationalExpansion r = exact_expansion_rational(m, rational_point({Rational(1, 2), Rational(-1)}), 3);
  const Expansion e = exact_expansion(m, vec({0.5, -1.0}), 3);
  CHECK(r.linear[0][0] == Rational(1, 4));
  CHECK(r.quadratic[0][0][0] == Rational(1, 2));  // (1/2) d^2/dx1^2 of x1^3/3 at 1/2
  CHECK(r.cubic[0][0][0][0] == Rational(1, 3));
  CHECK(r.quadratic[1][1][1] == Rational(1, 2));  // (1/2) d^2/dx2^2 of x1 x2^2
  CHECK(e.linear(0, 0) == 0.25);
  CHECK((*e.cubic)(1, 0, 1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(exact_jacobian(m, vec({0.5, -1.0})) == e.linear);
}

TEST_CASE("print then parse is the identity on normalized maps") {
  std::mt19937_64 engine(3);
  for (int trial = 0; trial < 200; ++trial) {
    const PolynomialMap m = random_map(engine, 1 + trial % 4);
    const std::string text = print_map(m);
    CHECK_MESSAGE(parse_map(text) == m, text);
  }
  for (const auto& s : oracle::suite()) {
    const PolynomialMap m = parse_map(s.text);
    CHECK(parse_map(print_map(m)) == m);
  }
}

TEST_CASE("evaluation is deterministic and the evaluator shares coefficients") {
  const PolynomialMap m = parse_map(oracle::suite()[7].text);
  const Evaluator f = m.evaluator();
  const Vector x = vec({0.123, -0.456, 0.789, -0.012});
  CHECK(f(x) == m.evaluate(x));
  CHECK(f(x) == f(x));
}
