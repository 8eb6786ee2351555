#include "oracles.hpp"

#include "magnify/certify.hpp"
#include "magnify/polymap.hpp"

#include <doctest.h>

using namespace magnify;
using oracle::vec;

namespace {

PolynomialMap map_of(const char* text) { return parse_map(text); }

const char* kCsq = "dim 2\nf1 = x1^2 - x2^2\nf2 = 2*x1*x2\n";
const char* kDiag = "dim 2\nf1 = x1^2\nf2 = x2^2\n";
const char* kQuad1d = "dim 1\nf1 = x1 + x1^2\n";
const char* kPerturbed = "dim 2\nf1 = x1^2 - x2^2 + 1/10*x1^3\nf2 = 2*x1*x2\n";

}  // namespace

TEST_CASE("sampled modulus examples") {
  SUBCASE("identity is exactly linear") {
    const PolynomialMap m = PolynomialMap::identity(3);
    for (double s : {1.0, 0.1, 0.01}) {
      CHECK(sampled_modulus(m.evaluator(), vec({0.2, 0.3, 0.4}), Matrix::Identity(3, 3), s, 1000, 42) <= 1e-14);
    }
  }
  SUBCASE("x + x^2 has modulus close to 2s") {
    // |f(y) - f(z) - (y - z)| / |y - z| = |y + z| <= 2s.
    const Evaluator f = map_of(kQuad1d).evaluator();
    for (double s : {0.5, 0.25, 0.01}) {
      const double omega = sampled_modulus(f, vec({0.0}), Matrix::Identity(1, 1), s, 10000, 42);
      CHECK(omega <= 2.0 * s * (1.0 + 1e-12));
      CHECK(omega >= 1.8 * s);
    }
  }
  SUBCASE("complex square with a vanishing differential is not o(s)") {
    const Evaluator f = map_of(kCsq).evaluator();
    for (double s : {1.0, 1e-2, 1e-4}) {
      CHECK(sampled_modulus(f, vec({0.0, 0.0}), Matrix::Zero(2, 2), s, 10000, 42) >= 1.5 * s);
    }
  }
  CHECK_THROWS_AS(sampled_modulus(map_of(kQuad1d).evaluator(), vec({0.0}), Matrix::Identity(1, 1), 0.1, 99, 42),
                  std::invalid_argument);
}

TEST_CASE("modulus table is a running maximum and is monotone in the radius") {
  const PolynomialMap m = parse_map(oracle::suite()[6].text);
  const Vector x = vec(oracle::suite()[6].point);
  const Matrix l = exact_jacobian(m, x);
  const auto radii = default_modulus_radii(1.0, 17);
  const auto table = uniform_diff_modulus(m.evaluator(), x, l, radii, 2000, 42);
  REQUIRE(table.size() == radii.size());
  for (std::size_t j = 0; j < table.size(); ++j) {
    CHECK(table[j].radius == radii[j]);
    CHECK(table[j].omega >= table[j].raw);
    if (j + 1 < table.size()) CHECK(table[j].omega >= table[j + 1].omega);
  }
  const std::vector<double> ascending = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(uniform_diff_modulus(m.evaluator(), x, l, ascending, 2000, 42), std::invalid_argument);
}

TEST_CASE("certify_first_order examples") {
  SUBCASE("x + x^2 at 0 certifies d = 1/4") {
    const PolynomialMap m = map_of(kQuad1d);
    const FirstOrderCertificate c = certify_first_order(m.evaluator(), exact_expansion(m, vec({0.0}), 1));
    CHECK(c.status == CertificateStatus::certified);
    REQUIRE(c.radius);
    CHECK(*c.radius == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(c.covering_radius == doctest::Approx(0.125).epsilon(1e-12));
    CHECK(c.coverage.fraction == 1.0);
    CHECK(c.inverse_norm == doctest::Approx(1.0));
  }
  SUBCASE("identity certifies the largest radius") {
    const PolynomialMap m = PolynomialMap::identity(2);
    const FirstOrderCertificate c = certify_first_order(m.evaluator(), exact_expansion(m, vec({1.0, 2.0}), 1));
    CHECK(c.status == CertificateStatus::certified);
    REQUIRE(c.radius);
    CHECK(*c.radius == 1.0);
  }
  SUBCASE("complex square is refused") {
    const PolynomialMap m = map_of(kCsq);
    const FirstOrderCertificate c = certify_first_order(m.evaluator(), exact_expansion(m, vec({0.0, 0.0}), 1));
    CHECK(c.status == CertificateStatus::refused);
    CHECK_FALSE(c.radius);
    CHECK(c.reason.find("singular") != std::string::npos);
  }
}

TEST_CASE("certified radii satisfy the sandwich on fresh pairs") {
  const PolynomialMap m = parse_map("dim 2\nf1 = 2*x1 + x2 + x1*x2 - x2^3\nf2 = x2 - x1 + x1^2\n");
  const Vector x = vec({0.1, 0.2});
  const Evaluator f = m.evaluator();
  const FirstOrderCertificate c = certify_first_order(f, exact_expansion(m, x, 1));
  REQUIRE(c.status == CertificateStatus::certified);
  const Eigen::FullPivLU<Matrix> lu(c.linear);
  const double d = *c.radius;
  const auto ys = oracle::disc_samples(d, 2000, 3);
  const auto zs = oracle::disc_samples(d, 2000, 4);
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Vector y = x + ys[i], z = x + zs[i];
    const double gap = lu.solve(f(y) - f(z)).norm();
    const double sep = (y - z).norm();
    CHECK(gap >= 0.5 * sep);
    CHECK(gap <= 2.0 * sep);
  }
}

TEST_CASE("certify_quadratic examples") {
  SUBCASE("complex square is certified up to antipodes") {
    const PolynomialMap m = map_of(kCsq);
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), exact_expansion(m, vec({0.0, 0.0}), 2));
    CHECK(c.status == CertificateStatus::certified_up_to_antipodes);
    CHECK(c.failed_stage == 0);
    CHECK(c.regularity.margin == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c.c_hat() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(c.binding == "d_bar");
    REQUIRE(c.remainder);
    CHECK(c.remainder->saturated);
    CHECK(c.coverage_fraction == 1.0);
    CHECK(c.covered_radius() == doctest::Approx(0.5 * c.c_hat() * 0.01));
    CHECK_FALSE(c.audit.clean);
    for (const auto& p : c.audit.collisions) CHECK(p.antipodal_offset <= 1e-6 * p.separation);
  }
  SUBCASE("a smaller offset bound limits the ladder") {
    const PolynomialMap m = map_of(kCsq);
    QuadraticOptions opts;
    opts.a_bound = 0.05;
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), exact_expansion(m, vec({0.0, 0.0}), 2), opts);
    CHECK(c.binding == "a");
    REQUIRE_FALSE(c.coverage.empty());
    CHECK(c.coverage.front().radius == 0.05);
  }
  SUBCASE("coordinate squares fail transversality") {
    const PolynomialMap m = map_of(kDiag);
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), exact_expansion(m, vec({0.0, 0.0}), 2));
    CHECK(c.status == CertificateStatus::refused);
    CHECK(c.failed_stage == 2);
    CHECK(std::min(std::abs(c.regularity.witness[0]), std::abs(c.regularity.witness[1])) <= 1e-3);
  }
  SUBCASE("x + x^2 fails the vanishing-differential stage") {
    const PolynomialMap m = map_of(kQuad1d);
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), exact_expansion(m, vec({0.0}), 2));
    CHECK(c.status == CertificateStatus::refused);
    CHECK(c.failed_stage == 1);
  }
  SUBCASE("a cubic perturbation keeps the certificate") {
    const PolynomialMap m = map_of(kPerturbed);
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), exact_expansion(m, vec({0.0, 0.0}), 2));
    CHECK(c.status != CertificateStatus::refused);
    REQUIRE(c.remainder);
    REQUIRE(c.remainder->slope);
    CHECK(*c.remainder->slope == doctest::Approx(3.0).epsilon(0.05));
  }
  SUBCASE("a wrong quadratic part fails the remainder stage") {
    const PolynomialMap m = map_of(kCsq);
    Expansion e = exact_expansion(m, vec({0.0, 0.0}), 2);
    std::vector<Matrix> forms = e.quadratic->forms();
    for (auto& b : forms) b *= 1.5;
    e.quadratic = QuadDifferential(forms);
    const QuadraticCertificate c = certify_quadratic(m.evaluator(), e);
    CHECK(c.status == CertificateStatus::refused);
    CHECK(c.failed_stage == 3);
  }
}

TEST_CASE("scale_sweep examples") {
  const auto ladder = ascending_ladder(1.0 / 64.0, 1.0, 49);
  CHECK(ladder.front() == 1.0 / 64.0);
  CHECK(ladder.back() == 1.0);
  SUBCASE("contraction on x + x^2 holds up to 1/4") {
    const Evaluator f = map_of(kQuad1d).evaluator();
    const SweepResult r = scale_sweep(contraction_property(f, vec({0.0}), Matrix::Identity(1, 1), 10000, 0.5, 42), ladder);
    REQUIRE(r.largest_passing);
    CHECK(*r.largest_passing == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.transcript.size() == ladder.size());
  }
  SUBCASE("always true and always false") {
    const SweepResult yes = scale_sweep([](double) { return ScaleOutcome{true, 0.0}; }, ladder);
    CHECK(*yes.largest_passing == 1.0);
    const SweepResult no = scale_sweep([](double) { return ScaleOutcome{false, 0.0}; }, ladder);
    CHECK_FALSE(no.largest_passing);
  }
  SUBCASE("a throwing property fails at that scale") {
    const SweepResult r = scale_sweep(
        [](double s) {
          if (s > 0.1) throw std::runtime_error("boom");
          return ScaleOutcome{true, s};
        },
        ladder);
    REQUIRE(r.largest_passing);
    CHECK(*r.largest_passing <= 0.1);
    CHECK(r.transcript.back().error == "boom");
  }
  const std::vector<double> short_ladder = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(scale_sweep([](double) { return ScaleOutcome{true, 0.0}; }, short_ladder), std::invalid_argument);
  const std::vector<double> unordered = {0.1, 0.3, 0.2, 0.4};
  CHECK_THROWS_AS(scale_sweep([](double) { return ScaleOutcome{true, 0.0}; }, unordered), std::invalid_argument);
}

TEST_CASE("sweep results are monotone: every scale below b passed") {
  const Evaluator f = parse_map(oracle::suite()[3].text).evaluator();
  const auto ladder = ascending_ladder(1.0 / 64.0, 1.0, 25);
  const SweepResult r = scale_sweep(contraction_property(f, vec({0.0}), Matrix::Identity(1, 1), 5000, 0.5, 7), ladder);
  REQUIRE(r.largest_passing);
  for (const auto& e : r.transcript) {
    if (e.scale <= *r.largest_passing) CHECK(e.passed);
  }
}

TEST_CASE("quadratic coverage property on the complex square") {
  const PolynomialMap m = map_of(kCsq);
  const QuadDifferential a = *exact_expansion(m, vec({0.0, 0.0}), 2).quadratic;
  const ScaleProperty p = quadratic_coverage_property(m.evaluator(), vec({0.0, 0.0}), a, 1.0, 200, {}, 42);
  const ScaleOutcome o = p(0.1);
  CHECK(o.passed);
  CHECK(o.value == 1.0);
}

TEST_CASE("falsify_injectivity examples") {
  SUBCASE("complex square collides on antipodes") {
    const Evaluator f = map_of(kCsq).evaluator();
    const InjectivityAudit a = falsify_injectivity(f, vec({0.0, 0.0}));
    CHECK_FALSE(a.clean);
    REQUIRE_FALSE(a.collisions.empty());
    for (const auto& c : a.collisions) {
      CHECK((f(c.first) - f(c.second)).norm() <= 1e-10);
      CHECK(c.antipodal_offset <= 1e-9);
      CHECK(c.separation >= 1e-4);
    }
  }
  SUBCASE("identity is clean") {
    const InjectivityAudit a = falsify_injectivity(PolynomialMap::identity(2).evaluator(), vec({0.3, 0.3}));
    CHECK(a.clean);
    CHECK(a.pairs_examined >= 2000);
  }
  SUBCASE("x + x^2 is clean on its injectivity interval") {
    FalsifyOptions opts;
    opts.radius = 0.25;
    CHECK(falsify_injectivity(map_of(kQuad1d).evaluator(), vec({0.0}), opts).clean);
  }
  SUBCASE("x + x^2 collides beyond its critical point") {
    FalsifyOptions opts;
    opts.radius = 2.0;
    const Evaluator f = map_of(kQuad1d).evaluator();
    const InjectivityAudit a = falsify_injectivity(f, vec({0.0}), opts);
    REQUIRE_FALSE(a.clean);
    for (const auto& c : a.collisions) CHECK(std::abs(c.first[0] + c.second[0] + 1.0) <= 1e-6);
  }
  FalsifyOptions few;
  few.samples = 999;
  CHECK_THROWS_AS(falsify_injectivity(map_of(kCsq).evaluator(), vec({0.0, 0.0}), few), std::invalid_argument);
}

TEST_CASE("preconditioning by the fitted inverse yields an identity linear part") {
  for (const auto& s : oracle::suite()) {
    const PolynomialMap m = parse_map(s.text);
    const Vector x = vec(s.point);
    const Matrix l = fit_expansion(m.evaluator(), x, 1).linear;
    const Eigen::FullPivLU<Matrix> lu(l);
    if (!lu.isInvertible() || Eigen::JacobiSVD<Matrix>(l).singularValues().minCoeff() < 1e-3) continue;
    const Matrix inv = lu.inverse();
    const Evaluator f = m.evaluator();
    const Evaluator g = [f, inv](const Vector& v) { return Vector(inv * f(v)); };
    const Matrix lg = fit_expansion(g, x, 1).linear;
    CHECK_MESSAGE((lg - Matrix::Identity(l.rows(), l.cols())).cwiseAbs().maxCoeff() <= 1e-8, s.name);
  }
}

TEST_CASE("dilations of the local inverse become linear") {
  const PolynomialMap m = map_of(kQuad1d);
  const Evaluator inv = regular_inverse_map(m.evaluator(), Matrix::Identity(1, 1), vec({0.0}));
  const auto samples = linearity_samples(1, 200, 1.0, 42);
  std::vector<std::pair<double, double>> defects;
  for (double delta : {1e-2, 5e-3, 2.5e-3, 1.25e-3}) {
    const Evaluator g = dilated_map(inv, DilationFrame(vec({0.0}), delta));
    defects.emplace_back(delta, almost_linearity_defect(g, samples, 1.0));
  }
  CHECK(defects.back().second <= 1e-2);
  CHECK(log_log_slope(defects) == doctest::Approx(1.0).epsilon(0.05));
}
