#include <doctest.h>

#include <cmath>
#include <random>

#include "kolmo/model.hpp"
#include "oracles.hpp"

using namespace kolmo;

namespace {

Vec3 fd_column(const ModelParams& p, const State3& x, const Vec3& v, double h) {
  return (drift(p, x + h * v) - drift(p, x - h * v)) / (2.0 * h);
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("params validation and derived rates") {
    CHECK_THROWS_AS(ModelParams(0.0, 0.1, Vec3{}), DomainError);
    CHECK_THROWS_AS(ModelParams(1.0, -0.1, Vec3{}), DomainError);
    CHECK_THROWS_AS(ModelParams(1.0, NAN, Vec3{}), DomainError);
    const ModelParams p(2.0, 0.5, Vec3{0.5, -1.0, 3.0});
    CHECK(p.m()[0] == 2.5);
    CHECK(p.m()[1] == 1.0);
    CHECK(p.m()[2] == 5.0);
    CHECK(p.m_sum() == doctest::Approx(8.5));
    CHECK(ModelParams::from_sigma2(1.0, 2.0, Vec3{}).sigma() == doctest::Approx(std::sqrt(2.0)));
  }

  TEST_CASE("drift values") {
    const ModelParams p(1.0, 0.0, Vec3{});
    CHECK(drift(p, State3{0, 0, 0}) == Vec3{0, 0, 0});
    CHECK(norm(drift(p, State3{1, 0, 0})) == 0.0);
    const Vec3 b = drift(p, State3{1, 1, 1});
    for (int i = 0; i < 3; ++i) CHECK(b[i] == doctest::Approx(-2.0).epsilon(1e-15));
    const double q = 1.0 / std::sqrt(3.0);
    const State3 Q{q, q, q};
    const Vec3 r = drift(p, 2.0 * Q);
    for (int i = 0; i < 3; ++i) CHECK(r[i] == doctest::Approx(-6.0 * q).epsilon(1e-14));
  }

  TEST_CASE("ray invariance through unit equilibria") {
    const ModelParams p(1.3, 0.0, Vec3{0.4, -0.2, 0.9});
    for (const State3& Q : {State3{1, 0, 0}, State3{0, 1, 0}, State3{0, 0, 1}})
      for (double s : {0.2, 0.7, 1.0, 1.9}) {
        const Vec3 b = drift(p, s * Q);
        const Vec3 e = 1.3 * s * (1.0 - s * s) * Q;
        CHECK(norm(b - e) <= 1e-14);
      }
  }

  TEST_CASE("jacobian closed forms") {
    const ModelParams p(1.0, 0.0, Vec3{0.5, -0.2, 0.3});
    const Mat3 J0 = jacobian(p, State3{});
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(J0(i, j) == (i == j ? 1.0 : 0.0));
    const double u = 0.7, a = 1.0;
    const Mat3 J = jacobian(p, State3{u, 0, 0});
    CHECK(J(0, 0) == doctest::Approx(a - 3 * a * u * u));
    CHECK(J(1, 1) == doctest::Approx(a + 0.5 * u * u));
    CHECK(J(2, 2) == doctest::Approx(a - (2 * a - 0.2) * u * u));
  }

  TEST_CASE("jacobian matches central differences at second order") {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> U(0.1, 1.5);
    const ModelParams p(1.2, 0.0, Vec3{0.3, -0.5, 0.8});
    for (int trial = 0; trial < 20; ++trial) {
      const State3 x{U(gen), U(gen), U(gen)};
      Vec3 v{U(gen), U(gen), U(gen)};
      v = v / norm(v);
      const Vec3 Fv = jacobian(p, x) * v;
      const double e1 = norm(fd_column(p, x, v, 1e-3) - Fv);
      const double e2 = norm(fd_column(p, x, v, 1e-4) - Fv);
      const double ratio = e1 / e2;
      CHECK(ratio >= 50.0);
      CHECK(ratio <= 200.0);
    }
  }

  TEST_CASE("regime classification") {
    auto cls = [](Vec3 d) { return classify_regime(ModelParams(1.0, 0.0, d)); };
    CHECK(cls({0, 0, 0}).canonical_case == CanonicalCase::I);
    CHECK(cls({0, 0, 0}).pattern_string() == "(+,+,+)");
    CHECK(cls({-2, 0, -3}).canonical_case == CanonicalCase::II);
    CHECK(cls({-2, 0, -3}).pattern_string() == "(-,+,-)");
    CHECK(cls({-1, 0, 0}).canonical_case == CanonicalCase::IIIa);
    CHECK(cls({-1, 0, 0}).pattern_string() == "(0,+,+)");
    CHECK(cls({-1, -1, -1}).canonical_case == CanonicalCase::V);
    CHECK(cls({-1, -1, 0}).canonical_case == CanonicalCase::IV);
    CHECK(cls({-2, -2, -2}).canonical_case == CanonicalCase::I);
    CHECK(cls({0, -1, -2}).canonical_case == CanonicalCase::IIIb);
  }

  TEST_CASE("zero tolerance") {
    const ModelParams p(1.0, 0.0, Vec3{-1.0 + 1e-13, 0, 0});
    CHECK(classify_regime(p).canonical_case == CanonicalCase::IIIa);
    CHECK(classify_regime(p, 1e-14).canonical_case == CanonicalCase::I);
  }

  TEST_CASE("classification is invariant under coordinate permutation") {
    const Vec3 ds[] = {{0, 0, 0}, {-2, 0, -3}, {-1, 0, 0}, {0, -1, -2}, {-1, -1, 0}, {-1, -1, -1},
                       {1, -3, 0.5}, {-1.5, -3, 2}, {0, -2, -1}};
    const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (const Vec3& d : ds) {
      const DriftRegime base = classify_regime(ModelParams(1.0, 0.0, d));
      // The witness maps raw rates to the canonical pattern.
      const Vec3 cm = transform_rates(ModelParams(1.0, 0.0, d).m(), base.permutation, base.time_reversed);
      for (int i = 0; i < 3; ++i) CHECK(cm[i] == base.canonical_m[i]);
      for (const auto& pm : perms) {
        const Vec3 dp{d[pm[0]], d[pm[1]], d[pm[2]]};
        CHECK(classify_regime(ModelParams(1.0, 0.0, dp)).canonical_case == base.canonical_case);
      }
    }
  }

  TEST_CASE("sphere residual and its derivative along the drift") {
    CHECK(sphere_residual(State3{1, 0, 0}) == 0.0);
    CHECK(sphere_residual(State3{0, 0, 0}) == -1.0);
    CHECK(sphere_residual(State3{1, 1, 1}) == 2.0);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> U(0.05, 2.0);
    const ModelParams p(0.8, 0.0, Vec3{0.3, -1.1, 0.6});
    for (int k = 0; k < 50; ++k) {
      const State3 x{U(gen), U(gen), U(gen)};
      const double lhs = 2.0 * dot(x, drift(p, x));
      const double rhs = -2.0 * 0.8 * norm2(x) * sphere_residual(x);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
    }
  }

  TEST_CASE("non-finite states are rejected") {
    const ModelParams p(1.0, 0.0, Vec3{});
    CHECK_THROWS_AS(drift(p, State3{NAN, 0, 0}), DomainError);
    CHECK_THROWS_AS(jacobian(p, State3{0, INFINITY, 0}), DomainError);
  }
}
