#include <doctest.h>

#include <cmath>

#include "kolmo/logistic.hpp"
#include "kolmo/noise.hpp"
#include "kolmo/rng.hpp"
#include "oracles.hpp"

using namespace kolmo;

TEST_SUITE("logistic") {
  TEST_CASE("deterministic closed forms") {
    const ModelParams p(1.0, 0.0, Vec3{});
    const BrownianPath path = sample_path(1, 0.0, 5.0, 1e-3);
    for (double t : {0.0, 0.5, 1.0, 3.0, 5.0}) {
      CHECK(g_explicit(p, path, 0.0, t) == 0.0);
      CHECK(g_explicit(p, path, 1.0, t) == doctest::Approx(1.0).epsilon(1e-14));
      const double ref = 2 * std::exp(t) / std::sqrt(4 * std::exp(2 * t) - 3);
      CHECK(g_explicit(p, path, 2.0, t) == doctest::Approx(ref).epsilon(1e-12));
    }
    CHECK(time_average_g2(p, path, 1.0, 5.0) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("recursion track agrees with the explicit formula") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.7, Vec3{});
    const BrownianPath path = sample_path(5, 0.0, 20.0, 1e-3);
    const LogisticTrack tr(p, path, 0.4, 20.0);
    for (std::size_t n : {0ul, 10ul, 1000ul, 7777ul, 20000ul}) {
      const double t = tr.time(n);
      CHECK(tr.g(n) == doctest::Approx(g_explicit(p, path, 0.4, t)).epsilon(1e-10));
      CHECK(tr.tau(n) == doctest::Approx(integral_g2(p, path, 0.4, t)).epsilon(1e-10));
    }
    // tau against Gauss quadrature of g^2 on a piecewise-linear W.
    const double kappa = p.kappa(), sigma = p.sigma();
    const double lj = oracle::log_int_exp_y(path, kappa, sigma, 0, 5000);
    const double I = std::exp(lj);
    const double y5 = 2 * (kappa * 5.0 + sigma * path.at(5000));
    const double g2 = std::exp(y5) / (1 / (0.4 * 0.4) + 2 * I);
    CHECK(tr.g(5000) * tr.g(5000) == doctest::Approx(g2).epsilon(1e-10));
    CHECK(tr.tau(5000) == doctest::Approx(std::log1p(2 * 0.16 * I) / 2).epsilon(1e-10));
  }

  TEST_CASE("positivity and cocycle") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 1.2, Vec3{});
    const BrownianPath path = sample_path(8, 0.0, 30.0, 1e-3);
    const LogisticTrack tr(p, path, 0.01, 30.0);
    for (std::size_t n = 0; n < tr.nodes(); n += 97) CHECK(tr.g(n) > 0.0);
    const double s = 7.0, t = 11.5;
    const double gs = g_explicit(p, path, 1.3, s);
    const double lhs = g_explicit(p, path, 1.3, s + t);
    const double rhs = g_explicit(p, shift(path, s), gs, t);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }

  TEST_CASE("u_g: deterministic limit and independent quadrature") {
    const ModelParams p0(2.0, 0.0, Vec3{});
    CHECK(u_g(p0, sample_path(1, -30.0, 0.0, 1e-2)).value == doctest::Approx(1.0).epsilon(1e-12));
    const ModelParams p = ModelParams::from_sigma2(1.0, 1.0, Vec3{});
    for (std::uint64_t sd : {1ull, 2ull, 3ull}) {
      const BrownianPath path = sample_path(sd, -150.0, 0.0, 1e-3);
      const RandomEquilibriumScalar u = u_g(p, path, 1e-10);
      CHECK(u.value == doctest::Approx(oracle::u_g(path, 1.0, 1.0)).epsilon(1e-9));
      CHECK(u.tail_bound < 1e-10);
      CHECK(u.truncation_depth >= truncation_depth(p, 1e-10));
    }
    CHECK(truncation_depth(p, 1e-8) == doctest::Approx(std::log(1e8)));
    CHECK(truncation_depth(ModelParams::from_sigma2(5.0, 1.0, Vec3{}), 1e-8) == 10.0);
    CHECK_THROWS_AS(u_g(ModelParams::from_sigma2(1.0, 2.0, Vec3{}), sample_path(1, -50, 0, 1e-2)), DomainError);
  }

  TEST_CASE("u_g is a random equilibrium of the scalar cocycle") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.8, Vec3{});
    const BrownianPath path = sample_path(12, -120.0, 20.0, 1e-3);
    const double u0 = u_g(p, path).value;
    const RandomEquilibriumTrack track(p, path, -80.0, 20.0);
    for (double t : {1.0, 5.0, 17.3}) {
      const double g = g_explicit(p, path, u0, t);
      const double ut = u_g(p, shift(path, t)).value;
      CHECK(g == doctest::Approx(ut).epsilon(1e-8));
      CHECK(track.u2_at(t) == doctest::Approx(g * g).epsilon(1e-8));
    }
  }

  TEST_CASE("ensemble mean of u_g^2") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.6, Vec3{});
    const int n = 10000;
    double m = 0.0;
    for (int i = 0; i < n; ++i) {
      const double u = u_g(p, sample_path(rng::member_seed(3, i), -40.0, 0.0, 2e-2), 1e-6).value;
      m += u * u;
    }
    m /= n;
    CHECK(std::abs(m / 0.7 - 1.0) < 0.02);
  }

  TEST_CASE("stationary density values") {
    const ModelParams p1 = ModelParams::from_sigma2(1.0, 1.0, Vec3{});
    CHECK(stationary_density(p1, 1e-12) == doctest::Approx(2 / std::sqrt(M_PI)).epsilon(1e-10));
    for (double s : {0.1, 0.5, 1.3})
      CHECK(stationary_density(p1, s) == doctest::Approx(2 * std::exp(-s * s) / std::sqrt(M_PI)).epsilon(1e-13));
    for (double s2 : {0.3, 0.5, 1.0, 1.5, 1.9}) {
      const ModelParams p = ModelParams::from_sigma2(1.0, s2, Vec3{});
      // s = v^k with k (2b - 1) >= 4 removes the integrable singularity at 0.
      const double b = 1.0 / s2;
      const int k = static_cast<int>(std::ceil(4.0 / (2.0 * b - 1.0)));
      const double total = oracle::integrate(
          [&](double v) {
            const double s = std::pow(v, k);
            return s <= 0 ? 0.0 : stationary_density(p, s) * k * std::pow(v, k - 1);
          },
          0.0, std::pow(8.0, 1.0 / k), 400);
      CHECK(std::abs(total - 1.0) < 1e-8);
      for (double s : {0.2, 0.7, 1.4}) {
        CHECK(stationary_density(p, s) == doctest::Approx(oracle::stationary_density(1.0, s2, s)).epsilon(1e-12));
        CHECK(stationary_cdf(p, s) == doctest::Approx(oracle::stationary_cdf(1.0, s2, s)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("incomplete gamma and Gamma via the library") {
    for (double a : {0.05, 0.5, 1.0, 2.5, 10.0, 40.0})
      for (double x : {0.0, 0.01, 0.7, 3.0, 12.0, 60.0})
        CHECK(regularized_gamma_p(a, x) == doctest::Approx(boost::math::gamma_p(a, x)).epsilon(1e-12));
  }

  TEST_CASE("density mode") {
    CHECK(*density_mode(ModelParams::from_sigma2(1.0, 0.5, Vec3{})) == doctest::Approx(std::sqrt(0.5)));
    CHECK_FALSE(density_mode(ModelParams::from_sigma2(1.0, 1.0, Vec3{})).has_value());
    CHECK_FALSE(density_mode(ModelParams::from_sigma2(1.0, 1.5, Vec3{})).has_value());
    CHECK(*density_mode(ModelParams::from_sigma2(1.0, 0.999999, Vec3{})) == doctest::Approx(1e-3).epsilon(1e-6));
  }

  TEST_CASE("time averages of g^2") {
    for (auto [s2, target] : {std::pair{1.0, 0.5}, std::pair{1.8, 0.1}}) {
      const ModelParams p = ModelParams::from_sigma2(1.0, s2, Vec3{});
      const BrownianPath path = sample_path(31, 0.0, 1e4, 1e-2);
      CHECK(std::abs(time_average_g2(p, path, 1.0, 1e4) - target) < 0.02);
    }
  }

  TEST_CASE("pull-back convergence of g") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{});
    const BrownianPath path = sample_path(4, -60.0, 0.0, 1e-3);
    const double u = u_g(p, path, 1e-13).value;
    const double far = g_explicit(p, shift(path, -40.0), 3.0, 40.0);
    CHECK(far == doctest::Approx(u).epsilon(1e-10));
    const PullbackRate r = empirical_pullback_rate(p, path, 3.0, 20.0);
    CHECK(r.rate > 0.0);
    const ModelParams pz = ModelParams::from_sigma2(1.0, 3.0, Vec3{});
    CHECK(g_explicit(pz, shift(sample_path(4, -60.0, 0.0, 1e-3), -60.0), 3.0, 60.0) < 1e-3);
  }
}
