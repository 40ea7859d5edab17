#include <doctest.h>

#include <cmath>

#include "kolmo/flow.hpp"
#include "kolmo/logistic.hpp"
#include "kolmo/noise.hpp"
#include "kolmo/random_dynamics.hpp"
#include "kolmo/rng.hpp"
#include "kolmo/sde.hpp"
#include "oracles.hpp"

using namespace kolmo;

TEST_SUITE("random_dynamics") {
  TEST_CASE("pull-back point and the one-pass evaluator agree") {
    const ModelParams p(1.0, 1.0, Vec3{0.5, -0.2, 0.3});
    const BrownianPath path = sample_path(7, -30.0, 1.0, 1e-3);
    const State3 x0{1, 1, 1};
    PullbackEvaluator ev(p, path, x0, 20.0);
    for (double t : {0.5, 3.0, 12.0, 20.0}) {
      const State3 a = pullback_point(p, path, x0, t);
      const State3 b = ev.at_node(static_cast<std::size_t>(std::llround(t / 1e-3)));
      CHECK(norm(a - b) < 1e-10);
    }
  }

  TEST_CASE("deterministic pull-back is the flow") {
    const ModelParams p(1.0, 0.0, Vec3{0.5, -0.2, 0.3});
    const BrownianPath path = sample_path(7, -10.0, 0.0, 1e-3);
    const State3 x0{0.2, 0.5, 0.3};
    CHECK(norm(pullback_point(p, path, x0, 6.0) - flow_at(p, x0, 6.0)) < 1e-12);
  }

  TEST_CASE("pull-back limits by regime") {
    const BrownianPath path = sample_path(19, -120.0, 0.0, 1e-3);
    SUBCASE("at the threshold the origin attracts") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 2.0, Vec3{});
      const OmegaLimitSample s = pullback_limit(p, path, State3{1, 1, 1}, 100.0, 1e-4);
      CHECK(s.kind == PullbackKind::origin);
    }
    SUBCASE("case II interior start goes to u_g e1") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{-2, 0, -3});
      const OmegaLimitSample s = pullback_limit(p, path, State3{0.3, 0.4, 0.5}, 100.0, 1e-6);
      CHECK(s.kind == PullbackKind::point);
      CHECK(s.deterministic_label == "e1");
      CHECK_FALSE(s.inconclusive);
      CHECK(norm(s.point - State3{oracle::u_g(path, 1.0, std::sqrt(0.5)), 0, 0}) < 1e-5);
    }
    SUBCASE("case I off the Q* ray gives a random cycle") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{1, 1, 1});
      const State3 x0{1, 0.5, 0.2};
      const OmegaLimitSample s = pullback_limit(p, path, x0, 50.0, 1e-4);
      CHECK(s.kind == PullbackKind::cycle);
      CHECK(s.h == doctest::Approx(first_integral(p, x0)));
      CHECK_FALSE(s.inconclusive);
      const double u = oracle::u_g(path, 1.0, std::sqrt(0.5));
      const PeriodicOrbit orbit(p, s.h, 1024);
      for (std::size_t i = 0; i < s.cycle_points.size(); i += 50)
        CHECK(orbit.distance(s.cycle_points[i] / u) < 1e-4);
    }
    SUBCASE("limits do not depend on the start within a domain") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{-2, 0, -3});
      const auto a = pullback_limit(p, path, State3{0.3, 0.4, 0.5}, 100.0, 1e-7);
      const auto b = pullback_limit(p, path, State3{1.5, 0.1, 0.9}, 100.0, 1e-7);
      CHECK(norm(a.point - b.point) < 2e-7);
    }
  }

  TEST_CASE("random equilibrium") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.8, Vec3{0.3, 0.1, -0.2});
    const BrownianPath path = sample_path(3, -80.0, 10.0, 1e-3);
    CHECK(random_equilibrium(p, path, State3{}) == State3{});
    CHECK(norm(random_equilibrium(p.with_sigma(0.0), path, State3{0, 1, 0}) - State3{0, 1, 0}) < 1e-14);
    const State3 ue = random_equilibrium(p, path, State3{0, 0, 1});
    const TrajectoryRecord r = integrate_sde(p, path, ue, 5.0, {Scheme::milstein, 1e-3});
    const double u5 = oracle::u_g(shift(path, 5.0), 1.0, p.sigma());
    CHECK(std::abs(r.back()[2] - u5) < 1e-3);
    CHECK(norm(decompose(p, path, ue, ue[2], 5.0) - State3{0, 0, u5}) < 1e-8);
    CHECK_THROWS_AS(random_equilibrium(p, path, State3{0.5, 0.5, 0}), DomainError);
    CHECK_THROWS_AS(random_equilibrium(ModelParams::from_sigma2(1.0, 2.5, Vec3{}), path, State3{1, 0, 0}),
                    DomainError);
  }

  TEST_CASE("analytic exponents") {
    const Vec3 o2 = lyapunov_analytic(ModelParams::from_sigma2(1.0, 2.0, Vec3{}), MeasureId::O);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(o2[i]) < 1e-14);
    const Vec3 o3 = lyapunov_analytic(ModelParams::from_sigma2(1.0, 3.0, Vec3{}), MeasureId::O);
    for (int i = 0; i < 3; ++i) CHECK(o3[i] == doctest::Approx(-0.5));
    const Vec3 e1 = lyapunov_analytic(ModelParams::from_sigma2(1.0, 1.0, Vec3{0.5, -0.2, 0.3}), MeasureId::e1);
    CHECK(e1[0] == doctest::Approx(-1.0));
    CHECK(e1[1] == doctest::Approx(0.75));
    CHECK(e1[2] == doctest::Approx(-0.4));
    CHECK(measure_from_string("e2") == MeasureId::e2);
    CHECK_THROWS_AS(measure_from_string("e4"), DomainError);
    CHECK_THROWS_AS(lyapunov_analytic(ModelParams::from_sigma2(1.0, 2.0, Vec3{}), MeasureId::e1), DomainError);
  }

  TEST_CASE("numeric exponents") {
    LyapunovOptions opt;
    opt.T = 2000.0;
    SUBCASE("origin at sigma^2 = 1") {
      const auto e = lyapunov_numeric(ModelParams::from_sigma2(1.0, 1.0, Vec3{}), 1, LyapunovBase::origin(),
                                      Vec3{0, 1, 0}, opt);
      CHECK(std::abs(e.value - 0.5) < 0.05);
      CHECK(e.horizon == 2000.0);
      CHECK(e.renormalization_count > 0);
    }
    SUBCASE("sign dichotomy at the origin") {
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < 20; ++i) seeds.push_back(rng::member_seed(44, i));
      const auto below = lyapunov_numeric(ModelParams::from_sigma2(1.0, 1.5, Vec3{}), seeds, LyapunovBase::origin(),
                                          Vec3{1, 0, 0}, opt);
      const auto above = lyapunov_numeric(ModelParams::from_sigma2(1.0, 2.5, Vec3{}), seeds, LyapunovBase::origin(),
                                          Vec3{1, 0, 0}, opt);
      const auto at = lyapunov_numeric(ModelParams::from_sigma2(1.0, 2.0, Vec3{}), seeds, LyapunovBase::origin(),
                                       Vec3{1, 0, 0}, opt);
      CHECK(below.value > 0.0);
      CHECK(above.value < 0.0);
      CHECK(std::abs(at.value) < 2.0 * at.standard_error);
      CHECK(at.seeds == 20);
    }
    SUBCASE("u_g e1 axes with d = 0") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 1.0, Vec3{});
      const auto a1 = lyapunov_numeric(p, 2, LyapunovBase::equilibrium(0), Vec3{1, 0, 0}, opt);
      const auto a2 = lyapunov_numeric(p, 2, LyapunovBase::equilibrium(0), Vec3{0, 1, 0}, opt);
      CHECK(std::abs(a1.value + 1.0) < 0.1);
      CHECK(std::abs(a2.value - 0.5) < 0.05);
    }
    SUBCASE("zero exponent when d1 = -alpha") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 1.0, Vec3{-1, 0, 0});
      const auto a2 = lyapunov_numeric(p, 2, LyapunovBase::equilibrium(0), Vec3{0, 1, 0}, opt);
      CHECK(std::abs(a2.value) < 0.05);
    }
    SUBCASE("results do not depend on the thread count") {
      const ModelParams p = ModelParams::from_sigma2(1.0, 1.0, Vec3{});
      opt.T = 200.0;
      const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
      const auto a = lyapunov_numeric(p, seeds, LyapunovBase::origin(), Vec3{1, 0, 0}, opt, 1);
      const auto b = lyapunov_numeric(p, seeds, LyapunovBase::origin(), Vec3{1, 0, 0}, opt, 3);
      CHECK(a.value == b.value);
      CHECK(a.standard_error == b.standard_error);
    }
  }

  TEST_CASE("CRPS construction") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{1, 1, 1});
    const double h = h_star(p) + 1.0;
    SUBCASE("identities on one path") {
      const BrownianPath path = sample_path(5, -80.0, 20.0, 1e-3);
      const CrpsSample c = crps(p, path, h, 1e-8);
      CHECK(c.identity_residual < 1e-3);
      CHECK(c.solution_residual < 1e-3);
      CHECK(c.u_g == doctest::Approx(oracle::u_g(path, 1.0, p.sigma())).epsilon(1e-8));
      CHECK(std::abs(oracle::h1(1.0, Vec3{1, 1, 1}, c.y0) - h) < 1e-8);
    }
    SUBCASE("deterministic period") {
      const BrownianPath path = sample_path(5, -80.0, 20.0, 1e-3);
      const CrpsSample c = crps(p.with_sigma(0.0), path, h, 1e-8);
      CHECK(std::abs(c.period_T - c.N_h) < 1e-6);
    }
    SUBCASE("residuals stay at round-off on coarse and refined paths") {
      // The construction is exact for a piecewise-linear path, so no step size dependence remains.
      const BrownianPath coarse = sample_path(6, -80.0, 20.0, 1.6e-2);
      for (int f : {1, 4, 16}) {
        const CrpsSample c = crps(p, f == 1 ? coarse : refine(coarse, f), h, 1e-8);
        CHECK(c.identity_residual < 1e-8);
        CHECK(c.solution_residual < 1e-8);
      }
    }
    SUBCASE("mean of N/T over an ensemble") {
      double m = 0.0;
      const int n = 40;
      for (int i = 0; i < n; ++i) {
        const BrownianPath path = sample_path(rng::member_seed(88, i), -60.0, 0.0, 2e-3);
        const RandomEquilibriumTrack track(p, path, -40.0, 0.0);
        const double N = period_of_orbit(p, h);
        // Birkhoff: T(theta_{-t}) over many t averages to N / E u_g^2.
        double s = 0.0;
        int k = 0;
        for (double t = 0.0; t < 20.0; t += 0.5, ++k) s += N / random_periodic_time(track, t, N, 2 * N);
        m += s / k;
      }
      m /= n;
      CHECK(std::abs(m / 0.75 - 1.0) < 0.05);
    }
    SUBCASE("regime checks") {
      const BrownianPath path = sample_path(5, -80.0, 20.0, 1e-3);
      CHECK_THROWS_AS(crps(ModelParams::from_sigma2(1.0, 0.5, Vec3{-2, 0, -3}), path, 5.0, 1e-8), DomainError);
      CHECK_THROWS_AS(crps(p, path, h_star(p) * 0.9, 1e-8), DomainError);
      CHECK_THROWS_AS(crps(p, sample_path(5, -8.0, 20.0, 1e-3), h, 1e-8), DomainError);
    }
  }

  TEST_CASE("cone invariance") {
    const ModelParams p = ModelParams::from_sigma2(1.0, 0.5, Vec3{});
    const double h = h_star(p) + 1.0;
    CHECK(cone_invariance_check(p.with_sigma(0.0), 1, h, 10.0, 1e-3) < 1e-6);
    double prev = INFINITY;
    for (double dt : {4e-3, 2e-3, 1e-3}) {
      double m = 0.0;
      for (std::uint64_t s = 1; s <= 5; ++s) m += cone_invariance_check(p, s, h, 10.0, dt, 1.0);
      CHECK(m < prev);
      prev = m;
    }
    CHECK(cone_invariance_check(p, 1, h, 10.0, 1e-3, 2.0) < 5e-2);
    CHECK_THROWS_AS(cone_invariance_check(p, 1, 1.0, 10.0, 1e-3), DomainError);
  }
}
