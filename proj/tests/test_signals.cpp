#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "spme/errors.hpp"
#include "spme/rng.hpp"
#include "spme/signals.hpp"

using namespace spme;

TEST_SUITE("signals") {
  TEST_CASE("brownian path starts at zero and has the requested length") {
    const Signal s = gen_brownian(1, 1.0, 7);
    CHECK(s.samples() == 2);
    CHECK(s.channel(0)[0] == 0.0);
    CHECK(s.t_end() == doctest::Approx(1.0));
  }

  TEST_CASE("brownian increment variance") {
    const Signal s = gen_brownian(10000, 1e-3, 1);
    const auto z = s.channel(0);
    double sum = 0.0;
    for (std::size_t k = 1; k < z.size(); ++k) sum += (z[k] - z[k - 1]) * (z[k] - z[k - 1]);
    const double var = sum / 10000.0;
    CHECK(std::abs(var - 1e-3) <= 0.05 * 1e-3);
    // three standard errors of the pooled estimator: sqrt(2/n) relative
    CHECK(std::abs(var - 1e-3) <= 3.0 * std::sqrt(2.0 / 10000.0) * 1e-3);
  }

  TEST_CASE("same seed gives identical paths, different seeds differ") {
    const Signal a = gen_brownian(500, 1e-2, 42), b = gen_brownian(500, 1e-2, 42), c = gen_brownian(500, 1e-2, 43);
    CHECK(std::equal(a.channel(0).begin(), a.channel(0).end(), b.channel(0).begin()));
    CHECK_FALSE(std::equal(a.channel(0).begin(), a.channel(0).end(), c.channel(0).begin()));
    const Signal f1 = gen_fbm(0.3, 256, 1.0 / 256, 5), f2 = gen_fbm(0.3, 256, 1.0 / 256, 5);
    CHECK(std::equal(f1.channel(0).begin(), f1.channel(0).end(), f2.channel(0).begin()));
  }

  TEST_CASE("invalid generator arguments") {
    CHECK_THROWS_AS(gen_brownian(0, 1.0, 1), InvalidArgument);
    CHECK_THROWS_AS(gen_brownian(10, 0.0, 1), InvalidArgument);
    CHECK_THROWS_AS(gen_fbm(0.0, 10, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(gen_fbm(1.0, 10, 0.1, 1), InvalidArgument);
    CHECK_THROWS_AS(smooth_signal(gen_brownian(10, 0.1, 1), 0.05), InvalidArgument);
  }

  // Monte Carlo moments over seeds against 0.5 (s^2H + t^2H - |t-s|^2H).
  void fbm_moments(double H, int paths, bool cholesky, double& var1, double& cov) {
    var1 = cov = 0.0;
    const long n = 2048;
    for (int p = 0; p < paths; ++p) {
      const Signal s = gen_fbm(H, n, 1.0 / n, 100 + p, {cholesky});
      const double a = s.value(0, 0.5), b = s.value(0, 1.0);
      var1 += b * b;
      cov += a * b;
    }
    var1 /= paths;
    cov /= paths;
  }

  TEST_CASE("fbm variance and covariance") {
    double v, c;
    fbm_moments(0.3, 500, false, v, c);
    CHECK(std::abs(v - 1.0) <= 0.1);
    fbm_moments(0.8, 500, false, v, c);
    const double expected = 0.5 * (std::pow(0.5, 1.6) + 1.0 - std::pow(0.5, 1.6));
    CHECK(std::abs(c - expected) <= 0.1 * expected);
  }

  TEST_CASE("fbm with H = 1/2 matches the Brownian covariance min(s, t)") {
    const int paths = 400;
    double cf = 0.0, cb = 0.0;
    for (int p = 0; p < paths; ++p) {
      const Signal f = gen_fbm(0.5, 128, 1.0 / 128, 900 + p);
      const Signal b = gen_brownian(128, 1.0 / 128, 900 + p);
      cf += f.value(0, 0.25) * f.value(0, 0.75);
      cb += b.value(0, 0.25) * b.value(0, 0.75);
    }
    cf /= paths;
    cb /= paths;
    const double se = 4.0 * std::sqrt(1.0 / paths);
    CHECK(std::abs(cf - 0.25) <= se);
    CHECK(std::abs(cb - 0.25) <= se);
    CHECK(std::abs(cf - cb) <= 2.0 * se);
  }

  TEST_CASE("fbm Cholesky fallback is flagged and has the right covariance") {
    const Signal s = gen_fbm(0.7, 64, 1.0 / 64, 3, {true});
    CHECK(s.info(0).cholesky_fallback);
    CHECK(s.info(0).hurst == 0.7);
    CHECK(s.channel(0)[0] == 0.0);
    double v = 0.0;
    const int paths = 400;
    for (int p = 0; p < paths; ++p) {
      const Signal q = gen_fbm(0.7, 64, 1.0 / 64, 300 + p, {true});
      v += q.value(0, 1.0) * q.value(0, 1.0);
    }
    CHECK(std::abs(v / paths - 1.0) <= 5.0 * std::sqrt(2.0 / paths));
  }

  TEST_CASE("smoothing") {
    const Signal zero = zero_signal(100, 0.01);
    const Signal sz = smooth_signal(zero, 0.05);
    for (double v : sz.channel(0)) CHECK(v == 0.0);

    const Signal lin = linear_drift(1.0, 400, 0.01);
    const Signal sl = smooth_signal(lin, 0.1);
    for (std::size_t k = 20; k + 20 < sl.samples(); ++k) CHECK(std::abs(sl.channel(0)[k] - sl.time(k)) <= 1e-12);

    const Signal b = gen_brownian(2000, 1e-3, 11);
    double prev = INFINITY;
    for (double w : {8e-3, 4e-3, 2e-3}) {
      const Signal sb = smooth_signal(b, w);
      CHECK(sb.value(0, 0.0) == 0.0);
      double d = 0.0;
      for (std::size_t k = 0; k < b.samples(); ++k) d = std::max(d, std::abs(sb.channel(0)[k] - b.channel(0)[k]));
      CHECK(d < prev);
      prev = d;
    }
  }

  TEST_CASE("smoothing is linear") {
    const Signal x = gen_brownian(500, 1e-3, 1), y = gen_fbm(0.7, 500, 1e-3, 2);
    const Signal lhs = smooth_signal(axpy(2.5, x, y), 0.01);
    const Signal rhs = axpy(2.5, smooth_signal(x, 0.01), smooth_signal(y, 0.01));
    for (std::size_t k = 0; k < lhs.samples(); ++k)
      CHECK(std::abs(lhs.channel(0)[k] - rhs.channel(0)[k]) <= 1e-13);
  }

  TEST_CASE("reversed window") {
    const Signal b = gen_brownian(100, 0.1, 3);
    const Signal r = b.reversed();
    CHECK(r.is_reversed());
    CHECK(r.t_begin() == doctest::Approx(-10.0));
    CHECK(r.t_end() == 0.0);
    CHECK(r.value(0, -2.5) == doctest::Approx(b.value(0, 2.5)));
    CHECK(r.value(0, 0.0) == 0.0);
  }

  TEST_CASE("sublinear growth diagnostic") {
    const std::vector<double> t0{1.0, 10.0, 100.0};
    const GrowthReport z = check_sublinear_growth(zero_signal(1000, 0.1), t0);
    for (double r : z.ratio) CHECK(r == 0.0);
    const GrowthReport l = check_sublinear_growth(linear_drift(1.0, 1000, 0.1), t0);
    for (double r : l.ratio) CHECK(r == doctest::Approx(1.0));
  }

  TEST_CASE("brownian tails grow sublinearly over a long reversed window") {
    const double T = 1000.0;
    int good = 0;
    for (int s = 0; s < 200; ++s) {
      const Signal r = gen_brownian(10000, 0.1, 5000 + s).reversed();
      const GrowthReport g = check_sublinear_growth(r, {-T});
      if (g.ratio[0] < std::pow(T, -0.4)) ++good;
    }
    CHECK(good >= 190);
  }

  TEST_CASE("CSV round trip") {
    const Signal s = stack({gen_brownian(50, 0.02, 9), gen_fbm(0.3, 50, 0.02, 10)});
    std::ostringstream os;
    write_csv(s, os);
    std::istringstream is(os.str());
    const Signal back = read_signal(is, header_json(s));
    REQUIRE(back.channels() == 2);
    CHECK(back.info(1).kind == ChannelKind::fbm);
    CHECK(back.info(1).hurst == 0.3);
    for (std::size_t k = 0; k < s.samples(); ++k)
      for (std::size_t c = 0; c < 2; ++c) CHECK(back.channel(c)[k] == s.channel(c)[k]);
  }

  TEST_CASE("rng split streams are reproducible and distinct") {
    Rng a = Rng(5).split(2), b = Rng(5).split(2), c = Rng(5).split(3);
    const double x = a.normal();
    CHECK(x == b.normal());
    CHECK(x != c.normal());
  }
}
