#include "spme/signals.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "spme/errors.hpp"
#include "spme/rng.hpp"

namespace spme {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::brownian: return "brownian";
    case ChannelKind::fbm: return "fbm";
    case ChannelKind::linear_drift: return "linear-drift";
    case ChannelKind::constant: return "constant";
    case ChannelKind::custom: return "custom";
  }
  return "custom";
}

ChannelKind channel_kind_from_string(const std::string& s) {
  if (s == "brownian") return ChannelKind::brownian;
  if (s == "fbm") return ChannelKind::fbm;
  if (s == "linear-drift") return ChannelKind::linear_drift;
  if (s == "constant" || s == "zero") return ChannelKind::constant;
  if (s == "custom") return ChannelKind::custom;
  throw InvalidArgument("unknown signal kind '" + s + "'");
}

Signal::Signal(double dt, std::vector<std::vector<double>> values, std::vector<ChannelInfo> info,
               std::uint64_t seed, double t_begin)
    : dt_(dt), t_begin_(t_begin), seed_(seed), values_(std::move(values)), info_(std::move(info)) {
  if (!(dt_ > 0.0)) throw InvalidArgument("signal: dt must be positive");
  if (values_.empty()) throw InvalidArgument("signal: at least one channel required");
  if (info_.size() != values_.size()) throw InvalidArgument("signal: one info record per channel");
  const std::size_t n = values_.front().size();
  if (n < 2) throw InvalidArgument("signal: at least two samples required");
  for (const auto& c : values_)
    if (c.size() != n) throw InvalidArgument("signal: channels differ in length");
  for (const auto& i : info_)
    if (i.kind == ChannelKind::fbm && !(i.hurst > 0.0 && i.hurst < 1.0))
      throw InvalidArgument("signal: Hurst parameter must lie in (0,1)");
  if (t_begin_ > 0.0 || t_end() < -1e-12 * dt_)
    throw InvalidArgument("signal: window must contain t = 0");
  const double k0 = -t_begin_ / dt_;
  if (std::abs(k0 - std::round(k0)) > 1e-9)
    throw InvalidArgument("signal: t = 0 must be a sample time");
  const std::size_t o = origin();
  for (const auto& c : values_) {
    double scale = 0.0;
    for (double v : c) {
      if (!std::isfinite(v)) throw InvalidArgument("signal: non-finite sample");
      scale = std::max(scale, std::abs(v));
    }
    if (std::abs(c[o]) > 1e-12 * std::max(scale, 1.0))
      throw InvalidArgument("signal: every channel must vanish at t = 0");
  }
}

std::size_t Signal::origin() const {
  return static_cast<std::size_t>(std::llround(-t_begin_ / dt_));
}

double Signal::value(std::size_t k, double t) const {
  const auto& c = values_.at(k);
  const double s = (t - t_begin_) / dt_;
  const double last = static_cast<double>(c.size() - 1);
  if (s < -1e-9 || s > last + 1e-9) throw InvalidArgument("signal: time outside the window");
  const double sc = std::clamp(s, 0.0, last);
  auto j = static_cast<std::size_t>(std::floor(sc));
  if (j >= c.size() - 1) j = c.size() - 2;
  const double w = sc - static_cast<double>(j);
  return (1.0 - w) * c[j] + w * c[j + 1];
}

std::vector<double> Signal::values_at(double t) const {
  std::vector<double> out(channels());
  for (std::size_t k = 0; k < channels(); ++k) out[k] = value(k, t);
  return out;
}

Signal Signal::reversed() const {
  auto vals = values_;
  for (auto& c : vals) std::reverse(c.begin(), c.end());
  return Signal(dt_, std::move(vals), info_, seed_, -t_end());
}

Signal gen_brownian(long n_steps, double dt, std::uint64_t seed) {
  if (n_steps < 1) throw InvalidArgument("gen_brownian: n_steps must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("gen_brownian: dt must be positive");
  Rng rng(seed);
  std::vector<double> z(static_cast<std::size_t>(n_steps) + 1, 0.0);
  const double sd = std::sqrt(dt);
  for (std::size_t k = 1; k < z.size(); ++k) z[k] = z[k - 1] + sd * rng.normal();
  return Signal(dt, {std::move(z)}, {ChannelInfo{ChannelKind::brownian}}, seed);
}

namespace {

// Autocovariance of unit-step fractional Gaussian noise at lag k.
double fgn_autocov(double hurst, double k) {
  const double e = 2.0 * hurst;
  return 0.5 * (std::pow(std::abs(k + 1.0), e) - 2.0 * std::pow(std::abs(k), e) +
                std::pow(std::abs(k - 1.0), e));
}

// Returns false when the circulant spectrum has negative entries.
bool fbm_circulant(double hurst, std::size_t n, Rng& rng, std::vector<double>& incr) {
  const std::size_t big = 2 * n;
  fftw_complex* buf = fftw_alloc_complex(big);
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(big), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  for (std::size_t j = 0; j < big; ++j) {
    const std::size_t lag = j <= n ? j : big - j;
    buf[j][0] = fgn_autocov(hurst, static_cast<double>(lag));
    buf[j][1] = 0.0;
  }
  fftw_execute(plan);
  std::vector<double> lambda(big);
  double lmax = 0.0;
  for (std::size_t j = 0; j < big; ++j) {
    lambda[j] = buf[j][0];
    lmax = std::max(lmax, std::abs(lambda[j]));
  }
  bool ok = true;
  for (double& l : lambda) {
    if (l < -1e-10 * lmax) ok = false;
    l = std::max(l, 0.0);
  }
  if (ok) {
    const double nb = static_cast<double>(big);
    for (std::size_t j = 0; j < big; ++j) {
      const double a = std::sqrt(lambda[j] / nb);
      buf[j][0] = a * rng.normal();
      buf[j][1] = a * rng.normal();
    }
    fftw_execute(plan);
    incr.resize(n);
    for (std::size_t j = 0; j < n; ++j) incr[j] = buf[j][0];
  }
  fftw_destroy_plan(plan);
  fftw_free(buf);
  return ok;
}

std::vector<double> fbm_cholesky(double hurst, std::size_t n, double dt, Rng& rng) {
  const double e = 2.0 * hurst;
  Eigen::MatrixXd cov(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double s = dt * static_cast<double>(i + 1), t = dt * static_cast<double>(j + 1);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(t - s), e));
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("gen_fbm: covariance not positive definite");
  Eigen::VectorXd g(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
  Eigen::VectorXd z = llt.matrixL() * g;
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) out[i + 1] = z[static_cast<Eigen::Index>(i)];
  return out;
}

}  // namespace

Signal gen_fbm(double hurst, long n_steps, double dt, std::uint64_t seed, FbmOptions opts) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw InvalidArgument("gen_fbm: Hurst parameter must lie in (0,1)");
  if (n_steps < 1) throw InvalidArgument("gen_fbm: n_steps must be >= 1");
  if (!(dt > 0.0)) throw InvalidArgument("gen_fbm: dt must be positive");
  const auto n = static_cast<std::size_t>(n_steps);
  Rng rng(seed);
  ChannelInfo info{ChannelKind::fbm, hurst};
  std::vector<double> incr;
  std::vector<double> z;
  if (!opts.force_cholesky && fbm_circulant(hurst, n, rng, incr)) {
    const double scale = std::pow(dt, hurst);
    z.assign(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) z[k + 1] = z[k] + scale * incr[k];
  } else {
    info.cholesky_fallback = true;
    z = fbm_cholesky(hurst, n, dt, rng);
  }
  return Signal(dt, {std::move(z)}, {info}, seed);
}

Signal zero_signal(long n_steps, double dt, std::size_t channels) {
  if (n_steps < 1) throw InvalidArgument("zero_signal: n_steps must be >= 1");
  if (channels < 1) throw InvalidArgument("zero_signal: at least one channel");
  std::vector<std::vector<double>> v(channels, std::vector<double>(static_cast<std::size_t>(n_steps) + 1, 0.0));
  return Signal(dt, std::move(v), std::vector<ChannelInfo>(channels, ChannelInfo{ChannelKind::constant}));
}

Signal linear_drift(double rate, long n_steps, double dt) {
  if (n_steps < 1) throw InvalidArgument("linear_drift: n_steps must be >= 1");
  std::vector<double> z(static_cast<std::size_t>(n_steps) + 1);
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = rate * dt * static_cast<double>(k);
  ChannelInfo info{ChannelKind::linear_drift};
  info.rate = rate;
  return Signal(dt, {std::move(z)}, {info});
}

Signal stack(const std::vector<Signal>& parts) {
  if (parts.empty()) throw InvalidArgument("stack: no signals");
  std::vector<std::vector<double>> v;
  std::vector<ChannelInfo> info;
  const Signal& first = parts.front();
  for (const auto& p : parts) {
    if (p.samples() != first.samples() || p.dt() != first.dt() || p.t_begin() != first.t_begin())
      throw InvalidArgument("stack: signals must share the time grid");
    for (std::size_t k = 0; k < p.channels(); ++k) {
      v.emplace_back(p.channel(k).begin(), p.channel(k).end());
      info.push_back(p.info(k));
    }
  }
  return Signal(first.dt(), std::move(v), std::move(info), first.seed(), first.t_begin());
}

Signal axpy(double a, const Signal& x, const Signal& y) {
  if (x.channels() != y.channels() || x.samples() != y.samples() || x.dt() != y.dt() ||
      x.t_begin() != y.t_begin())
    throw InvalidArgument("axpy: signals must share channels and time grid");
  std::vector<std::vector<double>> v(x.channels());
  for (std::size_t k = 0; k < x.channels(); ++k) {
    v[k].resize(x.samples());
    for (std::size_t j = 0; j < x.samples(); ++j) v[k][j] = a * x.channel(k)[j] + y.channel(k)[j];
  }
  return Signal(x.dt(), std::move(v), std::vector<ChannelInfo>(x.channels()), x.seed(), x.t_begin());
}

Signal smooth_signal(const Signal& s, double width) {
  if (!(width >= s.dt() * (1.0 - 1e-12))) throw InvalidArgument("smooth_signal: width must be >= dt");
  const auto half = static_cast<long>(std::floor(width / s.dt() * (1.0 + 1e-12)));
  std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
  double total = 0.0;
  for (long j = -half; j <= half; ++j) {
    const double x = static_cast<double>(j) * s.dt() / (width * (1.0 + 1e-9));
    const double k = std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
    w[static_cast<std::size_t>(j + half)] = k;
    total += k;
  }
  for (double& k : w) k /= total;

  const auto n = static_cast<long>(s.samples());
  std::vector<std::vector<double>> out(s.channels(), std::vector<double>(s.samples()));
  for (std::size_t c = 0; c < s.channels(); ++c) {
    const auto z = s.channel(c);
    // Point reflection through the end samples preserves affine paths.
    auto ext = [&](long i) {
      if (i < 0) return 2.0 * z[0] - z[static_cast<std::size_t>(std::min(-i, n - 1))];
      if (i >= n) return 2.0 * z[static_cast<std::size_t>(n - 1)] -
                         z[static_cast<std::size_t>(std::max(2 * (n - 1) - i, 0L))];
      return z[static_cast<std::size_t>(i)];
    };
    for (long i = 0; i < n; ++i) {
      double acc = 0.0;
      for (long j = -half; j <= half; ++j) acc += w[static_cast<std::size_t>(j + half)] * ext(i + j);
      out[c][static_cast<std::size_t>(i)] = acc;
    }
    const double anchor = out[c][s.origin()];
    for (double& v : out[c]) v -= anchor;
    out[c][s.origin()] = 0.0;
  }
  std::vector<ChannelInfo> info(s.channels());
  for (std::size_t c = 0; c < s.channels(); ++c) {
    info[c] = s.info(c);
    if (info[c].kind != ChannelKind::constant && info[c].kind != ChannelKind::linear_drift)
      info[c].kind = ChannelKind::custom;
  }
  return Signal(s.dt(), std::move(out), std::move(info), s.seed(), s.t_begin());
}

GrowthReport check_sublinear_growth(const Signal& s, const std::vector<double>& t0_grid) {
  if (s.samples() < 2 || t0_grid.empty()) throw InvalidArgument("check_sublinear_growth: empty window");
  GrowthReport rep;
  const bool rev = s.is_reversed();
  for (double t0 : t0_grid) {
    double best = 0.0;
    for (std::size_t j = 0; j < s.samples(); ++j) {
      const double t = s.time(j);
      const bool in_tail = rev ? t <= t0 + 1e-12 * s.dt() : t >= t0 - 1e-12 * s.dt();
      if (!in_tail || std::abs(t) < 0.5 * s.dt()) continue;
      for (std::size_t k = 0; k < s.channels(); ++k)
        best = std::max(best, std::abs(s.channel(k)[j]) / std::abs(t));
    }
    rep.t0.push_back(t0);
    rep.ratio.push_back(best);
  }
  return rep;
}

void write_csv(const Signal& s, std::ostream& os) {
  os << "t";
  for (std::size_t k = 0; k < s.channels(); ++k) os << ",z" << (k + 1);
  os << '\n';
  char buf[64];
  for (std::size_t j = 0; j < s.samples(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", s.time(j));
    os << buf;
    for (std::size_t k = 0; k < s.channels(); ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g", s.channel(k)[j]);
      os << buf;
    }
    os << '\n';
  }
}

std::string header_json(const Signal& s) {
  nlohmann::json h;
  h["dt"] = s.dt();
  h["t_begin"] = s.t_begin();
  h["seed"] = s.seed();
  h["channels"] = nlohmann::json::array();
  for (std::size_t k = 0; k < s.channels(); ++k) {
    const auto& i = s.info(k);
    nlohmann::json c{{"kind", to_string(i.kind)}};
    if (i.kind == ChannelKind::fbm) {
      c["H"] = i.hurst;
      c["cholesky_fallback"] = i.cholesky_fallback;
    }
    if (i.kind == ChannelKind::linear_drift) c["rate"] = i.rate;
    h["channels"].push_back(c);
  }
  return h.dump();
}

Signal read_signal(std::istream& csv, const std::string& header) {
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("signal header: ") + e.what());
  }
  std::vector<ChannelInfo> info;
  for (const auto& c : h.at("channels")) {
    ChannelInfo i;
    i.kind = channel_kind_from_string(c.at("kind").get<std::string>());
    i.hurst = c.value("H", 0.5);
    i.rate = c.value("rate", 0.0);
    i.cholesky_fallback = c.value("cholesky_fallback", false);
    info.push_back(i);
  }
  std::string line;
  std::getline(csv, line);
  std::vector<std::vector<double>> v(info.size());
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');
    for (auto& c : v) {
      if (!std::getline(ss, cell, ',')) throw InvalidArgument("signal csv: missing column");
      c.push_back(std::stod(cell));
    }
  }
  return Signal(h.at("dt").get<double>(), std::move(v), std::move(info), h.value("seed", std::uint64_t{0}),
                h.value("t_begin", 0.0));
}

}  // namespace spme
