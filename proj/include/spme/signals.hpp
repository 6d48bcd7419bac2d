// Sampled driving paths z^(k) on a uniform time grid.
//
// A Signal covers [t_begin, t_begin + n dt]. Time 0 is always a grid point
// and every channel vanishes there; forward signals start at 0, reversed
// (half-line) windows end at 0.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace spme {

enum class ChannelKind { brownian, fbm, linear_drift, constant, custom };

std::string to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(const std::string& s);

struct ChannelInfo {
  ChannelKind kind = ChannelKind::custom;
  double hurst = 0.5;  ///< fbm only
  double rate = 0.0;   ///< linear drift only
  /// fbm synthesized by Cholesky factorization instead of circulant embedding
  bool cholesky_fallback = false;
};

class Signal {
 public:
  Signal(double dt, std::vector<std::vector<double>> values, std::vector<ChannelInfo> info,
         std::uint64_t seed = 0, double t_begin = 0.0);

  double dt() const { return dt_; }
  std::size_t channels() const { return values_.size(); }
  std::size_t samples() const { return values_.front().size(); }
  double t_begin() const { return t_begin_; }
  double t_end() const { return t_begin_ + dt_ * static_cast<double>(samples() - 1); }
  double time(std::size_t k) const { return t_begin_ + dt_ * static_cast<double>(k); }
  /// Index of the sample at t = 0.
  std::size_t origin() const;
  std::uint64_t seed() const { return seed_; }

  std::span<const double> channel(std::size_t k) const { return values_.at(k); }
  const ChannelInfo& info(std::size_t k) const { return info_.at(k); }
  bool is_reversed() const { return t_begin_ < 0.0; }

  /// Linear interpolation in time; t must lie in [t_begin, t_end].
  double value(std::size_t k, double t) const;
  /// All channels at time t.
  std::vector<double> values_at(double t) const;

  /// Same path read backwards: samples at -t for t in [0, T].
  Signal reversed() const;

 private:
  double dt_;
  double t_begin_;
  std::uint64_t seed_;
  std::vector<std::vector<double>> values_;
  std::vector<ChannelInfo> info_;
};

Signal gen_brownian(long n_steps, double dt, std::uint64_t seed);

struct FbmOptions {
  /// Skip circulant embedding (used to exercise the fallback path).
  bool force_cholesky = false;
};

/// Exact-covariance fractional Brownian motion by circulant embedding of
/// fractional Gaussian noise, with a Cholesky fallback.
Signal gen_fbm(double hurst, long n_steps, double dt, std::uint64_t seed, FbmOptions opts = {});

Signal zero_signal(long n_steps, double dt, std::size_t channels = 1);
Signal linear_drift(double rate, long n_steps, double dt);
/// Concatenates channels of signals sharing dt, length and window.
Signal stack(const std::vector<Signal>& parts);
/// a * x + y channelwise.
Signal axpy(double a, const Signal& x, const Signal& y);

/// Convolution with a normalized symmetric bump of half-width `width`, the
/// path being extended past both ends by point reflection. The result is
/// re-anchored to vanish at t = 0.
Signal smooth_signal(const Signal& s, double width);

struct GrowthReport {
  std::vector<double> t0;
  /// max_k sup_{|t| >= |t0|} |z_t| / |t|
  std::vector<double> ratio;
};

/// Sublinear-growth diagnostic along the tail of the window (t -> -inf for
/// reversed windows, t -> +inf otherwise).
GrowthReport check_sublinear_growth(const Signal& s, const std::vector<double>& t0_grid);

/// CSV with columns t,z1..zN.
void write_csv(const Signal& s, std::ostream& os);
/// JSON header: kind, H, rate, seed, dt, t_begin, fallback flags.
std::string header_json(const Signal& s);
Signal read_signal(std::istream& csv, const std::string& header);

}  // namespace spme
