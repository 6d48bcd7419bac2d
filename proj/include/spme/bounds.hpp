// Explicit hole-filling and propagation bounds.
//
// The small-ball and small-time constants are evaluated from the explicit
// bracket
//
//   B = 1 + 2m(m-1)/(d(m-1)+2) |grad nu| R + m(m-1) C_det R^2 (m |grad nu|^2 + |Lap nu|)
//
// with nu = mu (small balls) or nu = mu_0 - mu_t (small times), sup-norms
// taken over the window and the closed ball. Where only a generic constant
// C(d,m) is available, general_constant() fixes one.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "spme/geometry.hpp"
#include "spme/noise_field.hpp"
#include "spme/support.hpp"
#include "spme/transforms.hpp"

namespace spme {

double c_det(double m, int d);

/// C(d,m) = m(m-1) max(1, 1/C_det) (1 + 2m/(d(m-1)+2)).
double general_constant(double m, int d);

/// 1 + 2m(m-1)/(d(m-1)+2) g R + m(m-1) C_det R^2 (m g^2 + l).
double bracket(double m, int d, double R, double grad_sup, double lap_sup);

enum class BoundKind { deterministic, homogeneous, small_ball, small_time, general };
std::string to_string(BoundKind kind);

struct HoleFillingBound {
  BoundKind kind = BoundKind::deterministic;
  double R = 0.0;
  double H = 0.0;
  double m = 2.0;
  int d = 1;
  double c_det = 0.0;
  /// C_R (small ball), C_{T*} (small time, general), 1 otherwise.
  double modulation = 1.0;
  /// Elapsed vanishing horizon measured from the window start.
  double t_star = 0.0;
  /// The defining equation had no solution inside the window; t_star is
  /// the window length.
  bool clamped = false;
  TimeWindow window{0.0, 0.0};
  MuNorms norms;
  /// Raw R*(t), t elapsed from the window start (may go negative past t_star).
  std::function<double(double)> schedule;

  /// max(0, R*(t)).
  double radius(double t) const;
  std::vector<double> sample(std::span<const double> t) const;
  nlohmann::json to_json() const;
};

HoleFillingBound det_hole_bound(double R, double H, double m, int d);

/// H is the sup of exp(mu) g on the boundary.
HoleFillingBound homog_hole_bound(double R, double H, double m, int d, const TimeChange& tc);

/// C_R for the ball B_R(xi0) over `window`; norms on a lattice of spacing h/refine.
double small_ball_constant(double R, const Point& xi0, const NoiseField& field, TimeWindow window,
                           double m, int d, double h, int refine = 4, MuNorms* norms = nullptr);

HoleFillingBound small_ball_bound(double R, const Point& xi0, const NoiseField& field, double H,
                                  double m, int d, TimeWindow window, double h, int refine = 4);

/// H is the sup of the untransformed boundary data.
HoleFillingBound small_time_bound(double R, const Point& xi0, const NoiseField& field, double H,
                                  double m, int d, TimeWindow window, double h, int refine = 4);

/// sup{x in [a, b] : p(x) <= target} for non-decreasing p; 1e-8 relative,
/// at most 60 halvings. Sets *clamped when p(b) <= target.
double sup_bisect(const std::function<double(double)>& p, double a, double b, double target,
                  bool* clamped);

struct PropagationBound {
  double h = 0.0;
  double H = 0.0;
  double s = 0.0;
  /// min over the discrete dilated boundary of C_R(xi0, R = h)
  double c_h = 1.0;
  /// e^{-h |mu|_{C^{0,1}}} / (1 + C h (1 + h) |mu|_{C^{0,2}})^{1/(m-1)}
  double c_bar_h = 1.0;
  double t_h = 0.0;
  double t_bar_h = 0.0;
  bool clamped = false;
  std::size_t boundary_points = 0;
  nlohmann::json to_json() const;
};

/// Horizon T_h after which supp(X_{s+t}) may leave B_h(supp(X_s)).
PropagationBound propagation_bound(const Grid& grid, const CellSet& support_at_s, double s,
                                   double h, const NoiseField& field, double H, double m,
                                   double t_end, int refine = 1);

/// t -> sqrt(t) (H^{m-1}/C_det)^{1/2} sqrt(C_t) with C_t the small-time
/// constant for R = diam(domain), norms over `points` and [s, s + t].
class PropagationRadius {
 public:
  PropagationRadius(const NoiseField& field, std::vector<Point> points, double s, double H,
                    double m);
  double operator()(double t) const;
  double constant(double t) const;

 private:
  std::shared_ptr<const NoiseField> field_;
  std::unique_ptr<NormSampler> sampler_;
  double s_, H_, m_, D_;
  int d_;
};

double propagation_radius(double t, double H, double m, const NoiseField& field,
                          const std::vector<Point>& points, double s);

/// Time-dependent sup-norms of the coefficients in dY = rho1 Lap(Phi(rho2 Y)),
/// as functions of the elapsed time t (sups over [0, t]).
struct RhoNorms {
  std::function<double(double)> rho1_c0;
  std::function<double(double)> rho2_c02;
};

RhoNorms constant_rho_norms(double rho1_c0, double rho2_c02);

/// rho1 = exp(mu - lambda t), rho2 = exp(-mu + lambda t) sampled at signal
/// knots and the given points, elapsed time measured from window.begin.
RhoNorms rho_norms(const NoiseField& field, double lambda, TimeWindow window,
                   const std::vector<Point>& points);

struct GeneralBounds {
  HoleFillingBound hole;
  /// t -> sqrt(t) sqrt(C_t) H^{(m-1)/2}
  std::function<double(double)> expansion_radius;
};

GeneralBounds general_bounds(const RhoNorms& rho, double R, double H, double m, int d,
                             double t_max);

/// exp(-C t H^{m-1}) * y0_l1.
double l1_lower_bound(double t, double y0_l1, double H, double C, double m);

/// The constant in the L1 floor: |rho1|_{C^{0,2}} + |rho2^m|_{C^0}.
double l1_constant(double rho1_c02, double rho2m_c0);

}  // namespace spme
