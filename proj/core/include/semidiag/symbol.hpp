#pragma once

#include <functional>
#include <string>

#include "semidiag/mexpr.hpp"
#include "semidiag/types.hpp"

namespace semidiag {

enum class Regularity { Analytic, Gevrey, Cr };

/// Scalar amplitude a(y, h) with a regularity tag. Cutoff symbols vanish on
/// the closed negative real half-line; off the real axis they evaluate the
/// continuation of their right-hand branch so that ray contours can be used.
class Symbol {
 public:
  using Fn = std::function<cplx(cplx, double)>;

  Symbol();  // identically zero

  static Symbol from_expression(const mexpr::Expression& e);
  static Symbol constant(cplx c);
  /// exp(-y^-gevrey_theta) for y > 0, Gevrey index s = 1 + 1/gevrey_theta.
  static Symbol gevrey_halfline(double gevrey_theta);
  /// y^r for y > 0.
  static Symbol cr_halfline(int r);
  /// exp(-y^-t) * exp(-(w - y)^-t) on (0, w), zero elsewhere. Flat at both
  /// ends, so its period-P extension (P > w) is Gevrey of the same index.
  static Symbol gevrey_bump(double gevrey_theta, double width);
  static Symbol custom(std::string name, Fn fn, Regularity reg = Regularity::Analytic);

  cplx operator()(cplx y, double h = 0.0) const { return fn_(y, h); }

  const std::string& name() const { return name_; }
  Regularity regularity() const { return regularity_; }
  bool analytic() const { return regularity_ == Regularity::Analytic; }
  double gevrey_s() const { return 1.0 + 1.0 / gevrey_theta_; }
  double gevrey_theta() const { return gevrey_theta_; }
  int cr_order() const { return cr_order_; }
  bool cutoff_at_zero() const { return cutoff_; }
  bool identically_zero() const { return zero_; }

 private:
  Fn fn_;
  std::string name_;
  Regularity regularity_ = Regularity::Analytic;
  double gevrey_theta_ = 0.0;
  int cr_order_ = 0;
  bool cutoff_ = false;
  bool zero_ = false;
};

}  // namespace semidiag
