#include "semidiag/symbol.hpp"

#include <cmath>

#include "semidiag/errors.hpp"

namespace semidiag {

namespace {

bool on_nonpositive_axis(cplx y) { return y.imag() == 0.0 && y.real() <= 0.0; }

cplx flat_exp(cplx y, double t) {
  // exp(-y^-t) underflows long before y reaches 0 on the real axis.
  if (y == 0.0) return 0.0;
  return std::exp(-std::pow(y, -t));
}

}  // namespace

Symbol::Symbol() : fn_([](cplx, double) { return cplx(0.0); }), name_("0"), zero_(true) {}

Symbol Symbol::from_expression(const mexpr::Expression& e) {
  Symbol s;
  s.zero_ = e.is_zero();
  s.name_ = e.source();
  s.fn_ = [e](cplx y, double h) { return e.eval(y, h); };
  return s;
}

Symbol Symbol::constant(cplx c) { return from_expression(mexpr::Expression::constant(c)); }

Symbol Symbol::gevrey_halfline(double gevrey_theta) {
  if (!(gevrey_theta > 0.0)) throw InputError("gevrey_theta must be positive");
  Symbol s;
  s.zero_ = false;
  s.name_ = "gevrey_halfline(" + std::to_string(gevrey_theta) + ")";
  s.regularity_ = Regularity::Gevrey;
  s.gevrey_theta_ = gevrey_theta;
  s.cutoff_ = true;
  s.fn_ = [gevrey_theta](cplx y, double) -> cplx {
    if (on_nonpositive_axis(y)) return 0.0;
    return flat_exp(y, gevrey_theta);
  };
  return s;
}

Symbol Symbol::cr_halfline(int r) {
  if (r < 1) throw InputError("cr_halfline needs r >= 1");
  Symbol s;
  s.zero_ = false;
  s.name_ = "cr_halfline(" + std::to_string(r) + ")";
  s.regularity_ = Regularity::Cr;
  s.cr_order_ = r;
  s.cutoff_ = true;
  s.fn_ = [r](cplx y, double) -> cplx {
    if (on_nonpositive_axis(y)) return 0.0;
    cplx v = 1.0;
    for (int k = 0; k < r; ++k) v *= y;
    return v;
  };
  return s;
}

Symbol Symbol::gevrey_bump(double gevrey_theta, double width) {
  if (!(gevrey_theta > 0.0) || !(width > 0.0)) throw InputError("gevrey_bump needs positive parameters");
  Symbol s;
  s.zero_ = false;
  s.name_ = "gevrey_bump(" + std::to_string(gevrey_theta) + ", " + std::to_string(width) + ")";
  s.regularity_ = Regularity::Gevrey;
  s.gevrey_theta_ = gevrey_theta;
  s.fn_ = [gevrey_theta, width](cplx y, double) -> cplx {
    double t = y.real();
    if (t <= 0.0 || t >= width) return 0.0;
    return flat_exp(t, gevrey_theta) * flat_exp(width - t, gevrey_theta);
  };
  return s;
}

Symbol Symbol::custom(std::string name, Fn fn, Regularity reg) {
  Symbol s;
  s.zero_ = false;
  s.name_ = std::move(name);
  s.fn_ = std::move(fn);
  s.regularity_ = reg;
  return s;
}

}  // namespace semidiag
