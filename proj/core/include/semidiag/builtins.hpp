#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "semidiag/matrix_function.hpp"
#include "semidiag/symbol.hpp"

namespace semidiag {

struct BuiltinInfo {
  std::string name;
  std::string kind;  // "matrix" or "symbol"
  std::string args;
  std::string description;
};

const std::vector<BuiltinInfo>& builtin_catalog();
std::vector<BuiltinInfo> find_builtins(std::string_view substring);

namespace builtins {

MatrixFunction constant(const Mat& m);
/// [[x+i, h^p a(x)], [0, -(x+i)]]
MatrixFunction counterexample_triangular(const Symbol& theta, int p);
/// R(rate*x) diag(l1, l2) R(rate*x)^T with R a planar rotation.
MatrixFunction rotation_family(cplx l1 = 1.0, cplx l2 = -1.0, double rate = 1.0);
/// [[1, h x phi(x)], [0, 0]] with x playing the role of the singular variable.
MatrixFunction singular_example(const Symbol& phi);
/// [[1, c tanh x], [c tanh x, -1]]
MatrixFunction tanh_profile(double coupling = 0.5);

}  // namespace builtins

/// Matrix from JSON text: {"n":2,"entries":[["x+i","0"],["0","-(x+i)"]]} or
/// {"builtin":"name","args":{...}}. `n` > 0 enforces the dimension.
MatrixFunction parse_matrix(std::string_view json_text, int n = 0);

/// Symbol from JSON text: an expression string, a number, or
/// {"builtin":"gevrey_halfline","args":{"gevrey_theta":1}}.
Symbol parse_symbol(std::string_view json_text);

}  // namespace semidiag
