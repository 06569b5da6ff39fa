#include "semidiag/builtins.hpp"

#include <cmath>

#include <json.hpp>

#include "semidiag/errors.hpp"

namespace semidiag {

using nlohmann::json;

namespace {

cplx json_complex(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
    return {v[0].get<double>(), v[1].get<double>()};
  if (v.is_string()) return mexpr::Expression::parse(v.get<std::string>()).eval(0.0, 0.0);
  throw InputError(std::string(what) + ": expected a number, [re, im] or an expression string");
}

Mat json_constant_matrix(const json& v) {
  if (!v.is_array() || v.empty()) throw InputError("constant: M must be a non-empty array of rows");
  const auto n = v.size();
  Mat m(n, n);
  for (size_t r = 0; r < n; ++r) {
    if (!v[r].is_array() || v[r].size() != n) throw InputError("constant: M must be square");
    for (size_t c = 0; c < n; ++c) m(r, c) = json_complex(v[r][c], "constant");
  }
  return m;
}

Symbol symbol_from_json(const json& v) {
  if (v.is_string()) return Symbol::from_expression(mexpr::Expression::parse(v.get<std::string>()));
  if (v.is_number() || v.is_array()) return Symbol::constant(json_complex(v, "symbol"));
  if (!v.is_object() || !v.contains("builtin")) throw InputError("symbol: expected expression or {\"builtin\": ...}");
  const std::string name = v["builtin"].get<std::string>();
  const json args = v.value("args", json::object());
  if (name == "gevrey_halfline") return Symbol::gevrey_halfline(args.value("gevrey_theta", 1.0));
  if (name == "cr_halfline") return Symbol::cr_halfline(args.value("r", 1));
  if (name == "gevrey_bump") return Symbol::gevrey_bump(args.value("gevrey_theta", 1.0), args.value("width", 2.0));
  throw InputError("unknown symbol builtin '" + name + "'");
}

MatrixFunction matrix_from_json(const json& v) {
  if (v.contains("builtin")) {
    const std::string name = v["builtin"].get<std::string>();
    const json args = v.value("args", json::object());
    if (name == "constant") {
      if (!args.contains("M")) throw InputError("constant: missing argument M");
      return builtins::constant(json_constant_matrix(args["M"]));
    }
    if (name == "counterexample_triangular")
      return builtins::counterexample_triangular(symbol_from_json(args.value("theta", json("1"))), args.value("p", 1));
    if (name == "rotation_family") {
      cplx l1 = 1.0, l2 = -1.0;
      if (args.contains("eigenvalues")) {
        const auto& ev = args["eigenvalues"];
        if (!ev.is_array() || ev.size() != 2) throw InputError("rotation_family: eigenvalues needs two entries");
        l1 = json_complex(ev[0], "rotation_family");
        l2 = json_complex(ev[1], "rotation_family");
      }
      return builtins::rotation_family(l1, l2, args.value("rate", 1.0));
    }
    if (name == "singular_example") return builtins::singular_example(symbol_from_json(args.value("phi", json("1"))));
    if (name == "tanh_profile") return builtins::tanh_profile(args.value("coupling", 0.5));
    throw InputError("unknown builtin '" + name + "'");
  }
  if (!v.contains("entries")) throw InputError("matrix: expected \"entries\" or \"builtin\"");
  const json& e = v["entries"];
  if (!e.is_array()) throw InputError("matrix: entries must be an array");
  std::vector<std::vector<mexpr::Expression>> rows;
  size_t n = e.size();
  // A flat list of n*n strings is accepted as row-major.
  bool flat = n > 0 && !e[0].is_array();
  if (flat) {
    size_t k = static_cast<size_t>(std::lround(std::sqrt(static_cast<double>(n))));
    if (k * k != n) throw InputError("matrix: flat entry list length " + std::to_string(n) + " is not a square");
    n = k;
  }
  for (size_t r = 0; r < n; ++r) {
    std::vector<mexpr::Expression> row;
    const size_t cols = flat ? n : e[r].size();
    for (size_t c = 0; c < cols; ++c) {
      const json& cell = flat ? e[r * n + c] : e[r][c];
      if (cell.is_string()) row.push_back(mexpr::Expression::parse(cell.get<std::string>()));
      else row.push_back(mexpr::Expression::constant(json_complex(cell, "matrix entry")));
    }
    rows.push_back(std::move(row));
  }
  if (v.contains("n") && v["n"].get<size_t>() != n)
    throw InputError("matrix: declared n=" + std::to_string(v["n"].get<size_t>()) + " but entries have " +
                     std::to_string(n) + " rows");
  return MatrixFunction::from_expressions(rows);
}

json parse_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("JSON: ") + e.what());
  }
}

}  // namespace

const std::vector<BuiltinInfo>& builtin_catalog() {
  static const std::vector<BuiltinInfo> cat = {
      {"constant", "matrix", "M", "constant matrix M"},
      {"counterexample_triangular", "matrix", "theta, p", "[[x+i, h^p theta(x)], [0, -(x+i)]]"},
      {"rotation_family", "matrix", "eigenvalues, rate", "R(rate x) diag(l1, l2) R(rate x)^T"},
      {"singular_example", "matrix", "phi", "[[1, h z phi(z)], [0, 0]] in the variable z"},
      {"tanh_profile", "matrix", "coupling", "[[1, c tanh x], [c tanh x, -1]]"},
      {"gevrey_halfline", "symbol", "gevrey_theta", "exp(-y^-gevrey_theta) on y > 0, zero on y <= 0"},
      {"cr_halfline", "symbol", "r", "y^r on y > 0, zero on y <= 0"},
      {"gevrey_bump", "symbol", "gevrey_theta, width", "flat Gevrey bump supported on (0, width)"},
      {"logistic", "field", "", "u' = u^2 - u"},
      {"saddle2d", "field", "", "(u, v)' = (-u + u v, v + u^2)"},
  };
  return cat;
}

std::vector<BuiltinInfo> find_builtins(std::string_view substring) {
  std::vector<BuiltinInfo> out;
  for (const auto& b : builtin_catalog())
    if (b.name.find(substring) != std::string::npos) out.push_back(b);
  return out;
}

namespace builtins {

MatrixFunction constant(const Mat& m) { return MatrixFunction::constant(m); }

MatrixFunction counterexample_triangular(const Symbol& theta, int p) {
  if (p < 1) throw InputError("counterexample_triangular: p must be >= 1");
  return MatrixFunction::from_callable(
      "counterexample_triangular(" + theta.name() + ", " + std::to_string(p) + ")", 2,
      [theta, p](cplx x, double h) {
        Mat m = Mat::Zero(2, 2);
        m(0, 0) = x + kI;
        m(1, 1) = -(x + kI);
        m(0, 1) = std::pow(h, p) * theta(x, h);
        return m;
      });
}

MatrixFunction rotation_family(cplx l1, cplx l2, double rate) {
  return MatrixFunction::from_callable("rotation_family", 2, [l1, l2, rate](cplx x, double) {
    cplx c = std::cos(rate * x), s = std::sin(rate * x);
    Mat r(2, 2);
    r << c, -s, s, c;
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = l1;
    d(1, 1) = l2;
    return Mat(r * d * r.transpose());
  });
}

MatrixFunction singular_example(const Symbol& phi) {
  return MatrixFunction::from_callable("singular_example(" + phi.name() + ")", 2, [phi](cplx z, double h) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 1.0;
    m(0, 1) = h * z * phi(z, h);
    return m;
  });
}

MatrixFunction tanh_profile(double coupling) {
  return MatrixFunction::from_callable("tanh_profile", 2, [coupling](cplx x, double) {
    cplx t = coupling * std::tanh(x);
    Mat m(2, 2);
    m << 1.0, t, t, -1.0;
    return m;
  });
}

}  // namespace builtins

MatrixFunction parse_matrix(std::string_view json_text, int n) {
  MatrixFunction mf = matrix_from_json(parse_text(json_text));
  if (n > 0 && mf.dim() != n)
    throw InputError("matrix dimension " + std::to_string(mf.dim()) + " does not match expected " + std::to_string(n));
  return mf;
}

Symbol parse_symbol(std::string_view json_text) {
  json v;
  try {
    v = json::parse(json_text);
  } catch (const json::parse_error&) {
    // bare expression text
    return Symbol::from_expression(mexpr::Expression::parse(json_text));
  }
  return symbol_from_json(v);
}

}  // namespace semidiag
