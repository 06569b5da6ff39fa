#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "semidiag/types.hpp"

namespace semidiag::mexpr {

struct SourceSpan {
  int line = 1;
  int column = 1;
  int offset = 0;
  int length = 0;
};

enum class NodeKind {
  Literal,
  VarX,
  VarH,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,
  Exp,
  Tanh,
  Sin,
  Cos,
  Log,
};

struct Node {
  NodeKind kind;
  cplx value{};   // Literal only
  int exponent = 0;  // Pow only
  std::vector<std::shared_ptr<const Node>> args;
  SourceSpan span;
};

/// Branch cuts introduced by `log`. Each entry names the offending
/// sub-expression; its argument must stay off (-inf, 0].
struct Domain {
  std::vector<std::string> branch_cuts;
  bool slit() const { return !branch_cuts.empty(); }
};

/// Parsed scalar expression in x (complex) and h (real). Immutable, cheap to
/// copy, safe to evaluate concurrently.
class Expression {
 public:
  Expression();  // the constant 0

  static Expression parse(std::string_view source);
  static Expression constant(cplx value);

  /// Throws EvalError on a pole or a non-finite result.
  cplx eval(cplx x, double h) const;

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string to_string() const;

  const std::string& source() const { return source_; }
  const Domain& domain() const { return domain_; }
  const Node& root() const { return *root_; }

  /// True when the tree is a literal zero.
  bool is_zero() const;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
  Domain domain_;
};

/// |cosh| below this fraction of |sinh| is reported as a tanh pole.
inline constexpr double kTanhPoleTolerance = 1e-6;

}  // namespace semidiag::mexpr
