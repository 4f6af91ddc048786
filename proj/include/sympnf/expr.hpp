// expr.hpp : scalar-field expression trees.
//
// Grammar (EBNF, also reproduced in the README):
//
//   expr     = term { ("+" | "-") term } ;
//   term     = unary { ("*" | "/") unary } ;
//   unary    = "-" unary | power ;
//   power    = atom [ "^" integer ] ;
//   atom     = number | variable | call | "(" expr ")" ;
//   call     = ("exp" | "sin" | "cos" | "sqrt" | "flat_exp") "(" expr ")"
//            | "piecewise" "(" guard "," expr "," expr ")" ;
//   guard    = expr (">=" | "<=" | ">" | "<") expr ;
//   variable = ("x"|"y"|"p"|"q"|"I") [ integer ] ;   (* bare name means index 1 *)
//
// flat_exp(u) evaluates exp(-1/u^2) for u != 0 and exactly 0 at u = 0; its
// derivatives at 0 are all exactly 0, which makes flat-glued piecewise
// definitions meaningful in floating point.

#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sympnf/dual.hpp"
#include "sympnf/errors.hpp"
#include "sympnf/phase.hpp"

namespace sympnf::expr {

enum class Kind {
  Constant,
  Var,
  Add,
  Sub,
  Neg,
  Mul,
  Div,
  Pow,
  Exp,
  Sin,
  Cos,
  Sqrt,
  FlatExp,
  Piecewise
};

enum class Cmp { GE, GT, LE, LT };

struct Node;
using ExprPtr = std::shared_ptr<const Node>;

struct Node {
  Kind kind;
  double value = 0.0;         // Constant
  std::string var;            // Var
  int exponent = 0;           // Pow
  Cmp cmp = Cmp::GE;          // Piecewise
  bool flat_glued = false;    // Piecewise: branches claimed to agree flatly
  std::vector<ExprPtr> kids;  // Piecewise: {lhs, rhs, then, else}
};

// ------------------------------------------------------------ constructors

ExprPtr constant(double c);
ExprPtr var(const std::string& name);
ExprPtr add(ExprPtr a, ExprPtr b);
ExprPtr sub(ExprPtr a, ExprPtr b);
ExprPtr neg(ExprPtr a);
ExprPtr mul(ExprPtr a, ExprPtr b);
ExprPtr div(ExprPtr a, ExprPtr b);
ExprPtr pow(ExprPtr a, int n);
ExprPtr exp(ExprPtr a);
ExprPtr sin(ExprPtr a);
ExprPtr cos(ExprPtr a);
ExprPtr sqrt(ExprPtr a);
ExprPtr flat_exp(ExprPtr a);
ExprPtr piecewise(ExprPtr lhs, Cmp cmp, ExprPtr rhs, ExprPtr then_branch,
                  ExprPtr else_branch, bool flat_glued = false);

// -------------------------------------------------------------- operations

// Parse per the grammar above; throws ParseError with a character position.
ExprPtr parse(const std::string& text);

// Canonical printer; parse(print(e)) is structurally equal to e.
std::string print(const ExprPtr& e);

bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

// Names of all variables appearing in e.
std::set<std::string> variables(const ExprPtr& e);

// Replace variables by expressions (simultaneous substitution).
ExprPtr substitute(const ExprPtr& e,
                   const std::map<std::string, ExprPtr>& bindings);

// ------------------------------------------------------------- evaluation

// An expression compiled against a coordinate layout for fast evaluation.
// Unknown variables are rejected at compile time.
class Compiled {
 public:
  Compiled() = default;
  Compiled(const ExprPtr& e, const VarLayout& layout);

  const VarLayout& layout() const { return layout_; }
  const ExprPtr& source() const { return source_; }

  double value(const Eigen::VectorXd& z) const;

  // value + gradient at z (forward mode, exact)
  Dual dual(const Eigen::VectorXd& z) const;

  // value + gradient + Hessian at z
  HDual hdual(const Eigen::VectorXd& z) const;

 private:
  // register program with conditional jumps: piecewise guards skip the
  // untaken branch entirely, which matters for flat-cutoff terms that are
  // exactly zero on most of the domain
  enum class Op {
    Const,
    Var,
    Add,
    Sub,
    Neg,
    Mul,
    Div,
    Pow,
    Exp,
    Sin,
    Cos,
    Sqrt,
    FlatExp,
    Branch,  // if !(cmp(reg a, reg b)) jump to `jump`
    Jump,    // unconditional jump to `jump`
    Copy     // out = reg a
  };
  struct Ins {
    Op op;
    int out = -1;
    int a = -1, b = -1;
    double value = 0.0;
    int var_index = -1;
    int exponent = 0;
    Cmp cmp = Cmp::GE;
    int jump = -1;
  };
  template <class T>
  T run(const Eigen::VectorXd& z) const;

  VarLayout layout_;
  ExprPtr source_;
  std::vector<Ins> program_;
  int slots_ = 0;
  int result_ = 0;
};

// Numerical spot-check that the two branches of every flat-glued piecewise
// node agree in value and first derivatives at points near the guard
// boundary.  Returns the worst mismatch over `samples` probe points.
double flat_glue_mismatch(const ExprPtr& e, const VarLayout& layout,
                          const std::vector<Eigen::VectorXd>& samples);

}  // namespace sympnf::expr
