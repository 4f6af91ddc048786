#include "sympnf/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <unordered_map>

namespace sympnf::expr {

namespace {

ExprPtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

ExprPtr unary_node(Kind k, ExprPtr a) {
  Node n;
  n.kind = k;
  n.kids = {std::move(a)};
  return make(std::move(n));
}

ExprPtr binary_node(Kind k, ExprPtr a, ExprPtr b) {
  Node n;
  n.kind = k;
  n.kids = {std::move(a), std::move(b)};
  return make(std::move(n));
}

}  // namespace

ExprPtr constant(double c) {
  if (!std::isfinite(c)) throw Error("constant: value must be finite");
  if (c < 0.0) return neg(constant(-c));
  if (c == 0.0) c = 0.0;  // normalize -0.0
  Node n;
  n.kind = Kind::Constant;
  n.value = c;
  return make(std::move(n));
}

ExprPtr var(const std::string& name) {
  Node n;
  n.kind = Kind::Var;
  n.var = name;
  return make(std::move(n));
}

ExprPtr add(ExprPtr a, ExprPtr b) { return binary_node(Kind::Add, a, b); }
ExprPtr sub(ExprPtr a, ExprPtr b) { return binary_node(Kind::Sub, a, b); }
ExprPtr neg(ExprPtr a) { return unary_node(Kind::Neg, a); }
ExprPtr mul(ExprPtr a, ExprPtr b) { return binary_node(Kind::Mul, a, b); }
ExprPtr div(ExprPtr a, ExprPtr b) { return binary_node(Kind::Div, a, b); }

ExprPtr pow(ExprPtr a, int n) {
  Node node;
  node.kind = Kind::Pow;
  node.exponent = n;
  node.kids = {std::move(a)};
  return make(std::move(node));
}

ExprPtr exp(ExprPtr a) { return unary_node(Kind::Exp, a); }
ExprPtr sin(ExprPtr a) { return unary_node(Kind::Sin, a); }
ExprPtr cos(ExprPtr a) { return unary_node(Kind::Cos, a); }
ExprPtr sqrt(ExprPtr a) { return unary_node(Kind::Sqrt, a); }
ExprPtr flat_exp(ExprPtr a) { return unary_node(Kind::FlatExp, a); }

ExprPtr piecewise(ExprPtr lhs, Cmp cmp, ExprPtr rhs, ExprPtr then_branch,
                  ExprPtr else_branch, bool flat_glued) {
  Node n;
  n.kind = Kind::Piecewise;
  n.cmp = cmp;
  n.flat_glued = flat_glued;
  n.kids = {std::move(lhs), std::move(rhs), std::move(then_branch),
            std::move(else_branch)};
  return make(std::move(n));
}

// -------------------------------------------------------------------- parse

namespace {

struct Parser {
  const std::string& text;
  std::size_t pos = 0;

  explicit Parser(const std::string& t) : text(t) {}

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!consume(c))
      throw ParseError(std::string("expected '") + c + "'", pos);
  }

  ExprPtr parse_expr() {
    ExprPtr e = parse_term();
    for (;;) {
      if (consume('+'))
        e = add(e, parse_term());
      else if (consume('-'))
        e = sub(e, parse_term());
      else
        return e;
    }
  }

  ExprPtr parse_term() {
    ExprPtr e = parse_unary();
    for (;;) {
      if (consume('*'))
        e = mul(e, parse_unary());
      else if (consume('/'))
        e = div(e, parse_unary());
      else
        return e;
    }
  }

  ExprPtr parse_unary() {
    if (consume('-')) return neg(parse_unary());
    return parse_power();
  }

  ExprPtr parse_power() {
    ExprPtr base = parse_atom();
    if (consume('^')) {
      skip_ws();
      std::size_t start = pos;
      if (pos < text.size() && (text[pos] == '+')) ++pos;
      while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
        ++pos;
      if (pos == start) throw ParseError("expected integer exponent", pos);
      int n = 0;
      auto [p, ec] = std::from_chars(text.data() + start, text.data() + pos, n);
      if (ec != std::errc() || p != text.data() + pos)
        throw ParseError("bad integer exponent", start);
      return pow(base, n);
    }
    return base;
  }

  ExprPtr parse_atom() {
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of input", pos);
    char c = text[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (c == '(') {
      ++pos;
      ExprPtr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_ident();
    throw ParseError("unexpected character", pos);
  }

  ExprPtr parse_number() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isdigit(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '.'))
      ++pos;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
      std::size_t mark = pos;
      ++pos;
      if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
      if (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
        while (pos < text.size() &&
               std::isdigit(static_cast<unsigned char>(text[pos])))
          ++pos;
      } else {
        pos = mark;  // 'e' belonged to something else
      }
    }
    double v = 0.0;
    auto [p, ec] = std::from_chars(text.data() + start, text.data() + pos, v);
    if (ec != std::errc() || p != text.data() + pos)
      throw ParseError("bad number literal", start);
    return constant(v);
  }

  Cmp parse_cmp() {
    skip_ws();
    if (pos + 1 < text.size() && text[pos] == '>' && text[pos + 1] == '=') {
      pos += 2;
      return Cmp::GE;
    }
    if (pos + 1 < text.size() && text[pos] == '<' && text[pos + 1] == '=') {
      pos += 2;
      return Cmp::LE;
    }
    if (pos < text.size() && text[pos] == '>') {
      ++pos;
      return Cmp::GT;
    }
    if (pos < text.size() && text[pos] == '<') {
      ++pos;
      return Cmp::LT;
    }
    throw ParseError("expected comparison operator", pos);
  }

  ExprPtr parse_ident() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) ||
            text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);

    if (name == "exp" || name == "sin" || name == "cos" || name == "sqrt" ||
        name == "flat_exp") {
      expect('(');
      ExprPtr a = parse_expr();
      expect(')');
      if (name == "exp") return expr::exp(a);
      if (name == "sin") return expr::sin(a);
      if (name == "cos") return expr::cos(a);
      if (name == "sqrt") return expr::sqrt(a);
      return expr::flat_exp(a);
    }
    if (name == "piecewise" || name == "piecewise_flat") {
      expect('(');
      ExprPtr lhs = parse_expr();
      Cmp cmp = parse_cmp();
      ExprPtr rhs = parse_expr();
      expect(',');
      ExprPtr then_branch = parse_expr();
      expect(',');
      ExprPtr else_branch = parse_expr();
      expect(')');
      return piecewise(lhs, cmp, rhs, then_branch, else_branch,
                       name == "piecewise_flat");
    }

    // variable: leading letter in {x,y,p,q,I}, optional positive index
    if (name.size() >= 1 &&
        (name[0] == 'x' || name[0] == 'y' || name[0] == 'p' ||
         name[0] == 'q' || name[0] == 'I')) {
      bool digits_ok = true;
      for (std::size_t i = 1; i < name.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits_ok = false;
      if (digits_ok) {
        if (name.size() == 1) name += "1";
        if (name[1] == '0')
          throw ParseError("variable index must start from 1", start);
        return var(name);
      }
    }
    throw ParseError("unknown identifier '" + name + "'", start);
  }
};

}  // namespace

ExprPtr parse(const std::string& text) {
  Parser p(text);
  if (p.at_end()) throw ParseError("empty expression", 0);
  ExprPtr e = p.parse_expr();
  if (!p.at_end()) throw ParseError("trailing input", p.pos);
  return e;
}

// -------------------------------------------------------------------- print

namespace {

std::string print_number(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

const char* cmp_str(Cmp c) {
  switch (c) {
    case Cmp::GE: return " >= ";
    case Cmp::GT: return " > ";
    case Cmp::LE: return " <= ";
    case Cmp::LT: return " < ";
  }
  return " >= ";
}

// precedence: Add/Sub 1, Mul/Div 2, Neg 3, Pow 4, atoms 5
int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

void print_rec(const ExprPtr& e, int parent_prec, std::string& out) {
  int prec = precedence(e->kind);
  bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (e->kind) {
    case Kind::Constant:
      out += print_number(e->value);
      break;
    case Kind::Var:
      out += e->var;
      break;
    case Kind::Add:
      print_rec(e->kids[0], 1, out);
      out += " + ";
      print_rec(e->kids[1], 2, out);
      break;
    case Kind::Sub:
      print_rec(e->kids[0], 1, out);
      out += " - ";
      print_rec(e->kids[1], 2, out);
      break;
    case Kind::Neg:
      out += '-';
      print_rec(e->kids[0], 3, out);
      break;
    case Kind::Mul:
      print_rec(e->kids[0], 2, out);
      out += "*";
      print_rec(e->kids[1], 3, out);
      break;
    case Kind::Div:
      print_rec(e->kids[0], 2, out);
      out += "/";
      print_rec(e->kids[1], 3, out);
      break;
    case Kind::Pow:
      print_rec(e->kids[0], 5, out);
      out += '^';
      out += std::to_string(e->exponent);
      break;
    case Kind::Exp:
    case Kind::Sin:
    case Kind::Cos:
    case Kind::Sqrt:
    case Kind::FlatExp: {
      const char* name = e->kind == Kind::Exp   ? "exp"
                         : e->kind == Kind::Sin ? "sin"
                         : e->kind == Kind::Cos ? "cos"
                         : e->kind == Kind::Sqrt ? "sqrt"
                                                 : "flat_exp";
      out += name;
      out += '(';
      print_rec(e->kids[0], 0, out);
      out += ')';
      break;
    }
    case Kind::Piecewise:
      out += e->flat_glued ? "piecewise_flat(" : "piecewise(";
      print_rec(e->kids[0], 0, out);
      out += cmp_str(e->cmp);
      print_rec(e->kids[1], 0, out);
      out += ", ";
      print_rec(e->kids[2], 0, out);
      out += ", ";
      print_rec(e->kids[3], 0, out);
      out += ')';
      break;
  }
  if (parens) out += ')';
}

}  // namespace

std::string print(const ExprPtr& e) {
  std::string out;
  print_rec(e, 0, out);
  return out;
}

bool structurally_equal(const ExprPtr& a, const ExprPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind) return false;
  if (a->kind == Kind::Constant) return a->value == b->value;
  if (a->kind == Kind::Var) return a->var == b->var;
  if (a->kind == Kind::Pow && a->exponent != b->exponent) return false;
  if (a->kind == Kind::Piecewise &&
      (a->cmp != b->cmp || a->flat_glued != b->flat_glued))
    return false;
  if (a->kids.size() != b->kids.size()) return false;
  for (std::size_t i = 0; i < a->kids.size(); ++i)
    if (!structurally_equal(a->kids[i], b->kids[i])) return false;
  return true;
}

std::set<std::string> variables(const ExprPtr& e) {
  std::set<std::string> out;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& n) {
    if (n->kind == Kind::Var) out.insert(n->var);
    for (const auto& k : n->kids) walk(k);
  };
  walk(e);
  return out;
}

namespace {

// sharing-preserving substitution: identical subtree pointers map to the
// same substituted node, so the compiler's common-subexpression reuse
// survives the rewrite
ExprPtr substitute_memo(const ExprPtr& e,
                        const std::map<std::string, ExprPtr>& bindings,
                        std::unordered_map<const Node*, ExprPtr>& done) {
  auto hit = done.find(e.get());
  if (hit != done.end()) return hit->second;
  ExprPtr out;
  if (e->kind == Kind::Var) {
    auto it = bindings.find(e->var);
    out = it == bindings.end() ? e : it->second;
  } else if (e->kids.empty()) {
    out = e;
  } else {
    Node n = *e;
    bool changed = false;
    for (auto& k : n.kids) {
      ExprPtr r = substitute_memo(k, bindings, done);
      if (r.get() != k.get()) changed = true;
      k = r;
    }
    out = changed ? make(std::move(n)) : e;
  }
  done.emplace(e.get(), out);
  return out;
}

}  // namespace

ExprPtr substitute(const ExprPtr& e,
                   const std::map<std::string, ExprPtr>& bindings) {
  std::unordered_map<const Node*, ExprPtr> done;
  return substitute_memo(e, bindings, done);
}

// ------------------------------------------------------------------ compile

Compiled::Compiled(const ExprPtr& e, const VarLayout& layout)
    : layout_(layout), source_(e) {
  // common subtrees (shared node pointers, e.g. from substitution) compile
  // once; entries made inside a conditional branch are rolled back when the
  // branch closes, since their registers are not written on the other path
  std::unordered_map<const Node*, int> memo;
  std::vector<const Node*> memo_stack;
  int next_reg = 0;

  std::function<int(const ExprPtr&)> emit = [&](const ExprPtr& n) -> int {
    auto hit = memo.find(n.get());
    if (hit != memo.end()) return hit->second;

    auto simple = [&](Op op, int a, int b) {
      Ins ins;
      ins.op = op;
      ins.a = a;
      ins.b = b;
      ins.out = next_reg++;
      program_.push_back(ins);
      return ins.out;
    };

    int out = -1;
    switch (n->kind) {
      case Kind::Constant: {
        Ins ins;
        ins.op = Op::Const;
        ins.value = n->value;
        ins.out = next_reg++;
        program_.push_back(ins);
        out = ins.out;
        break;
      }
      case Kind::Var: {
        Ins ins;
        ins.op = Op::Var;
        ins.var_index = layout_.index_of(n->var);
        if (ins.var_index < 0)
          throw Error("expression variable '" + n->var +
                      "' is not a coordinate of this phase space");
        ins.out = next_reg++;
        program_.push_back(ins);
        out = ins.out;
        break;
      }
      case Kind::Add: out = simple(Op::Add, emit(n->kids[0]), emit(n->kids[1])); break;
      case Kind::Sub: out = simple(Op::Sub, emit(n->kids[0]), emit(n->kids[1])); break;
      case Kind::Mul: out = simple(Op::Mul, emit(n->kids[0]), emit(n->kids[1])); break;
      case Kind::Div: out = simple(Op::Div, emit(n->kids[0]), emit(n->kids[1])); break;
      case Kind::Neg: out = simple(Op::Neg, emit(n->kids[0]), -1); break;
      case Kind::Exp: out = simple(Op::Exp, emit(n->kids[0]), -1); break;
      case Kind::Sin: out = simple(Op::Sin, emit(n->kids[0]), -1); break;
      case Kind::Cos: out = simple(Op::Cos, emit(n->kids[0]), -1); break;
      case Kind::Sqrt: out = simple(Op::Sqrt, emit(n->kids[0]), -1); break;
      case Kind::FlatExp: out = simple(Op::FlatExp, emit(n->kids[0]), -1); break;
      case Kind::Pow: {
        Ins ins;
        ins.op = Op::Pow;
        ins.a = emit(n->kids[0]);
        ins.exponent = n->exponent;
        ins.out = next_reg++;
        program_.push_back(ins);
        out = ins.out;
        break;
      }
      case Kind::Piecewise: {
        int ia = emit(n->kids[0]);
        int ib = emit(n->kids[1]);
        out = next_reg++;
        std::size_t branch_at = program_.size();
        {
          Ins ins;
          ins.op = Op::Branch;
          ins.a = ia;
          ins.b = ib;
          ins.cmp = n->cmp;
          program_.push_back(ins);
        }
        std::size_t mark_then = memo_stack.size();
        int it = emit(n->kids[2]);
        while (memo_stack.size() > mark_then) {
          memo.erase(memo_stack.back());
          memo_stack.pop_back();
        }
        {
          Ins ins;
          ins.op = Op::Copy;
          ins.a = it;
          ins.out = out;
          program_.push_back(ins);
        }
        std::size_t jump_at = program_.size();
        {
          Ins ins;
          ins.op = Op::Jump;
          program_.push_back(ins);
        }
        program_[branch_at].jump = static_cast<int>(program_.size());
        std::size_t mark_else = memo_stack.size();
        int ie = emit(n->kids[3]);
        while (memo_stack.size() > mark_else) {
          memo.erase(memo_stack.back());
          memo_stack.pop_back();
        }
        {
          Ins ins;
          ins.op = Op::Copy;
          ins.a = ie;
          ins.out = out;
          program_.push_back(ins);
        }
        program_[jump_at].jump = static_cast<int>(program_.size());
        break;
      }
    }
    memo.emplace(n.get(), out);
    memo_stack.push_back(n.get());
    return out;
  };
  result_ = emit(e);
  slots_ = next_reg;
}

namespace {

template <class T>
T make_const(double v, Eigen::Index dim);
template <>
double make_const<double>(double v, Eigen::Index) {
  return v;
}
template <>
Dual make_const<Dual>(double v, Eigen::Index dim) {
  return Dual::constant(v, dim);
}
template <>
HDual make_const<HDual>(double v, Eigen::Index dim) {
  return HDual::constant(v, dim);
}

template <class T>
T make_var(double v, Eigen::Index dim, Eigen::Index slot);
template <>
double make_var<double>(double v, Eigen::Index, Eigen::Index) {
  return v;
}
template <>
Dual make_var<Dual>(double v, Eigen::Index dim, Eigen::Index slot) {
  return Dual::variable(v, dim, slot);
}
template <>
HDual make_var<HDual>(double v, Eigen::Index dim, Eigen::Index slot) {
  return HDual::variable(v, dim, slot);
}

// elementary-function dispatch across the three scalar types
double e_exp(double x) { return std::exp(x); }
double e_sin(double x) { return std::sin(x); }
double e_cos(double x) { return std::cos(x); }
double e_sqrt(double x) { return std::sqrt(x); }
double e_flat(double x) { return flat_exp_val(x); }
Dual e_exp(const Dual& x) { return sympnf::exp(x); }
Dual e_sin(const Dual& x) { return sympnf::sin(x); }
Dual e_cos(const Dual& x) { return sympnf::cos(x); }
Dual e_sqrt(const Dual& x) { return sympnf::sqrt(x); }
Dual e_flat(const Dual& x) { return sympnf::flat_exp(x); }
HDual e_exp(const HDual& x) { return sympnf::exp(x); }
HDual e_sin(const HDual& x) { return sympnf::sin(x); }
HDual e_cos(const HDual& x) { return sympnf::cos(x); }
HDual e_sqrt(const HDual& x) { return sympnf::sqrt(x); }
HDual e_flat(const HDual& x) { return sympnf::flat_exp(x); }

double e_ipow(double x, int n) {
  if (n == 0) return 1.0;
  bool inv = n < 0;
  unsigned k = static_cast<unsigned>(inv ? -n : n);
  double r = 1.0, b = x;
  while (k) {
    if (k & 1) r *= b;
    b *= b;
    k >>= 1;
  }
  return inv ? 1.0 / r : r;
}
Dual e_ipow(const Dual& x, int n) { return sympnf::ipow(x, n); }
HDual e_ipow(const HDual& x, int n) { return sympnf::ipow(x, n); }

bool cmp_holds(Cmp c, double l, double r) {
  switch (c) {
    case Cmp::GE: return l >= r;
    case Cmp::GT: return l > r;
    case Cmp::LE: return l <= r;
    case Cmp::LT: return l < r;
  }
  return false;
}

}  // namespace

template <class T>
T Compiled::run(const Eigen::VectorXd& z) const {
  if (z.size() != layout_.dim())
    throw DimensionError("expression evaluated at point of wrong dimension");
  if (!std::is_same_v<T, double> && z.size() > 8)
    throw DimensionError(
        "differentiable expression charts support dimension <= 8");
  const Eigen::Index dim = z.size();
  std::vector<T> regs(static_cast<std::size_t>(slots_));
  std::size_t pc = 0;
  while (pc < program_.size()) {
    const Ins& ins = program_[pc];
    switch (ins.op) {
      case Op::Const: regs[ins.out] = make_const<T>(ins.value, dim); break;
      case Op::Var:
        regs[ins.out] = make_var<T>(z(ins.var_index), dim, ins.var_index);
        break;
      case Op::Add: regs[ins.out] = regs[ins.a] + regs[ins.b]; break;
      case Op::Sub: regs[ins.out] = regs[ins.a] - regs[ins.b]; break;
      case Op::Neg: regs[ins.out] = -regs[ins.a]; break;
      case Op::Mul: regs[ins.out] = regs[ins.a] * regs[ins.b]; break;
      case Op::Div: regs[ins.out] = regs[ins.a] / regs[ins.b]; break;
      case Op::Pow: regs[ins.out] = e_ipow(regs[ins.a], ins.exponent); break;
      case Op::Exp: regs[ins.out] = e_exp(regs[ins.a]); break;
      case Op::Sin: regs[ins.out] = e_sin(regs[ins.a]); break;
      case Op::Cos: regs[ins.out] = e_cos(regs[ins.a]); break;
      case Op::Sqrt: regs[ins.out] = e_sqrt(regs[ins.a]); break;
      case Op::FlatExp: regs[ins.out] = e_flat(regs[ins.a]); break;
      case Op::Copy: regs[ins.out] = regs[ins.a]; break;
      case Op::Branch:
        if (!cmp_holds(ins.cmp, value_of(regs[ins.a]), value_of(regs[ins.b]))) {
          pc = static_cast<std::size_t>(ins.jump);
          continue;
        }
        break;
      case Op::Jump:
        pc = static_cast<std::size_t>(ins.jump);
        continue;
    }
    ++pc;
  }
  return regs[result_];
}

double Compiled::value(const Eigen::VectorXd& z) const { return run<double>(z); }
Dual Compiled::dual(const Eigen::VectorXd& z) const { return run<Dual>(z); }
HDual Compiled::hdual(const Eigen::VectorXd& z) const { return run<HDual>(z); }

// ----------------------------------------------------------------- flat glue

double flat_glue_mismatch(const ExprPtr& e, const VarLayout& layout,
                          const std::vector<Eigen::VectorXd>& samples) {
  // collect flat-glued piecewise nodes
  std::vector<ExprPtr> nodes;
  std::function<void(const ExprPtr&)> walk = [&](const ExprPtr& n) {
    if (n->kind == Kind::Piecewise && n->flat_glued)
      nodes.push_back(n);
    for (const auto& k : n->kids) walk(k);
  };
  walk(e);

  double worst = 0.0;
  for (const auto& n : nodes) {
    Compiled guard(sub(n->kids[0], n->kids[1]), layout);
    Compiled then_c(n->kids[2], layout);
    Compiled else_c(n->kids[3], layout);
    for (const auto& start : samples) {
      // slide the sample onto the guard boundary by gradient steps
      Eigen::VectorXd z = start;
      bool on_boundary = false;
      for (int it = 0; it < 40; ++it) {
        Dual g = guard.dual(z);
        double gn2 = g.g.squaredNorm();
        if (gn2 < 1e-20) break;
        z -= (g.v / gn2) * g.g;
        if (std::abs(guard.value(z)) < 1e-13) {
          on_boundary = true;
          break;
        }
      }
      if (!on_boundary) continue;
      Dual a = then_c.dual(z);
      Dual b = else_c.dual(z);
      worst = std::max(worst, std::abs(a.v - b.v));
      worst = std::max(worst, (a.g - b.g).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

}  // namespace sympnf::expr
