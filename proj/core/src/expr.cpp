#include "usbp/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace usbp {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kE = 2.718281828459045235360287471352662498;

}  // namespace

class ExprParser {
 public:
  explicit ExprParser(const std::string& src) : src_(src) {}

  Expr parse() {
    Expr e;
    e.source_ = src_;
    code_ = &e.code_;
    pos_ = 0;
    depth_ = 0;
    max_depth_ = 0;
    parse_expr_();
    skip_ws();
    if (pos_ != src_.size())
      fail(pos_, "unexpected trailing input; expected end of expression");
    e.max_stack_ = max_depth_;
    return e;
  }

 private:
  const std::string& src_;
  std::vector<Expr::Instr>* code_ = nullptr;
  std::size_t pos_ = 0;
  int depth_ = 0;      // stack height of the postfix program being emitted
  int max_depth_ = 0;

  [[noreturn]] void fail(std::size_t at, const std::string& msg) const {
    throw ParseError(at, "expression error at offset " + std::to_string(at) +
                             ": " + msg);
  }

  void emit(Expr::Op op, double value = 0.0) {
    code_->push_back({op, value});
    switch (op) {
      case Expr::Op::kConst:
      case Expr::Op::kVarT:
      case Expr::Op::kVarX:
        ++depth_;
        break;
      case Expr::Op::kNeg:
      case Expr::Op::kExp:
      case Expr::Op::kLog:
      case Expr::Op::kSin:
      case Expr::Op::kCos:
      case Expr::Op::kSqrt:
      case Expr::Op::kAbs:
        break;  // one in, one out
      default:
        --depth_;  // binary: two in, one out
    }
    if (depth_ > max_depth_) max_depth_ = depth_;
  }

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ == src_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  bool accept(char c) {
    if (peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* context) {
    if (!accept(c))
      fail(pos_, std::string("expected '") + c + "' " + context);
  }

  // expr := term (('+'|'-') term)*
  void parse_expr_() {
    parse_term();
    for (;;) {
      if (accept('+')) {
        parse_term();
        emit(Expr::Op::kAdd);
      } else if (accept('-')) {
        parse_term();
        emit(Expr::Op::kSub);
      } else {
        return;
      }
    }
  }

  // term := factor (('*'|'/') factor)*
  void parse_term() {
    parse_factor();
    for (;;) {
      if (accept('*')) {
        parse_factor();
        emit(Expr::Op::kMul);
      } else if (accept('/')) {
        parse_factor();
        emit(Expr::Op::kDiv);
      } else {
        return;
      }
    }
  }

  // factor := '-' factor | power
  void parse_factor() {
    if (accept('-')) {
      parse_factor();
      emit(Expr::Op::kNeg);
      return;
    }
    parse_power();
  }

  // power := primary ('^' factor)?   (right-associative)
  void parse_power() {
    parse_primary();
    if (accept('^')) {
      parse_factor();
      emit(Expr::Op::kPow);
    }
  }

  void parse_primary() {
    if (at_end()) fail(pos_, "unexpected end of expression; expected a value");
    skip_ws();
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      parse_number();
      return;
    }
    if (c == '(') {
      ++pos_;
      parse_expr_();
      expect(')', "to close '('");
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      parse_identifier();
      return;
    }
    fail(pos_, std::string("unexpected character '") + c +
                   "'; expected a number, variable, function, or '('");
  }

  void parse_number() {
    const char* begin = src_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail(pos_, "malformed number");
    // strtod accepts inf/nan spellings and hex floats; the grammar does not.
    for (const char* p = begin; p != end; ++p) {
      const char ch = *p;
      if (!(std::isdigit(static_cast<unsigned char>(ch)) || ch == '.' ||
            ch == 'e' || ch == 'E' || ch == '+' || ch == '-'))
        fail(pos_ + static_cast<std::size_t>(p - begin),
             "malformed number");
    }
    pos_ += static_cast<std::size_t>(end - begin);
    emit(Expr::Op::kConst, v);
  }

  void parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    const std::string name = src_.substr(start, pos_ - start);

    if (name == "t") { emit(Expr::Op::kVarT); return; }
    if (name == "x") { emit(Expr::Op::kVarX); return; }
    if (name == "pi") { emit(Expr::Op::kConst, kPi); return; }
    if (name == "e") { emit(Expr::Op::kConst, kE); return; }

    struct Func { const char* name; Expr::Op op; int arity; };
    static constexpr Func kFuncs[] = {
        {"exp", Expr::Op::kExp, 1},  {"log", Expr::Op::kLog, 1},
        {"sin", Expr::Op::kSin, 1},  {"cos", Expr::Op::kCos, 1},
        {"sqrt", Expr::Op::kSqrt, 1}, {"abs", Expr::Op::kAbs, 1},
        {"min", Expr::Op::kMin, 2},  {"max", Expr::Op::kMax, 2},
    };
    for (const Func& f : kFuncs) {
      if (name != f.name) continue;
      expect('(', ("after function '" + name + "'").c_str());
      int argc = 1;
      parse_expr_();
      while (accept(',')) {
        parse_expr_();
        ++argc;
      }
      expect(')', ("to close arguments of '" + name + "'").c_str());
      if (argc != f.arity)
        fail(start, "function '" + name + "' expects " +
                        std::to_string(f.arity) + " argument(s), got " +
                        std::to_string(argc));
      emit(f.op);
      return;
    }
    fail(start, "unknown identifier '" + name +
                    "'; known names: t, x, pi, e, exp, log, sin, cos, sqrt, "
                    "abs, min, max");
  }
};

Expr parse_expr(const std::string& source) { return ExprParser(source).parse(); }

double Expr::operator()(double t, double x) const {
  if (code_.empty()) return 0.0;
  double small[16];
  std::vector<double> big;
  double* stack = small;
  if (max_stack_ > 16) {
    big.resize(static_cast<std::size_t>(max_stack_));
    stack = big.data();
  }
  int top = -1;
  for (const Instr& in : code_) {
    switch (in.op) {
      case Op::kConst: stack[++top] = in.value; break;
      case Op::kVarT: stack[++top] = t; break;
      case Op::kVarX: stack[++top] = x; break;
      case Op::kAdd: --top; stack[top] += stack[top + 1]; break;
      case Op::kSub: --top; stack[top] -= stack[top + 1]; break;
      case Op::kMul: --top; stack[top] *= stack[top + 1]; break;
      case Op::kDiv: --top; stack[top] /= stack[top + 1]; break;
      case Op::kPow: --top; stack[top] = std::pow(stack[top], stack[top + 1]); break;
      case Op::kNeg: stack[top] = -stack[top]; break;
      case Op::kExp: stack[top] = std::exp(stack[top]); break;
      case Op::kLog: stack[top] = std::log(stack[top]); break;
      case Op::kSin: stack[top] = std::sin(stack[top]); break;
      case Op::kCos: stack[top] = std::cos(stack[top]); break;
      case Op::kSqrt: stack[top] = std::sqrt(stack[top]); break;
      case Op::kAbs: stack[top] = std::fabs(stack[top]); break;
      case Op::kMin: --top; stack[top] = std::fmin(stack[top], stack[top + 1]); break;
      case Op::kMax: --top; stack[top] = std::fmax(stack[top], stack[top + 1]); break;
    }
  }
  return stack[0];
}

}  // namespace usbp
