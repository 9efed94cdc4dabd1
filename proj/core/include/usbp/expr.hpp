#pragma once

// Scalar coefficient expressions over the two variables t (time) and x (space).
//
// Grammar (lowest to highest precedence):
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := '-' factor | power
//   power   := primary ('^' factor)?          right-associative, binds above unary minus
//   primary := number | 't' | 'x' | 'pi' | 'e'
//            | func '(' expr (',' expr)* ')'
//            | '(' expr ')'
//   func    := exp | log | sin | cos | sqrt | abs   (one argument)
//            | min | max                            (two arguments)
//
// Parsing either succeeds on the whole input or throws ParseError carrying the
// byte offset of the offending token and what was expected there.  Evaluation
// is a pure function of (t, x): no hidden state, identical bits on repeat calls.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace usbp {

struct ParseError : std::runtime_error {
  ParseError(std::size_t offset, const std::string& what_arg)
      : std::runtime_error(what_arg), offset(offset) {}
  std::size_t offset;  // byte position in the source string
};

class Expr {
 public:
  Expr() = default;

  double operator()(double t, double x) const;

  const std::string& source() const { return source_; }
  bool empty() const { return code_.empty(); }

 private:
  enum class Op : unsigned char {
    kConst, kVarT, kVarX,
    kAdd, kSub, kMul, kDiv, kPow, kNeg,
    kExp, kLog, kSin, kCos, kSqrt, kAbs, kMin, kMax,
  };
  struct Instr {
    Op op;
    double value;  // used by kConst only
  };

  std::string source_;
  std::vector<Instr> code_;  // postfix program
  int max_stack_ = 0;

  friend Expr parse_expr(const std::string& source);
  friend class ExprParser;
};

// Parses `source`; throws ParseError on any lexical/syntactic problem,
// unknown identifier, or wrong function arity.
Expr parse_expr(const std::string& source);

}  // namespace usbp
