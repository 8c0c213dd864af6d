#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dpflow {

/// Arithmetic expression over named variables: + - * / ^, unary minus,
/// pow, exp, log, tanh, sin, cos, sqrt, and the constants pi and e.
/// Parameters are folded in at parse time; variables are bound by position.
class Expression {
 public:
  /// Throws ArgumentError with the offending position on malformed input or
  /// unknown identifiers.
  static Expression parse(const std::string& text, const std::vector<std::string>& variables,
                          const std::map<std::string, double>& parameters = {});

  double eval(std::span<const double> vars) const;
  const std::string& text() const { return text_; }

  struct Node;

 private:
  Expression() = default;
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace dpflow
