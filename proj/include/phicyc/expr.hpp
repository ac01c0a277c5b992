#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace phicyc {

/// Compiled arithmetic expression over a fixed list of named variables.
///
/// Grammar: numbers, variables, named constants (pi, T and any caller
/// supplied constant), binary + - * / ^ (^ right-associative), unary -,
/// parentheses and the functions sin cos tan exp log sqrt abs tanh arctan
/// (alias atan). Parse errors throw Error{Config} with the offending column.
class Expr {
 public:
  Expr() = default;

  static Expr parse(const std::string& source, const std::vector<std::string>& variables,
                    const std::map<std::string, double>& constants = {});

  /// `values` is indexed like the `variables` list passed to parse().
  double eval(std::span<const double> values) const;

  const std::string& source() const { return source_; }
  bool empty() const { return !root_; }

  struct Node;

 private:
  std::string source_;
  std::shared_ptr<const Node> root_;
};

}  // namespace phicyc
