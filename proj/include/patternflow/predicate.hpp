#pragma once

#include <functional>
#include <string>

#include "patternflow/exchange.hpp"

namespace patternflow {

/// Small boolean expression language over an exchange, used by content
/// filters, loop conditions and exception selectors.
///
///   value:  header("name") | property("name") | body() | bodySize()
///           | 'literal' | "literal" | 123 | 4.5
///   cmp:    value (== | != | < | <= | > | >=) value
///   expr:   cmp | !expr | (expr) | expr && expr | expr || expr
///
/// Comparisons are numeric when both sides parse as numbers, lexicographic
/// otherwise. A missing header or property evaluates to the empty string.
class Predicate {
 public:
  /// Throws PatternError("PredicateSyntax") on malformed input.
  static Predicate parse(const std::string& text);

  bool eval(const Exchange& exchange) const { return fn_(exchange); }

  const std::string& text() const { return text_; }

 private:
  explicit Predicate(std::string text,
                     std::function<bool(const Exchange&)> fn)
      : text_(std::move(text)), fn_(std::move(fn)) {}

  std::string text_;
  std::function<bool(const Exchange&)> fn_;
};

}  // namespace patternflow
