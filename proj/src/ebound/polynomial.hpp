#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ebound {

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Syntax error from the expression parser; offset is a byte position into
// the input text.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

private:
  std::size_t offset_;
};

// Product of variables with positive integer exponents. Factors are kept
// sorted by variable index; an absent variable has exponent zero.
class Monomial {
public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<int, int>> factors);

  static Monomial one() { return Monomial(); }
  static Monomial variable(int index, int exponent = 1);

  int degree() const;
  int exponentOf(int varIndex) const;
  bool isOne() const { return factors_.empty(); }

  Monomial times(const Monomial& other) const;
  // Partial derivative: returns {coefficient, monomial}; coefficient 0 if
  // the variable is absent.
  std::pair<int, Monomial> differentiate(int varIndex) const;
  // Remaps variable indices (used when embedding into a wider list).
  Monomial remapped(std::span<const int> indexMap) const;

  const std::vector<std::pair<int, int>>& factors() const { return factors_; }

  bool operator==(const Monomial& other) const = default;

private:
  std::vector<std::pair<int, int>> factors_;
};

// Graded lexicographic order: lower total degree first; within a degree the
// monomial with the larger exponent on the earliest variable comes first,
// so over (t, x) the degree-2 layer reads t^2, t*x, x^2.
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

// Sparse multivariate polynomial over a named, ordered variable list with
// double coefficients. Immutable in spirit: all operations return new
// values. Exact-zero coefficients are never stored.
class Polynomial {
public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;

  Polynomial() = default;
  explicit Polynomial(std::vector<std::string> variables);

  static Polynomial constant(std::vector<std::string> variables, double c);
  static Polynomial variable(std::vector<std::string> variables, int index);
  static Polynomial variable(std::vector<std::string> variables,
                             const std::string& name);
  static Polynomial fromTerms(std::vector<std::string> variables,
                              TermMap terms);
  // Parses an expression over the given variables. Grammar: real literals,
  // variable names, + - * ^ and parentheses, with integer exponents and no
  // implicit multiplication.
  static Polynomial parse(const std::string& text,
                          std::vector<std::string> variables);

  const std::vector<std::string>& variables() const { return variables_; }
  const TermMap& terms() const { return terms_; }
  bool isZero() const { return terms_.empty(); }
  std::size_t termCount() const { return terms_.size(); }

  int degree() const;       // -1 for the zero polynomial
  int degreeIn(int varIndex) const;
  bool dependsOn(int varIndex) const;
  double coefficient(const Monomial& m) const;
  double maxAbsCoefficient() const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator-() const;
  Polynomial scaled(double factor) const;
  Polynomial pow(int exponent) const;

  Polynomial differentiate(int varIndex) const;
  Polynomial differentiate(const std::string& varName) const;

  double evaluate(std::span<const double> values) const;
  double evaluate(const std::map<std::string, double>& point) const;

  // Substitutes a numeric value for one variable; the variable list is
  // unchanged but the variable no longer appears in any term.
  Polynomial substitute(int varIndex, double value) const;
  // Substitutes varIndex -> factor * varIndex (diagonal rescale/sign flip).
  Polynomial substituteScaled(int varIndex, double factor) const;
  // Re-expresses the polynomial over a wider variable list that contains
  // every current variable by name.
  Polynomial embedded(std::vector<std::string> wider) const;

  // Drops coefficients with |c| <= threshold.
  Polynomial pruned(double threshold) const;

  // Canonical text form: graded-lex from the highest term, shortest
  // round-trip coefficients, e.g. "3*x1^2*x2 - 1.5*t".
  std::string str() const;

  int indexOf(const std::string& name) const;  // -1 if absent
  bool operator==(const Polynomial& other) const;

private:
  std::vector<std::string> variables_;
  TermMap terms_;

  void addTerm(const Monomial& m, double c);
  static std::vector<std::string> mergedVariables(const Polynomial& p,
                                                  const Polynomial& q);
  friend class ExprParser;
};

Polynomial operator*(double c, const Polynomial& p);

std::string formatDouble(double v);  // shortest round-trip decimal form

}  // namespace ebound
