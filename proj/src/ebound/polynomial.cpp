#include "ebound/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace ebound {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : Error(what + " (offset " + std::to_string(offset) + ")"),
      offset_(offset) {}

Monomial::Monomial(std::vector<std::pair<int, int>> factors)
    : factors_(std::move(factors)) {
  std::sort(factors_.begin(), factors_.end());
  std::vector<std::pair<int, int>> merged;
  for (const auto& [var, exp] : factors_) {
    if (exp < 0) throw Error("negative exponent in monomial");
    if (exp == 0) continue;
    if (!merged.empty() && merged.back().first == var)
      merged.back().second += exp;
    else
      merged.emplace_back(var, exp);
  }
  factors_ = std::move(merged);
}

Monomial Monomial::variable(int index, int exponent) {
  return Monomial({{index, exponent}});
}

int Monomial::degree() const {
  int d = 0;
  for (const auto& [var, exp] : factors_) d += exp;
  return d;
}

int Monomial::exponentOf(int varIndex) const {
  for (const auto& [var, exp] : factors_)
    if (var == varIndex) return exp;
  return 0;
}

Monomial Monomial::times(const Monomial& other) const {
  Monomial out;
  out.factors_.reserve(factors_.size() + other.factors_.size());
  std::size_t i = 0, j = 0;
  while (i < factors_.size() || j < other.factors_.size()) {
    if (j == other.factors_.size() ||
        (i < factors_.size() && factors_[i].first < other.factors_[j].first)) {
      out.factors_.push_back(factors_[i++]);
    } else if (i == factors_.size() ||
               other.factors_[j].first < factors_[i].first) {
      out.factors_.push_back(other.factors_[j++]);
    } else {
      out.factors_.emplace_back(factors_[i].first,
                                factors_[i].second + other.factors_[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

std::pair<int, Monomial> Monomial::differentiate(int varIndex) const {
  Monomial out;
  int coeff = 0;
  for (const auto& [var, exp] : factors_) {
    if (var == varIndex) {
      coeff = exp;
      if (exp > 1) out.factors_.emplace_back(var, exp - 1);
    } else {
      out.factors_.emplace_back(var, exp);
    }
  }
  if (coeff == 0) return {0, Monomial()};
  return {coeff, out};
}

Monomial Monomial::remapped(std::span<const int> indexMap) const {
  std::vector<std::pair<int, int>> fac;
  fac.reserve(factors_.size());
  for (const auto& [var, exp] : factors_)
    fac.emplace_back(indexMap[static_cast<std::size_t>(var)], exp);
  return Monomial(std::move(fac));
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  // Same degree: larger exponent on the earliest differing variable wins.
  std::size_t i = 0, j = 0;
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  while (i < fa.size() && j < fb.size()) {
    if (fa[i].first < fb[j].first) return true;   // a has the earlier variable
    if (fb[j].first < fa[i].first) return false;
    if (fa[i].second != fb[j].second) return fa[i].second > fb[j].second;
    ++i;
    ++j;
  }
  return i < fa.size();
}

Polynomial::Polynomial(std::vector<std::string> variables)
    : variables_(std::move(variables)) {}

Polynomial Polynomial::constant(std::vector<std::string> variables, double c) {
  Polynomial p(std::move(variables));
  p.addTerm(Monomial::one(), c);
  return p;
}

Polynomial Polynomial::variable(std::vector<std::string> variables,
                                int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= variables.size())
    throw Error("variable index out of range");
  Polynomial p(std::move(variables));
  p.addTerm(Monomial::variable(index), 1.0);
  return p;
}

Polynomial Polynomial::variable(std::vector<std::string> variables,
                                const std::string& name) {
  auto it = std::find(variables.begin(), variables.end(), name);
  if (it == variables.end()) throw Error("unknown variable '" + name + "'");
  int index = static_cast<int>(it - variables.begin());
  return variable(std::move(variables), index);
}

Polynomial Polynomial::fromTerms(std::vector<std::string> variables,
                                 TermMap terms) {
  Polynomial p(std::move(variables));
  for (auto& [m, c] : terms) p.addTerm(m, c);
  return p;
}

void Polynomial::addTerm(const Monomial& m, double c) {
  if (c == 0.0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

int Polynomial::degree() const {
  if (terms_.empty()) return -1;
  return std::prev(terms_.end())->first.degree();
}

int Polynomial::degreeIn(int varIndex) const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m.exponentOf(varIndex));
  return d;
}

bool Polynomial::dependsOn(int varIndex) const {
  for (const auto& [m, c] : terms_)
    if (m.exponentOf(varIndex) > 0) return true;
  return false;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::maxAbsCoefficient() const {
  double m = 0.0;
  for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
  return m;
}

std::vector<std::string> Polynomial::mergedVariables(const Polynomial& p,
                                                     const Polynomial& q) {
  if (p.variables_ == q.variables_) return p.variables_;
  auto contains = [](const std::vector<std::string>& big,
                     const std::vector<std::string>& small) -> const std::string* {
    for (const auto& name : small)
      if (std::find(big.begin(), big.end(), name) == big.end()) return &name;
    return nullptr;
  };
  if (const std::string* missing = contains(p.variables_, q.variables_);
      missing == nullptr)
    return p.variables_;
  if (const std::string* missing = contains(q.variables_, p.variables_);
      missing == nullptr)
    return q.variables_;
  const std::string* bad = contains(p.variables_, q.variables_);
  throw Error("incompatible variable lists: variable '" + *bad +
              "' is missing from one operand");
}

Polynomial Polynomial::embedded(std::vector<std::string> wider) const {
  if (wider == variables_) return *this;
  std::vector<int> indexMap(variables_.size());
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto it = std::find(wider.begin(), wider.end(), variables_[i]);
    if (it == wider.end())
      throw Error("incompatible variable lists: variable '" + variables_[i] +
                  "' is missing from one operand");
    indexMap[i] = static_cast<int>(it - wider.begin());
  }
  Polynomial out(std::move(wider));
  for (const auto& [m, c] : terms_) out.addTerm(m.remapped(indexMap), c);
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  auto vars = mergedVariables(*this, other);
  Polynomial a = embedded(vars);
  Polynomial b = other.embedded(vars);
  for (const auto& [m, c] : b.terms_) a.addTerm(m, c);
  return a;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  return *this + (-other);
}

Polynomial Polynomial::operator-() const { return scaled(-1.0); }

Polynomial Polynomial::scaled(double factor) const {
  Polynomial out(variables_);
  if (factor == 0.0) return out;
  for (const auto& [m, c] : terms_) out.addTerm(m, c * factor);
  return out;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  auto vars = mergedVariables(*this, other);
  Polynomial a = embedded(vars);
  Polynomial b = other.embedded(vars);
  Polynomial out(vars);
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) out.addTerm(ma.times(mb), ca * cb);
  return out;
}

Polynomial operator*(double c, const Polynomial& p) { return p.scaled(c); }

Polynomial Polynomial::pow(int exponent) const {
  if (exponent < 0) throw Error("negative exponent");
  Polynomial result = Polynomial::constant(variables_, 1.0);
  Polynomial base = *this;
  int e = exponent;
  while (e > 0) {
    if (e & 1) result = result * base;
    base = (e >>= 1) > 0 ? base * base : base;
  }
  return result;
}

Polynomial Polynomial::differentiate(int varIndex) const {
  if (varIndex < 0 || static_cast<std::size_t>(varIndex) >= variables_.size())
    throw Error("unknown variable index in differentiate");
  Polynomial out(variables_);
  for (const auto& [m, c] : terms_) {
    auto [k, dm] = m.differentiate(varIndex);
    if (k != 0) out.addTerm(dm, c * k);
  }
  return out;
}

Polynomial Polynomial::differentiate(const std::string& varName) const {
  int idx = indexOf(varName);
  if (idx < 0) throw Error("unknown variable '" + varName + "'");
  return differentiate(idx);
}

double Polynomial::evaluate(std::span<const double> values) const {
  if (values.size() != variables_.size())
    throw Error("evaluate: expected " + std::to_string(variables_.size()) +
                " values, got " + std::to_string(values.size()));
  double sum = 0.0;
  for (const auto& [m, c] : terms_) {
    double term = c;
    for (const auto& [var, exp] : m.factors()) {
      double base = values[static_cast<std::size_t>(var)];
      double p = 1.0;
      double b = base;
      int e = exp;
      while (e > 0) {
        if (e & 1) p *= b;
        e >>= 1;
        if (e) b *= b;
      }
      term *= p;
    }
    sum += term;
  }
  return sum;
}

double Polynomial::evaluate(const std::map<std::string, double>& point) const {
  std::vector<double> values(variables_.size(), 0.0);
  std::vector<bool> assigned(variables_.size(), false);
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    auto it = point.find(variables_[i]);
    if (it != point.end()) {
      values[i] = it->second;
      assigned[i] = true;
    }
  }
  for (const auto& [m, c] : terms_)
    for (const auto& [var, exp] : m.factors())
      if (!assigned[static_cast<std::size_t>(var)])
        throw Error("evaluate: missing assignment for variable '" +
                    variables_[static_cast<std::size_t>(var)] + "'");
  return evaluate(values);
}

Polynomial Polynomial::substitute(int varIndex, double value) const {
  Polynomial out(variables_);
  for (const auto& [m, c] : terms_) {
    int exp = m.exponentOf(varIndex);
    if (exp == 0) {
      out.addTerm(m, c);
      continue;
    }
    double factor = 1.0;
    for (int k = 0; k < exp; ++k) factor *= value;
    std::vector<std::pair<int, int>> fac;
    for (const auto& [var, e] : m.factors())
      if (var != varIndex) fac.emplace_back(var, e);
    out.addTerm(Monomial(std::move(fac)), c * factor);
  }
  return out;
}

Polynomial Polynomial::substituteScaled(int varIndex, double factor) const {
  Polynomial out(variables_);
  for (const auto& [m, c] : terms_) {
    int exp = m.exponentOf(varIndex);
    double scale = 1.0;
    for (int k = 0; k < exp; ++k) scale *= factor;
    out.addTerm(m, c * scale);
  }
  return out;
}

Polynomial Polynomial::pruned(double threshold) const {
  Polynomial out(variables_);
  for (const auto& [m, c] : terms_)
    if (std::abs(c) > threshold) out.addTerm(m, c);
  return out;
}

int Polynomial::indexOf(const std::string& name) const {
  auto it = std::find(variables_.begin(), variables_.end(), name);
  return it == variables_.end() ? -1
                                : static_cast<int>(it - variables_.begin());
}

bool Polynomial::operator==(const Polynomial& other) const {
  if (variables_ == other.variables_) return terms_ == other.terms_;
  try {
    auto vars = mergedVariables(*this, other);
    return embedded(vars).terms_ == other.embedded(vars).terms_;
  } catch (const Error&) {
    return false;
  }
}

std::string formatDouble(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string Polynomial::str() const {
  if (terms_.empty()) return "0";
  // Print order: highest degree first; within a degree, the graded-lex
  // layer order (t^2 before t*x before x^2).
  std::vector<const std::pair<const Monomial, double>*> order;
  order.reserve(terms_.size());
  for (const auto& term : terms_) order.push_back(&term);
  GradedLexLess less;
  std::stable_sort(order.begin(), order.end(), [&](const auto* a, const auto* b) {
    int da = a->first.degree(), db = b->first.degree();
    if (da != db) return da > db;
    return less(a->first, b->first);
  });
  std::ostringstream out;
  bool first = true;
  for (const auto* term : order) {
    const auto& [m, c] = *term;
    double mag = std::abs(c);
    if (first) {
      if (c < 0) out << "-";
      first = false;
    } else {
      out << (c < 0 ? " - " : " + ");
    }
    bool unitCoeff = (mag == 1.0) && !m.isOne();
    if (!unitCoeff) out << formatDouble(mag);
    bool needStar = !unitCoeff;
    for (const auto& [var, exp] : m.factors()) {
      if (needStar) out << "*";
      out << variables_[static_cast<std::size_t>(var)];
      if (exp > 1) out << "^" << exp;
      needStar = true;
    }
  }
  return out.str();
}

// --- expression parser -----------------------------------------------------

class ExprParser {
public:
  ExprParser(const std::string& text, std::vector<std::string> variables)
      : text_(text), vars_(std::move(variables)) {}

  Polynomial run() {
    Polynomial p = parseExpr();
    skipSpace();
    if (pos_ != text_.size())
      throw ParseError("unexpected character '" + std::string(1, text_[pos_]) +
                           "'",
                       pos_);
    return p;
  }

private:
  const std::string& text_;
  std::vector<std::string> vars_;
  std::size_t pos_ = 0;

  void skipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skipSpace();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skipSpace();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  Polynomial parseExpr() {
    Polynomial acc = parseTerm();
    for (;;) {
      if (eat('+'))
        acc = acc + parseTerm();
      else if (eat('-'))
        acc = acc - parseTerm();
      else
        return acc;
    }
  }

  Polynomial parseTerm() {
    Polynomial acc = parseFactor();
    while (eat('*')) acc = acc * parseFactor();
    return acc;
  }

  Polynomial parseFactor() {
    if (eat('-')) return -parseFactor();
    Polynomial base = parseAtom();
    if (eat('^')) {
      skipSpace();
      std::size_t expPos = pos_;
      if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+'))
        throw ParseError("exponent must be a nonnegative integer literal",
                         expPos);
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             std::isdigit(static_cast<unsigned char>(text_[pos_])))
        ++pos_;
      if (pos_ == start)
        throw ParseError("exponent must be a nonnegative integer literal",
                         expPos);
      if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' ||
                                  text_[pos_] == 'E'))
        throw ParseError("exponent must be a nonnegative integer literal",
                         expPos);
      int exp = 0;
      std::from_chars(text_.data() + start, text_.data() + pos_, exp);
      return base.pow(exp);
    }
    return base;
  }

  Polynomial parseAtom() {
    skipSpace();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = parseExpr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parseNumber();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parseIdentifier();
    throw ParseError("unexpected character '" + std::string(1, c) + "'", pos_);
  }

  Polynomial parseNumber() {
    std::size_t start = pos_;
    double value = 0.0;
    auto res =
        std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (res.ec != std::errc())
      throw ParseError("invalid numeric literal", start);
    pos_ = static_cast<std::size_t>(res.ptr - text_.data());
    // Reject implicit multiplication like "2x".
    if (pos_ < text_.size() &&
        (std::isalpha(static_cast<unsigned char>(text_[pos_])) ||
         text_[pos_] == '_'))
      throw ParseError("implicit multiplication is not allowed", pos_);
    return Polynomial::constant(vars_, value);
  }

  Polynomial parseIdentifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
            text_[pos_] == '_'))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    auto it = std::find(vars_.begin(), vars_.end(), name);
    if (it == vars_.end())
      throw ParseError("unknown identifier '" + name + "'", start);
    return Polynomial::variable(vars_, static_cast<int>(it - vars_.begin()));
  }
};

Polynomial Polynomial::parse(const std::string& text,
                             std::vector<std::string> variables) {
  return ExprParser(text, std::move(variables)).run();
}

}  // namespace ebound
