#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dynbound/errors.hpp"

namespace dynbound {

/// coefficient * prod_k x_k^exponents[k]
struct Monomial {
  double coefficient = 0.0;
  std::vector<unsigned> exponents;

  bool is_constant() const;
  bool all_even() const;
  unsigned degree() const;
};

/// A real polynomial in a fixed number of variables, kept in canonical form:
/// terms sorted by exponent tuple (lexicographic, ascending), like terms
/// merged, zero coefficients dropped.
class Polynomial {
 public:
  explicit Polynomial(std::size_t num_vars = 0);
  Polynomial(std::size_t num_vars, std::vector<Monomial> terms);

  static Polynomial constant(std::size_t num_vars, double value);
  static Polynomial variable(std::size_t num_vars, std::size_t index);

  std::size_t num_vars() const noexcept { return num_vars_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  bool is_zero() const noexcept { return terms_.empty(); }
  double constant_term() const;
  unsigned degree() const;

  double evaluate(std::span<const double> x) const;
  Polynomial derivative(std::size_t var) const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double scale);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  Polynomial pow(unsigned exponent) const;

  friend bool operator==(const Polynomial& a, const Polynomial& b);

  /// Renders with the given variable names, e.g. "40*y - 40*x". The output is
  /// accepted by parse_system and round-trips exactly.
  std::string to_string(std::span<const std::string> names) const;

 private:
  void canonicalize();

  std::size_t num_vars_;
  std::vector<Monomial> terms_;
};

/// Polynomial vector field f: R^n -> R^n. Immutable after construction;
/// evaluation and Jacobian tables are compiled once.
class PolyField {
 public:
  PolyField(std::vector<std::string> variable_names, std::vector<Polynomial> components,
            std::map<std::string, double> parameters = {});

  std::size_t dimension() const noexcept { return names_.size(); }
  const std::vector<std::string>& variable_names() const noexcept { return names_; }
  const std::vector<Polynomial>& components() const noexcept { return components_; }
  const Polynomial& component(std::size_t i) const { return components_.at(i); }
  const std::map<std::string, double>& parameters() const noexcept { return parameters_; }
  /// Index of a variable by name, if declared.
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::vector<double> evaluate(std::span<const double> x) const;
  void evaluate_into(std::span<const double> x, std::span<double> out) const;

  Eigen::MatrixXd jacobian(std::span<const double> x) const;
  /// Column-major n*n output.
  void jacobian_into(std::span<const double> x, std::span<double> out) const;
  /// Divergence of the field (trace of the Jacobian).
  double divergence(std::span<const double> x) const;

  /// One `d<var>/dt = <expr>` line per component, parameters already folded in.
  std::string to_config_text() const;

  friend bool operator==(const PolyField& a, const PolyField& b);

 private:
  struct Factor {
    unsigned var;
    unsigned power;
  };
  struct CompiledTerm {
    double coefficient;
    unsigned first_factor;
    unsigned num_factors;
  };
  struct CompiledPoly {
    unsigned first_term = 0;
    unsigned num_terms = 0;
  };

  void compile();
  CompiledPoly compile_one(const Polynomial& p);
  double eval_compiled(const CompiledPoly& p, std::span<const double> x) const;
  void check_dim(std::span<const double> x, const char* what) const;

  std::vector<std::string> names_;
  std::vector<Polynomial> components_;
  std::map<std::string, double> parameters_;

  std::vector<Factor> factors_;
  std::vector<CompiledTerm> terms_;
  std::vector<CompiledPoly> compiled_components_;
  std::vector<CompiledPoly> compiled_jacobian_;  // column-major (i + n*k) = d f_i / d x_k
};

/// Raised by parse_system. Line and column are 1-based.
class ParseError : public Error {
 public:
  enum class Kind { Syntax, UndefinedName, Dimension };

  ParseError(Kind kind, std::size_t line, std::size_t column, const std::string& message);

  Kind kind() const noexcept { return kind_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  Kind kind_;
  std::size_t line_;
  std::size_t column_;
};

/// Parses the system-config text format:
///
///   # comment
///   param a=40
///   dx/dt = a*(y - x)
///   dy/dt = x*(28 - z) - y
///
/// Variables are declared by the left-hand sides, in order. Expressions use
/// `+ - * ^` with non-negative integer exponents and parentheses.
PolyField parse_system(std::string_view text);

/// Reads and parses a system-config file.
PolyField load_system(const std::string& path);

/// Sound but incomplete lower bound: if p = c0 + sum c_i m_i with every m_i
/// an all-even monomial and every c_i >= 0, returns c0. Absent means the
/// certifier could not decide, not that p is unbounded below.
std::optional<double> certify_lower_bound(const Polynomial& p);

}  // namespace dynbound
