#include "dynbound/polyfield.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dynbound {

bool Monomial::is_constant() const {
  return std::all_of(exponents.begin(), exponents.end(), [](unsigned e) { return e == 0; });
}

bool Monomial::all_even() const {
  return std::all_of(exponents.begin(), exponents.end(), [](unsigned e) { return e % 2 == 0; });
}

unsigned Monomial::degree() const {
  return std::accumulate(exponents.begin(), exponents.end(), 0u);
}

Polynomial::Polynomial(std::size_t num_vars) : num_vars_(num_vars) {}

Polynomial::Polynomial(std::size_t num_vars, std::vector<Monomial> terms)
    : num_vars_(num_vars), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.exponents.size() != num_vars_) {
      throw DimensionError("monomial exponent tuple", num_vars_, t.exponents.size());
    }
    if (!std::isfinite(t.coefficient)) {
      throw Error("monomial coefficient is not finite");
    }
  }
  canonicalize();
}

Polynomial Polynomial::constant(std::size_t num_vars, double value) {
  return Polynomial(num_vars, {Monomial{value, std::vector<unsigned>(num_vars, 0)}});
}

Polynomial Polynomial::variable(std::size_t num_vars, std::size_t index) {
  std::vector<unsigned> e(num_vars, 0);
  e.at(index) = 1;
  return Polynomial(num_vars, {Monomial{1.0, std::move(e)}});
}

void Polynomial::canonicalize() {
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Monomial& a, const Monomial& b) { return a.exponents < b.exponents; });
  std::vector<Monomial> merged;
  merged.reserve(terms_.size());
  for (auto& t : terms_) {
    if (!merged.empty() && merged.back().exponents == t.exponents) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Monomial& m) { return m.coefficient == 0.0; });
  terms_ = std::move(merged);
}

double Polynomial::constant_term() const {
  if (!terms_.empty() && terms_.front().is_constant()) return terms_.front().coefficient;
  return 0.0;
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto& t : terms_) d = std::max(d, t.degree());
  return d;
}

double Polynomial::evaluate(std::span<const double> x) const {
  if (x.size() != num_vars_) throw DimensionError("polynomial evaluation", num_vars_, x.size());
  double sum = 0.0;
  for (const auto& t : terms_) {
    double v = t.coefficient;
    for (std::size_t k = 0; k < num_vars_; ++k) {
      for (unsigned p = 0; p < t.exponents[k]; ++p) v *= x[k];
    }
    sum += v;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= num_vars_) throw DimensionError("derivative variable index", num_vars_, var);
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.exponents[var] == 0) continue;
    Monomial d = t;
    d.coefficient *= static_cast<double>(t.exponents[var]);
    d.exponents[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(num_vars_, std::move(out));
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto& t : r.terms_) t.coefficient = -t.coefficient;
  return r;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.num_vars_ != num_vars_) throw DimensionError("polynomial sum", num_vars_, other.num_vars_);
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  canonicalize();
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) { return *this += -other; }

Polynomial& Polynomial::operator*=(double scale) {
  for (auto& t : terms_) t.coefficient *= scale;
  canonicalize();
  return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_) throw DimensionError("polynomial product", a.num_vars_, b.num_vars_);
  std::vector<Monomial> out;
  out.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& ta : a.terms_) {
    for (const auto& tb : b.terms_) {
      Monomial m{ta.coefficient * tb.coefficient, ta.exponents};
      for (std::size_t k = 0; k < m.exponents.size(); ++k) m.exponents[k] += tb.exponents[k];
      out.push_back(std::move(m));
    }
  }
  return Polynomial(a.num_vars_, std::move(out));
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result = constant(num_vars_, 1.0);
  for (unsigned i = 0; i < exponent; ++i) result = result * *this;
  return result;
}

bool operator==(const Polynomial& a, const Polynomial& b) {
  if (a.num_vars_ != b.num_vars_ || a.terms_.size() != b.terms_.size()) return false;
  for (std::size_t i = 0; i < a.terms_.size(); ++i) {
    if (a.terms_[i].coefficient != b.terms_[i].coefficient ||
        a.terms_[i].exponents != b.terms_[i].exponents) {
      return false;
    }
  }
  return true;
}

namespace {

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Polynomial::to_string(std::span<const std::string> names) const {
  if (names.size() != num_vars_) throw DimensionError("variable names", num_vars_, names.size());
  if (terms_.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : terms_) {
    double c = t.coefficient;
    if (first) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    c = std::abs(c);
    std::string factors;
    for (std::size_t k = 0; k < num_vars_; ++k) {
      if (t.exponents[k] == 0) continue;
      if (!factors.empty()) factors += "*";
      factors += names[k];
      if (t.exponents[k] > 1) factors += "^" + std::to_string(t.exponents[k]);
    }
    if (factors.empty()) {
      out += format_real(c);
    } else if (c == 1.0) {
      out += factors;
    } else {
      out += format_real(c) + "*" + factors;
    }
    first = false;
  }
  return out;
}

PolyField::PolyField(std::vector<std::string> variable_names, std::vector<Polynomial> components,
                     std::map<std::string, double> parameters)
    : names_(std::move(variable_names)),
      components_(std::move(components)),
      parameters_(std::move(parameters)) {
  if (names_.empty()) throw Error("a vector field needs at least one variable");
  if (components_.size() != names_.size()) {
    throw DimensionError("field components", names_.size(), components_.size());
  }
  for (const auto& c : components_) {
    if (c.num_vars() != names_.size()) throw DimensionError("component variables", names_.size(), c.num_vars());
  }
  compile();
}

std::optional<std::size_t> PolyField::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

PolyField::CompiledPoly PolyField::compile_one(const Polynomial& p) {
  CompiledPoly cp{static_cast<unsigned>(terms_.size()), static_cast<unsigned>(p.terms().size())};
  for (const auto& t : p.terms()) {
    CompiledTerm ct{t.coefficient, static_cast<unsigned>(factors_.size()), 0};
    for (std::size_t k = 0; k < t.exponents.size(); ++k) {
      if (t.exponents[k] == 0) continue;
      factors_.push_back({static_cast<unsigned>(k), t.exponents[k]});
      ++ct.num_factors;
    }
    terms_.push_back(ct);
  }
  return cp;
}

void PolyField::compile() {
  const std::size_t n = dimension();
  for (const auto& c : components_) compiled_components_.push_back(compile_one(c));
  compiled_jacobian_.resize(n * n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      compiled_jacobian_[i + n * k] = compile_one(components_[i].derivative(k));
    }
  }
}

double PolyField::eval_compiled(const CompiledPoly& p, std::span<const double> x) const {
  double sum = 0.0;
  const CompiledTerm* t = terms_.data() + p.first_term;
  for (unsigned i = 0; i < p.num_terms; ++i, ++t) {
    double v = t->coefficient;
    const Factor* f = factors_.data() + t->first_factor;
    for (unsigned j = 0; j < t->num_factors; ++j, ++f) {
      const double base = x[f->var];
      for (unsigned e = 0; e < f->power; ++e) v *= base;
    }
    sum += v;
  }
  return sum;
}

void PolyField::check_dim(std::span<const double> x, const char* what) const {
  if (x.size() != dimension()) throw DimensionError(what, dimension(), x.size());
}

std::vector<double> PolyField::evaluate(std::span<const double> x) const {
  std::vector<double> out(dimension());
  evaluate_into(x, out);
  return out;
}

void PolyField::evaluate_into(std::span<const double> x, std::span<double> out) const {
  check_dim(x, "field evaluation state");
  if (out.size() != dimension()) throw DimensionError("field evaluation output", dimension(), out.size());
  for (std::size_t i = 0; i < compiled_components_.size(); ++i) {
    out[i] = eval_compiled(compiled_components_[i], x);
  }
}

Eigen::MatrixXd PolyField::jacobian(std::span<const double> x) const {
  const auto n = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd j(n, n);
  jacobian_into(x, std::span<double>(j.data(), static_cast<std::size_t>(n * n)));
  return j;
}

void PolyField::jacobian_into(std::span<const double> x, std::span<double> out) const {
  check_dim(x, "jacobian state");
  const std::size_t n = dimension();
  if (out.size() != n * n) throw DimensionError("jacobian output", n * n, out.size());
  for (std::size_t idx = 0; idx < n * n; ++idx) out[idx] = eval_compiled(compiled_jacobian_[idx], x);
}

double PolyField::divergence(std::span<const double> x) const {
  check_dim(x, "divergence state");
  const std::size_t n = dimension();
  double tr = 0.0;
  for (std::size_t i = 0; i < n; ++i) tr += eval_compiled(compiled_jacobian_[i + n * i], x);
  return tr;
}

std::string PolyField::to_config_text() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < dimension(); ++i) {
    out << 'd' << names_[i] << "/dt = " << components_[i].to_string(names_) << '\n';
  }
  return out.str();
}

bool operator==(const PolyField& a, const PolyField& b) {
  return a.names_ == b.names_ && a.components_ == b.components_;
}

std::optional<double> certify_lower_bound(const Polynomial& p) {
  double alpha = 0.0;
  for (const auto& t : p.terms()) {
    if (t.is_constant()) {
      alpha = t.coefficient;
    } else if (!t.all_even() || t.coefficient < 0.0) {
      return std::nullopt;
    }
  }
  return alpha;
}

PolyField load_system(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open system file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_system(buf.str());
}

}  // namespace dynbound
