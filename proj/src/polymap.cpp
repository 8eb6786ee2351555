#include "magnify/polymap.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

namespace magnify {

namespace {

using Terms = std::map<Exponents, Rational, std::greater<>>;

Terms collect(int n, const std::vector<Monomial>& monomials) {
  Terms terms;
  for (const auto& m : monomials) {
    if (static_cast<int>(m.exponents.size()) != n) {
      throw DimensionError("monomial has " + std::to_string(m.exponents.size()) + " exponents, map dimension is " +
                           std::to_string(n));
    }
    terms[m.exponents] += m.coefficient;
  }
  std::erase_if(terms, [](const auto& kv) { return kv.second == 0; });
  return terms;
}

std::vector<Monomial> to_monomials(const Terms& terms) {
  std::vector<Monomial> out;
  out.reserve(terms.size());
  for (const auto& [exps, coeff] : terms) {
    if (coeff != 0) out.push_back({coeff, exps});
  }
  return out;
}

Terms add(Terms a, const Terms& b, int sign) {
  for (const auto& [exps, coeff] : b) a[exps] += sign > 0 ? coeff : Rational(-coeff);
  std::erase_if(a, [](const auto& kv) { return kv.second == 0; });
  return a;
}

Terms multiply(const Terms& a, const Terms& b) {
  Terms out;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      Exponents e(ea.size());
      for (std::size_t j = 0; j < e.size(); ++j) e[j] = ea[j] + eb[j];
      out[e] += ca * cb;
    }
  }
  std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
  return out;
}

Terms differentiate(const Terms& terms, int var) {
  Terms out;
  for (const auto& [exps, coeff] : terms) {
    const unsigned e = exps[static_cast<std::size_t>(var)];
    if (e == 0) continue;
    Exponents d = exps;
    d[static_cast<std::size_t>(var)] = e - 1;
    out[d] += coeff * e;
  }
  return out;
}

Rational evaluate_terms(const Terms& terms, const std::vector<Rational>& point) {
  Rational sum = 0;
  for (const auto& [exps, coeff] : terms) {
    Rational term = coeff;
    for (std::size_t j = 0; j < exps.size(); ++j) {
      for (unsigned p = 0; p < exps[j]; ++p) term *= point[j];
    }
    sum += term;
  }
  return sum;
}

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_number, int n)
      : line_(line), line_number_(line_number), n_(n) {}

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(line_number_, pos_ + 1, message); }

  void skip_space() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) ++pos_;
  }

  bool at_end() {
    skip_space();
    return pos_ >= line_.size();
  }

  char peek() {
    skip_space();
    return pos_ < line_.size() ? line_[pos_] : '\0';
  }

  void expect(char c, const char* what) {
    if (peek() != c) fail(std::string("expected ") + what);
    ++pos_;
  }

  std::string_view digits() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    return line_.substr(start, pos_ - start);
  }

  unsigned integer(const char* what) {
    const auto text = digits();
    if (text.empty()) fail(std::string("expected ") + what);
    if (text.size() > 9) fail(std::string(what) + " is too large");
    return static_cast<unsigned>(std::stoul(std::string(text)));
  }

  Terms constant(const Rational& value) const {
    Terms t;
    if (value != 0) t[Exponents(static_cast<std::size_t>(n_), 0)] = value;
    return t;
  }

  Terms expr() {
    int sign = 1;
    if (peek() == '+' || peek() == '-') {
      sign = line_[pos_] == '-' ? -1 : 1;
      ++pos_;
    }
    Terms result = add(Terms{}, term(), sign);
    while (peek() == '+' || peek() == '-') {
      const int s = line_[pos_] == '-' ? -1 : 1;
      ++pos_;
      result = add(std::move(result), term(), s);
    }
    return result;
  }

  Terms term() {
    Terms result = factor();
    while (peek() == '*') {
      ++pos_;
      result = multiply(result, factor());
    }
    return result;
  }

  Terms factor() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Terms inner = expr();
      expect(')', "')'");
      return inner;
    }
    if (c == 'x') {
      ++pos_;
      const std::size_t var_pos = pos_;
      const unsigned index = integer("variable index after 'x'");
      if (index < 1 || static_cast<int>(index) > n_) {
        pos_ = var_pos;
        fail("variable index x" + std::to_string(index) + " exceeds dimension " + std::to_string(n_));
      }
      unsigned power = 1;
      if (peek() == '^') {
        ++pos_;
        power = integer("exponent after '^'");
      }
      Exponents e(static_cast<std::size_t>(n_), 0);
      e[index - 1] = power;
      Terms t;
      t[e] = 1;
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(coefficient());
    if (c == '\0') fail("expected coefficient, variable or '(' but reached end of line");
    fail(std::string("expected coefficient, variable or '(' but found '") + c + "'");
  }

  Rational coefficient() {
    skip_space();
    const std::size_t start = pos_;
    while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    bool decimal = false;
    if (pos_ < line_.size() && line_[pos_] == '.') {
      decimal = true;
      ++pos_;
      while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
    }
    if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
      decimal = true;
      ++pos_;
      if (pos_ < line_.size() && (line_[pos_] == '+' || line_[pos_] == '-')) ++pos_;
      const std::size_t exp_start = pos_;
      while (pos_ < line_.size() && std::isdigit(static_cast<unsigned char>(line_[pos_]))) ++pos_;
      if (pos_ == exp_start) fail("expected exponent digits in decimal coefficient");
    }
    const auto text = line_.substr(start, pos_ - start);
    if (text == "." || text.empty()) {
      pos_ = start;
      fail("expected coefficient");
    }
    if (decimal) return parse_decimal(text);
    Rational value{boost::multiprecision::cpp_int(std::string(text))};
    if (peek() == '/') {
      ++pos_;
      const auto denom_text = digits();
      if (denom_text.empty()) fail("expected integer denominator after '/'");
      const boost::multiprecision::cpp_int denom(std::string{denom_text});
      if (denom == 0) fail("zero denominator");
      value /= Rational(denom);
    }
    return value;
  }

  std::size_t pos_ = 0;

 private:
  std::string_view line_;
  std::size_t line_number_;
  int n_;
};

std::string_view strip_comment(std::string_view line) {
  const auto hash = line.find('#');
  return hash == std::string_view::npos ? line : line.substr(0, hash);
}

bool blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

std::string rational_text(const Rational& r) {
  std::ostringstream out;
  out << numerator(r);
  if (denominator(r) != 1) out << '/' << denominator(r);
  return out.str();
}

std::vector<Rational> to_rational(const Vector& v) {
  std::vector<Rational> out;
  out.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out.emplace_back(v[i]);
  return out;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

unsigned Monomial::degree() const {
  unsigned d = 0;
  for (unsigned e : exponents) d += e;
  return d;
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

PolynomialMap::PolynomialMap(int n, std::vector<std::vector<Monomial>> components) : n_(n) {
  if (n < 1) throw DimensionError("polynomial map dimension must be at least 1");
  if (static_cast<int>(components.size()) != n) {
    throw DimensionError("polynomial map of dimension " + std::to_string(n) + " needs " + std::to_string(n) +
                         " components, got " + std::to_string(components.size()));
  }
  auto rounded = std::make_shared<std::vector<std::vector<RoundedTerm>>>();
  for (const auto& comp : components) {
    components_.push_back(to_monomials(collect(n, comp)));
    auto& r = rounded->emplace_back();
    for (const auto& m : components_.back()) r.push_back({to_double(m.coefficient), m.exponents});
  }
  rounded_ = std::move(rounded);
}

PolynomialMap PolynomialMap::identity(int n) {
  std::vector<std::vector<Monomial>> comps(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Exponents e(static_cast<std::size_t>(n), 0);
    e[static_cast<std::size_t>(i)] = 1;
    comps[static_cast<std::size_t>(i)].push_back({Rational(1), e});
  }
  return PolynomialMap(n, std::move(comps));
}

unsigned PolynomialMap::total_degree() const {
  unsigned d = 0;
  for (const auto& comp : components_) {
    for (const auto& m : comp) d = std::max(d, m.degree());
  }
  return d;
}

Vector PolynomialMap::evaluate(const Vector& point) const {
  require_dimension(point.size(), n_, "evaluate");
  Vector out(n_);
  for (int i = 0; i < n_; ++i) {
    double sum = 0.0;
    for (const auto& t : (*rounded_)[static_cast<std::size_t>(i)]) {
      double term = t.coefficient;
      for (int j = 0; j < n_; ++j) {
        for (unsigned p = 0; p < t.exponents[static_cast<std::size_t>(j)]; ++p) term *= point[j];
      }
      sum += term;
    }
    out[i] = sum;
  }
  return out;
}

std::vector<Rational> PolynomialMap::evaluate(const std::vector<Rational>& point) const {
  require_dimension(static_cast<Eigen::Index>(point.size()), n_, "evaluate");
  std::vector<Rational> out;
  for (const auto& comp : components_) out.push_back(evaluate_terms(collect(n_, comp), point));
  return out;
}

Evaluator PolynomialMap::evaluator() const {
  return [map = *this](const Vector& x) { return map.evaluate(x); };
}

Rational parse_decimal(std::string_view text) {
  using boost::multiprecision::cpp_int;
  std::size_t pos = 0;
  std::string mantissa;
  long long scale = 0;
  while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) mantissa += text[pos++];
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      mantissa += text[pos++];
      --scale;
    }
  }
  if (mantissa.empty()) throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    ++pos;
    scale += std::stoll(std::string(text.substr(pos)));
    pos = text.size();
  }
  if (pos != text.size()) throw std::invalid_argument("malformed decimal '" + std::string(text) + "'");
  if (scale > 4096 || scale < -4096) throw std::invalid_argument("decimal exponent out of range");
  Rational value{cpp_int(mantissa)};
  const cpp_int ten_power = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
  return scale < 0 ? Rational(value / Rational(ten_power)) : Rational(value * Rational(ten_power));
}

PolynomialMap parse_map(std::string_view text) {
  std::vector<std::string_view> lines;
  for (std::size_t start = 0; start <= text.size();) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }

  std::optional<int> n;
  std::vector<std::optional<Terms>> comps;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const auto line = strip_comment(lines[li]);
    if (blank(line)) continue;
    LineParser p(line, li + 1, n.value_or(0));
    if (!n) {
      if (line.substr(line.find_first_not_of(" \t")).rfind("dim", 0) != 0) {
        p.skip_space();
        p.fail("expected 'dim' header");
      }
      p.skip_space();
      p.pos_ += 3;
      const unsigned dim = p.integer("dimension after 'dim'");
      if (dim < 1 || dim > 16) p.fail("dimension must be between 1 and 16");
      if (!p.at_end()) p.fail("expected end of line after dimension");
      n = static_cast<int>(dim);
      comps.assign(dim, std::nullopt);
      continue;
    }
    if (p.peek() != 'f') p.fail("expected component definition 'f<index> ='");
    ++p.pos_;
    const std::size_t index_pos = p.pos_;
    const unsigned index = p.integer("component index after 'f'");
    if (index < 1 || static_cast<int>(index) > *n) {
      p.pos_ = index_pos;
      p.fail("component index f" + std::to_string(index) + " exceeds dimension " + std::to_string(*n));
    }
    if (comps[index - 1]) {
      p.pos_ = index_pos;
      p.fail("duplicate definition of component f" + std::to_string(index));
    }
    p.expect('=', "'='");
    Terms terms = p.expr();
    if (!p.at_end()) p.fail(std::string("expected '+', '-', '*' or end of line but found '") + p.peek() + "'");
    comps[index - 1] = std::move(terms);
  }
  if (!n) throw ParseError(1, 1, "expected 'dim' header");

  std::vector<std::vector<Monomial>> components;
  for (auto& c : comps) components.push_back(c ? to_monomials(*c) : std::vector<Monomial>{});
  return PolynomialMap(*n, std::move(components));
}

PolynomialMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read map file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_map(buffer.str());
}

std::string print_map(const PolynomialMap& map) {
  std::ostringstream out;
  out << "dim " << map.dimension() << '\n';
  for (int i = 0; i < map.dimension(); ++i) {
    out << 'f' << (i + 1) << " = ";
    const auto& comp = map.components()[static_cast<std::size_t>(i)];
    if (comp.empty()) out << '0';
    bool first = true;
    for (const auto& m : comp) {
      const bool negative = m.coefficient < 0;
      if (first) {
        if (negative) out << '-';
      } else {
        out << (negative ? " - " : " + ");
      }
      first = false;
      const Rational magnitude = negative ? Rational(-m.coefficient) : m.coefficient;
      std::vector<std::string> factors;
      for (std::size_t j = 0; j < m.exponents.size(); ++j) {
        if (m.exponents[j] == 0) continue;
        std::string f = "x" + std::to_string(j + 1);
        if (m.exponents[j] > 1) f += "^" + std::to_string(m.exponents[j]);
        factors.push_back(std::move(f));
      }
      if (factors.empty() || magnitude != 1) factors.insert(factors.begin(), rational_text(magnitude));
      for (std::size_t k = 0; k < factors.size(); ++k) out << (k ? "*" : "") << factors[k];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Rational> RationalExpansion::reconstruct(const std::vector<Rational>& v) const {
  const std::size_t n = value.size();
  if (v.size() != n) throw DimensionError("RationalExpansion::reconstruct: dimension mismatch");
  std::vector<Rational> out = value;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < n; ++a) {
      out[i] += linear[i][a] * v[a];
      if (order < 2) continue;
      for (std::size_t b = 0; b < n; ++b) {
        out[i] += quadratic[i][a][b] * v[a] * v[b];
        if (order < 3) continue;
        for (std::size_t c = 0; c < n; ++c) out[i] += cubic[i][a][b][c] * v[a] * v[b] * v[c];
      }
    }
  }
  return out;
}

RationalExpansion exact_expansion_rational(const PolynomialMap& map, const std::vector<Rational>& point, int order) {
  validate_order(order);
  const int n = map.dimension();
  require_dimension(static_cast<Eigen::Index>(point.size()), n, "exact_expansion");
  const auto un = static_cast<std::size_t>(n);

  RationalExpansion e;
  e.point = point;
  e.order = order;
  e.linear.assign(un, std::vector<Rational>(un));
  if (order >= 2) e.quadratic.assign(un, std::vector<std::vector<Rational>>(un, std::vector<Rational>(un)));
  if (order >= 3) {
    e.cubic.assign(un, std::vector<std::vector<std::vector<Rational>>>(
                           un, std::vector<std::vector<Rational>>(un, std::vector<Rational>(un))));
  }

  for (std::size_t i = 0; i < un; ++i) {
    const Terms f = collect(n, map.components()[i]);
    e.value.push_back(evaluate_terms(f, point));
    for (std::size_t a = 0; a < un; ++a) {
      const Terms fa = differentiate(f, static_cast<int>(a));
      e.linear[i][a] = evaluate_terms(fa, point);
      if (order < 2) continue;
      for (std::size_t b = a; b < un; ++b) {
        const Terms fab = differentiate(fa, static_cast<int>(b));
        const Rational q = evaluate_terms(fab, point) / 2;
        e.quadratic[i][a][b] = e.quadratic[i][b][a] = q;
        if (order < 3) continue;
        for (std::size_t c = b; c < un; ++c) {
          const Rational t = evaluate_terms(differentiate(fab, static_cast<int>(c)), point) / 6;
          for (const auto& [p, q2, r] : {std::tuple{a, b, c}, std::tuple{a, c, b}, std::tuple{b, a, c},
                                         std::tuple{b, c, a}, std::tuple{c, a, b}, std::tuple{c, b, a}}) {
            e.cubic[i][p][q2][r] = t;
          }
        }
      }
    }
  }
  return e;
}

Expansion exact_expansion(const PolynomialMap& map, const Vector& point, int order) {
  const RationalExpansion r = exact_expansion_rational(map, to_rational(point), order);
  const int n = map.dimension();
  const auto un = static_cast<std::size_t>(n);

  Expansion e;
  e.base_point = point;
  e.order = order;
  e.value.resize(n);
  e.linear.resize(n, n);
  for (std::size_t i = 0; i < un; ++i) {
    e.value[static_cast<Eigen::Index>(i)] = to_double(r.value[i]);
    for (std::size_t a = 0; a < un; ++a) {
      e.linear(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a)) = to_double(r.linear[i][a]);
    }
  }
  if (order >= 2) {
    std::vector<Matrix> forms(un, Matrix(n, n));
    for (std::size_t i = 0; i < un; ++i) {
      for (std::size_t a = 0; a < un; ++a) {
        for (std::size_t b = 0; b < un; ++b) {
          forms[i](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = to_double(r.quadratic[i][a][b]);
        }
      }
    }
    e.quadratic = QuadDifferential(std::move(forms));
  }
  if (order >= 3) {
    CubicForm cubic(n);
    for (int i = 0; i < n; ++i) {
      for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
          for (int c = b; c < n; ++c) {
            cubic.set_symmetric(i, a, b, c, to_double(r.cubic[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)]
                                                           [static_cast<std::size_t>(b)][static_cast<std::size_t>(c)]));
          }
        }
      }
    }
    e.cubic = std::move(cubic);
  }
  return e;
}

Matrix exact_jacobian(const PolynomialMap& map, const Vector& point) {
  return exact_expansion(map, point, 1).linear;
}

}  // namespace magnify
