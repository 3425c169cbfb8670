#include "salyap/registry.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <boost/algorithm/string.hpp>

#include "salyap/csv.hpp"
#include "salyap/linalg.hpp"

namespace salyap {

std::vector<double> parse_list(const std::string& text) {
  std::vector<std::string> parts;
  const std::string trimmed = boost::algorithm::trim_copy(text);
  if (trimmed.empty()) return {};
  boost::algorithm::split(parts, trimmed, boost::is_any_of(","));
  std::vector<double> out;
  for (auto& p : parts) {
    boost::algorithm::trim(p);
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(p, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != p.size()) throw ConfigError(fmt::format("not a number: '{}'", p));
    out.push_back(x);
  }
  return out;
}

Vector parse_vector(const std::string& text) {
  const auto v = parse_list(text);
  if (v.empty()) throw ConfigError("empty vector");
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix parse_matrix(const std::string& text) {
  std::vector<std::string> rows;
  boost::algorithm::split(rows, text, boost::is_any_of(";"));
  std::vector<std::vector<double>> vals;
  for (const auto& r : rows) vals.push_back(parse_list(r));
  const auto n = vals.size();
  const auto m = vals.front().size();
  if (m == 0) throw ConfigError(fmt::format("empty matrix row in '{}'", text));
  Matrix out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    if (vals[i].size() != m) throw ConfigError(fmt::format("ragged matrix '{}'", text));
    for (std::size_t j = 0; j < m; ++j) out(i, j) = vals[i][j];
  }
  return out;
}

std::string format_vector(const Vector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += format_real(v(i));
  }
  return s;
}

std::string format_matrix(const Matrix& m) {
  std::string s;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ";";
    s += format_vector(m.row(i).transpose());
  }
  return s;
}

double example0_phi(double r) { return r <= 1.0 ? r : std::exp(-(r - 1.0)); }

namespace {

void allow_only(const std::string& field, const ParamMap& params, std::set<std::string> allowed) {
  for (const auto& [k, v] : params) {
    if (!allowed.count(k))
      throw ConfigError(fmt::format("unknown parameter '{}' for '{}'", k, field));
  }
}

std::string get_or(const ParamMap& params, const std::string& key, const std::string& fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double get_real(const ParamMap& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  if (it == params.end()) return fallback;
  const auto v = parse_list(it->second);
  if (v.size() != 1) throw ConfigError(fmt::format("parameter '{}' must be a single number", key));
  return v.front();
}

Vector scalar(double x) { return Vector::Constant(1, x); }

double spectral_norm(const Matrix& A) { return Eigen::JacobiSVD<Matrix>(A).singularValues()(0); }

VectorField make_linear(const ParamMap& params) {
  allow_only("linear", params, {"A", "theta_star"});
  const Matrix A = parse_matrix(get_or(params, "A", "-1"));
  if (A.rows() != A.cols()) throw ConfigError("linear field needs a square A");
  const Vector star =
      params.count("theta_star") ? parse_vector(params.at("theta_star")) : Vector::Zero(A.rows());
  if (star.size() != A.rows()) throw ConfigError("theta_star does not match A");
  return VectorField(
      static_cast<int>(A.rows()), [A, star](const Vector& x) -> Vector { return A * (x - star); },
      star, spectral_norm(A), Smoothness::C2, "linear");
}

VectorField make_value_eval(const ParamMap& params) {
  allow_only("value_eval", params, {"A", "gamma", "r"});
  const Matrix A = parse_matrix(get_or(params, "A", "0.5,0.5;0.5,0.5"));
  const double gamma = get_real(params, "gamma", 0.9);
  const Vector r = parse_vector(get_or(params, "r", "1,2"));
  const auto d = A.rows();
  if (A.cols() != d || r.size() != d) throw ConfigError("value_eval needs square A matching r");
  const Matrix B = gamma * A - Matrix::Identity(d, d);
  const auto lu = B.fullPivLu();
  if (!lu.isInvertible()) throw ConfigError("value_eval: I - gamma A is singular");
  const Vector star = lu.solve(-r);
  return VectorField(
      static_cast<int>(d), [B, r](const Vector& x) -> Vector { return r + B * x; }, star,
      spectral_norm(B), Smoothness::C2, "value_eval");
}

VectorField make_f4_family(const ParamMap& params) {
  allow_only("f4_family", params, {"A", "theta_star", "r", "beta"});
  const Matrix A = parse_matrix(get_or(params, "A", "-1,0;0,-2"));
  const auto d = A.rows();
  if (A.cols() != d) throw ConfigError("f4_family needs a square A");
  const Vector star =
      params.count("theta_star") ? parse_vector(params.at("theta_star")) : Vector::Zero(d);
  if (star.size() != d) throw ConfigError("theta_star does not match A");
  const double r = get_real(params, "r", 0.5);
  const double beta = get_real(params, "beta", 0.5);
  if (!(r > 0.0)) throw ConfigError("f4_family needs r > 0");
  auto eval = [A, star, r, beta, d](const Vector& x) -> Vector {
    const Vector dx = x - star;
    Vector out = A * dx;
    const double n2 = dx.squaredNorm();
    if (n2 == 0.0) return out;
    const double scale = beta * std::pow(n2, -r);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double c = dx((i + 1) % d);
      out(i) += scale * c * c;
    }
    return out;
  };
  return VectorField(static_cast<int>(d), eval, star, std::nullopt, Smoothness::C2, "f4_family");
}

}  // namespace

const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names{"linear",     "gladyshev_passive", "example_0_odd",
                                              "sine_multi", "value_eval",        "f4_family"};
  return names;
}

VectorField make_field(const std::string& name, const ParamMap& params) {
  if (name == "linear") return make_linear(params);
  if (name == "value_eval") return make_value_eval(params);
  if (name == "f4_family") return make_f4_family(params);
  if (name == "gladyshev_passive") {
    allow_only(name, params, {});
    return VectorField(
        1, [](const Vector& x) -> Vector { return scalar(-x(0) / (1.0 + x(0) * x(0))); }, scalar(0),
        1.0, Smoothness::C2, name);
  }
  if (name == "example_0_odd") {
    allow_only(name, params, {});
    return VectorField(
        1,
        [](const Vector& x) -> Vector {
          const double t = x(0);
          return scalar(t >= 0.0 ? -example0_phi(t) : example0_phi(-t));
        },
        scalar(0), 1.0, Smoothness::C0, name);
  }
  if (name == "sine_multi") {
    allow_only(name, params, {});
    return VectorField(
        1,
        [](const Vector& x) -> Vector {
          const double t = x(0);
          return scalar(t >= 0.0 ? -1.0 + std::cos(t) : 1.0 - std::cos(t));
        },
        scalar(0), 1.0, Smoothness::C1, name);
  }
  throw ConfigError(fmt::format("unknown field '{}'", name));
}

SolutionSet solution_set_for(const std::string& name, const VectorField& f) {
  if (name == "sine_multi") {
    std::vector<Vector> pts;
    for (int n = -50; n <= 50; ++n) pts.push_back(scalar(2.0 * std::numbers::pi * n));
    return SolutionSet(std::move(pts));
  }
  return SolutionSet::singleton(f.require_equilibrium());
}

ComparatorFunction make_comparator(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = boost::algorithm::trim_copy(spec.substr(0, colon));
  double c = 1.0;
  if (colon != std::string::npos) {
    const auto v = parse_list(spec.substr(colon + 1));
    if (v.size() != 1 || !(v[0] > 0.0)) {
      throw ConfigError(
          fmt::format("comparator coefficient in '{}' must be one positive number", spec));
    }
    c = v[0];
  }
  if (name == "linear") return {[c](double r) { return c * r; }, ComparatorClass::KR, spec};
  if (name == "quadratic") return {[c](double r) { return c * r * r; }, ComparatorClass::KR, spec};
  if (name == "quartic") {
    return {[c](double r) { return c * r * r * r * r; }, ComparatorClass::KR, spec};
  }
  if (name == "saturating_quadratic") {
    return {[c](double r) { return c * r * r / (1.0 + r * r); }, ComparatorClass::K, spec};
  }
  if (name == "example0")
    return {[c](double r) { return c * example0_phi(r); }, ComparatorClass::B, spec};
  if (name == "r_example0") {
    return {[c](double r) { return c * r * example0_phi(r); }, ComparatorClass::B, spec};
  }
  throw ConfigError(fmt::format("unknown comparator '{}'", spec));
}

LyapunovFunction make_lyapunov(const std::string& kind, const ParamMap& params,
                               const VectorField& f) {
  const Vector& star = f.require_equilibrium();
  const auto d = star.size();
  if (kind == "squared_norm") {
    allow_only(kind, params, {});
    return squared_norm_lyapunov(star);
  }
  if (kind == "quartic") {
    allow_only(kind, params, {});
    return quartic_lyapunov(star);
  }
  if (kind == "quadratic") {
    allow_only(kind, params, {"P"});
    if (!params.count("P")) throw ConfigError("quadratic Lyapunov function needs P");
    const Matrix P = parse_matrix(params.at("P"));
    if (P.rows() != d || P.cols() != d) throw ConfigError("P does not match the field dimension");
    return quadratic_lyapunov(P, star);
  }
  if (kind == "lyapunov_equation") {
    allow_only(kind, params, {"Q"});
    const Matrix Q = params.count("Q") ? parse_matrix(params.at("Q")) : Matrix::Identity(d, d);
    auto eval = [&f](const Vector& y) { return f(y); };
    const Matrix B = central_jacobian(eval, star, 1e-5 * std::max(1.0, star.norm()));
    return quadratic_lyapunov(solve_lyapunov_matrix_equation(B, Q), star);
  }
  throw ConfigError(fmt::format("unknown Lyapunov function kind '{}'", kind));
}

}  // namespace salyap
