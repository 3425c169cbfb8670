#pragma once

#include <map>
#include <string>
#include <vector>

#include "salyap/core.hpp"
#include "salyap/lyapunov.hpp"

namespace salyap {

/// Raised for unknown registry names and malformed parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

using ParamMap = std::map<std::string, std::string>;

/// "1, 2.5, -3" -> vector.
Vector parse_vector(const std::string& text);
/// Rows separated by ';', entries by ','. "-1,0;0,-2".
Matrix parse_matrix(const std::string& text);
std::vector<double> parse_list(const std::string& text);
/// Inverse of parse_vector / parse_matrix with round-trip precision.
std::string format_vector(const Vector& v);
std::string format_matrix(const Matrix& m);

/// r on [0, 1], exp(-(r - 1)) beyond.
double example0_phi(double r);

/**
 * Built-in fields:
 *  linear             A (matrix), theta_star (vector)       f = A (theta - theta*)
 *  gladyshev_passive                                        f = -theta / (1 + theta^2)
 *  example_0_odd                                            odd extension of -example0_phi
 *  sine_multi                                               -1 + cos(theta) for theta >= 0, odd
 * extension value_eval         A, gamma, r                           f = r + gamma A theta - theta
 *  f4_family          A, theta_star, r, beta                A d + h(d) |d|^(-2r), h_i = beta
 * d_{i+1}^2 Unknown names or parameters raise ConfigError.
 */
VectorField make_field(const std::string& name, const ParamMap& params = {});
const std::vector<std::string>& field_names();

/// Known zeros: 2 pi n for |n| <= 50 for sine_multi, the equilibrium otherwise.
SolutionSet solution_set_for(const std::string& name, const VectorField& f);

/**
 * Comparator from "name[:coef]":
 *  linear:c (KR)  quadratic:c (KR)  quartic:c (KR)
 *  saturating_quadratic:c = c r^2/(1+r^2) (K)
 *  example0 (B)   r_example0 = r example0_phi(r) (B)
 */
ComparatorFunction make_comparator(const std::string& spec);

/**
 * Analytic Lyapunov functions around the field's equilibrium:
 *  squared_norm, quartic, quadratic (param P), lyapunov_equation (param Q,
 *  default I; P solves P B + B'P = -Q with B the Jacobian of f at theta*).
 */
LyapunovFunction make_lyapunov(const std::string& kind, const ParamMap& params,
                               const VectorField& f);

}  // namespace salyap
