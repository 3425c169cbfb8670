#pragma once

namespace salyap {

/// One checkpoint of the supermartingale inequality
///   E[z_{t+1} | history] <= (1 + eta_t) z_t + gamma_t - psi_t.
struct RSLedgerEntry {
  long t = 0;
  double z_t = 0.0;
  double eta_t = 0.0;
  double gamma_t = 0.0;
  double psi_t = 0.0;
  double conditional_mean_estimate = 0.0;
  double standard_error = 0.0;
  bool ok = false;

  /// (1 + eta_t) z_t + gamma_t - psi_t.
  double rhs() const { return (1.0 + eta_t) * z_t + gamma_t - psi_t; }
};

}  // namespace salyap
