#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "setloc/lp.hpp"

namespace setloc {

/// One calibration point: a true distance and the spread [low, high] of the
/// noisy range readings recorded at that distance.
struct CalibrationSample {
  double true_distance = 0.0;
  double measured_low = 0.0;
  double measured_high = 0.0;

  friend bool operator==(const CalibrationSample&, const CalibrationSample&) = default;
};

class CalibrationDataset {
 public:
  CalibrationDataset() = default;
  explicit CalibrationDataset(std::vector<CalibrationSample> samples);

  /// Throws std::invalid_argument for low > high or non-positive values.
  void add(const CalibrationSample& sample);

  const std::vector<CalibrationSample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }

  double domain_lower() const;
  double domain_upper() const;

  /// Non-empty with a non-degenerate domain; throws std::invalid_argument.
  void validate() const;

 private:
  std::vector<CalibrationSample> samples_;
};

/// phi(x) = a_0 + a_1 x + ... + a_n x^n, valid on [domain_lower, domain_upper].
class CalibrationPolynomial {
 public:
  CalibrationPolynomial(Eigen::VectorXd coefficients, double domain_lower, double domain_upper);

  static CalibrationPolynomial identity(double domain_lower, double domain_upper);

  int degree() const { return static_cast<int>(coefficients_.size()) - 1; }
  const Eigen::VectorXd& coefficients() const { return coefficients_; }
  double domain_lower() const { return lower_; }
  double domain_upper() const { return upper_; }

  double operator()(double x) const;
  double derivative(double x) const;
  bool in_domain(double x) const { return x >= lower_ && x <= upper_; }

  friend bool operator==(const CalibrationPolynomial& a, const CalibrationPolynomial& b) {
    return a.coefficients_ == b.coefficients_ && a.lower_ == b.lower_ && a.upper_ == b.upper_;
  }

 private:
  Eigen::VectorXd coefficients_;
  double lower_;
  double upper_;
};

struct PhiValue {
  double radius;
  bool out_of_domain;
};

/// Calibrated range bound. Out-of-domain inputs are still evaluated; the flag
/// feeds the recalibration policy.
PhiValue eval_phi(const CalibrationPolynomial& phi, double measured);

/// Minimum of phi' over `points` equally spaced samples of the domain.
double monotone_witness(const CalibrationPolynomial& phi, int points = 1000);

/// Coefficient-matching system for a certificate that phi' >= 0 on [lo, hi].
///
/// Even degree n (phi' odd):  phi'(x) = (x - lo) s(x) + (hi - x) t(x)
/// Odd degree n (phi' even):  phi'(x) = s(x) + (x - lo)(hi - x) t(x)
///
/// with s = [x]^T S [x], t = [x]^T T [x] and S, T PSD Gram matrices. The
/// system is `equations() * [a_1 .. a_n, svec(S), svec(T)] = 0`; svec stacks
/// the upper triangle row by row.
class SosDerivativeSystem {
 public:
  SosDerivativeSystem(int degree, double lower, double upper);

  int degree() const { return degree_; }
  bool interval_product_form() const { return degree_ % 2 == 1; }
  Eigen::Index s_size() const { return s_size_; }
  Eigen::Index t_size() const { return t_size_; }
  Eigen::Index s_offset() const { return degree_; }
  Eigen::Index t_offset() const { return degree_ + svec_length(s_size_); }
  Eigen::Index columns() const { return t_offset() + svec_length(t_size_); }
  const Eigen::MatrixXd& equations() const { return equations_; }

  /// a_1..a_n implied by the Gram matrices.
  Eigen::VectorXd coefficients_from_gram(const Eigen::MatrixXd& s, const Eigen::MatrixXd& t) const;
  /// Right-hand side of the certificate evaluated at x.
  double certificate(double x, const Eigen::MatrixXd& s, const Eigen::MatrixXd& t) const;

  static Eigen::Index svec_length(Eigen::Index size) { return size * (size + 1) / 2; }
  static Eigen::Index svec_index(Eigen::Index i, Eigen::Index j, Eigen::Index size);
  static Eigen::VectorXd svec(const Eigen::MatrixXd& m);
  static Eigen::MatrixXd smat(const Eigen::Ref<const Eigen::VectorXd>& v, Eigen::Index size);

 private:
  int degree_;
  double lower_;
  double upper_;
  Eigen::Index s_size_ = 0;
  Eigen::Index t_size_ = 0;
  Eigen::MatrixXd equations_;
};

SosDerivativeSystem build_coefficient_constraints(int degree, double lower, double upper);

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, SolveKind kind)
      : std::runtime_error(what), kind_(kind) {}
  SolveKind kind() const { return kind_; }

 private:
  SolveKind kind_;
};

struct FitOptions {
  double gap_tol = 1e-7;
};

struct CalibrationFit {
  CalibrationPolynomial polynomial;
  /// sum_k (phi(D_k^u) - d_k)
  double objective = 0.0;
  /// min_k (phi(D_k^l) - d_k); nonnegative up to solver tolerance.
  double min_bound_slack = 0.0;
  /// Gram matrices of the derivative certificate in the scaled variable
  /// z = (x - mid) / half_width on [-1, 1].
  Eigen::MatrixXd gram_s;
  Eigen::MatrixXd gram_t;
  SolveStatus status;
};

/// Tightest increasing polynomial upper bound on the calibration data.
/// Throws std::invalid_argument for bad input and CalibrationError when the
/// solver does not reach optimality.
CalibrationFit fit_phi(const CalibrationDataset& data, int degree = 4,
                       const FitOptions& options = {});

/// Refit on history plus fresh samples; `current` is returned unchanged when
/// there is nothing new.
CalibrationPolynomial recalibrate(const CalibrationPolynomial& current,
                                  const CalibrationDataset& history,
                                  std::span<const CalibrationSample> fresh, int degree,
                                  const FitOptions& options = {});

/// Keeps every sample seen so far and the polynomial fitted to them.
class OnlineCalibrator {
 public:
  OnlineCalibrator(CalibrationDataset initial, int degree, FitOptions options = {});

  const CalibrationPolynomial& current() const { return current_; }
  const CalibrationDataset& history() const { return history_; }
  int recalibrations() const { return recalibrations_; }

  const CalibrationPolynomial& recalibrate(std::span<const CalibrationSample> fresh);

 private:
  CalibrationDataset history_;
  int degree_;
  FitOptions options_;
  CalibrationPolynomial current_;
  int recalibrations_ = 0;
};

}  // namespace setloc
