#include "setloc/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "setloc/maxdet.hpp"

namespace setloc {

namespace {

void check_sample(const CalibrationSample& s) {
  if (!(std::isfinite(s.true_distance) && std::isfinite(s.measured_low) &&
        std::isfinite(s.measured_high))) {
    throw std::invalid_argument("calibration sample has non-finite values");
  }
  if (s.true_distance <= 0.0 || s.measured_low <= 0.0 || s.measured_high <= 0.0) {
    throw std::invalid_argument("calibration sample values must be positive");
  }
  if (s.measured_low > s.measured_high) {
    throw std::invalid_argument("calibration sample has measured_low > measured_high");
  }
}

}  // namespace

CalibrationDataset::CalibrationDataset(std::vector<CalibrationSample> samples) {
  samples_.reserve(samples.size());
  for (const auto& s : samples) add(s);
}

void CalibrationDataset::add(const CalibrationSample& sample) {
  check_sample(sample);
  samples_.push_back(sample);
}

double CalibrationDataset::domain_lower() const {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& s : samples_) lo = std::min(lo, s.measured_low);
  return lo;
}

double CalibrationDataset::domain_upper() const {
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples_) hi = std::max(hi, s.measured_high);
  return hi;
}

void CalibrationDataset::validate() const {
  if (samples_.empty()) throw std::invalid_argument("calibration dataset is empty");
  if (!(domain_lower() < domain_upper())) {
    throw std::invalid_argument("calibration dataset has a degenerate domain (D^l = D^u)");
  }
}

CalibrationPolynomial::CalibrationPolynomial(Eigen::VectorXd coefficients, double domain_lower,
                                             double domain_upper)
    : coefficients_(std::move(coefficients)), lower_(domain_lower), upper_(domain_upper) {
  if (coefficients_.size() < 1) {
    throw std::invalid_argument("CalibrationPolynomial: no coefficients");
  }
  if (!(lower_ < upper_)) {
    throw std::invalid_argument("CalibrationPolynomial: domain must satisfy lower < upper");
  }
}

CalibrationPolynomial CalibrationPolynomial::identity(double domain_lower, double domain_upper) {
  return CalibrationPolynomial(Eigen::Vector2d(0.0, 1.0), domain_lower, domain_upper);
}

double CalibrationPolynomial::operator()(double x) const {
  double acc = 0.0;
  for (Eigen::Index i = coefficients_.size() - 1; i >= 0; --i) acc = acc * x + coefficients_(i);
  return acc;
}

double CalibrationPolynomial::derivative(double x) const {
  double acc = 0.0;
  for (Eigen::Index i = coefficients_.size() - 1; i >= 1; --i) {
    acc = acc * x + static_cast<double>(i) * coefficients_(i);
  }
  return acc;
}

PhiValue eval_phi(const CalibrationPolynomial& phi, double measured) {
  return PhiValue{phi(measured), !phi.in_domain(measured)};
}

double monotone_witness(const CalibrationPolynomial& phi, int points) {
  const double lo = phi.domain_lower();
  const double hi = phi.domain_upper();
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double x = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    worst = std::min(worst, phi.derivative(x));
  }
  return worst;
}

SosDerivativeSystem::SosDerivativeSystem(int degree, double lower, double upper)
    : degree_(degree), lower_(lower), upper_(upper) {
  if (degree < 1) throw std::invalid_argument("SOS system: degree must be >= 1");
  const int p = degree - 1;  // degree of phi'
  if (p % 2 == 1) {
    s_size_ = t_size_ = (p - 1) / 2 + 1;
  } else {
    s_size_ = p / 2 + 1;
    t_size_ = p / 2;
  }

  // Multiplier polynomials applied to s and t, lowest power first.
  std::vector<double> fs;
  std::vector<double> ft;
  if (p % 2 == 1) {
    fs = {-lower, 1.0};
    ft = {upper, -1.0};
  } else {
    fs = {1.0};
    ft = {-lower * upper, lower + upper, -1.0};
  }

  equations_ = Eigen::MatrixXd::Zero(degree, columns());
  for (int m = 0; m < degree; ++m) equations_(m, m) = m + 1.0;
  auto scatter = [&](Eigen::Index size, Eigen::Index offset, const std::vector<double>& f) {
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = i; j < size; ++j) {
        const double mult = i == j ? 1.0 : 2.0;
        const Eigen::Index col = offset + svec_index(i, j, size);
        for (std::size_t q = 0; q < f.size(); ++q) {
          const Eigen::Index power = i + j + static_cast<Eigen::Index>(q);
          if (power < degree) equations_(power, col) -= mult * f[q];
        }
      }
    }
  };
  scatter(s_size_, s_offset(), fs);
  scatter(t_size_, t_offset(), ft);
}

Eigen::Index SosDerivativeSystem::svec_index(Eigen::Index i, Eigen::Index j, Eigen::Index size) {
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 hold size, size-1, ... entries.
  return i * size - i * (i - 1) / 2 + (j - i);
}

Eigen::VectorXd SosDerivativeSystem::svec(const Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd v(svec_length(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) v(svec_index(i, j, n)) = m(i, j);
  }
  return v;
}

Eigen::MatrixXd SosDerivativeSystem::smat(const Eigen::Ref<const Eigen::VectorXd>& v,
                                          Eigen::Index size) {
  Eigen::MatrixXd m(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = i; j < size; ++j) m(i, j) = m(j, i) = v(svec_index(i, j, size));
  }
  return m;
}

Eigen::VectorXd SosDerivativeSystem::coefficients_from_gram(const Eigen::MatrixXd& s,
                                                            const Eigen::MatrixXd& t) const {
  if (s.rows() != s_size_ || (t_size_ > 0 && t.rows() != t_size_)) {
    throw std::invalid_argument("SOS system: Gram matrix has wrong size");
  }
  Eigen::VectorXd g(columns() - degree_);
  g.head(svec_length(s_size_)) = svec(s);
  if (t_size_ > 0) g.tail(svec_length(t_size_)) = svec(t);
  // Row m reads (m+1) a_{m+1} + G_m . g = 0.
  const Eigen::VectorXd rhs = -equations_.rightCols(g.size()) * g;
  Eigen::VectorXd a(degree_);
  for (int m = 0; m < degree_; ++m) a(m) = rhs(m) / (m + 1.0);
  return a;
}

double SosDerivativeSystem::certificate(double x, const Eigen::MatrixXd& s,
                                        const Eigen::MatrixXd& t) const {
  auto quad = [x](const Eigen::MatrixXd& g) {
    Eigen::VectorXd basis(g.rows());
    double p = 1.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i, p *= x) basis(i) = p;
    return basis.dot(g * basis);
  };
  const double sv = quad(s);
  const double tv = t_size_ > 0 ? quad(t) : 0.0;
  if (degree_ % 2 == 0) return (x - lower_) * sv + (upper_ - x) * tv;
  return sv + (x - lower_) * (upper_ - x) * tv;
}

SosDerivativeSystem build_coefficient_constraints(int degree, double lower, double upper) {
  return SosDerivativeSystem(degree, lower, upper);
}

namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// psi(z) with z = (x - mid) / half  ->  coefficients in x.
Eigen::VectorXd unscale(const Eigen::VectorXd& b, double mid, double half) {
  const int n = static_cast<int>(b.size()) - 1;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n + 1);
  for (int m = 0; m <= n; ++m) {
    const double lead = b(m) / std::pow(half, m);
    for (int j = 0; j <= m; ++j) {
      a(j) += lead * binomial(m, j) * std::pow(-mid, m - j);
    }
  }
  return a;
}

}  // namespace

CalibrationFit fit_phi(const CalibrationDataset& data, int degree, const FitOptions& options) {
  if (degree < 1) throw std::invalid_argument("fit_phi: degree must be >= 1");
  data.validate();

  const double lo = data.domain_lower();
  const double hi = data.domain_upper();
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  auto scaled = [&](double x) { return (x - mid) / half; };

  // Variables: [b_0 .. b_n | svec(S) | svec(T)] for psi(z) = sum b_m z^m.
  const SosDerivativeSystem sos(degree, -1.0, 1.0);
  const Eigen::Index n = degree;
  const Eigen::Index nvar = 1 + sos.columns();
  MaxDetProblem problem(nvar);

  for (Eigen::Index r = 0; r < sos.equations().rows(); ++r) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
    row.tail(sos.columns()) = sos.equations().row(r).transpose();
    problem.add_equality(row, 0.0);
  }

  auto powers = [&](double z) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(nvar);
    double p = 1.0;
    for (Eigen::Index m = 0; m <= n; ++m, p *= z) row(m) = p;
    return row;
  };
  for (const auto& s : data.samples()) {
    problem.objective += powers(scaled(s.measured_high));
    problem.add_inequality(-powers(scaled(s.measured_low)), -s.true_distance);
  }

  auto gram_block = [&](Eigen::Index size, Eigen::Index offset) {
    AffineSymMap block(size, nvar);
    for (Eigen::Index i = 0; i < size; ++i) {
      for (Eigen::Index j = i; j < size; ++j) {
        block.add_entry(1 + offset + SosDerivativeSystem::svec_index(i, j, size), i, j, 1.0);
      }
    }
    return block;
  };
  problem.lmi_blocks.push_back(gram_block(sos.s_size(), sos.s_offset()));
  if (sos.t_size() > 0) problem.lmi_blocks.push_back(gram_block(sos.t_size(), sos.t_offset()));

  // Strictly feasible start: identity Gram matrices and a large constant term.
  {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nvar);
    const Eigen::MatrixXd s0 = Eigen::MatrixXd::Identity(sos.s_size(), sos.s_size());
    const Eigen::MatrixXd t0 = Eigen::MatrixXd::Identity(sos.t_size(), sos.t_size());
    x0.segment(1, n) = sos.coefficients_from_gram(s0, t0);
    x0.segment(1 + sos.s_offset(), SosDerivativeSystem::svec_length(sos.s_size())) =
        SosDerivativeSystem::svec(s0);
    if (sos.t_size() > 0) {
      x0.segment(1 + sos.t_offset(), SosDerivativeSystem::svec_length(sos.t_size())) =
          SosDerivativeSystem::svec(t0);
    }
    double need = -std::numeric_limits<double>::infinity();
    for (const auto& s : data.samples()) {
      need = std::max(need, s.true_distance - powers(scaled(s.measured_low)).dot(x0));
    }
    x0(0) = need + 1.0;
    problem.start = x0;
  }

  MaxDetOptions opts;
  opts.gap_tol = options.gap_tol;
  const MaxDetResult solved = solve_maxdet(problem, opts);
  if (!solved.status.optimal()) {
    std::ostringstream msg;
    msg << "fit_phi: SDP solve ended with status " << to_string(solved.status.kind);
    throw CalibrationError(msg.str(), solved.status.kind);
  }

  const Eigen::VectorXd b = solved.x.head(n + 1);
  CalibrationPolynomial phi(unscale(b, mid, half), lo, hi);

  double objective = 0.0;
  double slack = std::numeric_limits<double>::infinity();
  for (const auto& s : data.samples()) {
    objective += phi(s.measured_high) - s.true_distance;
    slack = std::min(slack, phi(s.measured_low) - s.true_distance);
  }
  Eigen::MatrixXd gs = SosDerivativeSystem::smat(
      solved.x.segment(1 + sos.s_offset(), SosDerivativeSystem::svec_length(sos.s_size())),
      sos.s_size());
  Eigen::MatrixXd gt(0, 0);
  if (sos.t_size() > 0) {
    gt = SosDerivativeSystem::smat(
        solved.x.segment(1 + sos.t_offset(), SosDerivativeSystem::svec_length(sos.t_size())),
        sos.t_size());
  }
  return CalibrationFit{std::move(phi), objective, slack, std::move(gs), std::move(gt),
                        solved.status};
}

CalibrationPolynomial recalibrate(const CalibrationPolynomial& current,
                                  const CalibrationDataset& history,
                                  std::span<const CalibrationSample> fresh, int degree,
                                  const FitOptions& options) {
  if (fresh.empty()) return current;
  CalibrationDataset merged = history;
  for (const auto& s : fresh) merged.add(s);
  return fit_phi(merged, degree, options).polynomial;
}

OnlineCalibrator::OnlineCalibrator(CalibrationDataset initial, int degree, FitOptions options)
    : history_(std::move(initial)),
      degree_(degree),
      options_(options),
      current_(fit_phi(history_, degree, options).polynomial) {}

const CalibrationPolynomial& OnlineCalibrator::recalibrate(
    std::span<const CalibrationSample> fresh) {
  if (fresh.empty()) return current_;
  current_ = setloc::recalibrate(current_, history_, fresh, degree_, options_);
  for (const auto& s : fresh) history_.add(s);
  ++recalibrations_;
  return current_;
}

}  // namespace setloc
