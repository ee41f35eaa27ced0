#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace oracle {

namespace {

void for_each_subset(int n, int k, const std::function<void(const std::vector<int>&)>& f) {
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    f(idx);
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

double radical_inverse(int base, long long index) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

double residual_for(const Eigen::Matrix3d& r, const std::vector<Eigen::Vector3d>& layout,
                    const std::vector<Eigen::Vector3d>& estimates) {
  Eigen::Vector3d wbar = Eigen::Vector3d::Zero();
  Eigen::Vector3d rbar = Eigen::Vector3d::Zero();
  for (std::size_t j = 0; j < layout.size(); ++j) {
    wbar += layout[j];
    rbar += estimates[j];
  }
  wbar /= static_cast<double>(layout.size());
  rbar /= static_cast<double>(layout.size());
  const Eigen::Vector3d r0 = rbar - r * wbar;
  double sum = 0.0;
  for (std::size_t j = 0; j < layout.size(); ++j)
    sum += (estimates[j] - r0 - r * layout[j]).squaredNorm();
  return sum;
}

}  // namespace

std::optional<double> lp_vertex_enumeration(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                            const Eigen::VectorXd& c, double feas_tol) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  std::optional<double> best;
  for_each_subset(m, n, [&](const std::vector<int>& rows) {
    Eigen::MatrixXd sub(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      sub.row(i) = a.row(rows[i]);
      rhs(i) = b(rows[i]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
    if (lu.rank() < n) return;
    const Eigen::VectorXd x = lu.solve(rhs);
    if (((a * x - b).array() > feas_tol).any()) return;
    const double v = c.dot(x);
    if (!best || v > *best) best = v;
  });
  return best;
}

GridCenter chebyshev_grid(const std::vector<setloc::Ball>& balls, double step) {
  auto score = [&](const Eigen::Vector3d& x) {
    double s = std::numeric_limits<double>::infinity();
    for (const auto& b : balls) s = std::min(s, b.radius - (x - b.center).norm());
    return s;
  };
  // Bounding box of the smallest ball contains the intersection.
  const auto& smallest = *std::min_element(balls.begin(), balls.end(), [](auto& p, auto& q) {
    return p.radius < q.radius;
  });
  Eigen::Vector3d lo = smallest.center.array() - smallest.radius;
  Eigen::Vector3d hi = smallest.center.array() + smallest.radius;
  Eigen::Vector3d best = smallest.center;
  double best_score = score(best);
  double h = (hi - lo).maxCoeff() / 40.0;
  while (true) {
    for (double x = lo.x(); x <= hi.x() + 1e-12; x += h)
      for (double y = lo.y(); y <= hi.y() + 1e-12; y += h)
        for (double z = lo.z(); z <= hi.z() + 1e-12; z += h) {
          const Eigen::Vector3d p(x, y, z);
          const double s = score(p);
          if (s > best_score) {
            best_score = s;
            best = p;
          }
        }
    if (h <= step) break;
    // The score is concave, so the optimum stays within one cell of the best node.
    lo = best.array() - 2.0 * h;
    hi = best.array() + 2.0 * h;
    h = std::max(step, h / 5.0);
  }
  return {best, best_score};
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v;
  do {
    v = Eigen::Vector3d(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

double sampled_violation(const std::vector<setloc::Ball>& balls, const Eigen::Vector3d& x, double l,
                         int samples, std::mt19937_64& rng) {
  // Sphere sampling per ball, then a shrinking random local search from the
  // best sample.
  std::normal_distribution<double> n(0.0, 1.0);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& b : balls) {
    const Eigen::Vector3d w = x - b.center;
    Eigen::Vector3d v_best = random_unit(rng);
    double f_best = v_best.dot(w);
    for (int s = 1; s < samples / static_cast<int>(balls.size()); ++s) {
      const Eigen::Vector3d v = random_unit(rng);
      if (v.dot(w) > f_best) {
        f_best = v.dot(w);
        v_best = v;
      }
    }
    for (double step = 0.05; step > 1e-9; step *= 0.7) {
      for (int k = 0; k < 30; ++k) {
        const Eigen::Vector3d v =
            (v_best + step * Eigen::Vector3d(n(rng), n(rng), n(rng))).normalized();
        if (v.dot(w) > f_best) {
          f_best = v.dot(w);
          v_best = v;
        }
      }
    }
    best = std::max(best, f_best + l - b.radius);
  }
  return best;
}

double sampled_sup_norm(const Eigen::Matrix3d& p, const Eigen::Vector3d& v, int samples,
                        std::mt19937_64& rng) {
  double best = 0.0;
  for (int s = 0; s < samples; ++s) best = std::max(best, (p * random_unit(rng) + v).norm());
  return best;
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q.toRotationMatrix();
}

double procrustes_grid_residual(const std::vector<Eigen::Vector3d>& layout,
                                const std::vector<Eigen::Vector3d>& estimates, int grid_points) {
  // Halton points mapped to unit quaternions by Shoemake's construction.
  double best = std::numeric_limits<double>::infinity();
  Eigen::Quaterniond best_q = Eigen::Quaterniond::Identity();
  for (int i = 1; i <= grid_points; ++i) {
    const double u1 = radical_inverse(2, i);
    const double u2 = radical_inverse(3, i);
    const double u3 = radical_inverse(5, i);
    const double s1 = std::sqrt(1.0 - u1);
    const double s2 = std::sqrt(u1);
    const double t1 = 2.0 * std::numbers::pi * u2;
    const double t2 = 2.0 * std::numbers::pi * u3;
    const Eigen::Quaterniond q(s2 * std::cos(t2), s1 * std::sin(t1), s1 * std::cos(t1),
                               s2 * std::sin(t2));
    const double r = residual_for(q.toRotationMatrix(), layout, estimates);
    if (r < best) {
      best = r;
      best_q = q;
    }
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> n(0.0, 1.0);
  double scale = 0.05;
  for (int round = 0; round < 60; ++round) {
    for (int k = 0; k < 400; ++k) {
      Eigen::Quaterniond q(best_q.w() + scale * n(rng), best_q.x() + scale * n(rng),
                           best_q.y() + scale * n(rng), best_q.z() + scale * n(rng));
      q.normalize();
      const double r = residual_for(q.toRotationMatrix(), layout, estimates);
      if (r < best) {
        best = r;
        best_q = q;
      }
    }
    scale *= 0.7;
  }
  return best;
}

double calibration_objective(const setloc::CalibrationDataset& data,
                             const setloc::CalibrationPolynomial& phi) {
  double sum = 0.0;
  for (const auto& s : data.samples()) sum += phi(s.measured_high) - s.true_distance;
  return sum;
}

double calibration_degree2_grid(const setloc::CalibrationDataset& data, double step,
                                double a1_lo, double a1_hi, double a2_lo, double a2_hi) {
  const double lo = data.domain_lower();
  const double hi = data.domain_upper();
  auto objective = [&](double a1, double a2) {
    // phi' = a1 + 2 a2 x is affine, so the domain endpoints decide monotonicity.
    if (a1 + 2.0 * a2 * lo < 0.0 || a1 + 2.0 * a2 * hi < 0.0)
      return std::numeric_limits<double>::infinity();
    double a0 = -std::numeric_limits<double>::infinity();
    for (const auto& s : data.samples()) {
      const double x = s.measured_low;
      a0 = std::max(a0, s.true_distance - a1 * x - a2 * x * x);
    }
    double obj = 0.0;
    for (const auto& s : data.samples()) {
      const double x = s.measured_high;
      obj += a0 + a1 * x + a2 * x * x - s.true_distance;
    }
    return obj;
  };
  double best = std::numeric_limits<double>::infinity();
  double best1 = a1_lo;
  double best2 = a2_lo;
  auto sweep = [&](double l1, double h1, double l2, double h2, double h) {
    const long n1 = std::lround((h1 - l1) / h);
    const long n2 = std::lround((h2 - l2) / h);
    for (long i = 0; i <= n1; ++i) {
      const double a1 = l1 + h * static_cast<double>(i);
      for (long j = 0; j <= n2; ++j) {
        const double a2 = l2 + h * static_cast<double>(j);
        const double v = objective(a1, a2);
        if (v < best) {
          best = v;
          best1 = a1;
          best2 = a2;
        }
      }
    }
  };
  sweep(a1_lo, a1_hi, a2_lo, a2_hi, step);
  // The objective is convex, so zooming around the best node is safe.
  double h = step;
  for (int round = 0; round < 2; ++round) {
    sweep(best1 - 2 * h, best1 + 2 * h, best2 - 2 * h, best2 + 2 * h, h / 50.0);
    h /= 50.0;
  }
  return best;
}

namespace {

// Largest radial semi-axis with the spheroid (axial, radial) inside the ball
// of radius r centered at (a, 0, 0). A boundary point at cos(theta) = c has
// squared distance (axial c - a)^2 + radial^2 (1 - c^2) from the ball center.
double max_radial(double r, double a, double axial) {
  if (axial + a > r) return 0.0;
  auto fits = [&](double radial) {
    const double quad = axial * axial - radial * radial;
    auto f = [&](double c) {
      return (axial * c - a) * (axial * c - a) + radial * radial * (1.0 - c * c);
    };
    double worst = std::max(f(-1.0), f(1.0));
    if (quad < 0.0) {
      const double c = a * axial / quad;
      if (c >= -1.0 && c <= 1.0) worst = std::max(worst, f(c));
    }
    return worst <= r * r;
  };
  double lo = 0.0;
  double hi = r;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (fits(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

Spheroid lens_spheroid(double r, double a) {
  auto volume = [&](double axial) {
    const double radial = max_radial(r, a, axial);
    return axial * radial * radial;
  };
  double lo = 0.0;
  double hi = r - a;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 300; ++i) {
    const double x1 = hi - g * (hi - lo);
    const double x2 = lo + g * (hi - lo);
    if (volume(x1) < volume(x2)) lo = x1;
    else hi = x2;
  }
  const double axial = 0.5 * (lo + hi);
  return {axial, max_radial(r, a, axial)};
}

bool some_lambda_psd(const Eigen::Matrix3d& p, const Eigen::Vector3d& offset, double radius,
                     double lambda_max, double tol) {
  auto min_eig = [&](double lambda) {
    const auto block = setloc::containment_block(p, offset, radius, lambda);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 7, 7>> es(block);
    return es.eigenvalues()(0);
  };
  // The minimum eigenvalue is concave in lambda (the block is affine in it).
  double best = -std::numeric_limits<double>::infinity();
  double best_lambda = 0.0;
  const int scan = 2000;
  for (int i = 0; i <= scan; ++i) {
    const double lambda = lambda_max * std::pow(static_cast<double>(i) / scan, 3.0);
    const double v = min_eig(lambda);
    if (v > best) {
      best = v;
      best_lambda = lambda;
    }
  }
  double lo = std::max(0.0, best_lambda * 0.5 - 1e-3);
  double hi = std::min(lambda_max, best_lambda * 1.5 + 1e-3);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int i = 0; i < 200; ++i) {
    const double x1 = hi - g * (hi - lo);
    const double x2 = lo + g * (hi - lo);
    if (min_eig(x1) < min_eig(x2)) lo = x1;
    else hi = x2;
  }
  best = std::max(best, min_eig(0.5 * (lo + hi)));
  return best >= -tol;
}

std::vector<setloc::Ball> random_instance(std::mt19937_64& rng, int balls) {
  std::uniform_real_distribution<double> coord(-5.0, 5.0);
  std::uniform_real_distribution<double> margin(0.2, 2.0);
  const Eigen::Vector3d inside(coord(rng) * 0.2, coord(rng) * 0.2, coord(rng) * 0.2);
  std::vector<setloc::Ball> out;
  for (int i = 0; i < balls; ++i) {
    const Eigen::Vector3d c(coord(rng), coord(rng), coord(rng));
    out.push_back({c, (c - inside).norm() + margin(rng)});
  }
  return out;
}

}  // namespace oracle
