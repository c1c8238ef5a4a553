#pragma once

#include <Eigen/Core>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsml/rng.hpp"

namespace testutil {

// Unique scratch directory, removed on destruction.
struct TmpDir {
  std::filesystem::path path;

  explicit TmpDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("fsml-test-" + tag + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;
};

inline Eigen::MatrixXd random_matrix(int rows, int cols, fsml::Rng& rng,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = scale * rng.gaussian();
  return m;
}

// Mean cross-entropy of logits against integer labels.
inline double ce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& labels) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    double lse = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      lse += std::exp(logits(i, j) - mx);
    total += std::log(lse) + mx - logits(i, labels[static_cast<size_t>(i)]);
  }
  return total / static_cast<double>(logits.rows());
}

// d ce_loss / d logits.
inline Eigen::MatrixXd ce_grad(const Eigen::MatrixXd& logits,
                               const std::vector<int>& labels) {
  Eigen::MatrixXd g(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    double lse = 0.0;
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      lse += std::exp(logits(i, j) - mx);
    for (Eigen::Index j = 0; j < logits.cols(); ++j)
      g(i, j) = std::exp(logits(i, j) - mx) / lse;
    g(i, labels[static_cast<size_t>(i)]) -= 1.0;
  }
  return g / static_cast<double>(logits.rows());
}

// Central finite difference of a scalar function w.r.t. every coefficient.
template <class F>
Eigen::MatrixXd fd_grad(Eigen::MatrixXd& x, F loss, double h = 1e-3) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      double orig = x(i, j);
      x(i, j) = orig + h;
      double lp = loss();
      x(i, j) = orig - h;
      double lm = loss();
      x(i, j) = orig;
      g(i, j) = (lp - lm) / (2.0 * h);
    }
  return g;
}

template <class F>
Eigen::VectorXd fd_grad_vec(Eigen::VectorXd& x, F loss, double h = 1e-3) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double orig = x(i);
    x(i) = orig + h;
    double lp = loss();
    x(i) = orig - h;
    double lm = loss();
    x(i) = orig;
    g(i) = (lp - lm) / (2.0 * h);
  }
  return g;
}

template <class F>
double fd_grad_scalar(double& x, F loss, double h = 1e-3) {
  double orig = x;
  x = orig + h;
  double lp = loss();
  x = orig - h;
  double lm = loss();
  x = orig;
  return (lp - lm) / (2.0 * h);
}

// || a - b || / max(||a||, ||b||, floor)
inline double block_rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double denom = std::max({a.norm(), b.norm(), 1e-10});
  return (a - b).norm() / denom;
}

inline double scalar_rel_err(double a, double b) {
  double denom = std::max({std::abs(a), std::abs(b), 1e-10});
  return std::abs(a - b) / denom;
}

// Regularized lower incomplete gamma P(a, x): series for x < a + 1, Lentz
// continued fraction otherwise.
inline double gamma_p(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
  if (x == 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

// Upper tail of the chi-square distribution.
inline double chi2_sf(double x, int df) {
  return 1.0 - gamma_p(df / 2.0, x / 2.0);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std (n - 1)
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.std = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0));
  }
  return r;
}

}  // namespace testutil
