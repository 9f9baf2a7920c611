#pragma once

// Shared helpers for the unit and acceptance suites: finite-difference
// oracles, dense materialization of linear maps, and temp-dir management.

#include "bilevel/types.hpp"

#include <Eigen/SVD>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

namespace testutil {

using bilevel::Index;
using bilevel::Mat;
using bilevel::Vec;

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max(std::abs(b), floor);
}

// Central difference of a scalar function of one variable.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-6) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central-difference gradient, step scaled per coordinate.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                       double h = 1e-6) {
  Vec g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += hi;
    xm(i) -= hi;
    g(i) = (f(xp) - f(xm)) / (2.0 * hi);
  }
  return g;
}

// Central-difference Jacobian of a vector map.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& F, const Vec& x, double h = 1e-6) {
  const Vec y = F(x);
  Mat J(y.size(), x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x(i)));
    Vec xp = x, xm = x;
    xp(i) += hi;
    xm(i) -= hi;
    J.col(i) = (F(xp) - F(xm)) / (2.0 * hi);
  }
  return J;
}

// Materialize a linear operator column by column.
inline Mat dense_matrix(const std::function<Vec(const Vec&)>& apply, Index rows, Index cols) {
  Mat M = Mat::Zero(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    Vec e = Vec::Zero(cols);
    e(j) = 1.0;
    M.col(j) = apply(e);
  }
  return M;
}

inline double max_singular_value(const Mat& M) {
  return Eigen::JacobiSVD<Mat>(M).singularValues()(0);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec uniform_vec(std::mt19937_64& rng, Index n, double lo, double hi) {
  Vec v(n);
  for (Index i = 0; i < n; ++i) v(i) = uniform(rng, lo, hi);
  return v;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("bilevel-test-" + tag + "-" + std::to_string(++counter));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace testutil
