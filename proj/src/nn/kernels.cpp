#include "cdrs/nn/kernels.hpp"

#include <cmath>
#include <vector>

#include "cdrs/error.hpp"

namespace cdrs::nn::kernels {
namespace {

Eigen::Index tile_count(Eigen::Index cols) { return (cols + kTileColumns - 1) / kTileColumns; }

Eigen::Index tile_width(Eigen::Index tile, Eigen::Index cols) {
  const Eigen::Index begin = tile * kTileColumns;
  return std::min(kTileColumns, cols - begin);
}

void check_groups(Eigen::Index rows, int groups) {
  require(groups > 0 && rows % groups == 0,
          "group_norm: groups must divide the layer width (width=" + std::to_string(rows) +
              ", groups=" + std::to_string(groups) + ")");
}

void group_norm_column(const Matrix& z, Eigen::Index col, int groups, double eps, Matrix& out,
                       Matrix& inv_std) {
  const Eigen::Index size = z.rows() / groups;
  for (int g = 0; g < groups; ++g) {
    const Eigen::Index begin = g * size;
    double mean = 0.0;
    for (Eigen::Index i = 0; i < size; ++i) mean += z(begin + i, col);
    mean /= static_cast<double>(size);
    double var = 0.0;
    for (Eigen::Index i = 0; i < size; ++i) {
      const double d = z(begin + i, col) - mean;
      var += d * d;
    }
    var /= static_cast<double>(size);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_std(g, col) = inv;
    for (Eigen::Index i = 0; i < size; ++i) out(begin + i, col) = (z(begin + i, col) - mean) * inv;
  }
}

void group_norm_grad_column(const Matrix& dout, const Matrix& normalized, const Matrix& inv_std,
                            Eigen::Index col, int groups, Matrix& dz) {
  const Eigen::Index size = dout.rows() / groups;
  for (int g = 0; g < groups; ++g) {
    const Eigen::Index begin = g * size;
    double mean_d = 0.0;
    double mean_dn = 0.0;
    for (Eigen::Index i = 0; i < size; ++i) {
      mean_d += dout(begin + i, col);
      mean_dn += dout(begin + i, col) * normalized(begin + i, col);
    }
    mean_d /= static_cast<double>(size);
    mean_dn /= static_cast<double>(size);
    const double inv = inv_std(g, col);
    for (Eigen::Index i = 0; i < size; ++i) {
      dz(begin + i, col) =
          inv * (dout(begin + i, col) - mean_d - normalized(begin + i, col) * mean_dn);
    }
  }
}

}  // namespace

void affine_serial(const Matrix& w, const Vector& b, const Matrix& x, Matrix& y) {
  require(w.cols() == x.rows() && w.rows() == b.size(), "affine: dimension mismatch");
  y.resize(w.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double acc = b(i);
      for (Eigen::Index k = 0; k < w.cols(); ++k) acc += w(i, k) * x(k, j);
      y(i, j) = acc;
    }
  }
}

void affine_parallel(const Matrix& w, const Vector& b, const Matrix& x, Matrix& y) {
  require(w.cols() == x.rows() && w.rows() == b.size(), "affine: dimension mismatch");
  y.resize(w.rows(), x.cols());
  const Eigen::Index tiles = tile_count(x.cols());
#pragma omp parallel for schedule(static) if (tiles > 1)
  for (Eigen::Index t = 0; t < tiles; ++t) {
    const Eigen::Index c0 = t * kTileColumns;
    const Eigen::Index width = tile_width(t, x.cols());
    y.middleCols(c0, width).noalias() = w * x.middleCols(c0, width);
    y.middleCols(c0, width).colwise() += b;
  }
}

void affine_input_grad_serial(const Matrix& w, const Matrix& dz, Matrix& dx) {
  require(w.rows() == dz.rows(), "affine_input_grad: dimension mismatch");
  dx.resize(w.cols(), dz.cols());
  for (Eigen::Index j = 0; j < dz.cols(); ++j) {
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < w.rows(); ++i) acc += w(i, k) * dz(i, j);
      dx(k, j) = acc;
    }
  }
}

void affine_input_grad_parallel(const Matrix& w, const Matrix& dz, Matrix& dx) {
  require(w.rows() == dz.rows(), "affine_input_grad: dimension mismatch");
  dx.resize(w.cols(), dz.cols());
  const Eigen::Index tiles = tile_count(dz.cols());
#pragma omp parallel for schedule(static) if (tiles > 1)
  for (Eigen::Index t = 0; t < tiles; ++t) {
    const Eigen::Index c0 = t * kTileColumns;
    const Eigen::Index width = tile_width(t, dz.cols());
    dx.middleCols(c0, width).noalias() = w.transpose() * dz.middleCols(c0, width);
  }
}

void affine_param_grad_serial(const Matrix& dz, const Matrix& x, Matrix& dw, Vector& db) {
  require(dz.cols() == x.cols(), "affine_param_grad: batch mismatch");
  dw.setZero(dz.rows(), x.rows());
  db.setZero(dz.rows());
  for (Eigen::Index j = 0; j < dz.cols(); ++j) {
    for (Eigen::Index i = 0; i < dz.rows(); ++i) {
      const double d = dz(i, j);
      db(i) += d;
      for (Eigen::Index k = 0; k < x.rows(); ++k) dw(i, k) += d * x(k, j);
    }
  }
}

void affine_param_grad_parallel(const Matrix& dz, const Matrix& x, Matrix& dw, Vector& db) {
  require(dz.cols() == x.cols(), "affine_param_grad: batch mismatch");
  const Eigen::Index tiles = tile_count(dz.cols());
  std::vector<Matrix> partial_w(static_cast<std::size_t>(tiles));
  std::vector<Vector> partial_b(static_cast<std::size_t>(tiles));
#pragma omp parallel for schedule(static) if (tiles > 1)
  for (Eigen::Index t = 0; t < tiles; ++t) {
    const Eigen::Index c0 = t * kTileColumns;
    const Eigen::Index width = tile_width(t, dz.cols());
    auto& pw = partial_w[static_cast<std::size_t>(t)];
    pw.noalias() = dz.middleCols(c0, width) * x.middleCols(c0, width).transpose();
    partial_b[static_cast<std::size_t>(t)] = dz.middleCols(c0, width).rowwise().sum();
  }
  // Tile partials are reduced in tile order so the sum is thread-count independent.
  dw.setZero(dz.rows(), x.rows());
  db.setZero(dz.rows());
  for (Eigen::Index t = 0; t < tiles; ++t) {
    dw += partial_w[static_cast<std::size_t>(t)];
    db += partial_b[static_cast<std::size_t>(t)];
  }
}

void group_norm_serial(const Matrix& z, int groups, double eps, Matrix& out, Matrix& inv_std) {
  check_groups(z.rows(), groups);
  out.resize(z.rows(), z.cols());
  inv_std.resize(groups, z.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) group_norm_column(z, j, groups, eps, out, inv_std);
}

void group_norm_parallel(const Matrix& z, int groups, double eps, Matrix& out, Matrix& inv_std) {
  check_groups(z.rows(), groups);
  out.resize(z.rows(), z.cols());
  inv_std.resize(groups, z.cols());
  const Eigen::Index cols = z.cols();
#pragma omp parallel for schedule(static) if (cols > kTileColumns)
  for (Eigen::Index j = 0; j < cols; ++j) group_norm_column(z, j, groups, eps, out, inv_std);
}

void group_norm_grad_serial(const Matrix& dout, const Matrix& normalized, const Matrix& inv_std,
                            int groups, Matrix& dz) {
  check_groups(dout.rows(), groups);
  dz.resize(dout.rows(), dout.cols());
  for (Eigen::Index j = 0; j < dout.cols(); ++j)
    group_norm_grad_column(dout, normalized, inv_std, j, groups, dz);
}

void group_norm_grad_parallel(const Matrix& dout, const Matrix& normalized, const Matrix& inv_std,
                              int groups, Matrix& dz) {
  check_groups(dout.rows(), groups);
  dz.resize(dout.rows(), dout.cols());
  const Eigen::Index cols = dout.cols();
#pragma omp parallel for schedule(static) if (cols > kTileColumns)
  for (Eigen::Index j = 0; j < cols; ++j)
    group_norm_grad_column(dout, normalized, inv_std, j, groups, dz);
}

}  // namespace cdrs::nn::kernels
