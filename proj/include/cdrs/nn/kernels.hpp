#pragma once

// Batched dense-layer kernels. Samples are matrix columns.
//
// Each kernel has a serial reference (plain loops, kept for testing) and a
// parallel production variant. The parallel variants split the batch into
// fixed-width column tiles and distribute tiles over OpenMP threads; the tile
// width does not depend on the thread count, so results are bit-identical for
// any number of threads.

#include "cdrs/nn/types.hpp"

namespace cdrs::nn::kernels {

inline constexpr Eigen::Index kTileColumns = 64;

// Y = W * X + b (b broadcast over columns).
void affine_serial(const Matrix& w, const Vector& b, const Matrix& x, Matrix& y);
void affine_parallel(const Matrix& w, const Vector& b, const Matrix& x, Matrix& y);

// dX = W^T * dZ
void affine_input_grad_serial(const Matrix& w, const Matrix& dz, Matrix& dx);
void affine_input_grad_parallel(const Matrix& w, const Matrix& dz, Matrix& dx);

// dW = dZ * X^T, db = row sums of dZ.
void affine_param_grad_serial(const Matrix& dz, const Matrix& x, Matrix& dw, Vector& db);
void affine_param_grad_parallel(const Matrix& dz, const Matrix& x, Matrix& dw, Vector& db);

// Per-column group normalization without affine terms. `inv_std` is
// (groups x batch) and is needed by the backward pass.
void group_norm_serial(const Matrix& z, int groups, double eps, Matrix& out, Matrix& inv_std);
void group_norm_parallel(const Matrix& z, int groups, double eps, Matrix& out, Matrix& inv_std);

// Given dOut and the normalized activations, produce dZ.
void group_norm_grad_serial(const Matrix& dout, const Matrix& normalized, const Matrix& inv_std,
                            int groups, Matrix& dz);
void group_norm_grad_parallel(const Matrix& dout, const Matrix& normalized, const Matrix& inv_std,
                              int groups, Matrix& dz);

}  // namespace cdrs::nn::kernels
