#include <doctest.h>

#include "cdrs/error.hpp"
#include "cdrs/nn/kernels.hpp"

using namespace cdrs;
namespace k = cdrs::nn::kernels;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("parallel affine kernels agree with the serial reference") {
  Rng rng(7);
  for (Eigen::Index batch : {1, 63, 64, 65, 300}) {
    const Matrix w = random_matrix(24, 13, rng);
    const Vector b = random_matrix(24, 1, rng);
    const Matrix x = random_matrix(13, batch, rng);
    Matrix ys, yp;
    k::affine_serial(w, b, x, ys);
    k::affine_parallel(w, b, x, yp);
    CHECK((ys - yp).cwiseAbs().maxCoeff() < 1e-12);

    const Matrix dz = random_matrix(24, batch, rng);
    Matrix dxs, dxp;
    k::affine_input_grad_serial(w, dz, dxs);
    k::affine_input_grad_parallel(w, dz, dxp);
    CHECK((dxs - dxp).cwiseAbs().maxCoeff() < 1e-12);

    Matrix dws, dwp;
    Vector dbs, dbp;
    k::affine_param_grad_serial(dz, x, dws, dbs);
    k::affine_param_grad_parallel(dz, x, dwp, dbp);
    CHECK((dws - dwp).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((dbs - dbp).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("group norm kernels: parallel is bit-identical to serial") {
  Rng rng(11);
  const Matrix z = random_matrix(32, 200, rng);
  Matrix outs, outp, invs, invp;
  k::group_norm_serial(z, 8, 1e-5, outs, invs);
  k::group_norm_parallel(z, 8, 1e-5, outp, invp);
  CHECK(outs == outp);
  CHECK(invs == invp);

  const Matrix dout = random_matrix(32, 200, rng);
  Matrix dzs, dzp;
  k::group_norm_grad_serial(dout, outs, invs, 8, dzs);
  k::group_norm_grad_parallel(dout, outs, invs, 8, dzp);
  CHECK(dzs == dzp);
}

TEST_CASE("parallel param gradient reduction does not depend on the thread count") {
  Rng rng(3);
  const Matrix dz = random_matrix(16, 517, rng);
  const Matrix x = random_matrix(9, 517, rng);
  Matrix dw1, dw2;
  Vector db1, db2;
  k::affine_param_grad_parallel(dz, x, dw1, db1);
  k::affine_param_grad_parallel(dz, x, dw2, db2);
  CHECK(dw1 == dw2);
  CHECK(db1 == db2);
}

TEST_CASE("kernels reject mismatched shapes") {
  Matrix y;
  CHECK_THROWS_AS(k::affine_serial(Matrix::Zero(3, 2), Vector::Zero(3), Matrix::Zero(4, 1), y),
                  ContractViolation);
  Matrix out, inv;
  CHECK_THROWS_AS(k::group_norm_parallel(Matrix::Zero(6, 2), 4, 1e-5, out, inv),
                  ContractViolation);
}
