#pragma once

#include "sebeu/estimator.hpp"

#include <vector>

namespace sebeu::testing {

// Affine representation of a random variable over the primitive-noise basis
// (X0 deviation, W_0..W_{T-1}, xi_0..xi_{T-1}), all zero mean.
struct Affine {
  Matrix coef;
  Vector cst;
};

// Builds the exact joint Gaussian of the exogenous closed loop over a finite
// window, computing every conditional mean by Schur complement on the joint
// covariance instead of the filter recursion. Independent oracle for the
// estimator.
struct JointOracle {
  int x_dim, n_y, T;
  Matrix basis_cov;
  std::vector<Affine> Xbar, Xhat, y;

  JointOracle(const ClosedLoopModel& model, int horizon) {
    x_dim = model.dims.x_dim;
    n_y = model.dims.n_y;
    T = horizon;
    const int basis = x_dim + T * x_dim + T * n_y;
    basis_cov = Matrix::Zero(basis, basis);
    basis_cov.topLeftCorner(x_dim, x_dim) = model.x0_cov;
    for (int t = 0; t < T; ++t) {
      basis_cov.block(x_dim + t * x_dim, x_dim + t * x_dim, x_dim, x_dim) =
          model.at(t).W_cov;
      basis_cov.block(x_dim + T * x_dim + t * n_y, x_dim + T * x_dim + t * n_y,
                      n_y, n_y) = model.at(t).xi_cov;
    }

    Affine X0{Matrix::Zero(x_dim, basis), model.x0_mean};
    X0.coef.leftCols(x_dim) = Matrix::Identity(x_dim, x_dim);
    Xbar.push_back(X0);

    for (int t = 0; t < T; ++t) {
      const ClosedLoopStage& st = model.at(t);
      Affine xh{Matrix::Zero(x_dim, basis), Xbar[static_cast<size_t>(t)].cst};
      if (t > 0) {
        Matrix Ay(t * n_y, basis);
        for (int k = 0; k < t; ++k)
          Ay.middleRows(k * n_y, n_y) = y[static_cast<size_t>(k)].coef;
        const Matrix Cyy = Ay * basis_cov * Ay.transpose();
        const Matrix Cxy =
            Xbar[static_cast<size_t>(t)].coef * basis_cov * Ay.transpose();
        const Matrix gain =
            Cxy * Cyy.ldlt().solve(Matrix::Identity(t * n_y, t * n_y));
        xh.coef = gain * Ay;
      }
      Xhat.push_back(xh);

      Affine yt{st.D * Xbar[static_cast<size_t>(t)].coef + st.Gp * xh.coef,
                st.D * Xbar[static_cast<size_t>(t)].cst + st.Gp * xh.cst +
                    st.Hp + st.xi_mean};
      yt.coef.middleCols(x_dim + T * x_dim + t * n_y, n_y) +=
          Matrix::Identity(n_y, n_y);
      y.push_back(yt);

      Affine xn{st.A * Xbar[static_cast<size_t>(t)].coef + st.GX * xh.coef +
                    st.C * y.back().coef,
                st.A * Xbar[static_cast<size_t>(t)].cst + st.GX * xh.cst +
                    st.C * y.back().cst + st.HX + st.W_mean};
      xn.coef.middleCols(x_dim + t * x_dim, x_dim) +=
          Matrix::Identity(x_dim, x_dim);
      Xbar.push_back(xn);
    }
  }
};

}  // namespace sebeu::testing
