// Copyright 2026 The attnfloat Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

namespace attnfloat {

/// Dense row-major matrix used for every analysis. On-disk tensors are
/// float32; everything downstream accumulates in double.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace attnfloat
