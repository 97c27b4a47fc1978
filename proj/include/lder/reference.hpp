#ifndef LDER_REFERENCE_HPP
#define LDER_REFERENCE_HPP

/// Plain serial reference implementations of the hot kernels, written as
/// explicit loops with no shared code and no chunking. Tests check the
/// production kernels against these, and tools/kernel_bench times the two
/// side by side.

#include "lder/common.hpp"
#include "lder/model.hpp"

namespace lder::reference {

// Explicit double loop over both branches.
double predict(const LDerParams& p, const Vec& x);

Vec predict_batch(const LDerParams& p, const Mat& X);

// Straight-line summation oracle for the mean squared error.
double mse(const LDerParams& p, const Mat& X, const Vec& y);

// Sequential per-sample scatter of (2/m)(predict - y) * v_i.
Vec grad_mse(const LDerParams& p, const Mat& X, const Vec& y);

}  // namespace lder::reference

#endif  // LDER_REFERENCE_HPP
