#pragma once

#include <tiedlm/matrix.hpp>

#include <span>
#include <vector>

namespace tiedlm {

// Products. All throw ContractViolation on inner-dimension mismatch.
Matrix matmul(const Matrix &a, const Matrix &b);
/// a * b^T
Matrix matmul_nt(const Matrix &a, const Matrix &b);
/// a^T * b
Matrix matmul_tn(const Matrix &a, const Matrix &b);
/// out += a * b (out must already have the product's shape)
void matmul_acc(const Matrix &a, const Matrix &b, Matrix &out);
void matmul_nt_acc(const Matrix &a, const Matrix &b, Matrix &out);
void matmul_tn_acc(const Matrix &a, const Matrix &b, Matrix &out);

Matrix transpose(const Matrix &a);

/// softmax(logits / tau) with max subtraction. Output entries are strictly positive
/// for finite inputs whose spread over tau stays below ~700.
std::vector<double> softmax_with_temperature(std::span<const double> logits, double tau);
/// In-place row-wise variant, used on (tokens x vocab) logit blocks.
void softmax_rows_inplace(Matrix &m, double tau);

/// Thin Q of a Householder QR. Throws RankDeficientError when some |R_kk| is at or
/// below 1e-10 times the largest column norm of x.
Matrix qr_orthonormalize(const Matrix &x);

/// Singular values in descending order (one-sided Jacobi).
std::vector<double> singular_values(const Matrix &x);

double frobenius_norm_sq(const Matrix &x);
double global_norm(std::span<const Matrix *const> tensors);
double global_norm(std::span<const Matrix> tensors);

bool all_finite(const Matrix &x) noexcept;
double max_abs_diff(const Matrix &a, const Matrix &b);

} // namespace tiedlm
