#include <tiedlm/kernels.hpp>
#include <tiedlm/linalg.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace tiedlm {

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
        require(r.size() == cols_, "Matrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = 1.0;
    }
    return m;
}

std::vector<double> Matrix::column(std::size_t c) const {
    require(c < cols_, "Matrix::column: index out of range");
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

void Matrix::set_column(std::size_t c, std::span<const double> v) {
    require(c < cols_ && v.size() == rows_, "Matrix::set_column: shape mismatch");
    for (std::size_t r = 0; r < rows_; ++r) {
        (*this)(r, c) = v[r];
    }
}

void Matrix::fill(double v) noexcept { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

// ---------------------------------------------------------------------------
// Products
// ---------------------------------------------------------------------------

namespace {

void dispatch_nn(const Matrix &a, const Matrix &b, Matrix &out, bool acc) {
    if (kernels::parallel_enabled()) {
        kernels::parallel::gemm_nn(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols(),
                                   acc);
    } else {
        kernels::serial::gemm_nn(a.data(), b.data(), out.data(), a.rows(), a.cols(), b.cols(),
                                 acc);
    }
}

void dispatch_tn(const Matrix &a, const Matrix &b, Matrix &out, bool acc) {
    if (kernels::parallel_enabled()) {
        kernels::parallel::gemm_tn(a.data(), b.data(), out.data(), a.cols(), a.rows(), b.cols(),
                                   acc);
    } else {
        kernels::serial::gemm_tn(a.data(), b.data(), out.data(), a.cols(), a.rows(), b.cols(),
                                 acc);
    }
}

void check_out(const Matrix &out, std::size_t r, std::size_t c, const char *op) {
    if (out.rows() != r || out.cols() != c) {
        throw ContractViolation(std::string(op) + ": output shape " + out.shape_string() +
                                " does not match product");
    }
}

} // namespace

Matrix matmul(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.rows()) {
        throw ContractViolation("matmul: " + a.shape_string() + " * " + b.shape_string());
    }
    Matrix out(a.rows(), b.cols());
    dispatch_nn(a, b, out, false);
    return out;
}

void matmul_acc(const Matrix &a, const Matrix &b, Matrix &out) {
    if (a.cols() != b.rows()) {
        throw ContractViolation("matmul: " + a.shape_string() + " * " + b.shape_string());
    }
    check_out(out, a.rows(), b.cols(), "matmul_acc");
    dispatch_nn(a, b, out, true);
}

Matrix matmul_nt(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols()) {
        throw ContractViolation("matmul_nt: " + a.shape_string() + " * T(" + b.shape_string() +
                                ")");
    }
    const Matrix bt = transpose(b);
    Matrix out(a.rows(), b.rows());
    dispatch_nn(a, bt, out, false);
    return out;
}

void matmul_nt_acc(const Matrix &a, const Matrix &b, Matrix &out) {
    if (a.cols() != b.cols()) {
        throw ContractViolation("matmul_nt: " + a.shape_string() + " * T(" + b.shape_string() +
                                ")");
    }
    check_out(out, a.rows(), b.rows(), "matmul_nt_acc");
    const Matrix bt = transpose(b);
    dispatch_nn(a, bt, out, true);
}

Matrix matmul_tn(const Matrix &a, const Matrix &b) {
    if (a.rows() != b.rows()) {
        throw ContractViolation("matmul_tn: T(" + a.shape_string() + ") * " + b.shape_string());
    }
    Matrix out(a.cols(), b.cols());
    dispatch_tn(a, b, out, false);
    return out;
}

void matmul_tn_acc(const Matrix &a, const Matrix &b, Matrix &out) {
    if (a.rows() != b.rows()) {
        throw ContractViolation("matmul_tn: T(" + a.shape_string() + ") * " + b.shape_string());
    }
    check_out(out, a.cols(), b.cols(), "matmul_tn_acc");
    dispatch_tn(a, b, out, true);
}

Matrix transpose(const Matrix &a) {
    Matrix t(a.cols(), a.rows());
    constexpr std::size_t B = 32;
    for (std::size_t i0 = 0; i0 < a.rows(); i0 += B) {
        for (std::size_t j0 = 0; j0 < a.cols(); j0 += B) {
            const std::size_t i1 = std::min(a.rows(), i0 + B);
            const std::size_t j1 = std::min(a.cols(), j0 + B);
            for (std::size_t i = i0; i < i1; ++i) {
                for (std::size_t j = j0; j < j1; ++j) {
                    t(j, i) = a(i, j);
                }
            }
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Softmax
// ---------------------------------------------------------------------------

namespace {

void softmax_span(std::span<double> v, double tau) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        mx = std::max(mx, x);
    }
    const double inv_tau = 1.0 / tau;
    double sum = 0.0;
    for (double &x : v) {
        x = std::exp((x - mx) * inv_tau);
        sum += x;
    }
    const double inv = 1.0 / sum;
    for (double &x : v) {
        x *= inv;
    }
}

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw ContractViolation("softmax: temperature must be positive and finite");
    }
}

} // namespace

std::vector<double> softmax_with_temperature(std::span<const double> logits, double tau) {
    check_tau(tau);
    require(!logits.empty(), "softmax: empty input");
    for (double x : logits) {
        if (!std::isfinite(x)) {
            throw ContractViolation("softmax: non-finite logit");
        }
    }
    std::vector<double> out(logits.begin(), logits.end());
    softmax_span(out, tau);
    return out;
}

void softmax_rows_inplace(Matrix &m, double tau) {
    check_tau(tau);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        softmax_span(m.row(r), tau);
    }
}

// ---------------------------------------------------------------------------
// QR (Householder)
// ---------------------------------------------------------------------------

Matrix qr_orthonormalize(const Matrix &x) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    require(n > 0, "qr_orthonormalize: matrix has no columns");
    require(m >= n, "qr_orthonormalize: needs rows >= cols, got " + x.shape_string());
    if (!all_finite(x)) {
        throw ContractViolation("qr_orthonormalize: non-finite input");
    }

    // Work on columns as contiguous rows.
    Matrix cols = transpose(x);
    double max_norm = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (double v : cols.row(j)) {
            s += v * v;
        }
        max_norm = std::max(max_norm, std::sqrt(s));
    }
    const double threshold = 1e-10 * max_norm;

    std::vector<std::vector<double>> reflectors(n);
    std::vector<double> rdiag(n);
    for (std::size_t k = 0; k < n; ++k) {
        auto ck = cols.row(k);
        double norm = 0.0;
        for (std::size_t i = k; i < m; ++i) {
            norm += ck[i] * ck[i];
        }
        norm = std::sqrt(norm);
        if (norm <= threshold) {
            throw RankDeficientError("qr_orthonormalize: column " + std::to_string(k) +
                                     " is linearly dependent (|R_kk| = " + std::to_string(norm) +
                                     ")");
        }
        const double alpha = ck[k] > 0 ? -norm : norm;
        std::vector<double> v(ck.begin() + static_cast<std::ptrdiff_t>(k), ck.end());
        v[0] -= alpha;
        double vnorm = 0.0;
        for (double e : v) {
            vnorm += e * e;
        }
        vnorm = std::sqrt(vnorm);
        for (double &e : v) {
            e /= vnorm;
        }
        for (std::size_t j = k; j < n; ++j) {
            auto cj = cols.row(j);
            double dot = 0.0;
            for (std::size_t i = k; i < m; ++i) {
                dot += v[i - k] * cj[i];
            }
            for (std::size_t i = k; i < m; ++i) {
                cj[i] -= 2.0 * dot * v[i - k];
            }
        }
        rdiag[k] = alpha;
        reflectors[k] = std::move(v);
    }

    // Q = H_0 ... H_{n-1} [I; 0], built column by column (rows of qt are columns of Q).
    Matrix qt(n, m);
    for (std::size_t j = 0; j < n; ++j) {
        qt(j, j) = 1.0;
    }
    for (std::size_t kk = n; kk-- > 0;) {
        const auto &v = reflectors[kk];
        for (std::size_t j = 0; j < n; ++j) {
            auto qj = qt.row(j);
            double dot = 0.0;
            for (std::size_t i = kk; i < m; ++i) {
                dot += v[i - kk] * qj[i];
            }
            if (dot == 0.0) {
                continue;
            }
            for (std::size_t i = kk; i < m; ++i) {
                qj[i] -= 2.0 * dot * v[i - kk];
            }
        }
    }
    // Positive R diagonal.
    for (std::size_t j = 0; j < n; ++j) {
        if (rdiag[j] < 0) {
            for (double &e : qt.row(j)) {
                e = -e;
            }
        }
    }
    return transpose(qt);
}

// ---------------------------------------------------------------------------
// Singular values (one-sided Jacobi)
// ---------------------------------------------------------------------------

std::vector<double> singular_values(const Matrix &x) {
    if (!all_finite(x)) {
        throw ContractViolation("singular_values: non-finite input");
    }
    // Orthogonalize the columns of a tall matrix; columns are stored as rows of g.
    Matrix g = x.rows() >= x.cols() ? transpose(x) : x;
    const std::size_t n = g.rows();
    const std::size_t len = g.cols();
    constexpr double eps = 1e-15;
    constexpr int max_sweeps = 80;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                auto gp = g.row(p);
                auto gq = g.row(q);
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t i = 0; i < len; ++i) {
                    alpha += gp[i] * gp[i];
                    beta += gq[i] * gq[i];
                    gamma += gp[i] * gq[i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) {
                    continue;
                }
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < len; ++i) {
                    const double a = gp[i];
                    const double b = gq[i];
                    gp[i] = c * a - s * b;
                    gq[i] = s * a + c * b;
                }
            }
        }
        if (!rotated) {
            break;
        }
    }

    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (double v : g.row(j)) {
            s += v * v;
        }
        out[j] = std::sqrt(s);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

double frobenius_norm_sq(const Matrix &x) {
    double s = 0.0;
    for (double v : x.values()) {
        s += v * v;
    }
    return s;
}

double global_norm(std::span<const Matrix *const> tensors) {
    double s = 0.0;
    for (const Matrix *t : tensors) {
        s += frobenius_norm_sq(*t);
    }
    return std::sqrt(s);
}

double global_norm(std::span<const Matrix> tensors) {
    double s = 0.0;
    for (const Matrix &t : tensors) {
        s += frobenius_norm_sq(t);
    }
    return std::sqrt(s);
}

bool all_finite(const Matrix &x) noexcept {
    return std::all_of(x.values().begin(), x.values().end(),
                       [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Matrix &a, const Matrix &b) {
    require(a.same_shape(b), "max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    }
    return m;
}

} // namespace tiedlm
