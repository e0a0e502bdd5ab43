#include <tiedlm/linalg.hpp>
#include <tiedlm/subspace.hpp>

#include <algorithm>
#include <cmath>

namespace tiedlm {

SubspaceReport subspace_distance(const Matrix &x, const Matrix &y) {
    if (x.rows() != y.rows()) {
        throw ContractViolation("subspace_distance: row mismatch " + x.shape_string() + " vs " +
                                y.shape_string());
    }
    const Matrix u = qr_orthonormalize(x);
    const Matrix v = qr_orthonormalize(y);

    const Matrix utv = matmul_tn(u, v);
    Matrix residual = v;
    const Matrix proj = matmul(u, utv);
    for (std::size_t i = 0; i < residual.size(); ++i) {
        residual.data()[i] -= proj.data()[i];
    }

    SubspaceReport rep;
    rep.num_columns = v.cols();
    rep.one_directional = x.cols() != y.cols();
    const double c = static_cast<double>(rep.num_columns);
    rep.distance_sq = frobenius_norm_sq(residual) / c;

    rep.principal_cosines = singular_values(utv);
    double s = 0.0;
    for (double rho : rep.principal_cosines) {
        s += 1.0 - rho * rho;
    }
    // With fewer cosines than columns (cols(x) < cols(y)) the missing ones are zero.
    s += c - static_cast<double>(rep.principal_cosines.size());
    rep.distance_sq_from_cosines = s / c;
    rep.distance = std::sqrt(std::max(0.0, rep.distance_sq));
    return rep;
}

SubspaceReport model_subspace_distance(const ModelParams &params) {
    if (params.config.tie_weights || !params.proj_weight) {
        SubspaceReport rep;
        rep.tied = true;
        rep.num_columns = params.config.hidden_dim;
        rep.principal_cosines.assign(params.config.hidden_dim, 1.0);
        return rep;
    }
    return subspace_distance(transpose(params.embedding), *params.proj_weight);
}

} // namespace tiedlm
