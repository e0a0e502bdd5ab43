#pragma once

#include <tiedlm/matrix.hpp>
#include <tiedlm/net.hpp>

#include <cstddef>
#include <vector>

namespace tiedlm {

/// Distance between two column spaces, computed two ways so callers can cross-check:
/// from the projection residual (distance_sq) and from the principal cosines
/// (distance_sq_from_cosines = mean of 1 - rho_i^2).
struct SubspaceReport {
    double distance = 0.0;
    double distance_sq = 0.0;
    double distance_sq_from_cosines = 0.0;
    std::vector<double> principal_cosines; // descending
    std::size_t num_columns = 0;
    /// Column counts differed; the residual of y's basis against x's span was used.
    bool one_directional = false;
    /// Produced for a tied model, whose distance is zero by construction.
    bool tied = false;
};

/// U = qr(x), V = qr(y), R = V - U (U^T V), d^2 = |R|_F^2 / C with C = cols(y).
/// Throws ContractViolation on row mismatch, RankDeficientError from QR.
SubspaceReport subspace_distance(const Matrix &x, const Matrix &y);

/// Distance between span(L^T) and span(W), both |V| x d. Tied models report 0.
SubspaceReport model_subspace_distance(const ModelParams &params);

} // namespace tiedlm
