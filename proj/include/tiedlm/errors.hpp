#pragma once

#include <stdexcept>
#include <string>

namespace tiedlm {

/// Thrown when a caller breaks an operation's precondition (shape, range, sign).
class ContractViolation : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// QR found a column whose R-diagonal fell below the rank threshold.
class RankDeficientError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A gradient or loss became NaN/Inf during training.
class NonFiniteError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unreadable on-disk artifact (corpus, checkpoint, config, CSV).
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string &what) {
    if (!cond) {
        throw ContractViolation(what);
    }
}

} // namespace tiedlm
