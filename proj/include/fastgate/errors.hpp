#pragma once

#include <stdexcept>
#include <string>

namespace fastgate {

/// Bad user input: non-finite, out-of-range, or structurally invalid values.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative solver stopped without meeting its tolerance.
class SolverFailure : public std::runtime_error {
  public:
    SolverFailure(const std::string &what, double last_residual)
        : std::runtime_error(what + " (last residual " + std::to_string(last_residual) + ")"),
          residual_(last_residual) {}

    double residual() const noexcept { return residual_; }

  private:
    double residual_;
};

/// A result that should be impossible for valid inputs was produced.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

/// Fock-space truncation was too small to hold the evolved state.
class TruncationLeakage : public std::runtime_error {
  public:
    TruncationLeakage(const std::string &what, double deficit)
        : std::runtime_error(what), deficit_(deficit) {}

    double norm_deficit() const noexcept { return deficit_; }

  private:
    double deficit_;
};

/// Two kick groups need the same laser slot: the repetition rate cannot resolve them.
class SlotOverlap : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A fit was requested with too few distinct abscissae.
class UnderdeterminedFit : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string &message) {
    if (!ok) {
        throw InvalidArgument(message);
    }
}

}  // namespace detail

}  // namespace fastgate
