#pragma once

#include "pcomp/behavior.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace pcomp {

/// A real number or +infinity. Divergences return this so callers can
/// branch on an absolute-continuity failure instead of inspecting inf.
class ExtendedReal
{
public:
  constexpr ExtendedReal(double v) noexcept : value_(v), infinite_(false) {}

  static constexpr ExtendedReal infinity() noexcept { return ExtendedReal(); }

  constexpr bool is_finite() const noexcept { return !infinite_; }
  constexpr bool is_infinite() const noexcept { return infinite_; }
  /// Finite value; throws NumericDomainError on +infinity.
  double value() const;
  /// Finite value, or std::numeric_limits<double>::infinity().
  double as_double() const noexcept;

  friend ExtendedReal operator-(ExtendedReal a, double b) noexcept
  {
    return a.infinite_ ? a : ExtendedReal(a.value_ - b);
  }
  friend bool operator<(ExtendedReal a, ExtendedReal b) noexcept
  {
    if (a.infinite_)
      return false;
    return b.infinite_ || a.value_ < b.value_;
  }
  friend bool operator==(ExtendedReal a, ExtendedReal b) noexcept
  {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

private:
  constexpr ExtendedReal() noexcept : value_(0.0), infinite_(true) {}

  double value_;
  bool infinite_;
};

/// Everything the stage cost needs for one conditioning state: source rows
/// (one per matrix row), the target row and the modified reward on the
/// successors, all aligned with the successor list.
struct StageInputs
{
  Eigen::MatrixXd sources;  // S x n
  Eigen::VectorXd target;   // n
  Eigen::VectorXd rbar;     // n

  static StageInputs from_rows(
    std::span<const ConditionalPMF> source_rows,
    const ConditionalPMF& target_row,
    std::span<const double> rbar);

  Eigen::Index num_sources() const noexcept { return sources.rows(); }
  Eigen::Index width() const noexcept { return sources.cols(); }

  /// Throws ParameterError on mismatched shapes or non-finite rewards.
  void check_shapes() const;
};

/// sum_x p(x) ln(p(x)/q(x)) over entries with p(x) > 0; +infinity if some
/// q(x) = 0 where p(x) > 0.
ExtendedReal kl_divergence(const ConditionalPMF& p, const ConditionalPMF& q);
ExtendedReal kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p,
                           const Eigen::Ref<const Eigen::VectorXd>& q);

/// Mixture row sources^T * alpha.
Eigen::VectorXd mixture(const Eigen::VectorXd& alpha, const StageInputs& inp);

/// KL(mix || target) - E_mix[rbar].
ExtendedReal stage_cost(const Eigen::VectorXd& alpha, const StageInputs& inp);

/// d cost / d alpha_j = sum_x pi_j(x) (ln mix(x) - ln target(x) - rbar(x) + 1).
/// Throws NumericDomainError if the mixture vanishes where a source is positive.
Eigen::VectorXd stage_gradient(const Eigen::VectorXd& alpha, const StageInputs& inp);

/// h_jm = sum_x pi_j(x) pi_m(x) / mix(x). Same domain as stage_gradient.
Eigen::MatrixXd stage_hessian(const Eigen::VectorXd& alpha, const StageInputs& inp);

}  // namespace pcomp
