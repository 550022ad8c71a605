#include "pcomp/objective.hpp"

#include "pcomp/errors.hpp"

#include <cmath>
#include <limits>

namespace pcomp {

double ExtendedReal::value() const
{
  if (infinite_)
    throw NumericDomainError("value is +infinity");
  return value_;
}

double ExtendedReal::as_double() const noexcept
{
  return infinite_ ? std::numeric_limits<double>::infinity() : value_;
}

//==============================================================================
StageInputs StageInputs::from_rows(
  std::span<const ConditionalPMF> source_rows,
  const ConditionalPMF& target_row,
  std::span<const double> rbar)
{
  if (source_rows.empty())
    throw ParameterError("stage needs at least one source row");
  const auto n = static_cast<Eigen::Index>(target_row.probs.size());
  if (static_cast<Eigen::Index>(rbar.size()) != n)
    throw ParameterError("modified reward must be aligned with the successor list");

  StageInputs inp;
  inp.sources.resize(static_cast<Eigen::Index>(source_rows.size()), n);
  for (std::size_t i = 0; i < source_rows.size(); ++i) {
    const auto& row = source_rows[i];
    if (row.origin != target_row.origin || static_cast<Eigen::Index>(row.probs.size()) != n)
      throw ParameterError("source and target rows must share origin and successor list");
    for (Eigen::Index j = 0; j < n; ++j)
      inp.sources(static_cast<Eigen::Index>(i), j) = row.probs[static_cast<std::size_t>(j)];
  }
  inp.target = Eigen::Map<const Eigen::VectorXd>(target_row.probs.data(), n);
  inp.rbar = Eigen::Map<const Eigen::VectorXd>(rbar.data(), n);
  return inp;
}

void StageInputs::check_shapes() const
{
  if (sources.rows() < 1)
    throw ParameterError("stage needs at least one source row");
  if (sources.cols() != target.size() || sources.cols() != rbar.size())
    throw ParameterError("stage inputs are not aligned");
  if (!rbar.allFinite())
    throw ParameterError("modified reward must be finite");
}

//==============================================================================
ExtendedReal kl_divergence(const Eigen::Ref<const Eigen::VectorXd>& p,
                           const Eigen::Ref<const Eigen::VectorXd>& q)
{
  if (p.size() != q.size())
    throw ParameterError("kl_divergence: rows are not aligned");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    if (p[j] < 0.0)
      throw NumericDomainError("kl_divergence: negative mass");
    if (p[j] == 0.0)
      continue;
    if (!(q[j] > 0.0))
      return ExtendedReal::infinity();
    sum += p[j] * std::log(p[j] / q[j]);
  }
  return sum;
}

ExtendedReal kl_divergence(const ConditionalPMF& p, const ConditionalPMF& q)
{
  if (p.origin != q.origin || p.probs.size() != q.probs.size())
    throw ParameterError("kl_divergence: rows are not aligned");
  const auto n = static_cast<Eigen::Index>(p.probs.size());
  return kl_divergence(Eigen::Map<const Eigen::VectorXd>(p.probs.data(), n),
                       Eigen::Map<const Eigen::VectorXd>(q.probs.data(), n));
}

Eigen::VectorXd mixture(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  if (alpha.size() != inp.num_sources())
    throw ParameterError("alpha length differs from the number of sources");
  return inp.sources.transpose() * alpha;
}

ExtendedReal stage_cost(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  const Eigen::VectorXd m = mixture(alpha, inp);
  const auto kl = kl_divergence(m, inp.target);
  return kl - m.dot(inp.rbar);
}

namespace {

// Mixture entries that enter the derivatives. Entries where every source is
// zero drop out of the sums; a zero mixture under a positive source does not.
Eigen::VectorXd checked_mixture(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  Eigen::VectorXd m = mixture(alpha, inp);
  for (Eigen::Index x = 0; x < m.size(); ++x) {
    if (m[x] > 0.0) {
      if (!(inp.target[x] > 0.0))
        throw NumericDomainError("target vanishes where the mixture is positive");
      continue;
    }
    if ((inp.sources.col(x).array() > 0.0).any())
      throw NumericDomainError("mixture vanishes on a successor some source supports");
  }
  return m;
}

}  // namespace

Eigen::VectorXd stage_gradient(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  const Eigen::VectorXd m = checked_mixture(alpha, inp);
  Eigen::VectorXd integrand = Eigen::VectorXd::Zero(m.size());
  for (Eigen::Index x = 0; x < m.size(); ++x)
    if (m[x] > 0.0)
      integrand[x] = std::log(m[x]) - std::log(inp.target[x]) - inp.rbar[x] + 1.0;
  return inp.sources * integrand;
}

Eigen::MatrixXd stage_hessian(const Eigen::VectorXd& alpha, const StageInputs& inp)
{
  const Eigen::VectorXd m = checked_mixture(alpha, inp);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(m.size());
  for (Eigen::Index x = 0; x < m.size(); ++x)
    if (m[x] > 0.0)
      weight[x] = 1.0 / m[x];
  return inp.sources * weight.asDiagonal() * inp.sources.transpose();
}

}  // namespace pcomp
