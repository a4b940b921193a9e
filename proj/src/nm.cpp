#include "homogamy/nm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace homogamy {

namespace {

constexpr double kTotalTolerance = 1e-9;

void throw_for(const NmKernel::Outcome& o) {
  const std::string where = "(" + std::to_string(o.cut_row) + "," + std::to_string(o.cut_col) + ")";
  switch (o.status) {
    case NmKernel::Status::Ok: return;
    case NmKernel::Status::DegenerateTarget:
      throw DegenerateTargetCut("target marginals leave cut " + where + " without a defined counterfactual",
                                o.cut_row, o.cut_col);
    case NmKernel::Status::DegenerateSource:
      throw DegenerateSourceCut("preference source has a degenerate Liu-Lu denominator at cut " + where,
                                o.cut_row, o.cut_col);
  }
}

void check_shape(const ContingencyTable& source, const TargetMarginals& targets) {
  if (static_cast<std::size_t>(targets.rows.size()) != source.rows() ||
      static_cast<std::size_t>(targets.cols.size()) != source.cols()) {
    throw DimensionMismatch("target marginals do not match the source table shape");
  }
  if (!(source.total() > 0.0)) throw ZeroTotal("preference source has no couples");
}

}  // namespace

TargetMarginals TargetMarginals::of(const ContingencyTable& availability) {
  Marginals mg = marginals(availability);
  return {std::move(mg.rows), std::move(mg.cols)};
}

void TargetMarginals::validate() const {
  if (rows.size() < 2 || cols.size() < 2) throw InvalidTargets("targets need at least two categories per axis");
  if ((rows.array() < 0.0).any() || (cols.array() < 0.0).any()) throw InvalidTargets("targets must be nonnegative");
  if (!rows.allFinite() || !cols.allFinite()) throw InvalidTargets("targets must be finite");
  const double rt = rows.sum();
  const double ct = cols.sum();
  if (std::abs(rt - ct) > kTotalTolerance * std::max(1.0, std::abs(rt))) {
    throw InvalidTargets("row targets sum to " + std::to_string(rt) + " but column targets sum to " +
                         std::to_string(ct));
  }
}

bool NmResult::any_negative_assortativity() const {
  return std::any_of(cut_flags.begin(), cut_flags.end(),
                     [](CutFlag f) { return f == CutFlag::NegativeAssortativity; });
}

NmKernel::NmKernel(const ContingencyTable& source) : n_(source.rows()), m_(source.cols()) {
  if (n_ < 2 || m_ < 2) throw DimensionMismatch("NM transform needs at least a 2x2 source");
  const std::size_t nc = n_ - 1;
  const std::size_t mc = m_ - 1;
  measure_.values = Matrix::Constant(nc, mc, std::numeric_limits<double>::quiet_NaN());
  measure_.flags.assign(nc * mc, CutFlag::DegenerateDenominator);
  num_.assign(nc * mc, 0.0);
  den_.assign(nc * mc, 0.0);
  if (!(source.total() > 0.0)) return;
  for (std::size_t i = 1; i <= nc; ++i) {
    for (std::size_t j = 1; j <= mc; ++j) {
      const TwoByTwo z = cut_aggregate(source, i, j);
      const double total = z.total();
      const double qf = random_matching_floor(z.high_row(), z.high_col(), total);
      const double lo = std::min(z.high_row(), z.high_col());
      const std::size_t k = (i - 1) * mc + (j - 1);
      if (std::abs(lo - qf) <= kTotalTolerance * std::max(1.0, std::abs(total))) continue;
      num_[k] = z.hh - qf;
      den_[k] = lo - qf;
      measure_.values(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(j - 1)) = num_[k] / den_[k];
      measure_.flags[k] = z.hh < qf ? CutFlag::NegativeAssortativity : CutFlag::Ok;
    }
  }
}

NmKernel::Outcome NmKernel::corner_sums(std::span<const double> row_targets, std::span<const double> col_targets,
                                        std::span<double> corner, bool allow_forced,
                                        std::vector<std::pair<std::size_t, std::size_t>>* forced) const {
  const std::size_t w = m_ + 1;
  // Tails: corner(r, 0) = rows r..n-1, corner(0, c) = cols c..m-1.
  for (std::size_t c = 0; c <= m_; ++c) corner[n_ * w + c] = 0.0;
  for (std::size_t r = 0; r <= n_; ++r) corner[r * w + m_] = 0.0;
  for (std::size_t r = n_; r-- > 0;) corner[r * w] = corner[(r + 1) * w] + row_targets[r];
  for (std::size_t c = m_; c-- > 1;) corner[c] = corner[c + 1] + col_targets[c];
  const double total = corner[0];

  Outcome out;
  if (!(total > 0.0)) {
    // Empty population: every cut is forced to zero.
    if (!allow_forced) {
      out.status = Status::DegenerateTarget;
      out.cut_row = 1;
      out.cut_col = 1;
      return out;
    }
    std::fill(corner.begin(), corner.begin() + static_cast<std::ptrdiff_t>((n_ + 1) * w), 0.0);
    out.n_forced = (n_ - 1) * (m_ - 1);
    if (forced)
      for (std::size_t i = 1; i < n_; ++i)
        for (std::size_t j = 1; j < m_; ++j) forced->emplace_back(i, j);
    return out;
  }

  for (std::size_t i = 1; i < n_; ++i) {
    const double rt = corner[i * w];
    for (std::size_t j = 1; j < m_; ++j) {
      double s = 0.0;
      const Status st = cut_sum(i, j, rt, corner[j], total, s);
      if (st == Status::DegenerateSource || (st == Status::DegenerateTarget && !allow_forced)) {
        out.status = st;
        out.cut_row = i;
        out.cut_col = j;
        return out;
      }
      if (st == Status::DegenerateTarget) {
        ++out.n_forced;
        if (forced) forced->emplace_back(i, j);
      }
      corner[i * w + j] = s;
    }
  }
  return out;
}

NmKernel::Status NmKernel::cut_sum(std::size_t i, std::size_t j, double row_tail, double col_tail, double total,
                                   double& s) const {
  const double qf = random_matching_floor(row_tail, col_tail, total);
  const double lo = std::min(row_tail, col_tail);
  if (std::abs(lo - qf) <= kTotalTolerance * std::max(1.0, total)) {
    s = qf;
    return Status::DegenerateTarget;
  }
  const std::size_t k = (i - 1) * (m_ - 1) + (j - 1);
  if (measure_.flags[k] == CutFlag::DegenerateDenominator) return Status::DegenerateSource;
  // num * (d / den) rather than theta * d keeps the identity transform exact.
  s = qf + num_[k] * ((lo - qf) / den_[k]);
  return Status::Ok;
}

NmKernel::Outcome NmKernel::apply(std::span<const double> row_targets, std::span<const double> col_targets,
                                  std::span<double> corner, std::span<double> cells, bool allow_forced) const {
  const Outcome out = corner_sums(row_targets, col_targets, corner, allow_forced);
  if (out.status != Status::Ok) return out;
  const std::size_t w = m_ + 1;
  for (std::size_t r = 0; r < n_; ++r)
    for (std::size_t c = 0; c < m_; ++c)
      cells[r * m_ + c] = corner[r * w + c] - corner[(r + 1) * w + c] - corner[r * w + c + 1] +
                          corner[(r + 1) * w + c + 1];
  return out;
}

Matrix nm_corner_sums(const ContingencyTable& source, const TargetMarginals& targets, const NmOptions& options) {
  check_shape(source, targets);
  targets.validate();
  const NmKernel kernel(source);
  std::vector<double> corner((source.rows() + 1) * (source.cols() + 1));
  throw_for(kernel.corner_sums({targets.rows.data(), static_cast<std::size_t>(targets.rows.size())},
                               {targets.cols.data(), static_cast<std::size_t>(targets.cols.size())}, corner,
                               options.allow_forced_cuts));
  Matrix s(source.rows() + 1, source.cols() + 1);
  for (std::size_t r = 0; r <= source.rows(); ++r)
    for (std::size_t c = 0; c <= source.cols(); ++c) s(r, c) = corner[r * (source.cols() + 1) + c];
  return s;
}

NmResult nm_transform(const ContingencyTable& source, const TargetMarginals& targets, const NmOptions& options) {
  check_shape(source, targets);
  targets.validate();
  const NmKernel kernel(source);
  const std::size_t n = source.rows();
  const std::size_t m = source.cols();
  std::vector<double> corner((n + 1) * (m + 1));
  std::vector<std::pair<std::size_t, std::size_t>> forced;
  throw_for(kernel.corner_sums({targets.rows.data(), n}, {targets.cols.data(), m}, corner,
                               options.allow_forced_cuts, &forced));

  Matrix cells(n, m);
  const std::size_t w = m + 1;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c)
      cells(r, c) = corner[r * w + c] - corner[(r + 1) * w + c] - corner[r * w + c + 1] + corner[(r + 1) * w + c + 1];

  NmResult result{ContingencyTable(std::move(cells), source.row_labels(), source.col_labels()), {},
                  kernel.measure().flags, std::move(forced)};
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < m; ++c)
      if (result.table(r, c) < -options.negative_tolerance) result.negative_cells.push_back({r, c, result.table(r, c)});
  return result;
}

NmResult nm_transform(const ContingencyTable& source, const ContingencyTable& availability, const NmOptions& options) {
  if (availability.rows() != source.rows() || availability.cols() != source.cols()) {
    throw DimensionMismatch("availability table shape differs from the preference source");
  }
  return nm_transform(source, TargetMarginals::of(availability), options);
}

}  // namespace homogamy
