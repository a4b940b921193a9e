#pragma once

#include <cstdint>
#include <optional>

#include "homogamy/gnm.hpp"
#include "homogamy/tables.hpp"

/// Brute-force reference implementations. Nothing here calls into the liulu,
/// nm, rounding or gnm code paths; only the table model is shared.
namespace homogamy::oracle {

/// Floor of a*b/c, exact for integral inputs.
double floor_product_ratio(double a, double b, double c);

/// Liu-Lu value of a 2x2 table evaluated straight from the definition, or
/// nullopt when the denominator vanishes.
std::optional<double> liu_lu(double ll, double lh, double hl, double hh);

struct NmCheck {
  double max_row_deviation = 0.0;
  double max_col_deviation = 0.0;
  /// Largest |LL(candidate) - LL(source)| over cuts where the source is
  /// well defined; infinity when the candidate is degenerate at such a cut.
  double max_ll_deviation = 0.0;
  std::size_t cuts_compared = 0;
};

NmCheck verify_nm(const ContingencyTable& source, const Vector& row_targets, const Vector& col_targets,
                  const ContingencyTable& candidate);

/// Counterfactual table solved cut by cut; forced target cuts take their
/// only admissible value. Throws DegenerateSourceCut.
Matrix nm_reference(const Matrix& source, const Vector& row_targets, const Vector& col_targets);

/// Margin-preserving rounding by scanning all round-up patterns.
Matrix round_reference(const Matrix& x);

/// Exhaustive interval over every allocation. Throws LatticeTooLarge when
/// more than `limit` candidate points would be visited.
MomentInterval enumerate_gnm(const GnmProblem& p, std::uint64_t limit = 1'000'000);

}  // namespace homogamy::oracle
