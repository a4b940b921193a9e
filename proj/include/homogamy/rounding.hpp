#pragma once

#include "homogamy/tables.hpp"

namespace homogamy {

/// Round every cell of x down or up to an integer so that the (integral)
/// row and column sums of x are preserved exactly.
///
/// Among all such roundings the one maximizing the summed fractional parts
/// of the cells rounded up is chosen, which is the largest-remainder rule
/// constrained to keep the margins. Scores within 1e-9 tie; ties go to the
/// rounding that rounds up earlier cells in row-major order. Cells within
/// 1e-9 of an integer are treated as that integer.
///
/// Throws InfeasibleBlockTotals if a row or column sum is not integral.
Matrix round_preserving_margins(const Matrix& x);

}  // namespace homogamy
