#pragma once

#include <cstddef>

namespace gmlab::tol {

/// Relative rank cutoff: smallest singular value must exceed
/// rank_tol * largest for a matrix to count as full column rank.
inline constexpr double rank_tol = 1e-10;

/// Loewner dominance slack, relative to max(1, |trace of difference|).
inline constexpr double loewner_tol = 1e-9;

/// Symmetry slack, relative to max(1, max |entry|). Matrices within this
/// are symmetrized by averaging; beyond it they are rejected.
inline constexpr double sym_tol = 1e-9;

/// Entrywise slack on A*X = I for an estimator to count as unbiased.
inline constexpr double unbiased_tol = 1e-9;

/// Slack on tr(H) = 0 and X'HX = 0 for quadratic perturbations.
inline constexpr double constraint_tol = 1e-10;

/// Hard cap on finite-support sizes for exact enumeration.
inline constexpr std::size_t enumeration_cap = std::size_t{1} << 20;

}  // namespace gmlab::tol
