#pragma once

#include <optional>
#include <vector>

#include "semidiag/block_system.hpp"
#include "semidiag/grid.hpp"
#include "semidiag/matrix_function.hpp"
#include "semidiag/spectral.hpp"

namespace semidiag::kato {

/// Eigenprojections of a(x, h) along a grid with group continuation.
class ProjectorField {
 public:
  ProjectorField(MatrixFunction a, double h, spectral::GroupingRule initial, spectral::SplitOptions opt = {});

  /// Split at x continuing `rule`; SeparationFailure carries x.
  spectral::SpectralSplit at(cplx x, const spectral::GroupingRule& rule) const;
  /// d/dx of the group-1 projector, complex derivative along `dir`.
  Mat derivative(cplx x, const spectral::SpectralSplit& split, cplx dir) const;

  const spectral::GroupingRule& initial_rule() const { return initial_; }
  const MatrixFunction& matrix() const { return a_; }
  double h() const { return h_; }

 private:
  MatrixFunction a_;
  double h_;
  spectral::GroupingRule initial_;
  spectral::SplitOptions opt_;
};

struct TransportedBasis {
  Grid grid;
  int m = 0;
  std::vector<Mat> t_hat;        // first m columns span group 1
  std::vector<Mat> t_hat_prime;  // K t_hat
  std::vector<Mat> generator;    // K = [P', P] for the group-1 projector P
  std::vector<Mat> pi1;
  double max_invariance_error = 0.0;
  double max_condition = 0.0;
  double max_projector_jump = 0.0;
};

/// Kato transport by classical RK4. Default t0 is the pair of invariant bases
/// from the ordered Schur form at the first grid point.
/// Throws PreconditionError when the invariance drift exceeds 1e-6 or the
/// projector moves by more than 0.1 between grid points.
TransportedBasis transport(const ProjectorField& field, const Grid& grid, std::optional<Mat> t0 = std::nullopt);

struct InitialReduction {
  SampledBlockSystem system;  // order 1
  TransportedBasis basis;
  /// sup of ||offdiag(t^-1 a t)||, should sit at solver tolerance.
  double offdiag_residual = 0.0;
};

/// Transforms h W' = (a + h b) W into block form of order 1.
InitialReduction initial_blockdiag(const MatrixFunction& a, const MatrixFunction* b, double h, const Grid& grid,
                                   const spectral::GroupingRule& rule, const spectral::SplitOptions& opt = {});

}  // namespace semidiag::kato
