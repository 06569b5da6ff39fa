#pragma once

#include <functional>
#include <vector>

#include "semidiag/types.hpp"

namespace semidiag::spectral {

struct EigenResult {
  /// Canonical order: descending real part, then descending imaginary part.
  Vec values;
  /// Complex Schur form M = schur_q * schur_t * schur_q^H (unordered).
  Mat schur_t;
  Mat schur_q;
  bool defective = false;
};

/// `cluster_tol` is relative to max(1, ||M||_F) and decides which eigenvalues
/// are treated as repeated when looking for Jordan structure.
EigenResult eig(const Mat& m, double cluster_tol = 1e-8);

/// Basis of the invariant subspace for a selected eigenvalue group, together
/// with the dual rows of the complementary splitting:
///   m * basis = basis * block,  dual * basis = I,  projector = basis * dual.
struct InvariantBasis {
  Mat basis;
  Mat dual;
  Mat block;
  Mat projector() const { return basis * dual; }
};

/// Complete splitting of C^n into k invariant subspaces.
struct Decomposition {
  std::vector<InvariantBasis> parts;
  std::vector<Vec> eigenvalues;  // per part
};

/// Reorders a complex Schur form so that the eigenvalues with select[i] true
/// (indexed by diagonal position) come first. Unitary Givens swaps.
void reorder_schur(Mat& t, Mat& q, const std::vector<bool>& select);

/// Splits C^n by the label assigned to each eigenvalue (labels 0..k-1, each used
/// at least once). Robust for non-diagonalizable matrices.
Decomposition decompose(const Mat& m, const std::function<int(cplx)>& label, int k);

struct GroupingRule {
  enum class Kind { SignOfRealPart, IndexSets, NearestReference };
  Kind kind = Kind::SignOfRealPart;
  /// IndexSets: canonical-order indices of group 1.
  std::vector<int> group1;
  /// NearestReference: mean eigenvalue of each group at the previous point,
  /// together with the expected group sizes.
  cplx mean1{}, mean2{};
  int size1 = 0;

  static GroupingRule sign_of_real_part() { return {}; }
  static GroupingRule index_sets(std::vector<int> g1) {
    GroupingRule r;
    r.kind = Kind::IndexSets;
    r.group1 = std::move(g1);
    return r;
  }
};

struct SplitOptions {
  /// Minimum gap, relative to max(1, ||M||_F).
  double min_gap = 1e-6;
};

struct SpectralSplit {
  Mat pi1, pi2;
  InvariantBasis part1, part2;
  double gap = 0.0;
  Vec eigenvalues;           // canonical order
  std::vector<int> group;    // 1 or 2 per canonical index
  cplx mean1{}, mean2{};
  int size1 = 0;

  /// Rule that continues this split to a nearby matrix.
  GroupingRule continuation() const;
};

/// Throws SeparationFailure when the groups are closer than the threshold or a
/// group is empty.
SpectralSplit spectral_split(const Mat& m, const GroupingRule& rule, const SplitOptions& opt = {});

/// Solves a*x - x*b = c by Bartels-Stewart on complex Schur forms.
/// Throws SingularOperator when a and b share an eigenvalue.
Mat solve_sylvester(const Mat& a, const Mat& b, const Mat& c);

/// Same for already upper triangular a and b.
Mat solve_triangular_sylvester(const Mat& ta, const Mat& tb, const Mat& c);

/// The block operator (x12, x21) -> (a11 x12 - x12 a22, a22 x21 - x21 a11).
struct BlockSylvester {
  Mat a11, a22;

  /// Minimum |lambda - mu| over eigenvalues of a11, a22.
  double separation() const;
  /// Returns (x12, x21) with (a11 x12 - x12 a22, a22 x21 - x21 a11) = -(c12, c21).
  std::pair<Mat, Mat> solve(const Mat& c12, const Mat& c21) const;
  std::pair<Mat, Mat> apply(const Mat& x12, const Mat& x21) const;
  /// Kronecker form acting on [vec(x12); vec(x21)] (column-major vec).
  Mat kronecker() const;
};

/// Eigenvalues of the block operator: lambda_i - mu_j and mu_j - lambda_i.
Vec block_sylvester_eigenvalues(const Mat& a11, const Mat& a22);

/// Three-way split by argument with half-angle eps:
///   I:   arg in (pi/2 + eps, 3pi/2 - eps)
///   II:  arg in (-eps, pi/2 + eps)
///   III: arg in (-pi/2 - eps, eps)
/// II is tested before III where the ranges overlap.
struct DichotomySplit {
  Mat pi_I, pi_II, pi_III;
  Decomposition parts;  // parts[0..2] = I, II, III (possibly empty)
  std::vector<int> group;  // 0, 1, 2 per canonical eigenvalue index
  Vec eigenvalues;
};

/// Returns group index 0/1/2 for I/II/III; throws on a boundary ray or zero.
int dichotomy_group(cplx mu, double eps, double ray_tol = 1e-10);

DichotomySplit dichotomy_projectors(const Mat& m, double eps);

}  // namespace semidiag::spectral
