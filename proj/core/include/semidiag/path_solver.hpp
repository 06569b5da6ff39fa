#pragma once

#include <functional>
#include <vector>

#include <Eigen/LU>

#include "semidiag/types.hpp"

namespace semidiag::pathsolve {

/// Polyline in the complex plane cut into Lobatto panels. Panel p owns nodes
/// p*(q-1) .. p*(q-1)+q-1; neighbouring panels share their end node.
struct PathMesh {
  int q = 16;
  std::vector<cplx> z;
  std::vector<cplx> ell;          // complex length of each panel
  std::vector<int> vertex_node;   // node index of every polyline vertex

  int panels() const { return static_cast<int>(ell.size()); }
  int nodes() const { return static_cast<int>(z.size()); }
  int panel_start(int p) const { return p * (q - 1); }

  /// Every segment is split into equal panels no longer than max_panel.
  static PathMesh build(const std::vector<cplx>& vertices, double max_panel, int q = 16);
};

/// One invariant piece of the linear part: reduced coordinates c = dual * alpha
/// obey h c' = generator c + dual * g, and contribute basis * c to alpha.
struct Channel {
  Mat basis;      // N x r
  Mat dual;       // r x N
  Mat generator;  // r x r, used when variable_generator is empty
  std::function<Mat(int node)> variable_generator;
  bool forward = true;  // integrate from the first node; otherwise from the last
  Vec initial;          // reduced value at the starting node; empty means zero

  int rank() const { return static_cast<int>(basis.cols()); }
};

/// Factorizations reused across Picard iterations. One cache per channel and h.
struct SweepCache {
  std::vector<std::pair<cplx, Eigen::PartialPivLU<Mat>>> by_length;  // constant generator
  std::vector<Eigen::PartialPivLU<Mat>> by_panel;                     // variable generator
};

/// Fields on a mesh are stored one column per node.
using Field = Mat;

/// Collocation solve of one channel along the mesh. `g` holds the forcing at
/// every node. Adds basis * c at every node to `out`.
void sweep(const PathMesh& mesh, const Channel& ch, const Field& g, double h, Field& out,
           SweepCache* cache = nullptr);

/// Complex derivative at every node from the panel interpolants. At a node
/// shared by two panels the left panel is used, except at the first node.
Field differentiate(const PathMesh& mesh, const Field& f);

struct PicardOptions {
  double tol = 1e-11;
  int max_iterations = 100;
};

struct PicardResult {
  Field alpha;
  int iterations = 0;
  std::vector<double> diffs;
  /// Largest ratio of successive differences above the roundoff floor.
  double contraction = 0.0;
};

/// Forcing callback: fills g from the current iterate.
using Forcing = std::function<void(const Field& alpha, Field& g)>;

/// Maps a forcing to a new iterate (sum of channel sweeps, or a structured
/// sweep for two-dimensional meshes).
using Propagator = std::function<void(const Field& g, Field& next)>;

/// Fixed point alpha = propagate(forcing(alpha)). Throws ConvergenceFailure
/// with the measured contraction ratio when the iteration diverges or stalls.
PicardResult picard(int node_count, int dim, const Forcing& forcing, const Propagator& propagate,
                    const PicardOptions& opt = {});

/// Sum of channel sweeps on a single mesh.
Propagator channel_propagator(const PathMesh& mesh, const std::vector<Channel>& channels, double h);

}  // namespace semidiag::pathsolve
