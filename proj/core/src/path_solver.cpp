#include "semidiag/path_solver.hpp"

#include <cmath>
#include <memory>

#include "semidiag/errors.hpp"
#include "semidiag/lobatto.hpp"

namespace semidiag::pathsolve {

PathMesh PathMesh::build(const std::vector<cplx>& vertices, double max_panel, int q) {
  if (vertices.size() < 2) throw InputError("path needs at least two vertices");
  if (!(max_panel > 0.0)) throw InputError("panel length must be positive");
  const LobattoRule& rule = LobattoRule::get(q);
  PathMesh m;
  m.q = q;
  m.z.push_back(vertices[0]);
  m.vertex_node.push_back(0);
  for (size_t s = 0; s + 1 < vertices.size(); ++s) {
    const cplx a = vertices[s], b = vertices[s + 1];
    const double len = std::abs(b - a);
    if (len == 0.0) throw InputError("path has repeated consecutive vertices");
    const int np = std::max(1, static_cast<int>(std::ceil(len / max_panel - 1e-12)));
    const cplx step = (b - a) / static_cast<double>(np);
    for (int p = 0; p < np; ++p) {
      const cplx start = a + step * static_cast<double>(p);
      m.ell.push_back(step);
      for (int j = 1; j < q; ++j) m.z.push_back(j == q - 1 ? start + step : start + step * rule.nodes(j));
    }
    m.z.back() = b;
    m.vertex_node.push_back(m.nodes() - 1);
  }
  return m;
}

void sweep(const PathMesh& mesh, const Channel& ch, const Field& g, double h, Field& out, SweepCache* cache) {
  const int q = mesh.q;
  const LobattoRule& rule = LobattoRule::get(q);
  const Eigen::MatrixXd& S = rule.integration;
  const int r = ch.rank();
  const int P = mesh.panels();
  if (r == 0) return;

  SweepCache local;
  SweepCache& cc = cache ? *cache : local;
  const bool variable = static_cast<bool>(ch.variable_generator);
  if (variable && static_cast<int>(cc.by_panel.size()) != P) cc.by_panel.assign(P, Eigen::PartialPivLU<Mat>());
  std::vector<bool> have(variable ? P : 0, false);
  if (variable)
    for (int p = 0; p < P; ++p) have[p] = cc.by_panel[p].rows() == (q - 1) * r;

  Vec c = ch.initial.size() == r ? ch.initial : Vec::Zero(r);
  auto global = [&](int p, int j) { return mesh.panel_start(p) + (ch.forward ? j : q - 1 - j); };
  out.col(global(ch.forward ? 0 : P - 1, 0)) += ch.basis * c;

  std::vector<Mat> genbuf(variable ? q : 0);
  std::vector<const Mat*> gen(q, &ch.generator);
  std::vector<Vec> lg(q);
  for (int step = 0; step < P; ++step) {
    const int p = ch.forward ? step : P - 1 - step;
    const cplx ell = ch.forward ? mesh.ell[p] : -mesh.ell[p];
    const cplx scale = ell / h;
    for (int j = 0; j < q; ++j) {
      const int gi = global(p, j);
      lg[j] = ch.dual * g.col(gi);
      if (variable) {
        genbuf[j] = ch.variable_generator(gi);
        gen[j] = &genbuf[j];
      }
    }
    Eigen::PartialPivLU<Mat>* lu = nullptr;
    if (variable) {
      lu = &cc.by_panel[p];
    } else {
      for (auto& e : cc.by_length)
        if (e.first == ell) {
          lu = &e.second;
          break;
        }
    }
    const bool need = variable ? !have[p] : lu == nullptr;
    if (need) {
      Mat sys = Mat::Identity((q - 1) * r, (q - 1) * r);
      for (int j = 1; j < q; ++j)
        for (int k = 1; k < q; ++k) sys.block((j - 1) * r, (k - 1) * r, r, r) -= scale * S(j, k) * *gen[k];
      if (variable) {
        cc.by_panel[p].compute(sys);
        have[p] = true;
        lu = &cc.by_panel[p];
      } else {
        cc.by_length.emplace_back(ell, Eigen::PartialPivLU<Mat>(sys));
        lu = &cc.by_length.back().second;
      }
    }
    Vec rhs((q - 1) * r);
    const Vec c0term = *gen[0] * c + lg[0];
    for (int j = 1; j < q; ++j) {
      Vec acc = c + scale * S(j, 0) * c0term;
      for (int k = 1; k < q; ++k) acc += scale * S(j, k) * lg[k];
      rhs.segment((j - 1) * r, r) = acc;
    }
    Vec sol = lu->solve(rhs);
    for (int j = 1; j < q; ++j) out.col(global(p, j)) += ch.basis * sol.segment((j - 1) * r, r);
    c = sol.segment((q - 2) * r, r);
  }
}

Field differentiate(const PathMesh& mesh, const Field& f) {
  const int q = mesh.q;
  const LobattoRule& rule = LobattoRule::get(q);
  Field d(f.rows(), f.cols());
  const Mat dm = rule.differentiation.cast<cplx>();
  for (int p = 0; p < mesh.panels(); ++p) {
    const int s = mesh.panel_start(p);
    Mat local = f.middleCols(s, q) * dm.transpose() / mesh.ell[p];
    const int j0 = p == 0 ? 0 : 1;
    d.middleCols(s + j0, q - j0) = local.rightCols(q - j0);
  }
  return d;
}

PicardResult picard(int node_count, int dim, const Forcing& forcing, const Propagator& propagate,
                    const PicardOptions& opt) {
  PicardResult res;
  res.alpha = Field::Zero(dim, node_count);
  Field g = Field::Zero(dim, node_count);
  Field next(dim, node_count);
  double scale = 1.0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    forcing(res.alpha, g);
    next.setZero();
    propagate(g, next);
    const double diff = (next - res.alpha).cwiseAbs().maxCoeff();
    const double size = next.cwiseAbs().maxCoeff();
    res.alpha.swap(next);
    res.diffs.push_back(diff);
    res.iterations = it;
    if (!std::isfinite(diff)) throw ConvergenceFailure("Picard iteration produced non-finite values", INFINITY);
    scale = std::max(1.0, size);
    double ratio = 0.0;
    for (size_t k = 1; k < res.diffs.size(); ++k)
      if (res.diffs[k - 1] > 1e3 * opt.tol * scale) ratio = std::max(ratio, res.diffs[k] / res.diffs[k - 1]);
    res.contraction = ratio;
    if (diff <= opt.tol * scale) return res;
    if (it >= 3 && diff > 1e3 * res.diffs[0])
      throw ConvergenceFailure("Picard iteration diverges (contraction ratio " + std::to_string(ratio) +
                                   "); reduce h or the domain",
                               ratio);
  }
  throw ConvergenceFailure("Picard iteration did not reach tolerance in " + std::to_string(opt.max_iterations) +
                               " iterations (contraction ratio " + std::to_string(res.contraction) + ")",
                           res.contraction);
}

Propagator channel_propagator(const PathMesh& mesh, const std::vector<Channel>& channels, double h) {
  auto caches = std::make_shared<std::vector<SweepCache>>(channels.size());
  return [&mesh, channels, h, caches](const Field& g, Field& next) {
    for (size_t c = 0; c < channels.size(); ++c) sweep(mesh, channels[c], g, h, next, &(*caches)[c]);
  };
}

}  // namespace semidiag::pathsolve
