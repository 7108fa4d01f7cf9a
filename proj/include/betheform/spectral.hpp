// spectral.hpp — per-sector diagonalization of the (twisted) transfer matrix
// and binding of Bethe root sets to eigenpairs through tau-sample agreement.
//
// Left eigenvectors come from the transposed sector block, paired to right
// eigenvectors by eigenvalue proximity.  All pairings of left and right
// vectors are bilinear (no complex conjugation): left^T t(w) right.
// Spectral vectors carry arbitrary normalization; every identity checked
// downstream is homogeneous of degree (1,1) in (left, right) so the scale
// drops out.

#pragma once

#include "betheform/bethe.hpp"
#include "betheform/model.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <optional>
#include <vector>

namespace betheform {

struct EigenPair {
  int sector = -1;                  // index into the SectorTable
  std::vector<cplx> sample_points;  // w_s
  std::vector<cplx> samples;        // tau(w_s) via Rayleigh quotients
  Eigen::VectorXcd right;           // sector coordinates
  Eigen::VectorXcd left;
  cplx pairing{0.0, 0.0};           // left^T right
};

struct MatchedState {
  BetheRootSet roots;
  EigenPair pair;
  double match_residual = 0.0;  // max relative tau deviation over all samples
};

// Deterministic tau sample points: moduli in [3,10] x scale of the
// inhomogeneity cloud, angles uniform.  Far outside the cloud every f-factor
// is regular and eigenvalues of distinct states stay well separated.
inline std::vector<cplx> sample_points(const ModelSpec& spec, std::uint64_t seed, int count,
                                       std::string_view tag = "wsamples") {
  double scale = std::max(1.0, std::abs(spec.c.c));
  for (cplx x : spec.xi) scale = std::max(scale, std::abs(x));
  SplitMix64 rng(seed, tag);
  std::vector<cplx> w(static_cast<size_t>(count));
  for (auto& ws : w) ws = rng.in_annulus(3.0 * scale, 10.0 * scale);
  return w;
}

// Full eigen decomposition of one sector block of the twisted transfer
// matrix.  Pairs with eigenvalue separation below tols.degenerate at the
// first sample point are excluded; pairs whose left/right pairing is
// numerically zero are excluded as well.
inline std::vector<EigenPair> diagonalize_sector(int sector, const ModelSpec& spec,
                                                 const SectorTable& tab, std::span<const cplx> kappa,
                                                 std::span<const cplx> points,
                                                 const Tolerances& tols = {}) {
  if (points.empty()) throw std::invalid_argument("diagonalize_sector: need sample points");
  std::vector<Eigen::MatrixXcd> tblocks;
  tblocks.reserve(points.size());
  for (cplx w : points) tblocks.push_back(transfer_matrix(w, kappa, spec, tab).block(sector, sector));

  const Eigen::MatrixXcd& A = tblocks.front();
  const long d = A.rows();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> right_solver(A, true);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> left_solver(A.transpose().eval(), true);
  if (right_solver.info() != Eigen::Success || left_solver.info() != Eigen::Success)
    throw std::runtime_error("diagonalize_sector: eigensolver failure");

  const Eigen::VectorXcd evals = right_solver.eigenvalues();
  const Eigen::VectorXcd levals = left_solver.eigenvalues();

  // Greedy one-to-one assignment of left eigenvectors by eigenvalue proximity.
  std::vector<int> left_of(static_cast<size_t>(d), -1);
  std::vector<bool> used(static_cast<size_t>(d), false);
  for (long r = 0; r < d; ++r) {
    double best = std::numeric_limits<double>::infinity();
    int arg = -1;
    for (long l = 0; l < d; ++l) {
      if (used[static_cast<size_t>(l)]) continue;
      const double dist = std::abs(evals(r) - levals(l));
      if (dist < best) {
        best = dist;
        arg = static_cast<int>(l);
      }
    }
    left_of[static_cast<size_t>(r)] = arg;
    if (arg >= 0) used[static_cast<size_t>(arg)] = true;
  }

  std::vector<EigenPair> out;
  for (long r = 0; r < d; ++r) {
    bool degenerate = false;
    for (long s = 0; s < d; ++s)
      if (s != r && std::abs(evals(r) - evals(s)) < tols.degenerate) degenerate = true;
    if (degenerate) continue;  // excluded with no complaint; completeness not needed

    EigenPair ep;
    ep.sector = sector;
    ep.right = right_solver.eigenvectors().col(r);
    ep.left = left_solver.eigenvectors().col(left_of[static_cast<size_t>(r)]);
    ep.pairing = (ep.left.transpose() * ep.right)(0, 0);
    if (std::abs(ep.pairing) <= tols.pairing * ep.left.norm() * ep.right.norm()) continue;
    ep.sample_points.assign(points.begin(), points.end());
    ep.samples.resize(points.size());
    for (size_t s = 0; s < points.size(); ++s)
      ep.samples[s] = (ep.left.transpose() * tblocks[s] * ep.right)(0, 0) / ep.pairing;
    out.push_back(std::move(ep));
  }
  return out;
}

inline double tau_match_residual(const BetheRootSet& roots, const EigenPair& pair,
                                 const VacuumRatios& ratios, const Coupling& c, size_t first,
                                 size_t count) {
  double worst = 0.0;
  for (size_t s = first; s < std::min(first + count, pair.sample_points.size()); ++s) {
    const cplx predicted = tau_levels(pair.sample_points[s], roots.levels, ratios,
                                      std::span<const cplx>(roots.twist), c);
    worst = std::max(worst, std::abs(predicted - pair.samples[s]) / (1.0 + std::abs(pair.samples[s])));
  }
  return worst;
}

// Greedy one-to-one matching of root sets to eigenpairs by tau agreement on
// the first `match_count` sample points; acceptance requires the residual on
// every sample (matching and held-out alike) to stay below tols.match.
inline std::vector<MatchedState> match_states(const std::vector<BetheRootSet>& roots_list,
                                              const std::vector<EigenPair>& pairs,
                                              const ModelSpec& spec, size_t match_count = 3,
                                              const Tolerances& tols = {}) {
  const VacuumRatios ratios = chain_ratios(spec);
  struct Cand {
    double cost;
    size_t root_idx, pair_idx;
  };
  std::vector<Cand> cands;
  for (size_t ri = 0; ri < roots_list.size(); ++ri)
    for (size_t pi = 0; pi < pairs.size(); ++pi) {
      try {
        const double cost =
            tau_match_residual(roots_list[ri], pairs[pi], ratios, spec.c, 0, match_count);
        if (cost < tols.match) cands.push_back({cost, ri, pi});
      } catch (const pole_error&) {
      }
    }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.root_idx != b.root_idx) return a.root_idx < b.root_idx;
    return a.pair_idx < b.pair_idx;
  });
  std::vector<bool> root_used(roots_list.size(), false), pair_used(pairs.size(), false);
  std::vector<MatchedState> out;
  for (const Cand& cd : cands) {
    if (root_used[cd.root_idx] || pair_used[cd.pair_idx]) continue;
    const auto& pair = pairs[cd.pair_idx];
    const double full = tau_match_residual(roots_list[cd.root_idx], pair, ratios, spec.c, 0,
                                           pair.sample_points.size());
    if (!(full < tols.match)) continue;
    root_used[cd.root_idx] = true;
    pair_used[cd.pair_idx] = true;
    out.push_back(MatchedState{roots_list[cd.root_idx], pair, full});
  }
  std::sort(out.begin(), out.end(), [](const MatchedState& a, const MatchedState& b) {
    for (size_t k = 0; k < a.roots.levels.size(); ++k)
      for (size_t j = 0; j < std::min(a.roots.levels[k].size(), b.roots.levels[k].size()); ++j) {
        if (a.roots.levels[k][j] == b.roots.levels[k][j]) continue;
        return complex_less(a.roots.levels[k][j], b.roots.levels[k][j]);
      }
    return a.roots.levels.size() < b.roots.levels.size();
  });
  return out;
}

}  // namespace betheform
