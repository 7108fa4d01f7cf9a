// bethe.hpp — damped-Newton solution of the nested (twisted) Bethe equations
// and implicit κ-derivatives of the roots at κ̄ = 1.
//
// Completeness is never promised or relied on: the solver returns whatever
// admissible, deduplicated solutions the seeded multistart finds, and every
// accepted root set must later be matched against an actual transfer-matrix
// eigenpair before it is used in a verification.

#pragma once

#include "betheform/algebra.hpp"
#include "betheform/model.hpp"
#include "betheform/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace betheform {

struct BetheRootSet {
  std::vector<int> cardinalities;  // level cardinalities (a_1,…,a_{N-1})
  Levels levels;                   // roots per level, canonically sorted
  std::vector<cplx> twist;         // κ̄ the system was solved at
  double residual = std::numeric_limits<double>::infinity();
  bool admissible = false;

  // GL(3) accessors.
  const ParamSet& u() const { return levels.at(0); }
  const ParamSet& v() const { return levels.at(1); }
};

inline bool complex_less(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

inline void canonical_sort(Levels& levels) {
  for (auto& lv : levels) std::sort(lv.begin(), lv.end(), complex_less);
}

inline bool same_root_set(const Levels& a, const Levels& b, double tol) {
  if (a.size() != b.size()) return false;
  for (size_t k = 0; k < a.size(); ++k) {
    if (a[k].size() != b[k].size()) return false;
    for (size_t j = 0; j < a[k].size(); ++j)
      if (std::abs(a[k][j] - b[k][j]) >= tol) return false;
  }
  return true;
}

namespace detail {

inline Eigen::VectorXcd flatten(const Levels& t) {
  Eigen::VectorXcd x(root_count(t));
  int k = 0;
  for (const auto& lv : t)
    for (cplx z : lv) x(k++) = z;
  return x;
}

inline Levels unflatten(const Eigen::VectorXcd& x, const std::vector<int>& cards) {
  Levels t(cards.size());
  int k = 0;
  for (size_t lv = 0; lv < cards.size(); ++lv) {
    t[lv].resize(static_cast<size_t>(cards[lv]));
    for (int j = 0; j < cards[lv]; ++j) t[lv][static_cast<size_t>(j)] = x(k++);
  }
  return t;
}

inline double residual_norm(const Levels& t, const VacuumRatios& ratios,
                            std::span<const cplx> kappa, const Coupling& c) {
  try {
    const Eigen::VectorXcd r = bethe_residual_levels(t, ratios, kappa, c);
    const double n = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    return std::isfinite(n) ? n : std::numeric_limits<double>::infinity();
  } catch (const pole_error&) {
    return std::numeric_limits<double>::infinity();
  }
}

// Geometry of the inhomogeneity cloud, used to seed starts and to separate
// finite roots from runaway (root-at-infinity) directions.  The log-residual
// of the level-1 equations decays like M c/u for u -> inf, so Newton happily
// "converges" onto descendant directions unless they are cut off.
struct SolveGeometry {
  cplx center{0.0, 0.0};
  double cloud = 0.0;          // max distance of a xi from the center
  double scale = 1.0;          // cloud + |c|
  double accept_radius = 0.0;  // finite roots must stay within this of center

  explicit SolveGeometry(const ModelSpec& spec) {
    for (cplx x : spec.xi) center += x;
    center /= static_cast<double>(spec.M);
    for (cplx x : spec.xi) cloud = std::max(cloud, std::abs(x - center));
    scale = cloud + std::abs(spec.c.c);
    accept_radius = 4.0 * scale;
  }
};

// Roots must stay finite and within the acceptance region, mutually
// separated (within a level and across adjacent levels, where f-poles live)
// and away from the poles/zeros of r1.
inline bool roots_admissible(const Levels& t, const ModelSpec& spec, const SolveGeometry& geom,
                             const Tolerances& tols) {
  for (const auto& lv : t)
    for (cplx z : lv) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
      if (std::abs(z - geom.center) > geom.accept_radius) return false;
    }
  for (size_t k = 0; k < t.size(); ++k) {
    for (size_t a = 0; a < t[k].size(); ++a) {
      for (size_t b = a + 1; b < t[k].size(); ++b)
        if (std::abs(t[k][a] - t[k][b]) < tols.distinct) return false;
      if (k + 1 < t.size())
        for (cplx z : t[k + 1])
          if (std::abs(t[k][a] - z) < tols.distinct) return false;
    }
  }
  if (!t.empty())
    for (cplx u : t[0])
      for (cplx xi : spec.xi)
        if (std::abs(u - xi) < tols.distinct || std::abs(u - xi + spec.c.c) < tols.distinct) return false;
  return true;
}

}  // namespace detail

// Damped Newton from a given start; returns the refined root set when it
// converges below tols.root, otherwise nullopt.  Step halving, at most 8
// halvings per iteration and 200 iterations.  Steps are capped at the cloud
// scale and iterates far outside the acceptance region are abandoned.
inline std::optional<Levels> newton_refine(Levels start, const VacuumRatios& ratios,
                                           std::span<const cplx> kappa, const ModelSpec& spec,
                                           const Tolerances& tols, int max_iter = 200) {
  if (root_count(start) == 0) return start;
  const std::vector<int> cards = [&] {
    std::vector<int> cc;
    for (const auto& lv : start) cc.push_back(static_cast<int>(lv.size()));
    return cc;
  }();
  const detail::SolveGeometry geom(spec);
  const double step_cap = 2.0 * geom.scale;
  Levels t = std::move(start);
  double gnorm = detail::residual_norm(t, ratios, kappa, spec.c);
  if (!std::isfinite(gnorm)) return std::nullopt;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (gnorm < tols.root) {
      // One extra full step squeezes the residual toward rounding level.
      try {
        const Eigen::VectorXcd rr = bethe_residual_levels(t, ratios, kappa, spec.c);
        const Eigen::MatrixXcd jj = bethe_jacobian_levels(t, ratios, spec.c);
        const Eigen::VectorXcd dd = jj.partialPivLu().solve(-rr);
        Levels polished = detail::unflatten(detail::flatten(t) + dd, cards);
        if (detail::residual_norm(polished, ratios, kappa, spec.c) <= gnorm) t = std::move(polished);
      } catch (const pole_error&) {
      }
      return t;
    }
    for (const auto& lv : t)
      for (cplx z : lv)
        if (std::abs(z - geom.center) > 2.0 * geom.accept_radius) return std::nullopt;
    Eigen::VectorXcd res;
    Eigen::MatrixXcd jac;
    try {
      res = bethe_residual_levels(t, ratios, kappa, spec.c);
      jac = bethe_jacobian_levels(t, ratios, spec.c);
    } catch (const pole_error&) {
      return std::nullopt;
    }
    Eigen::VectorXcd step = jac.partialPivLu().solve(-res);
    if (!step.allFinite()) return std::nullopt;
    const double step_len = step.cwiseAbs().maxCoeff();
    if (step_len > step_cap) step *= step_cap / step_len;
    const Eigen::VectorXcd x = detail::flatten(t);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= 8; ++h) {
      Levels trial = detail::unflatten(x + lambda * step, cards);
      const double trial_norm = detail::residual_norm(trial, ratios, kappa, spec.c);
      if (trial_norm < gnorm) {
        t = std::move(trial);
        gnorm = trial_norm;
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  return gnorm < tols.root ? std::optional<Levels>(t) : std::nullopt;
}

// Multistart solve of one sector.  Starts are drawn in a disk around the
// inhomogeneity cloud (radius twice its spread); optional hint root sets are
// tried first.  Solutions are canonically sorted, deduplicated and returned
// in a deterministic order.  The returned list may be incomplete.
inline std::vector<BetheRootSet> solve_sector(const std::vector<int>& cardinalities,
                                              const ModelSpec& spec, std::span<const cplx> kappa,
                                              std::uint64_t seed, int n_starts = 0,
                                              const Tolerances& tols = {},
                                              const std::vector<Levels>& hints = {}) {
  const int n_levels = spec.N - 1;
  if (static_cast<int>(cardinalities.size()) != n_levels)
    throw std::invalid_argument("solve_sector: need N-1 level cardinalities");
  for (size_t k = 0; k + 1 < cardinalities.size(); ++k)
    if (cardinalities[k] < cardinalities[k + 1])
      throw std::invalid_argument("solve_sector: cardinalities must be non-increasing");
  if (!cardinalities.empty() && cardinalities[0] > spec.M)
    throw std::invalid_argument("solve_sector: level-1 cardinality exceeds M");

  const int total_roots = [&] {
    int s = 0;
    for (int a : cardinalities) s += a;
    return s;
  }();
  std::vector<BetheRootSet> found;
  const VacuumRatios ratios = chain_ratios(spec);
  const detail::SolveGeometry geom(spec);
  auto accept = [&](Levels t) {
    canonical_sort(t);
    if (!detail::roots_admissible(t, spec, geom, tols)) return;
    const double res = detail::residual_norm(t, ratios, kappa, spec.c);
    if (!(res < tols.root)) return;
    for (const auto& prev : found)
      if (same_root_set(prev.levels, t, tols.dedupe)) return;
    BetheRootSet rs;
    rs.cardinalities = cardinalities;
    rs.levels = std::move(t);
    rs.twist.assign(kappa.begin(), kappa.end());
    rs.residual = res;
    rs.admissible = true;
    found.push_back(std::move(rs));
  };

  if (total_roots == 0) {
    BetheRootSet vac;
    vac.cardinalities = cardinalities;
    vac.levels.assign(static_cast<size_t>(n_levels), {});
    vac.twist.assign(kappa.begin(), kappa.end());
    vac.residual = 0.0;
    vac.admissible = true;
    return {vac};
  }

  for (const Levels& h : hints)
    if (auto t = newton_refine(h, ratios, kappa, spec, tols)) accept(std::move(*t));

  if (n_starts <= 0) n_starts = 50 * total_roots;
  std::ostringstream tag;
  tag << "multistart/";
  for (int a : cardinalities) tag << a << ",";
  SplitMix64 rng(seed, tag.str());
  // Level-k roots of this chain cluster around mean(xi) - k c/2; the radius
  // ladder alternates tight and wide disks so both narrow basins near the
  // cloud and outliers get sampled.
  constexpr double radius_ladder[3] = {0.6, 1.0, 1.7};
  for (int s = 0; s < n_starts; ++s) {
    const double radius = radius_ladder[s % 3] * geom.scale;
    Levels start(static_cast<size_t>(n_levels));
    for (int k = 0; k < n_levels; ++k) {
      const cplx level_center = geom.center - 0.5 * static_cast<double>(k + 1) * spec.c.c;
      for (int j = 0; j < cardinalities[static_cast<size_t>(k)]; ++j)
        start[static_cast<size_t>(k)].push_back(rng.in_disk(level_center, radius));
    }
    if (auto t = newton_refine(std::move(start), ratios, kappa, spec, tols)) accept(std::move(*t));
  }

  std::sort(found.begin(), found.end(), [](const BetheRootSet& a, const BetheRootSet& b) {
    for (size_t k = 0; k < a.levels.size(); ++k)
      for (size_t j = 0; j < std::min(a.levels[k].size(), b.levels[k].size()); ++j) {
        if (a.levels[k][j] == b.levels[k][j]) continue;
        return complex_less(a.levels[k][j], b.levels[k][j]);
      }
    return false;
  });
  return found;
}

// Residual/Jacobian overloads on BetheRootSet.
inline Eigen::VectorXcd bethe_residual(const BetheRootSet& roots, const VacuumRatios& ratios,
                                       std::span<const cplx> kappa, const Coupling& c) {
  return bethe_residual_levels(roots.levels, ratios, kappa, c);
}

inline Eigen::MatrixXcd bethe_jacobian(const BetheRootSet& roots, const VacuumRatios& ratios,
                                       const Coupling& c) {
  return bethe_jacobian_levels(roots.levels, ratios, c);
}

// dRoots/dκ_i at κ̄ = 1 for one twist index i (1-based), via
// J · d = -∂G/∂κ_i with the analytic Jacobian.
struct RootDerivatives {
  int twist_index = 0;
  Levels droots;  // same shape as the root levels
};

inline RootDerivatives kappa_derivatives(const BetheRootSet& roots, const ModelSpec& spec,
                                         int twist_index, const Tolerances& tols = {}) {
  if (twist_index < 1 || twist_index > spec.N) throw std::out_of_range("kappa_derivatives: twist index");
  RootDerivatives out;
  out.twist_index = twist_index;
  if (root_count(roots.levels) == 0) {
    out.droots.assign(roots.levels.size(), {});
    return out;
  }
  const VacuumRatios ratios = chain_ratios(spec);
  const Eigen::MatrixXcd jac = bethe_jacobian_levels(roots.levels, ratios, spec.c);
  const Eigen::VectorXcd dres = bethe_residual_dkappa(roots.levels, twist_index);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(jac);
  // Cheap singularity screen: reject when the solve fails to reproduce rhs.
  const Eigen::VectorXcd sol = lu.solve(-dres);
  if (!sol.allFinite() || (jac * sol + dres).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, dres.cwiseAbs().maxCoeff()))
    throw std::runtime_error("kappa_derivatives: singular Bethe Jacobian");
  (void)tols;
  std::vector<int> cards;
  for (const auto& lv : roots.levels) cards.push_back(static_cast<int>(lv.size()));
  out.droots = detail::unflatten(sol, cards);
  return out;
}

// d/dκ_i log ∏_k α_k(t̄^k(κ̄)) for the left block of `prefix` sites:
// only α_1 = ℓ1 contributes on the fundamental chain, so this is
// Σ_j (d/du log ℓ1)(u_j) du_j/dκ_i.  For GL(3) it equals
// d/dκ_i log( ℓ1(ū(κ̄)) / ℓ3(v̄(κ̄)) ) since ℓ3 ≡ 1.
inline cplx log_ell_kappa_derivative(const BetheRootSet& roots, const RootDerivatives& derivs,
                                     const ModelSpec& spec, int prefix) {
  cplx sum{0.0, 0.0};
  if (roots.levels.empty()) return sum;
  const SiteRange left{1, prefix};
  for (size_t j = 0; j < roots.levels[0].size(); ++j)
    sum += range_dlog_r1(spec, left, roots.levels[0][j]) * derivs.droots.at(0).at(j);
  return sum;
}

// Single-site variant: d/dκ_i log ℓ1(ū(κ̄)|n) = Σ_j (d/du log f(u_j, ξ_n)) du_j/dκ_i.
inline cplx log_ell_site_kappa_derivative(const BetheRootSet& roots, const RootDerivatives& derivs,
                                          const ModelSpec& spec, int site) {
  cplx sum{0.0, 0.0};
  if (roots.levels.empty()) return sum;
  for (size_t j = 0; j < roots.levels[0].size(); ++j)
    sum += dlog_f(roots.levels[0][j], spec.xi[static_cast<size_t>(site - 1)], spec.c) * derivs.droots.at(0).at(j);
  return sum;
}

}  // namespace betheform
