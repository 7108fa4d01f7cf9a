// algebra.hpp — scalar building blocks of the rational GL(N) R-matrix algebra.
//
// Conventions used throughout the library:
//
//   g(u,v) = c/(u-v)
//   f(u,v) = (u-v+c)/(u-v) = 1 + g(u,v)
//
// Products of f over parameter sets follow the shorthand
//   f(z, w̄)  = ∏_k f(z, w_k),   f(ū, v̄) = ∏_j ∏_k f(u_j, v_k),
// with empty-set products equal to 1.
//
// Bethe parameters are organised into nesting levels t̄^1, …, t̄^{N-1}
// (for N = 3 these are the familiar ū = t̄^1 and v̄ = t̄^2).  The Bethe
// system is cast in logarithmic form and reduced to the principal strip
// Im ∈ (-π, π], which is what the Newton solver iterates on.  The level-k
// equation for a root t = t^k_j reads
//
//   0 = log α_k(t) - log(κ_{k+1}/κ_k)
//       - Σ_{l≠j} [ log f(t, t^k_l) - log f(t^k_l, t) ]
//       - Σ_p log f(t^{k+1}_p, t) + Σ_q log f(t, t^{k-1}_q)
//
// where α_1 = r1, α_{N-1} = 1/r3 (for N ≥ 3) and all intermediate α_k = 1.
// For N = 3 this is algebraically identical to the usual pair of equations
// for r1(u_j) and r3(v_j).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace betheform {

using cplx = std::complex<double>;
using ParamSet = std::vector<cplx>;
// One list of Bethe roots per nesting level; Levels.size() == N-1.
using Levels = std::vector<ParamSet>;

struct pole_error : std::runtime_error {
  explicit pole_error(const std::string& what) : std::runtime_error(what) {}
};

// R-matrix constant c (must be nonzero).
struct Coupling {
  cplx c{1.0, 0.0};
};

// Numerical tolerances.  These are fixed project-wide defaults; the run
// configuration may override the ones that gate accept/reject decisions.
struct Tolerances {
  double pole_scale = 1e-10;    // tol_pole = pole_scale * max(1, |c|)
  double distinct = 1e-8;       // admissible roots must be this far apart
  double root = 1e-11;          // Bethe residual convergence target
  double match = 1e-8;          // tau-vs-eigenvalue relative match tolerance
  double degenerate = 1e-9;     // eigenvalue separation below which pairs are dropped
  double pairing = 1e-8;        // |left·right| floor relative to norms
  double denominator = 1e-6;    // |tau^C(z) - tau^B(z)| floor for universal FF
  double dedupe = 1e-7;         // two sorted root sets closer than this are one
  double rel_floor = 1e-30;     // floor in relative residuals
};

inline double tol_pole(const Coupling& c, double pole_scale = 1e-10) {
  return pole_scale * std::max(1.0, std::abs(c.c));
}

inline cplx g(cplx u, cplx v, const Coupling& c) {
  if (std::abs(u - v) < tol_pole(c)) throw pole_error("g(u,v): u-v below pole tolerance");
  return c.c / (u - v);
}

inline cplx f(cplx u, cplx v, const Coupling& c) {
  if (std::abs(u - v) < tol_pole(c)) throw pole_error("f(u,v): u-v below pole tolerance");
  return (u - v + c.c) / (u - v);
}

// d/du log f(u,v) = 1/(u-v+c) - 1/(u-v).  Note d/dv log f(u,v) is minus this.
inline cplx dlog_f(cplx u, cplx v, const Coupling& c) {
  const double tol = tol_pole(c);
  if (std::abs(u - v) < tol) throw pole_error("dlog_f: u-v below pole tolerance");
  if (std::abs(u - v + c.c) < tol) throw pole_error("dlog_f: u-v+c below pole tolerance");
  return 1.0 / (u - v + c.c) - 1.0 / (u - v);
}

inline cplx prod_f(cplx z, std::span<const cplx> w, const Coupling& c) {
  cplx p{1.0, 0.0};
  for (cplx wk : w) p *= f(z, wk, c);
  return p;
}

inline cplx prod_f(std::span<const cplx> w, cplx z, const Coupling& c) {
  cplx p{1.0, 0.0};
  for (cplx wk : w) p *= f(wk, z, c);
  return p;
}

// f(ū, v̄) double product; returns 1 when either set is empty.
inline cplx prod_f(std::span<const cplx> u, std::span<const cplx> v, const Coupling& c) {
  cplx p{1.0, 0.0};
  for (cplx uj : u)
    for (cplx vk : v) p *= f(uj, vk, c);
  return p;
}

// Vacuum eigenvalue ratios of the monodromy matrix.  r1 = λ1/λ2, r3 = λ3/λ2;
// for the concrete fundamental chain r1(u) = ∏_n f(u, ξ_n) and r3 ≡ 1.
// The analytic log-derivatives feed the Bethe Jacobian and the κ-derivative
// machinery.
struct VacuumRatios {
  std::function<cplx(cplx)> r1 = [](cplx) { return cplx{1.0, 0.0}; };
  std::function<cplx(cplx)> r3 = [](cplx) { return cplx{1.0, 0.0}; };
  std::function<cplx(cplx)> dlog_r1 = [](cplx) { return cplx{0.0, 0.0}; };
  std::function<cplx(cplx)> dlog_r3 = [](cplx) { return cplx{0.0, 0.0}; };

  // Level vacuum function α_k (1-based k among n_levels = N-1 levels).
  cplx level_alpha(int k, int n_levels, cplx t) const {
    if (k == 1) return r1(t);
    if (k == n_levels) return 1.0 / r3(t);
    return cplx{1.0, 0.0};
  }
  cplx level_dlog_alpha(int k, int n_levels, cplx t) const {
    if (k == 1) return dlog_r1(t);
    if (k == n_levels) return -dlog_r3(t);
    return cplx{0.0, 0.0};
  }
};

inline std::vector<cplx> unit_twist(int N) { return std::vector<cplx>(static_cast<size_t>(N), cplx{1.0, 0.0}); }

// Twisted transfer-matrix eigenvalue for rank N:
//   τ(w) = Σ_{i=1}^{N} κ_i λ_i(w) f(t̄^i, w) f(w, t̄^{i-1}),  t̄^0 = t̄^N = ∅,
// with λ_1 = r1, λ_N = r3 (N ≥ 3) and λ_i = 1 otherwise.
inline cplx tau_levels(cplx w, const Levels& t, const VacuumRatios& ratios,
                       std::span<const cplx> kappa, const Coupling& c) {
  const int n_levels = static_cast<int>(t.size());
  const int N = n_levels + 1;
  if (static_cast<int>(kappa.size()) != N)
    throw std::invalid_argument("tau_levels: twist size must equal rank");
  cplx sum{0.0, 0.0};
  for (int i = 1; i <= N; ++i) {
    cplx lambda{1.0, 0.0};
    if (i == 1) lambda = ratios.r1(w);
    else if (i == N && N >= 3) lambda = ratios.r3(w);
    cplx term = kappa[static_cast<size_t>(i - 1)] * lambda;
    if (i <= n_levels) term *= prod_f(std::span<const cplx>(t[static_cast<size_t>(i - 1)]), w, c);
    if (i >= 2) term *= prod_f(w, std::span<const cplx>(t[static_cast<size_t>(i - 2)]), c);
    sum += term;
  }
  return sum;
}

// GL(3) signature: τ(w | ū, v̄) = r1(w) f(ū,w) + f(w,ū) f(v̄,w) + r3(w) f(w,v̄).
inline cplx tau(cplx w, std::span<const cplx> u, std::span<const cplx> v,
                const VacuumRatios& ratios, const Coupling& c) {
  Levels t{ParamSet(u.begin(), u.end()), ParamSet(v.begin(), v.end())};
  const auto kap = unit_twist(3);
  return tau_levels(w, t, ratios, kap, c);
}

inline cplx tau_twisted(cplx w, std::span<const cplx> u, std::span<const cplx> v,
                        const VacuumRatios& ratios, std::span<const cplx> kappa,
                        const Coupling& c) {
  Levels t{ParamSet(u.begin(), u.end()), ParamSet(v.begin(), v.end())};
  return tau_levels(w, t, ratios, kappa, c);
}

inline cplx reduce_principal(cplx z) {
  const double two_pi = 2.0 * std::numbers::pi;
  return {z.real(), z.imag() - two_pi * std::round(z.imag() / two_pi)};
}

inline int root_count(const Levels& t) {
  int n = 0;
  for (const auto& lv : t) n += static_cast<int>(lv.size());
  return n;
}

// Log-form residual of the (twisted) Bethe system, one entry per root,
// levels concatenated in order.  Each entry is reduced to the principal
// strip, so a residual is zero iff the multiplicative equation holds.
inline Eigen::VectorXcd bethe_residual_levels(const Levels& t, const VacuumRatios& ratios,
                                              std::span<const cplx> kappa, const Coupling& c) {
  const int n_levels = static_cast<int>(t.size());
  const int N = n_levels + 1;
  if (static_cast<int>(kappa.size()) != N)
    throw std::invalid_argument("bethe_residual: twist size must equal rank");
  Eigen::VectorXcd res(root_count(t));
  int row = 0;
  for (int k = 1; k <= n_levels; ++k) {
    const auto& lv = t[static_cast<size_t>(k - 1)];
    const cplx kappa_ratio = std::log(kappa[static_cast<size_t>(k)] / kappa[static_cast<size_t>(k - 1)]);
    for (size_t j = 0; j < lv.size(); ++j) {
      const cplx tj = lv[j];
      cplx r = std::log(ratios.level_alpha(k, n_levels, tj)) - kappa_ratio;
      for (size_t l = 0; l < lv.size(); ++l) {
        if (l == j) continue;
        r -= std::log(f(tj, lv[l], c)) - std::log(f(lv[l], tj, c));
      }
      if (k < n_levels)
        for (cplx tp : t[static_cast<size_t>(k)]) r -= std::log(f(tp, tj, c));
      if (k > 1)
        for (cplx tq : t[static_cast<size_t>(k - 2)]) r += std::log(f(tj, tq, c));
      res(row++) = reduce_principal(r);
    }
  }
  return res;
}

// Analytic Jacobian ∂(residual)/∂(root) of the log-form system.  The twist
// enters the residual only through constants, so the Jacobian does not
// depend on κ̄.
inline Eigen::MatrixXcd bethe_jacobian_levels(const Levels& t, const VacuumRatios& ratios,
                                              const Coupling& c) {
  const int n_levels = static_cast<int>(t.size());
  const int n = root_count(t);
  Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(n, n);
  // Column offsets of each level in the concatenated root vector.
  std::vector<int> off(static_cast<size_t>(n_levels) + 1, 0);
  for (int k = 0; k < n_levels; ++k) off[static_cast<size_t>(k) + 1] = off[static_cast<size_t>(k)] + static_cast<int>(t[static_cast<size_t>(k)].size());

  for (int k = 1; k <= n_levels; ++k) {
    const auto& lv = t[static_cast<size_t>(k - 1)];
    for (size_t j = 0; j < lv.size(); ++j) {
      const int row = off[static_cast<size_t>(k - 1)] + static_cast<int>(j);
      const cplx tj = lv[j];
      cplx diag = ratios.level_dlog_alpha(k, n_levels, tj);
      for (size_t l = 0; l < lv.size(); ++l) {
        if (l == j) continue;
        const cplx s = dlog_f(tj, lv[l], c) + dlog_f(lv[l], tj, c);
        jac(row, off[static_cast<size_t>(k - 1)] + static_cast<int>(l)) = s;
        diag -= s;
      }
      if (k < n_levels) {
        const auto& up = t[static_cast<size_t>(k)];
        for (size_t p = 0; p < up.size(); ++p) {
          const cplx s = dlog_f(up[p], tj, c);
          jac(row, off[static_cast<size_t>(k)] + static_cast<int>(p)) = -s;
          diag += s;
        }
      }
      if (k > 1) {
        const auto& dn = t[static_cast<size_t>(k - 2)];
        for (size_t q = 0; q < dn.size(); ++q) {
          const cplx s = dlog_f(tj, dn[q], c);
          jac(row, off[static_cast<size_t>(k - 2)] + static_cast<int>(q)) = -s;
          diag += s;
        }
      }
      jac(row, row) = diag;
    }
  }
  return jac;
}

// ∂(residual)/∂κ_i at κ̄ = 1 (twist_index is 1-based).  Level k couples the
// pair (κ_k, κ_{k+1}) only, giving the constant δ_{ik} - δ_{i,k+1} per row.
inline Eigen::VectorXcd bethe_residual_dkappa(const Levels& t, int twist_index) {
  Eigen::VectorXcd dres(root_count(t));
  int row = 0;
  for (int k = 1; k <= static_cast<int>(t.size()); ++k) {
    const cplx val{static_cast<double>((twist_index == k) ? 1 : 0) -
                       static_cast<double>((twist_index == k + 1) ? 1 : 0),
                   0.0};
    for (size_t j = 0; j < t[static_cast<size_t>(k - 1)].size(); ++j) dres(row++) = val;
  }
  return dres;
}

}  // namespace betheform
