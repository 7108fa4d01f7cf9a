// model.hpp — the concrete inhomogeneous GL(N) fundamental spin chain.
//
// Site n carries the fundamental representation with L-operator
//   L_n(u) = 1 + g(u, ξ_n) P,   i.e.  (L_n(u))_{ij} = δ_{ij} + g(u, ξ_n) E_{ji}^{(n)},
// so the monodromy matrix is T(u) = L_M(u) ··· L_1(u) and splits at site m
// into T(u) = T^{(2)}(u) T^{(1)}(u) with T^{(1)} = L_m ··· L_1.
//
// Vacuum ratios of this chain: r1(u) = ∏_n f(u, ξ_n), r3 ≡ 1; the left-block
// ratios are ℓ1(u) = ∏_{n≤m} f(u, ξ_n), ℓ3 ≡ 1 with zero-mode coefficients
// ℓ1[0] = m, ℓ3[0] = 0.
//
// Zero modes are the c/u expansion coefficients: (T^{(range)}[0])_{ij} =
// Σ_{n in range} E_{ji}^{(n)}.

#pragma once

#include "betheform/algebra.hpp"
#include "betheform/operators.hpp"
#include "betheform/rng.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

namespace betheform {

// 1-based inclusive site range; first > last means the empty range.
struct SiteRange {
  int first = 1;
  int last = 0;

  static SiteRange full(int M) { return {1, M}; }
  static SiteRange left(int m) { return {1, m}; }
  static SiteRange right(int m, int M) { return {m + 1, M}; }
  bool empty() const { return first > last; }
  int count() const { return empty() ? 0 : last - first + 1; }
};

struct ModelSpec {
  int N = 3;
  int M = 4;
  Coupling c{};
  std::vector<cplx> xi;                 // M inhomogeneities
  int m = 2;                            // composite split site, 1 <= m < M
  std::vector<cplx> kappa;              // diagonal twist, size N (default all 1)
  long max_dim = 6561;

  long dim() const { return pow_long(N, M); }

  void validate(const Tolerances& tols = {}) const {
    if (N < 2) throw std::invalid_argument("ModelSpec: rank N must be >= 2");
    if (M < 1) throw std::invalid_argument("ModelSpec: M must be >= 1");
    if (dim() > max_dim) throw std::invalid_argument("ModelSpec: N^M exceeds dense limit");
    if (std::abs(c.c) == 0.0) throw std::invalid_argument("ModelSpec: coupling c must be nonzero");
    if (static_cast<int>(xi.size()) != M) throw std::invalid_argument("ModelSpec: need M inhomogeneities");
    if (m < 1 || m >= M) throw std::invalid_argument("ModelSpec: split site m must satisfy 1 <= m < M");
    if (static_cast<int>(kappa.size()) != N) throw std::invalid_argument("ModelSpec: twist must have N entries");
    for (size_t a = 0; a < xi.size(); ++a) {
      for (size_t b = a + 1; b < xi.size(); ++b) {
        if (std::abs(xi[a] - xi[b]) <= tols.distinct)
          throw std::invalid_argument("ModelSpec: inhomogeneities must be pairwise distinct");
        if (std::abs(std::abs(xi[a] - xi[b]) - std::abs(c.c)) <= tols.distinct)
          throw std::invalid_argument("ModelSpec: inhomogeneity pair differs by +-c");
      }
    }
  }

  // Seeded inhomogeneities uniform in [0,1] + i[0,0.3], resampled until the
  // separation invariants hold.
  static ModelSpec seeded(int N, int M, cplx c, int m, std::uint64_t seed, long max_dim = 6561) {
    ModelSpec spec;
    spec.N = N;
    spec.M = M;
    spec.c = Coupling{c};
    spec.m = m;
    spec.kappa = unit_twist(N);
    spec.max_dim = max_dim;
    SplitMix64 rng(seed, "xi");
    const Tolerances tols;
    spec.xi.clear();
    int guard = 0;
    while (static_cast<int>(spec.xi.size()) < M) {
      if (++guard > 10000) throw std::runtime_error("ModelSpec::seeded: resampling did not converge");
      const cplx cand{rng.uniform(), 0.3 * rng.uniform()};
      bool ok = true;
      for (cplx prev : spec.xi) {
        if (std::abs(cand - prev) <= 10 * tols.distinct ||
            std::abs(std::abs(cand - prev) - std::abs(c)) <= 10 * tols.distinct) {
          ok = false;
          break;
        }
      }
      if (ok) spec.xi.push_back(cand);
    }
    return spec;
  }
};

// N x N array of chain-space operators (monodromy matrices, zero modes).
struct OperatorMatrix {
  int N = 0;
  std::vector<ManyBodyOperator> ops;  // row-major, (i,j) 1-based via entry()

  OperatorMatrix() = default;
  OperatorMatrix(int N_, const SectorTable& tab) : N(N_) {
    ops.reserve(static_cast<size_t>(N) * static_cast<size_t>(N));
    for (int k = 0; k < N * N; ++k) ops.emplace_back(tab);
  }

  ManyBodyOperator& entry(int i, int j) { return ops[static_cast<size_t>((i - 1) * N + (j - 1))]; }
  const ManyBodyOperator& entry(int i, int j) const { return ops[static_cast<size_t>((i - 1) * N + (j - 1))]; }
};

// Ordered product of L-operators over the range, highest site leftmost.
// The empty range gives the identity matrix of operators.
inline OperatorMatrix build_monodromy(cplx u, SiteRange range, const ModelSpec& spec,
                                      const SectorTable& tab) {
  OperatorMatrix T(spec.N, tab);
  for (int i = 1; i <= spec.N; ++i) T.entry(i, i) = ManyBodyOperator::identity(tab);
  for (int n = std::max(range.first, 1); n <= range.last; ++n) {
    const cplx gn = g(u, spec.xi[static_cast<size_t>(n - 1)], spec.c);
    // T <- L_n * T entrywise: (L_n T)_{ij} = T_{ij} + g_n Σ_k E_{ki}^{(n)} T_{kj}
    OperatorMatrix next = T;
    for (int i = 1; i <= spec.N; ++i) {
      for (int k = 1; k <= spec.N; ++k) {
        const ManyBodyOperator Eki = embed_elementary(k, i, n, tab);
        for (int j = 1; j <= spec.N; ++j) next.entry(i, j) += gn * (Eki * T.entry(k, j));
      }
    }
    T = std::move(next);
  }
  return T;
}

inline OperatorMatrix build_zero_mode(SiteRange range, const ModelSpec& spec, const SectorTable& tab) {
  OperatorMatrix zm(spec.N, tab);
  for (int i = 1; i <= spec.N; ++i)
    for (int j = 1; j <= spec.N; ++j)
      for (int n = std::max(range.first, 1); n <= range.last; ++n)
        zm.entry(i, j) += embed_elementary(j, i, n, tab);
  return zm;
}

// Twisted transfer matrix t(w) = Σ_i κ_i T_{ii}(w); block-diagonal over sectors.
inline ManyBodyOperator transfer_matrix(cplx w, std::span<const cplx> kappa, const ModelSpec& spec,
                                        const SectorTable& tab) {
  const OperatorMatrix T = build_monodromy(w, SiteRange::full(spec.M), spec, tab);
  ManyBodyOperator t(tab);
  for (int i = 1; i <= spec.N; ++i) t += kappa[static_cast<size_t>(i - 1)] * T.entry(i, i);
  return t;
}

// Max-norm residual of R12(u,v) T1(u) T2(v) - T2(v) T1(u) R12(u,v) over the
// carrier V1 x V2 x H, computed blockwise:
//   res[(i,k),(j,l)] = T_{ij}(u)T_{kl}(v) + g T_{kj}(u)T_{il}(v)
//                    - T_{kl}(v)T_{ij}(u) - g T_{kj}(v)T_{il}(u).
inline double check_rtt(cplx u, cplx v, SiteRange range, const ModelSpec& spec,
                        const SectorTable& tab) {
  const OperatorMatrix Tu = build_monodromy(u, range, spec, tab);
  const OperatorMatrix Tv = build_monodromy(v, range, spec, tab);
  const cplx guv = g(u, v, spec.c);
  double res = 0.0;
  for (int i = 1; i <= spec.N; ++i)
    for (int k = 1; k <= spec.N; ++k)
      for (int j = 1; j <= spec.N; ++j)
        for (int l = 1; l <= spec.N; ++l) {
          ManyBodyOperator blk = Tu.entry(i, j) * Tv.entry(k, l) + guv * (Tu.entry(k, j) * Tv.entry(i, l)) -
                                 Tv.entry(k, l) * Tu.entry(i, j) - guv * (Tv.entry(k, j) * Tu.entry(i, l));
          res = std::max(res, blk.norm_max());
        }
  return res;
}

// ---- vacuum/composite ratio functions of the concrete chain ----

inline cplx range_r1(const ModelSpec& spec, SiteRange range, cplx u) {
  cplx p{1.0, 0.0};
  for (int n = std::max(range.first, 1); n <= range.last; ++n) p *= f(u, spec.xi[static_cast<size_t>(n - 1)], spec.c);
  return p;
}

inline cplx range_dlog_r1(const ModelSpec& spec, SiteRange range, cplx u) {
  cplx s{0.0, 0.0};
  for (int n = std::max(range.first, 1); n <= range.last; ++n) s += dlog_f(u, spec.xi[static_cast<size_t>(n - 1)], spec.c);
  return s;
}

inline VacuumRatios ratios_for_range(const ModelSpec& spec, SiteRange range) {
  VacuumRatios R;
  R.r1 = [spec, range](cplx u) { return range_r1(spec, range, u); };
  R.dlog_r1 = [spec, range](cplx u) { return range_dlog_r1(spec, range, u); };
  return R;  // r3 == 1, dlog_r3 == 0 for the fundamental chain
}

inline VacuumRatios chain_ratios(const ModelSpec& spec) { return ratios_for_range(spec, SiteRange::full(spec.M)); }

// Composite-model ratio data: ℓ_k over the left block plus per-site ratios.
struct CompositeRatios {
  std::function<cplx(cplx)> ell1;
  std::function<cplx(cplx)> ell3;
  double ell1_zero = 0.0;  // coefficient of c/u in ℓ1, equals m here
  double ell3_zero = 0.0;
  std::function<cplx(cplx, int)> ell1_site;  // ℓ1(u|n) = f(u, ξ_n)
  std::function<cplx(cplx, int)> ell3_site;  // ℓ3(u|n) = 1
};

inline CompositeRatios composite_ratios(const ModelSpec& spec) {
  CompositeRatios cr;
  cr.ell1 = [spec](cplx u) { return range_r1(spec, SiteRange::left(spec.m), u); };
  cr.ell3 = [](cplx) { return cplx{1.0, 0.0}; };
  cr.ell1_zero = static_cast<double>(spec.m);
  cr.ell3_zero = 0.0;
  cr.ell1_site = [spec](cplx u, int n) { return f(u, spec.xi[static_cast<size_t>(n - 1)], spec.c); };
  cr.ell3_site = [](cplx, int) { return cplx{1.0, 0.0}; };
  return cr;
}

// Product over a level-root set of the left-block level function α_k:
// α_1 = ℓ1 over the prefix, α_k = 1 for k >= 2 on the fundamental chain.
inline cplx left_alpha_product(const ModelSpec& spec, int prefix, const Levels& levels) {
  SiteRange range{1, prefix};
  cplx p{1.0, 0.0};
  if (!levels.empty())
    for (cplx t : levels[0]) p *= range_r1(spec, range, t);
  return p;
}

}  // namespace betheform
