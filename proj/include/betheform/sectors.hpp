// sectors.hpp — weight-sector bookkeeping for the N^M-dimensional chain space.
//
// Basis convention: product basis with site 1 slowest, i.e. a basis state s
// (0 ≤ s < N^M) has color_at(s, n) = (s / N^{M-n}) mod N at site n.  Colors
// are 0-based internally; color 0 is the local vacuum.  Site and operator
// indices in public interfaces are 1-based to match the usual conventions.

#pragma once

#include "betheform/algebra.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <vector>

namespace betheform {

inline long pow_long(int base, int exp) {
  long r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > (1L << 40) / base) throw std::overflow_error("pow_long: dimension overflow");
    r *= base;
  }
  return r;
}

// Conserved-color sector: occupations (n_1,…,n_N) with Σ n_k = M, plus the
// list of global basis indices carrying those occupations (ascending).
struct WeightSector {
  std::vector<int> occupations;
  std::vector<long> basis_indices;

  long dim() const { return static_cast<long>(basis_indices.size()); }
};

inline int color_at(long state, int site, int N, int M) {
  long stride = pow_long(N, M - site);
  return static_cast<int>((state / stride) % N);
}

inline std::vector<int> occupations_of_state(long state, int N, int M) {
  std::vector<int> occ(static_cast<size_t>(N), 0);
  for (int n = 1; n <= M; ++n) ++occ[static_cast<size_t>(color_at(state, n, N, M))];
  return occ;
}

// Level cardinalities (a_1,…,a_{N-1}) of a sector: a_k = Σ_{j>k} n_j.
// For N = 3 this is the usual (a, b) with occupations (M-a, a-b, b).
inline std::vector<int> levels_from_occupations(const std::vector<int>& occ) {
  const int N = static_cast<int>(occ.size());
  std::vector<int> cards(static_cast<size_t>(N - 1), 0);
  int tail = 0;
  for (int k = N - 1; k >= 1; --k) {
    tail += occ[static_cast<size_t>(k)];
    cards[static_cast<size_t>(k - 1)] = tail;
  }
  return cards;
}

inline std::vector<int> occupations_from_levels(const std::vector<int>& cards, int M) {
  const int N = static_cast<int>(cards.size()) + 1;
  std::vector<int> occ(static_cast<size_t>(N), 0);
  occ[0] = M - cards[0];
  for (int k = 1; k < N - 1; ++k) occ[static_cast<size_t>(k)] = cards[static_cast<size_t>(k - 1)] - cards[static_cast<size_t>(k)];
  occ[static_cast<size_t>(N - 1)] = cards[static_cast<size_t>(N - 2)];
  for (int v : occ)
    if (v < 0) throw std::invalid_argument("occupations_from_levels: inadmissible cardinalities");
  return occ;
}

// All compositions of M into N parts, each with its basis index list.
// Sectors are emitted in lexicographic order of the occupation vector;
// the index lists partition 0..N^M-1.
inline std::vector<WeightSector> enumerate_sectors(int N, int M, long max_dim = 6561) {
  if (N < 2 || M < 1) throw std::invalid_argument("enumerate_sectors: need N >= 2, M >= 1");
  const long dim = pow_long(N, M);
  if (dim > max_dim) throw std::overflow_error("enumerate_sectors: N^M exceeds dense limit");
  std::map<std::vector<int>, std::vector<long>> buckets;
  for (long s = 0; s < dim; ++s) buckets[occupations_of_state(s, N, M)].push_back(s);
  std::vector<WeightSector> out;
  out.reserve(buckets.size());
  for (auto& [occ, idx] : buckets) out.push_back(WeightSector{occ, std::move(idx)});
  return out;
}

// Shared basis/sector lookup table for one (N, M).  Immutable after
// construction; everything holding operators keeps a pointer to one of these.
struct SectorTable {
  int N = 0;
  int M = 0;
  long dim = 0;
  std::vector<WeightSector> sectors;
  std::vector<int> sector_of;   // global state -> sector index
  std::vector<long> offset_of;  // global state -> offset inside its sector

  SectorTable() = default;
  SectorTable(int N_, int M_, long max_dim = 6561) : N(N_), M(M_), dim(pow_long(N_, M_)) {
    sectors = enumerate_sectors(N, M, max_dim);
    sector_of.assign(static_cast<size_t>(dim), -1);
    offset_of.assign(static_cast<size_t>(dim), -1);
    for (size_t si = 0; si < sectors.size(); ++si) {
      const auto& idx = sectors[si].basis_indices;
      for (size_t k = 0; k < idx.size(); ++k) {
        sector_of[static_cast<size_t>(idx[k])] = static_cast<int>(si);
        offset_of[static_cast<size_t>(idx[k])] = static_cast<long>(k);
      }
    }
  }

  int find_sector(const std::vector<int>& occ) const {
    for (size_t si = 0; si < sectors.size(); ++si)
      if (sectors[si].occupations == occ) return static_cast<int>(si);
    return -1;
  }

  int sector_of_levels(const std::vector<int>& cards) const {
    return find_sector(occupations_from_levels(cards, M));
  }
};

}  // namespace betheform
