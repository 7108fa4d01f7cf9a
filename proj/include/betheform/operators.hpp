// operators.hpp — dense-per-sector-block operators on the chain space.
//
// Every operator appearing in this project (monodromy entries, zero modes,
// transfer matrices, elementary site operators, their products) maps each
// weight sector into at most one other sector.  Operators are therefore
// stored as a sparse collection of dense blocks keyed by
// (row sector, column sector); a missing block is exactly zero.

#pragma once

#include "betheform/sectors.hpp"

#include <Eigen/Dense>

#include <map>
#include <stdexcept>
#include <utility>

namespace betheform {

class ManyBodyOperator {
 public:
  using BlockKey = std::pair<int, int>;  // (row sector, col sector)
  using BlockMap = std::map<BlockKey, Eigen::MatrixXcd>;

  ManyBodyOperator() = default;
  explicit ManyBodyOperator(const SectorTable& tab) : tab_(&tab) {}

  static ManyBodyOperator zero(const SectorTable& tab) { return ManyBodyOperator(tab); }

  static ManyBodyOperator identity(const SectorTable& tab) {
    ManyBodyOperator op(tab);
    for (size_t s = 0; s < tab.sectors.size(); ++s) {
      const long d = tab.sectors[s].dim();
      op.blocks_[{static_cast<int>(s), static_cast<int>(s)}] = Eigen::MatrixXcd::Identity(d, d);
    }
    return op;
  }

  // Diagonal operator from a per-basis-state function (global state -> value).
  template <typename Fn>
  static ManyBodyOperator diagonal(const SectorTable& tab, Fn&& value_of_state) {
    ManyBodyOperator op(tab);
    for (size_t s = 0; s < tab.sectors.size(); ++s) {
      const auto& idx = tab.sectors[s].basis_indices;
      Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(static_cast<long>(idx.size()), static_cast<long>(idx.size()));
      for (size_t k = 0; k < idx.size(); ++k) blk(static_cast<long>(k), static_cast<long>(k)) = value_of_state(idx[k]);
      op.blocks_[{static_cast<int>(s), static_cast<int>(s)}] = std::move(blk);
    }
    return op;
  }

  const SectorTable& table() const {
    if (!tab_) throw std::logic_error("ManyBodyOperator: no sector table");
    return *tab_;
  }
  long dim() const { return table().dim; }
  const BlockMap& blocks() const { return blocks_; }

  bool has_block(int row_sec, int col_sec) const { return blocks_.count({row_sec, col_sec}) > 0; }

  // Dense block (row_sec <- col_sec); zero matrix when the block is absent.
  Eigen::MatrixXcd block(int row_sec, int col_sec) const {
    auto it = blocks_.find({row_sec, col_sec});
    if (it != blocks_.end()) return it->second;
    return Eigen::MatrixXcd::Zero(table().sectors[static_cast<size_t>(row_sec)].dim(),
                                  table().sectors[static_cast<size_t>(col_sec)].dim());
  }

  Eigen::MatrixXcd& block_ref(int row_sec, int col_sec) {
    auto it = blocks_.find({row_sec, col_sec});
    if (it == blocks_.end()) {
      it = blocks_
               .emplace(BlockKey{row_sec, col_sec},
                        Eigen::MatrixXcd::Zero(table().sectors[static_cast<size_t>(row_sec)].dim(),
                                               table().sectors[static_cast<size_t>(col_sec)].dim()))
               .first;
    }
    return it->second;
  }

  ManyBodyOperator& operator+=(const ManyBodyOperator& other) {
    check_same_space(other);
    for (const auto& [key, blk] : other.blocks_) {
      auto it = blocks_.find(key);
      if (it == blocks_.end()) blocks_[key] = blk;
      else it->second += blk;
    }
    return *this;
  }

  ManyBodyOperator& operator-=(const ManyBodyOperator& other) {
    check_same_space(other);
    for (const auto& [key, blk] : other.blocks_) {
      auto it = blocks_.find(key);
      if (it == blocks_.end()) blocks_[key] = -blk;
      else it->second -= blk;
    }
    return *this;
  }

  ManyBodyOperator& operator*=(cplx scale) {
    for (auto& [key, blk] : blocks_) blk *= scale;
    return *this;
  }

  friend ManyBodyOperator operator+(ManyBodyOperator a, const ManyBodyOperator& b) { return a += b; }
  friend ManyBodyOperator operator-(ManyBodyOperator a, const ManyBodyOperator& b) { return a -= b; }
  friend ManyBodyOperator operator*(cplx s, ManyBodyOperator a) { return a *= s; }
  friend ManyBodyOperator operator*(ManyBodyOperator a, cplx s) { return a *= s; }

  friend ManyBodyOperator operator*(const ManyBodyOperator& a, const ManyBodyOperator& b) {
    a.check_same_space(b);
    ManyBodyOperator out(a.table());
    for (const auto& [ka, blka] : a.blocks_) {
      for (const auto& [kb, blkb] : b.blocks_) {
        if (ka.second != kb.first) continue;
        auto it = out.blocks_.find({ka.first, kb.second});
        if (it == out.blocks_.end()) out.blocks_[{ka.first, kb.second}] = blka * blkb;
        else it->second.noalias() += blka * blkb;
      }
    }
    return out;
  }

  double norm_max() const {
    double m = 0.0;
    for (const auto& [key, blk] : blocks_) m = std::max(m, blk.cwiseAbs().maxCoeff());
    return m;
  }

  Eigen::MatrixXcd to_dense() const {
    const auto& tab = table();
    Eigen::MatrixXcd full = Eigen::MatrixXcd::Zero(tab.dim, tab.dim);
    for (const auto& [key, blk] : blocks_) {
      const auto& rows = tab.sectors[static_cast<size_t>(key.first)].basis_indices;
      const auto& cols = tab.sectors[static_cast<size_t>(key.second)].basis_indices;
      for (long r = 0; r < blk.rows(); ++r)
        for (long ccol = 0; ccol < blk.cols(); ++ccol)
          full(rows[static_cast<size_t>(r)], cols[static_cast<size_t>(ccol)]) = blk(r, ccol);
    }
    return full;
  }

 private:
  void check_same_space(const ManyBodyOperator& other) const {
    if (tab_ != other.tab_ || !tab_)
      throw std::invalid_argument("ManyBodyOperator: operands live on different spaces");
  }

  const SectorTable* tab_ = nullptr;
  BlockMap blocks_;
};

inline ManyBodyOperator op_commutator(const ManyBodyOperator& a, const ManyBodyOperator& b) {
  return a * b - b * a;
}

// Elementary matrix E_{ij} acting on site n (all indices 1-based): maps the
// site color j to color i, identity elsewhere.  Shifts occupations by
// +e_i - e_j, so each column sector contributes at most one block.
inline ManyBodyOperator embed_elementary(int i, int j, int site, const SectorTable& tab) {
  if (i < 1 || i > tab.N || j < 1 || j > tab.N) throw std::out_of_range("embed_elementary: color index");
  if (site < 1 || site > tab.M) throw std::out_of_range("embed_elementary: site index");
  ManyBodyOperator op(tab);
  const long stride = pow_long(tab.N, tab.M - site);
  for (size_t cs = 0; cs < tab.sectors.size(); ++cs) {
    const auto& sec = tab.sectors[cs];
    if (sec.occupations[static_cast<size_t>(j - 1)] == 0) continue;
    std::vector<int> occ = sec.occupations;
    --occ[static_cast<size_t>(j - 1)];
    ++occ[static_cast<size_t>(i - 1)];
    const int rs = tab.find_sector(occ);
    if (rs < 0) continue;
    Eigen::MatrixXcd& blk = op.block_ref(rs, static_cast<int>(cs));
    for (size_t k = 0; k < sec.basis_indices.size(); ++k) {
      const long s = sec.basis_indices[k];
      if (color_at(s, site, tab.N, tab.M) != j - 1) continue;
      const long s_out = s + static_cast<long>(i - j) * stride;
      blk(tab.offset_of[static_cast<size_t>(s_out)], static_cast<long>(k)) = 1.0;
    }
  }
  return op;
}

// left^T * block(bra_sec, ket_sec) * right, bilinear (no conjugation).
inline cplx bilinear_element(const Eigen::VectorXcd& left, const ManyBodyOperator& op,
                             int bra_sec, int ket_sec, const Eigen::VectorXcd& right) {
  if (!op.has_block(bra_sec, ket_sec)) return {0.0, 0.0};
  const Eigen::MatrixXcd& blk = op.blocks().at({bra_sec, ket_sec});
  if (left.size() != blk.rows() || right.size() != blk.cols())
    throw std::invalid_argument("bilinear_element: vector/block dimension mismatch");
  return (left.transpose() * blk * right)(0, 0);
}

}  // namespace betheform
