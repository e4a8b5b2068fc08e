#include "divseq/lattice.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "divseq/error.hpp"

namespace divseq {

namespace {

// log2(10) * kMaxEntryDigits, rounded up.
constexpr std::size_t kMaxEntryBits = 3321929;

void guard(const BigInt& v) {
  if (mpz_sizeinbase(v.get_mpz_t(), 2) > kMaxEntryBits) {
    throw Error(ErrorKind::SizeGuard, "lattice entry exceeds " + std::to_string(kMaxEntryDigits) +
                                          " decimal digits");
  }
}

}  // namespace

SparseVector SparseVector::from_dense(const std::vector<BigInt>& dense) {
  SparseVector v;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0) v.entries_.emplace_back(i, dense[i]);
  }
  return v;
}

SparseVector SparseVector::from_dense(std::initializer_list<long> dense) {
  std::vector<BigInt> values;
  for (long x : dense) values.emplace_back(x);
  return from_dense(values);
}

SparseVector SparseVector::from_entries(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  SparseVector v;
  for (auto& [col, val] : entries) {
    if (!v.entries_.empty() && v.entries_.back().first == col) {
      v.entries_.back().second += val;
      if (v.entries_.back().second == 0) v.entries_.pop_back();
    } else if (val != 0) {
      v.entries_.emplace_back(col, std::move(val));
    }
  }
  return v;
}

std::vector<BigInt> SparseVector::to_dense(std::size_t width) const {
  std::vector<BigInt> dense(std::max(width, extent()));
  for (const auto& [col, val] : entries_) dense[col] = val;
  return dense;
}

BigInt SparseVector::at(std::size_t column) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), column,
                                   [](const Entry& e, std::size_t c) { return e.first < c; });
  if (it == entries_.end() || it->first != column) return 0;
  return it->second;
}

std::optional<std::size_t> SparseVector::leading_column() const {
  if (entries_.empty()) return std::nullopt;
  return entries_.front().first;
}

std::size_t SparseVector::extent() const {
  return entries_.empty() ? 0 : entries_.back().first + 1;
}

void SparseVector::add_scaled(const BigInt& factor, const SparseVector& other) {
  if (factor == 0 || other.empty()) return;
  std::vector<Entry> merged;
  merged.reserve(entries_.size() + other.entries_.size());
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() || b != other.entries_.end()) {
    if (b == other.entries_.end() || (a != entries_.end() && a->first < b->first)) {
      merged.push_back(std::move(*a));
      ++a;
    } else if (a == entries_.end() || b->first < a->first) {
      BigInt v = factor * b->second;
      guard(v);
      merged.emplace_back(b->first, std::move(v));
      ++b;
    } else {
      BigInt v = a->second + factor * b->second;
      if (v != 0) {
        guard(v);
        merged.emplace_back(a->first, std::move(v));
      }
      ++a;
      ++b;
    }
  }
  entries_ = std::move(merged);
}

void SparseVector::negate() {
  for (auto& e : entries_) e.second = -e.second;
}

std::optional<std::size_t> HNFBasis::row_with_pivot(std::size_t column) const {
  const auto it = std::lower_bound(pivots_.begin(), pivots_.end(), column);
  if (it == pivots_.end() || *it != column) return std::nullopt;
  return static_cast<std::size_t>(it - pivots_.begin());
}

std::size_t HNFBasis::add_node(std::vector<std::pair<std::size_t, BigInt>> terms) {
  trail_.push_back(TrailNode{std::move(terms)});
  return trail_.size() - 1;
}

SparseVector HNFBasis::expand(const SparseVector& hnf_coefficients) const {
  // Trail nodes only reference smaller ids, so pushing coefficients down in
  // decreasing id order visits every node after all of its parents.
  std::map<std::size_t, BigInt, std::greater<>> pending;
  for (const auto& [row, coeff] : hnf_coefficients.entries()) {
    if (row >= row_nodes_.size()) {
      throw Error(ErrorKind::BasisMismatch, "HNF row index out of range");
    }
    pending[row_nodes_[row]] += coeff;
  }
  std::vector<SparseVector::Entry> leaves;
  while (!pending.empty()) {
    auto it = pending.begin();
    const std::size_t node = it->first;
    const BigInt coeff = std::move(it->second);
    pending.erase(it);
    if (coeff == 0) continue;
    if (node < original_.size()) {
      leaves.emplace_back(node, coeff);
      continue;
    }
    for (const auto& [child, mult] : trail_[node].terms) pending[child] += coeff * mult;
  }
  return SparseVector::from_entries(std::move(leaves));
}

SparseVector HNFBasis::transform_of(std::size_t i) const {
  return expand(SparseVector::from_entries({{i, BigInt(1)}}));
}

HNFBasis hnf(std::vector<SparseVector> rows, std::size_t columns) {
  HNFBasis out;
  out.columns_ = columns;
  for (const auto& r : rows) {
    if (r.extent() > columns) {
      throw Error(ErrorKind::BasisMismatch, "relation row wider than the ambient rank");
    }
  }
  out.original_ = std::move(rows);
  out.trail_.resize(out.original_.size());

  std::vector<long> slot_of_column(columns, -1);
  std::vector<SparseVector> work;
  std::vector<std::size_t> work_nodes;

  for (std::size_t r = 0; r < out.original_.size(); ++r) {
    SparseVector cur = out.original_[r];
    std::size_t node = r;
    while (!cur.empty()) {
      const std::size_t col = *cur.leading_column();
      const long slot = slot_of_column[col];
      if (slot < 0) {
        slot_of_column[col] = static_cast<long>(work.size());
        work.push_back(std::move(cur));
        work_nodes.push_back(node);
        break;
      }
      SparseVector& piv = work[static_cast<std::size_t>(slot)];
      const BigInt a = piv.entries().front().second;
      const BigInt b = cur.entries().front().second;
      if (mpz_divisible_p(b.get_mpz_t(), a.get_mpz_t())) {
        const BigInt q = b / a;
        cur.add_scaled(-q, piv);
        node = out.add_node({{node, BigInt(1)}, {work_nodes[slot], -q}});
        continue;
      }
      BigInt g, x, y;
      mpz_gcdext(g.get_mpz_t(), x.get_mpz_t(), y.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
      // [x y; -b/g a/g] is unimodular and sends (a, b) to (g, 0).
      const BigInt bg = b / g;
      const BigInt ag = a / g;
      SparseVector new_piv = piv;
      new_piv.add_scaled(x - 1, piv);
      new_piv.add_scaled(y, cur);
      SparseVector rest = cur;
      rest.add_scaled(ag - 1, cur);
      rest.add_scaled(-bg, piv);
      const std::size_t piv_node = work_nodes[slot];
      work_nodes[slot] = out.add_node({{piv_node, x}, {node, y}});
      node = out.add_node({{piv_node, -bg}, {node, ag}});
      piv = std::move(new_piv);
      cur = std::move(rest);
    }
  }

  for (std::size_t s = 0; s < work.size(); ++s) {
    if (work[s].entries().front().second < 0) {
      work[s].negate();
      work_nodes[s] = out.add_node({{work_nodes[s], BigInt(-1)}});
    }
  }

  std::vector<std::size_t> order;
  for (std::size_t c = 0; c < columns; ++c) {
    if (slot_of_column[c] >= 0) order.push_back(static_cast<std::size_t>(slot_of_column[c]));
  }
  for (std::size_t s : order) {
    out.rows_.push_back(std::move(work[s]));
    out.row_nodes_.push_back(work_nodes[s]);
    out.pivots_.push_back(*out.rows_.back().leading_column());
  }
  std::vector<long> row_of_column(columns, -1);
  for (std::size_t i = 0; i < out.pivots_.size(); ++i) {
    row_of_column[out.pivots_[i]] = static_cast<long>(i);
  }

  // Reduce entries above pivots, bottom row first so that the rows used for
  // reduction are already reduced.
  for (std::size_t k = out.rows_.size(); k-- > 0;) {
    std::size_t done_col = out.pivots_[k];
    for (;;) {
      const auto& entries = out.rows_[k].entries();
      auto it = std::upper_bound(
          entries.begin(), entries.end(), done_col,
          [](std::size_t c, const SparseVector::Entry& e) { return c < e.first; });
      while (it != entries.end() && row_of_column[it->first] < 0) ++it;
      if (it == entries.end()) break;
      const std::size_t col = it->first;
      const auto i = static_cast<std::size_t>(row_of_column[col]);
      const BigInt& d = out.rows_[i].entries().front().second;
      BigInt q;
      mpz_fdiv_q(q.get_mpz_t(), it->second.get_mpz_t(), d.get_mpz_t());
      if (q != 0) {
        out.rows_[k].add_scaled(-q, out.rows_[i]);
        out.row_nodes_[k] = out.add_node({{out.row_nodes_[k], BigInt(1)}, {out.row_nodes_[i], -q}});
      }
      done_col = col;
    }
  }
  return out;
}

std::optional<MembershipCertificate> membership(const SparseVector& v, const HNFBasis& basis) {
  if (v.extent() > basis.columns()) {
    throw Error(ErrorKind::BasisMismatch, "query vector wider than the lattice ambient rank");
  }
  SparseVector rest = v;
  std::vector<SparseVector::Entry> used;
  while (!rest.empty()) {
    const auto& [col, val] = rest.entries().front();
    const auto row = basis.row_with_pivot(col);
    if (!row) return std::nullopt;
    const SparseVector& r = basis.rows()[*row];
    const BigInt& d = r.entries().front().second;
    if (!mpz_divisible_p(val.get_mpz_t(), d.get_mpz_t())) return std::nullopt;
    const BigInt q = val / d;
    used.emplace_back(*row, q);
    rest.add_scaled(-q, r);
  }
  MembershipCertificate cert;
  cert.coefficients = basis.expand(SparseVector::from_entries(std::move(used)));
  cert.target = v;
  return cert;
}

bool replay(const MembershipCertificate& certificate, const std::vector<SparseVector>& rows) {
  SparseVector acc;
  for (const auto& [row, coeff] : certificate.coefficients.entries()) {
    if (row >= rows.size()) return false;
    acc.add_scaled(coeff, rows[row]);
  }
  return acc == certificate.target;
}

std::vector<BigInt> QuotientReport::torsion() const {
  std::vector<BigInt> out;
  for (const auto& d : invariant_factors) {
    if (d > 1) out.push_back(d);
  }
  return out;
}

std::vector<BigInt> smith_diagonal(std::vector<std::vector<BigInt>> a) {
  const std::size_t m = a.size();
  const std::size_t n = m == 0 ? 0 : a[0].size();
  std::vector<BigInt> diag;
  auto swap_cols = [&](std::size_t i, std::size_t j) {
    if (i == j) return;
    for (auto& row : a) std::swap(row[i], row[j]);
  };
  for (std::size_t t = 0; t < std::min(m, n); ++t) {
    // Smallest nonzero entry of the trailing block becomes the pivot.
    std::optional<std::pair<std::size_t, std::size_t>> best;
    for (std::size_t i = t; i < m; ++i) {
      for (std::size_t j = t; j < n; ++j) {
        if (a[i][j] != 0 && (!best || abs(a[i][j]) < abs(a[best->first][best->second]))) {
          best = {i, j};
        }
      }
    }
    if (!best) break;
    std::swap(a[t], a[best->first]);
    swap_cols(t, best->second);
    for (;;) {
      for (std::size_t i = t + 1; i < m; ++i) {
        if (a[i][t] == 0) continue;
        const BigInt q = a[i][t] / a[t][t];
        for (std::size_t j = t; j < n; ++j) {
          a[i][j] -= q * a[t][j];
          guard(a[i][j]);
        }
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (a[t][j] == 0) continue;
        const BigInt q = a[t][j] / a[t][t];
        for (std::size_t i = t; i < m; ++i) {
          a[i][j] -= q * a[i][t];
          guard(a[i][j]);
        }
      }
      std::optional<std::pair<std::size_t, std::size_t>> smaller;
      for (std::size_t i = t + 1; i < m; ++i) {
        if (a[i][t] != 0 && (!smaller || abs(a[i][t]) < abs(a[smaller->first][smaller->second]))) {
          smaller = {i, t};
        }
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        if (a[t][j] != 0 && (!smaller || abs(a[t][j]) < abs(a[smaller->first][smaller->second]))) {
          smaller = {t, j};
        }
      }
      if (smaller) {
        std::swap(a[t], a[smaller->first]);
        swap_cols(t, smaller->second);
        continue;
      }
      bool fixed = false;
      for (std::size_t i = t + 1; i < m && !fixed; ++i) {
        for (std::size_t j = t + 1; j < n; ++j) {
          if (!mpz_divisible_p(a[i][j].get_mpz_t(), a[t][t].get_mpz_t())) {
            for (std::size_t k = t; k < n; ++k) a[t][k] += a[i][k];
            fixed = true;
            break;
          }
        }
      }
      if (!fixed) break;
    }
    diag.push_back(abs(a[t][t]));
  }
  return diag;
}

QuotientReport snf_quotient(const HNFBasis& basis) {
  QuotientReport report;
  report.ambient_rank = basis.columns();
  // In a reduced HNF a unit pivot's column is zero outside its own row, so the
  // row and column drop out without changing the quotient.
  std::size_t units = 0;
  std::vector<const SparseVector*> rest;
  for (const auto& row : basis.rows()) {
    if (row.entries().front().second == 1) {
      ++units;
    } else {
      rest.push_back(&row);
    }
  }
  std::vector<std::size_t> cols;
  for (const auto* row : rest) {
    for (const auto& [c, v] : row->entries()) cols.push_back(c);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  std::vector<std::vector<BigInt>> dense(rest.size(), std::vector<BigInt>(cols.size()));
  for (std::size_t i = 0; i < rest.size(); ++i) {
    for (const auto& [c, v] : rest[i]->entries()) {
      const auto j = static_cast<std::size_t>(std::lower_bound(cols.begin(), cols.end(), c) - cols.begin());
      dense[i][j] = v;
    }
  }
  report.invariant_factors.assign(units, BigInt(1));
  for (auto& d : smith_diagonal(std::move(dense))) report.invariant_factors.push_back(std::move(d));
  std::sort(report.invariant_factors.begin(), report.invariant_factors.end());
  report.free_rank = basis.columns() - basis.rank();
  if (report.free_rank == 0) {
    BigInt order = 1;
    for (const auto& d : report.invariant_factors) order *= d;
    report.order = order;
  }
  return report;
}

QuotientReport snf_quotient(const std::vector<SparseVector>& rows, std::size_t ambient_rank) {
  return snf_quotient(hnf(rows, ambient_rank));
}

}  // namespace divseq
