#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "divseq/numth.hpp"

namespace divseq {

/// Sparse integer vector: (column, value) pairs sorted by column, no zeros.
class SparseVector {
 public:
  using Entry = std::pair<std::size_t, BigInt>;

  SparseVector() = default;
  static SparseVector from_dense(const std::vector<BigInt>& dense);
  static SparseVector from_dense(std::initializer_list<long> dense);
  /// Builds from unsorted entries; duplicates are summed and zeros dropped.
  static SparseVector from_entries(std::vector<Entry> entries);

  std::vector<BigInt> to_dense(std::size_t width) const;

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t nonzeros() const noexcept { return entries_.size(); }
  BigInt at(std::size_t column) const;
  std::optional<std::size_t> leading_column() const;
  /// One past the largest column in use (0 when empty).
  std::size_t extent() const;

  /// this += factor * other.
  void add_scaled(const BigInt& factor, const SparseVector& other);
  void negate();

  friend bool operator==(const SparseVector& a, const SparseVector& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
};

/// Integer coefficients over the original relation rows (row index -> coeff)
/// whose combination equals the target vector.
struct MembershipCertificate {
  SparseVector coefficients;
  SparseVector target;
};

/// Row-style Hermite normal form of an integer lattice together with a trail
/// expressing every reduced row as a combination of the input rows.
///
/// Rows are ordered by strictly increasing pivot column, pivots are positive,
/// and every entry above a pivot lies in [0, pivot).
class HNFBasis {
 public:
  std::size_t columns() const noexcept { return columns_; }
  const std::vector<SparseVector>& original_rows() const noexcept { return original_; }
  const std::vector<SparseVector>& rows() const noexcept { return rows_; }
  const std::vector<std::size_t>& pivot_columns() const noexcept { return pivots_; }
  std::size_t rank() const noexcept { return rows_.size(); }
  std::optional<std::size_t> row_with_pivot(std::size_t column) const;

  /// Expands a combination of HNF rows into a combination of original rows.
  SparseVector expand(const SparseVector& hnf_coefficients) const;
  /// Original-row coefficients of HNF row i.
  SparseVector transform_of(std::size_t i) const;

 private:
  friend HNFBasis hnf(std::vector<SparseVector> rows, std::size_t columns);

  struct TrailNode {
    std::vector<std::pair<std::size_t, BigInt>> terms;  // empty for input rows
  };

  std::size_t add_node(std::vector<std::pair<std::size_t, BigInt>> terms);

  std::size_t columns_ = 0;
  std::vector<SparseVector> original_;
  std::vector<SparseVector> rows_;
  std::vector<std::size_t> pivots_;
  std::vector<std::size_t> row_nodes_;
  std::vector<TrailNode> trail_;
};

/// Hermite normal form of the lattice spanned by `rows` in Z^columns.
/// Throws SizeGuard if an entry exceeds the configured digit bound and
/// BasisMismatch if a row uses a column >= columns.
HNFBasis hnf(std::vector<SparseVector> rows, std::size_t columns);

/// Returns a certificate iff v lies in the integer span of the basis.
std::optional<MembershipCertificate> membership(const SparseVector& v, const HNFBasis& basis);

/// True iff the certificate's combination of `rows` equals its target.
bool replay(const MembershipCertificate& certificate, const std::vector<SparseVector>& rows);

struct QuotientReport {
  std::size_t ambient_rank = 0;
  /// Nonzero Smith diagonal d1 | d2 | ... (unit factors included).
  std::vector<BigInt> invariant_factors;
  std::size_t free_rank = 0;
  /// Empty when the quotient is infinite.
  std::optional<BigInt> order;

  bool finite() const noexcept { return order.has_value(); }
  bool trivial() const noexcept { return order && *order == 1; }
  /// Invariant factors greater than one.
  std::vector<BigInt> torsion() const;
};

/// Structure of Z^ambient_rank / span(rows).
QuotientReport snf_quotient(const std::vector<SparseVector>& rows, std::size_t ambient_rank);
QuotientReport snf_quotient(const HNFBasis& basis);

/// Smith diagonal of a small dense matrix; exposed for tests.
std::vector<BigInt> smith_diagonal(std::vector<std::vector<BigInt>> matrix);

/// Entries with more decimal digits than this abort the computation.
inline constexpr std::size_t kMaxEntryDigits = 1000000;

}  // namespace divseq
