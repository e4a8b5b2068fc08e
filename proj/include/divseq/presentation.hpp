#pragma once

#include <optional>
#include <string>
#include <vector>

#include "divseq/dynamics.hpp"
#include "divseq/lattice.hpp"
#include "divseq/numth.hpp"

namespace divseq {

enum class BasisPolicy { Adaptive, Fixed };

struct HarvestConfig {
  /// One-step relations for every c in the domain with |c| <= seed_bound.
  BigInt seed_bound = 0;
  /// Additionally follow each seed's orbit for this many steps.
  std::uint64_t trajectory_depth = 0;
  Budget budget;
  BasisPolicy policy = BasisPolicy::Adaptive;
  /// Largest basis prime in Fixed mode.
  std::uint64_t prime_bound = 0;
};

struct RelationProvenance {
  enum class Kind { QIsOne, OrbitStep, SignSquared };
  Kind kind = Kind::QIsOne;
  /// The value c of an OrbitStep relation p*c + 1 ~ c.
  BigInt c;

  friend bool operator==(const RelationProvenance& a, const RelationProvenance& b) {
    return a.kind == b.kind && a.c == b.c;
  }
};

std::string_view to_string(RelationProvenance::Kind kind) noexcept;
RelationProvenance::Kind parse_relation_kind(std::string_view text);

/// The rational a relation asserts to be 1: q, (p*c+1)/c, or (-1)^2.
Rational relation_value(const RelationProvenance& relation, const SequenceParams& params);
/// True iff the relation is one the presentation actually contains.
bool relation_is_valid(const RelationProvenance& relation, const SequenceParams& params);

struct RelationMatrix {
  std::vector<ExponentVector> rows;
  std::vector<RelationProvenance> provenance;

  std::size_t size() const noexcept { return rows.size(); }
};

struct ExcludedRelation {
  RelationProvenance provenance;
  std::string reason;
};

/// Maps basis coordinates onto lattice columns: largest primes first, the sign
/// slot last. Eliminating large, rarely shared primes first keeps the
/// reduction sparse.
class ColumnMap {
 public:
  ColumnMap() = default;
  explicit ColumnMap(const PrimeBasis& basis);

  std::size_t width() const noexcept { return column_of_index_.size() + (sign_ ? 1 : 0); }
  SparseVector to_columns(const ExponentVector& v) const;
  std::optional<std::size_t> sign_column() const;
  std::size_t column_of(std::size_t basis_index) const { return column_of_index_.at(basis_index); }

 private:
  std::vector<std::size_t> column_of_index_;
  bool sign_ = false;
};

/// Truncated presentation: the harvested relation rows and their lattice.
class PresentationHandle {
 public:
  const SequenceParams& params() const noexcept { return params_; }
  const HarvestConfig& config() const noexcept { return config_; }
  const PrimeBasis& basis() const noexcept { return basis_; }
  const RelationMatrix& relations() const noexcept { return relations_; }
  const std::vector<ExcludedRelation>& excluded() const noexcept { return excluded_; }
  const ColumnMap& columns() const noexcept { return columns_; }
  const HNFBasis& lattice() const noexcept { return lattice_; }

  /// Recomputes row i from its provenance and compares exactly.
  bool replay_row(std::size_t i) const;

 private:
  friend PresentationHandle harvest(const SequenceParams&, const HarvestConfig&);

  SequenceParams params_;
  HarvestConfig config_;
  PrimeBasis basis_;
  RelationMatrix relations_;
  std::vector<ExcludedRelation> excluded_;
  ColumnMap columns_;
  HNFBasis lattice_;
};

PresentationHandle harvest(const SequenceParams& params, const HarvestConfig& config);

struct KernelTerm {
  RelationProvenance relation;
  BigInt coefficient;
};

/// Witness that `element` is a product of harvested relations, hence trivial
/// in H_{p,q}.
struct KernelCertificate {
  SequenceParams params;
  BigInt element;
  std::vector<KernelTerm> terms;
};

/// Basis-free check: every term is a genuine relation and the product of
/// relation values raised to their coefficients equals the element.
bool replay(const KernelCertificate& certificate);

/// Coefficient-wise sum; certifies the product of the two elements.
KernelCertificate combine(const KernelCertificate& a, const KernelCertificate& b);

struct KernelAnswer {
  std::optional<KernelCertificate> certificate;
  std::optional<MembershipCertificate> lattice_certificate;
  /// Why the answer is unknown; empty for Yes.
  std::string diagnostic;

  bool yes() const noexcept { return certificate.has_value(); }
};

/// Yes is sound for the full presentation; Unknown only means "not derivable
/// from the harvested relations".
KernelAnswer kernel_member(const BigInt& x, const PresentationHandle& h);

struct PrimeFlag {
  BigInt prime;
  bool certified = false;
};

struct PresentationReport {
  QuotientReport quotient;
  std::vector<PrimeFlag> primes;  // ascending
  bool sign_certified = false;
  std::size_t relation_count = 0;
  std::size_t excluded_count = 0;
};

/// Structure of the truncated quotient on the discovered basis. The subgroup
/// of H_{p,q} generated by the basis primes is a quotient of it, so a trivial
/// truncated quotient certifies every basis prime as a kernel member.
PresentationReport quotient_report(const PresentationHandle& h,
                                   const std::optional<BigInt>& report_bound = std::nullopt);

enum class RowStatus { Certified, Hypothesis };
std::string_view to_string(RowStatus s) noexcept;

struct OverlineRow {
  enum class Kind { QIsOne, SignSquared, NotEquivalentToOne } kind = Kind::QIsOne;
  BigInt value;
  ExponentVector vector;
  RowStatus status = RowStatus::Certified;
  /// For NotEquivalentToOne rows: the cycle reached by `value` and the cycle
  /// of 1. Empty witness for hypothesis rows.
  std::string value_cycle;
  std::string one_cycle;
};

class OverlineHandle {
 public:
  const SequenceParams& params() const noexcept { return params_; }
  const PrimeBasis& basis() const noexcept { return basis_; }
  const std::vector<OverlineRow>& rows() const noexcept { return rows_; }
  const std::vector<ExcludedRelation>& excluded() const noexcept { return excluded_; }
  const QuotientReport& quotient() const noexcept { return quotient_; }
  const Cycle& one_cycle() const noexcept { return one_cycle_; }
  /// Witness cycles referenced by certified rows, keyed by id.
  const std::map<std::string, Cycle>& witness_cycles() const noexcept { return witnesses_; }
  std::size_t certified_rows() const;
  std::size_t hypothesis_rows() const;
  /// True iff any hypothesis row contributed (results are then conditional).
  bool conditional() const { return hypothesis_rows() > 0; }

 private:
  friend OverlineHandle build_overline(const SequenceParams&, const ClassPartition&,
                                       const HarvestConfig&, bool);

  SequenceParams params_;
  PrimeBasis basis_;
  std::vector<OverlineRow> rows_;
  std::vector<ExcludedRelation> excluded_;
  QuotientReport quotient_;
  Cycle one_cycle_;
  std::map<std::string, Cycle> witnesses_;
};

/// Rows vec(P) for every visited P certified not equivalent to 1, plus the
/// q and sign rows. Hypothesis rows (values whose component has no known
/// cycle) are added only when requested.
OverlineHandle build_overline(const SequenceParams& params, const ClassPartition& partition,
                              const HarvestConfig& config, bool allow_hypotheses = false);

}  // namespace divseq
