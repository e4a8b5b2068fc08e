#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "divseq/numth.hpp"

namespace divseq {

enum class Domain { Positive, Nonzero };

std::string_view to_string(Domain d) noexcept;
/// Accepts "pos" / "nonzero".
Domain parse_domain(std::string_view text);
bool in_domain(const BigInt& c, Domain d) noexcept;

struct SequenceParams {
  BigInt p;
  BigInt q;
  Domain domain = Domain::Positive;
  /// Admits any p, q in the domain other than the degenerate |q| <= 1.
  bool allow_unusual = false;

  /// Throws InvalidParams when the parameters are outside the accepted range.
  void validate() const;

  friend bool operator==(const SequenceParams& a, const SequenceParams& b) {
    return a.p == b.p && a.q == b.q && a.domain == b.domain;
  }
};

struct Budget {
  std::uint64_t max_steps = 100000;
  BigInt max_magnitude = default_max_magnitude();

  static BigInt default_max_magnitude();
  void validate() const;
};

/// One application of the map: c/q when |q| divides c, else p*c + 1.
/// Returns nullopt when the image leaves the domain.
std::optional<BigInt> try_step(const BigInt& c, const SequenceParams& params);
/// Throwing variant of try_step (DomainViolation).
BigInt step(const BigInt& c, const SequenceParams& params);

/// A periodic orbit rotated to start at its minimum member.
struct Cycle {
  std::vector<BigInt> members;
  std::string id;

  static Cycle from_members(std::vector<BigInt> members);
  /// True iff the members form a genuine cycle of the map.
  bool verify(const SequenceParams& params) const;
};

/// Stable 64-bit FNV-1a digest of the canonical member list, as hex.
std::string cycle_id(const std::vector<BigInt>& canonical_members);

enum class OrbitStatus { ReachedCycle, BudgetExceeded, MagnitudeExceeded, DomainViolation };
std::string_view to_string(OrbitStatus s) noexcept;

struct OrbitResult {
  BigInt seed;
  /// path[0] == seed; path[i+1] == step(path[i]). For ReachedCycle the last
  /// entry is the first repeated value.
  std::vector<BigInt> path;
  OrbitStatus status = OrbitStatus::BudgetExceeded;
  /// Steps taken (the index of the last path entry).
  std::uint64_t steps = 0;
  std::optional<Cycle> cycle;
  /// MagnitudeExceeded: the offending value. DomainViolation: the value that
  /// could not be stepped.
  BigInt offending_value;
};

OrbitResult orbit(const BigInt& seed, const SequenceParams& params, const Budget& budget);

struct SeedResolution {
  BigInt seed;
  OrbitStatus status = OrbitStatus::BudgetExceeded;
  std::string cycle_id;  // set iff status == ReachedCycle
  std::uint64_t steps = 0;

  bool resolved() const noexcept { return status == OrbitStatus::ReachedCycle; }
};

/// Seeds, cycles and the union-find of every value visited during a census.
class ClassPartition {
 public:
  ClassPartition() = default;
  ClassPartition(SequenceParams params, Budget budget) : params_(std::move(params)), budget_(std::move(budget)) {}

  const SequenceParams& params() const noexcept { return params_; }
  const Budget& budget() const noexcept { return budget_; }
  const BigInt& range_from() const noexcept { return from_; }
  const BigInt& range_to() const noexcept { return to_; }
  const std::vector<SeedResolution>& seeds() const noexcept { return seeds_; }
  /// Registered cycles keyed by id.
  const std::map<std::string, Cycle>& cycles() const noexcept { return cycles_; }
  std::vector<SeedResolution> unresolved() const;

  const std::vector<BigInt>& visited() const noexcept { return values_; }
  bool contains(const BigInt& v) const;
  /// Cycle id of the component containing v, if that component holds a
  /// registered cycle.
  std::optional<std::string> component_cycle(const BigInt& v) const;
  /// True iff a and b are both visited and lie in the same component.
  bool same_class(const BigInt& a, const BigInt& b) const;
  std::size_t component_count() const;

  /// Combines partitions over disjoint seed ranges with the same params and
  /// budget. The result does not depend on the order of `parts`.
  static ClassPartition merge(std::vector<ClassPartition> parts);

 private:
  friend ClassPartition census(const SequenceParams&, const BigInt&, const BigInt&, const Budget&);
  friend class CensusRunner;

  std::size_t node(const BigInt& v);
  std::size_t find(std::size_t x) const;
  void unite(std::size_t a, std::size_t b);
  void finalize();

  SequenceParams params_;
  Budget budget_;
  BigInt from_, to_;
  std::vector<SeedResolution> seeds_;
  std::map<std::string, Cycle> cycles_;
  std::vector<BigInt> values_;
  std::unordered_map<BigInt, std::size_t, BigIntHash> index_;
  mutable std::vector<std::size_t> parent_;
  std::vector<std::string> root_cycle_;  // per node after finalize; "" if none
};

/// Resolves every seed in [from, to] (0 skipped in the nonzero domain).
/// Resolutions agree exactly with standalone orbit() under the same budget.
ClassPartition census(const SequenceParams& params, const BigInt& from, const BigInt& to,
                      const Budget& budget);

/// Shards the range across `jobs` threads and merges deterministically.
ClassPartition census_parallel(const SequenceParams& params, const BigInt& from, const BigInt& to,
                               const Budget& budget, unsigned jobs);

struct ClassLowerBound {
  std::size_t bound = 0;
  std::vector<Cycle> witnesses;  // sorted by minimum member
};

/// Number of distinct resolved cycles; a lower bound on the number of
/// equivalence classes.
ClassLowerBound class_lower_bound(const ClassPartition& partition);

}  // namespace divseq
