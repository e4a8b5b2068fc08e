#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "divseq/dynamics.hpp"
#include "divseq/presentation.hpp"

namespace divseq {

/// (p, q, M): the parameters shared by H, overline-H, Ker and the sequence.
struct Triple {
  BigInt p;
  BigInt q;
  Domain domain = Domain::Positive;

  friend auto operator<=>(const Triple& a, const Triple& b) {
    if (auto c = cmp(a.p, b.p); c != 0) return c <=> 0;
    if (auto c = cmp(a.q, b.q); c != 0) return c <=> 0;
    return a.domain <=> b.domain;
  }
  friend bool operator==(const Triple& a, const Triple& b) {
    return a.p == b.p && a.q == b.q && a.domain == b.domain;
  }
};

/// Printed as H(p,q;dom), Hbar(p,q;dom)/<a,b>, Ker(p,q;dom) or C(p,q;dom).
struct GroupRef {
  enum class Variant { H, Overline, Kernel, Sequence };
  Variant variant = Variant::H;
  Triple params;
  /// Elements adjoined as relations x = 1; sorted, no duplicates.
  std::vector<BigInt> quotient_by;

  static GroupRef h(Triple t) { return {Variant::H, std::move(t), {}}; }
  static GroupRef overline(Triple t, std::vector<BigInt> by = {});
  static GroupRef kernel(Triple t) { return {Variant::Kernel, std::move(t), {}}; }
  static GroupRef sequence(Triple t) { return {Variant::Sequence, std::move(t), {}}; }

  /// Throws InvalidArgument unless p, q lie in the domain and |q| >= 2.
  void validate() const;
  std::string text() const;

  friend bool operator==(const GroupRef& a, const GroupRef& b) {
    return a.variant == b.variant && a.params == b.params && a.quotient_by == b.quotient_by;
  }
};

enum class StatementKind {
  KernelMember,
  QuotientOf,
  Isomorphic,
  Trivial,
  NonTrivial,
  OrderAtMost,
  OrderAtLeast,
  Finite,
  KernelEquals,
  KernelContains,
  KernelIsAllOfF,
  SingleClass,
  ClassLowerBound,
  NotEquivToOneImpliesDivides,
  EquivalentToOne,
};

std::string_view to_string(StatementKind kind) noexcept;

/// One statement. `a` is always set; `b` only for the binary kinds; `n` holds
/// the element, bound or divisor where the kind has one.
struct Statement {
  StatementKind kind = StatementKind::Trivial;
  GroupRef a;
  GroupRef b;
  BigInt n;

  /// Canonical text; also the identity of the statement.
  std::string text() const;
  /// Checks variants and arity; symmetric kinds must be normalized.
  void validate() const;
  /// Orders the operands of symmetric kinds.
  Statement normalized() const;
  /// Parameter triples of every group mentioned.
  std::vector<Triple> triples() const;

  friend bool operator==(const Statement& x, const Statement& y) { return x.text() == y.text(); }
};

Statement parse_statement(std::string_view text);
GroupRef parse_group(std::string_view text);

enum class FactStatus { Hypothesis = 0, Conditional = 1, Certified = 2 };
std::string_view to_string(FactStatus s) noexcept;
FactStatus parse_status(std::string_view text);

/// How a fact was obtained. Leaves use rule "lattice" (kernel certificate),
/// "cycles" (distinct verified cycles), "orbit" (a path to 1) or
/// "hypothesis"; derived facts use R1..R14 and cite their premises.
struct FactCertificate {
  std::string rule;
  std::vector<std::string> premises;
  std::optional<KernelCertificate> kernel;
  std::vector<Cycle> cycles;
  std::vector<BigInt> path;
};

struct Fact {
  std::string id;
  Statement statement;
  FactStatus status = FactStatus::Hypothesis;
  FactCertificate certificate;
};

/// Content-derived id of a statement.
std::string fact_id(const Statement& s);

// Leaf constructors.
Fact hypothesis(Statement s);
Fact kernel_fact(const KernelCertificate& certificate);
/// ClassLowerBound(C, n) from n distinct cycles.
Fact class_bound_fact(const SequenceParams& params, const std::vector<Cycle>& cycles);
/// EquivalentToOne(x, C) from an orbit path x -> ... -> 1.
Fact equivalent_to_one_fact(const SequenceParams& params, const std::vector<BigInt>& path);

class FactStore {
 public:
  const Fact* find(const std::string& id) const;
  const Fact* find(const Statement& s) const { return find(fact_id(s)); }
  /// Facts in insertion order.
  std::vector<const Fact*> facts() const;
  const std::vector<std::string>& log() const noexcept { return log_; }
  std::size_t size() const noexcept { return facts_.size(); }

  /// Verifies the certificate against the store, then inserts. A duplicate
  /// statement keeps its id and takes the new certificate only if the status
  /// is stronger. Throws InvalidCertificate.
  std::string assert_fact(Fact fact, std::string provenance = {});

  /// Where an externally supplied fact came from, keyed by id.
  const std::map<std::string, std::string>& provenance() const noexcept { return provenance_; }

  /// Replays the derivation tree of `id` down to its leaves.
  bool verify(const std::string& id) const;

 private:
  friend class RuleEngine;
  friend FactStore import_store(const std::string&);

  /// Inserts or strengthens without verification; true if the store changed.
  bool commit(Fact fact);

  std::map<std::string, Fact> facts_;
  std::vector<std::string> log_;
  std::map<std::string, std::string> provenance_;
};

/// Checks one fact's own certificate given its premises in `store` (which
/// must exist). Does not recurse.
bool check_certificate(const Fact& fact, const FactStore& store);

struct ApplyOptions {
  std::size_t max_rounds = 64;
  /// Empty: all rules, snapshot rounds. Otherwise the rules are applied one
  /// at a time in this order, each committing immediately.
  std::vector<std::string> rule_order;
};

/// All rule ids, R1..R14.
const std::vector<std::string>& rule_ids();

/// Runs the rules to a fixpoint (or max_rounds). Returns the ids of facts
/// that were added or strengthened, in commit order.
std::vector<std::string> apply_rules(FactStore& store, const ApplyOptions& options = {});

/// R1 on request: QuotientOf(H(p,q), H(p,q^n)) for n >= 2.
std::string request_power(FactStore& store, const Triple& params, unsigned n);

/// Pattern syntax mirrors statement text with '?' wildcards; a group with no
/// domain matches either domain; "#id" selects one fact; "?" matches all.
std::vector<const Fact*> query(const FactStore& store, std::string_view pattern);

inline constexpr std::string_view kFactSchema = "divseq-facts/1";

std::string export_store(const FactStore& store);
/// Throws SchemaVersionMismatch, ParseError, CorruptCertificate.
FactStore import_store(const std::string& document);

}  // namespace divseq
