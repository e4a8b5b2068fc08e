#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "divseq/deduce.hpp"

namespace divseq::detail {

struct Candidate {
  Statement statement;
  std::string rule;
  std::vector<std::string> premises;
  std::optional<KernelCertificate> kernel;
};

/// Read-only snapshot the rules fire against.
class View {
 public:
  View(std::vector<const Fact*> facts, std::set<Triple> extra_universe = {});

  const std::set<Triple>& universe() const noexcept { return universe_; }
  /// Facts of one kind, ordered by statement text.
  const std::vector<const Fact*>& of_kind(StatementKind kind) const;
  const Fact* find(const Statement& s) const;

 private:
  std::set<Triple> universe_;
  std::map<std::string, const Fact*> by_text_;
  std::map<StatementKind, std::vector<const Fact*>> by_kind_;
};

void run_rule(const std::string& rule, const View& view, std::vector<Candidate>& out);

/// True iff `rule` fired on exactly these premises derives the fact.
bool rule_supports(const Fact& fact, const std::vector<const Fact*>& premises);

bool same_certificate(const KernelCertificate& a, const KernelCertificate& b);

}  // namespace divseq::detail
