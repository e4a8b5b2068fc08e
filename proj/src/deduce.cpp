#include "divseq/deduce.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <functional>
#include <set>

#include "deduce_internal.hpp"
#include "divseq/error.hpp"

namespace divseq {

namespace {

enum class Shape { G, GG, XG, GN };

struct KindInfo {
  StatementKind kind;
  std::string_view name;
  Shape shape;
};

constexpr std::array<KindInfo, 15> kKinds{{
    {StatementKind::KernelMember, "KernelMember", Shape::XG},
    {StatementKind::QuotientOf, "QuotientOf", Shape::GG},
    {StatementKind::Isomorphic, "Isomorphic", Shape::GG},
    {StatementKind::Trivial, "Trivial", Shape::G},
    {StatementKind::NonTrivial, "NonTrivial", Shape::G},
    {StatementKind::OrderAtMost, "OrderAtMost", Shape::GN},
    {StatementKind::OrderAtLeast, "OrderAtLeast", Shape::GN},
    {StatementKind::Finite, "Finite", Shape::G},
    {StatementKind::KernelEquals, "KernelEquals", Shape::GG},
    {StatementKind::KernelContains, "KernelContains", Shape::GG},
    {StatementKind::KernelIsAllOfF, "KernelIsAllOfF", Shape::G},
    {StatementKind::SingleClass, "SingleClass", Shape::G},
    {StatementKind::ClassLowerBound, "ClassLowerBound", Shape::GN},
    {StatementKind::NotEquivToOneImpliesDivides, "NotEquivToOneImpliesDivides", Shape::GN},
    {StatementKind::EquivalentToOne, "EquivalentToOne", Shape::XG},
}};

const KindInfo& info(StatementKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  throw Error(ErrorKind::Internal, "unknown statement kind");
}

bool symmetric(StatementKind kind) {
  return kind == StatementKind::Isomorphic || kind == StatementKind::KernelEquals;
}

std::string_view variant_name(GroupRef::Variant v) {
  switch (v) {
    case GroupRef::Variant::H: return "H";
    case GroupRef::Variant::Overline: return "Hbar";
    case GroupRef::Variant::Kernel: return "Ker";
    case GroupRef::Variant::Sequence: return "C";
  }
  return "?";
}

[[noreturn]] void parse_fail(std::string_view text, std::size_t at, const std::string& why) {
  throw Error(ErrorKind::ParseError,
              why + " at offset " + std::to_string(at) + " in '" + std::string(text) + "'");
}

// Generic syntax tree shared by statements and query patterns.
struct Term {
  enum class Type { Wild, Int, Call } type = Type::Wild;
  BigInt value;
  std::string name;
  std::vector<Term> args;
  std::optional<std::string> domain;  // "?" is a wildcard
  bool has_quotient = false;
  std::vector<Term> quotient;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Term parse() {
    Term t = term();
    ws();
    if (i_ != s_.size()) parse_fail(s_, i_, "trailing input");
    return t;
  }

 private:
  void ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    ws();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) parse_fail(s_, i_, std::string("expected '") + c + "'");
  }
  std::string ident() {
    ws();
    const std::size_t start = i_;
    while (i_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (start == i_) parse_fail(s_, i_, "expected a name");
    return std::string(s_.substr(start, i_ - start));
  }

  Term term() {
    ws();
    if (i_ >= s_.size()) parse_fail(s_, i_, "unexpected end");
    Term t;
    const char c = s_[i_];
    if (c == '?') {
      ++i_;
      return t;
    }
    if (c == '-' || c == '+' || std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = i_++;
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
      t.type = Term::Type::Int;
      t.value = parse_bigint(std::string(s_.substr(start, i_ - start)));
      return t;
    }
    t.type = Term::Type::Call;
    t.name = ident();
    expect('(');
    if (!eat(')')) {
      for (;;) {
        t.args.push_back(term());
        if (eat(',')) continue;
        if (eat(';')) {
          ws();
          if (eat('?')) {
            t.domain = "?";
          } else {
            t.domain = ident();
          }
        }
        expect(')');
        break;
      }
    }
    if (eat('/')) {
      t.has_quotient = true;
      expect('<');
      if (!eat('>')) {
        for (;;) {
          t.quotient.push_back(term());
          if (eat(',')) continue;
          expect('>');
          break;
        }
      }
    }
    return t;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

const BigInt& int_of(const Term& t, std::string_view text) {
  if (t.type != Term::Type::Int) parse_fail(text, 0, "expected an integer");
  return t.value;
}

GroupRef group_of(const Term& t, std::string_view text) {
  if (t.type != Term::Type::Call) parse_fail(text, 0, "expected a group");
  GroupRef g;
  if (t.name == "H") {
    g.variant = GroupRef::Variant::H;
  } else if (t.name == "Hbar") {
    g.variant = GroupRef::Variant::Overline;
  } else if (t.name == "Ker") {
    g.variant = GroupRef::Variant::Kernel;
  } else if (t.name == "C") {
    g.variant = GroupRef::Variant::Sequence;
  } else {
    parse_fail(text, 0, "unknown group '" + t.name + "'");
  }
  if (t.args.size() != 2) parse_fail(text, 0, "a group takes p and q");
  g.params.p = int_of(t.args[0], text);
  g.params.q = int_of(t.args[1], text);
  g.params.domain = t.domain ? parse_domain(*t.domain) : Domain::Positive;
  for (const auto& x : t.quotient) g.quotient_by.push_back(int_of(x, text));
  std::sort(g.quotient_by.begin(), g.quotient_by.end());
  g.quotient_by.erase(std::unique(g.quotient_by.begin(), g.quotient_by.end()), g.quotient_by.end());
  return g;
}

Statement statement_of(const Term& t, std::string_view text) {
  if (t.type != Term::Type::Call || t.has_quotient || t.domain) parse_fail(text, 0, "expected a statement");
  const KindInfo* k = nullptr;
  for (const auto& candidate : kKinds) {
    if (candidate.name == t.name) k = &candidate;
  }
  if (k == nullptr) parse_fail(text, 0, "unknown statement '" + t.name + "'");
  const std::size_t arity = k->shape == Shape::G ? 1 : 2;
  if (t.args.size() != arity) parse_fail(text, 0, "wrong number of arguments for " + t.name);
  Statement s;
  s.kind = k->kind;
  switch (k->shape) {
    case Shape::G: s.a = group_of(t.args[0], text); break;
    case Shape::GG:
      s.a = group_of(t.args[0], text);
      s.b = group_of(t.args[1], text);
      break;
    case Shape::XG:
      s.n = int_of(t.args[0], text);
      s.a = group_of(t.args[1], text);
      break;
    case Shape::GN:
      s.a = group_of(t.args[0], text);
      s.n = int_of(t.args[1], text);
      break;
  }
  return s;
}

bool match(const Term& pattern, const Term& value) {
  switch (pattern.type) {
    case Term::Type::Wild: return true;
    case Term::Type::Int: return value.type == Term::Type::Int && value.value == pattern.value;
    case Term::Type::Call: break;
  }
  if (value.type != Term::Type::Call || value.name != pattern.name) return false;
  if (value.args.size() != pattern.args.size()) return false;
  for (std::size_t i = 0; i < pattern.args.size(); ++i) {
    if (!match(pattern.args[i], value.args[i])) return false;
  }
  if (pattern.domain && *pattern.domain != "?" && value.domain &&
      parse_domain(*pattern.domain) != parse_domain(*value.domain)) {
    return false;
  }
  if (pattern.has_quotient != value.has_quotient) return false;
  if (pattern.quotient.size() != value.quotient.size()) return false;
  for (std::size_t i = 0; i < pattern.quotient.size(); ++i) {
    if (!match(pattern.quotient[i], value.quotient[i])) return false;
  }
  return true;
}

SequenceParams sequence_params(const Triple& t) {
  SequenceParams s{t.p, t.q, t.domain, true};
  return s;
}

Triple triple_of(const SequenceParams& s) { return Triple{s.p, s.q, s.domain}; }

bool leaf_ok(const Fact& f) {
  const FactCertificate& c = f.certificate;
  if (f.status != FactStatus::Certified || !c.premises.empty()) return false;
  const Triple& t = f.statement.a.params;
  if (c.rule == "lattice") {
    if (f.statement.kind != StatementKind::KernelMember || !c.kernel || !c.cycles.empty() || !c.path.empty()) {
      return false;
    }
    if (f.statement.a.variant != GroupRef::Variant::H || !f.statement.a.quotient_by.empty()) return false;
    const KernelCertificate& k = *c.kernel;
    return triple_of(k.params) == t && k.element == f.statement.n && replay(k);
  }
  if (c.rule == "cycles") {
    if (f.statement.kind != StatementKind::ClassLowerBound || c.kernel || !c.path.empty()) return false;
    const SequenceParams params = sequence_params(t);
    std::set<std::string> ids;
    for (const auto& cycle : c.cycles) {
      for (const auto& m : cycle.members) {
        if (!in_domain(m, t.domain)) return false;
      }
      if (!cycle.verify(params)) return false;
      ids.insert(cycle.id);
    }
    return ids.size() == c.cycles.size() && BigInt(static_cast<unsigned long>(ids.size())) == f.statement.n;
  }
  if (c.rule == "orbit") {
    if (f.statement.kind != StatementKind::EquivalentToOne || c.kernel || !c.cycles.empty()) return false;
    if (c.path.empty() || c.path.front() != f.statement.n || c.path.back() != 1) return false;
    const SequenceParams params = sequence_params(t);
    for (std::size_t i = 0; i + 1 < c.path.size(); ++i) {
      const auto next = try_step(c.path[i], params);
      if (!next || *next != c.path[i + 1]) return false;
    }
    return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(StatementKind kind) noexcept {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "Unknown";
}

std::string_view to_string(FactStatus s) noexcept {
  switch (s) {
    case FactStatus::Certified: return "Certified";
    case FactStatus::Conditional: return "Conditional";
    case FactStatus::Hypothesis: return "Hypothesis";
  }
  return "Unknown";
}

FactStatus parse_status(std::string_view text) {
  if (text == "Certified") return FactStatus::Certified;
  if (text == "Conditional") return FactStatus::Conditional;
  if (text == "Hypothesis") return FactStatus::Hypothesis;
  throw Error(ErrorKind::ParseError, "unknown fact status '" + std::string(text) + "'");
}

GroupRef GroupRef::overline(Triple t, std::vector<BigInt> by) {
  std::sort(by.begin(), by.end());
  by.erase(std::unique(by.begin(), by.end()), by.end());
  return {Variant::Overline, std::move(t), std::move(by)};
}

void GroupRef::validate() const {
  auto fail = [&](const std::string& why) { throw Error(ErrorKind::InvalidArgument, text() + ": " + why); };
  if (abs(params.q) < 2) fail("|q| must be at least 2");
  if (!in_domain(params.p, params.domain) || !in_domain(params.q, params.domain)) {
    fail("p and q must lie in the domain");
  }
  if (!quotient_by.empty() && variant != Variant::H && variant != Variant::Overline) {
    fail("only H and Hbar take quotients");
  }
  for (std::size_t i = 0; i < quotient_by.size(); ++i) {
    if (!in_domain(quotient_by[i], params.domain)) fail("quotient elements must lie in the domain");
    if (i > 0 && quotient_by[i - 1] >= quotient_by[i]) fail("quotient elements must be sorted and distinct");
  }
}

std::string GroupRef::text() const {
  std::string out(variant_name(variant));
  out += "(" + params.p.get_str() + "," + params.q.get_str() + ";" + std::string(to_string(params.domain)) + ")";
  if (!quotient_by.empty()) {
    out += "/<";
    for (std::size_t i = 0; i < quotient_by.size(); ++i) {
      if (i) out += ",";
      out += quotient_by[i].get_str();
    }
    out += ">";
  }
  return out;
}

std::string Statement::text() const {
  const KindInfo& k = info(kind);
  std::string out(k.name);
  out += "(";
  switch (k.shape) {
    case Shape::G: out += a.text(); break;
    case Shape::GG: out += a.text() + ", " + b.text(); break;
    case Shape::XG: out += n.get_str() + ", " + a.text(); break;
    case Shape::GN: out += a.text() + ", " + n.get_str(); break;
  }
  return out + ")";
}

Statement Statement::normalized() const {
  Statement s = *this;
  if (symmetric(kind) && b.text() < a.text()) std::swap(s.a, s.b);
  return s;
}

void Statement::validate() const {
  using V = GroupRef::Variant;
  auto fail = [&](const std::string& why) { throw Error(ErrorKind::InvalidArgument, text() + ": " + why); };
  const Shape shape = info(kind).shape;
  a.validate();
  if (shape == Shape::GG) b.validate();
  const bool a_group = a.variant != V::Sequence;
  switch (kind) {
    case StatementKind::KernelMember:
      if (a.variant != V::H || !a.quotient_by.empty()) fail("kernel membership is stated for H");
      if (!in_domain(n, a.params.domain)) fail("element must lie in the domain");
      break;
    case StatementKind::QuotientOf:
    case StatementKind::Isomorphic:
      if (!a_group || b.variant == V::Sequence) fail("expected groups");
      break;
    case StatementKind::KernelEquals:
    case StatementKind::KernelContains:
      if (a.variant != V::Kernel || b.variant != V::Kernel) fail("expected Ker groups");
      break;
    case StatementKind::Trivial:
    case StatementKind::NonTrivial:
    case StatementKind::Finite:
      if (!a_group) fail("expected a group");
      break;
    case StatementKind::OrderAtMost:
    case StatementKind::OrderAtLeast:
      if (!a_group) fail("expected a group");
      if (n < 1) fail("order bound must be positive");
      break;
    case StatementKind::KernelIsAllOfF:
      if (a.variant != V::H || !a.quotient_by.empty()) fail("expected H");
      break;
    case StatementKind::SingleClass:
      if (a.variant != V::Sequence) fail("expected a sequence C(p,q;dom)");
      break;
    case StatementKind::ClassLowerBound:
      if (a.variant != V::Sequence) fail("expected a sequence C(p,q;dom)");
      if (n < 0) fail("bound must be non-negative");
      break;
    case StatementKind::NotEquivToOneImpliesDivides:
    case StatementKind::EquivalentToOne:
      if (a.variant != V::Sequence) fail("expected a sequence C(p,q;dom)");
      if (!in_domain(n, a.params.domain)) fail("value must lie in the domain");
      break;
  }
  if (symmetric(kind) && b.text() < a.text()) fail("symmetric statement is not normalized");
}

std::vector<Triple> Statement::triples() const {
  std::vector<Triple> out{a.params};
  if (info(kind).shape == Shape::GG) out.push_back(b.params);
  return out;
}

Statement parse_statement(std::string_view text) {
  Statement s = statement_of(Parser(text).parse(), text).normalized();
  s.validate();
  return s;
}

GroupRef parse_group(std::string_view text) {
  GroupRef g = group_of(Parser(text).parse(), text);
  g.validate();
  return g;
}

std::string fact_id(const Statement& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s.text()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Fact hypothesis(Statement s) {
  Fact f;
  f.statement = s.normalized();
  f.statement.validate();
  f.id = fact_id(f.statement);
  f.status = FactStatus::Hypothesis;
  f.certificate.rule = "hypothesis";
  return f;
}

Fact kernel_fact(const KernelCertificate& certificate) {
  Fact f;
  f.statement.kind = StatementKind::KernelMember;
  f.statement.a = GroupRef::h(triple_of(certificate.params));
  f.statement.n = certificate.element;
  f.statement.validate();
  f.id = fact_id(f.statement);
  f.status = FactStatus::Certified;
  f.certificate.rule = "lattice";
  f.certificate.kernel = certificate;
  return f;
}

Fact class_bound_fact(const SequenceParams& params, const std::vector<Cycle>& cycles) {
  Fact f;
  f.statement.kind = StatementKind::ClassLowerBound;
  f.statement.a = GroupRef::sequence(triple_of(params));
  f.statement.n = static_cast<unsigned long>(cycles.size());
  f.statement.validate();
  f.id = fact_id(f.statement);
  f.status = FactStatus::Certified;
  f.certificate.rule = "cycles";
  f.certificate.cycles = cycles;
  return f;
}

Fact equivalent_to_one_fact(const SequenceParams& params, const std::vector<BigInt>& path) {
  if (path.empty()) throw Error(ErrorKind::InvalidArgument, "empty orbit path");
  Fact f;
  f.statement.kind = StatementKind::EquivalentToOne;
  f.statement.a = GroupRef::sequence(triple_of(params));
  f.statement.n = path.front();
  f.statement.validate();
  f.id = fact_id(f.statement);
  f.status = FactStatus::Certified;
  f.certificate.rule = "orbit";
  f.certificate.path = path;
  return f;
}

bool check_certificate(const Fact& fact, const FactStore& store) {
  try {
    fact.statement.validate();
  } catch (const Error&) {
    return false;
  }
  if (fact.id != fact_id(fact.statement)) return false;
  const FactCertificate& c = fact.certificate;
  if (c.rule == "hypothesis") {
    return fact.status == FactStatus::Hypothesis && c.premises.empty() && !c.kernel && c.cycles.empty() &&
           c.path.empty();
  }
  if (c.rule == "lattice" || c.rule == "cycles" || c.rule == "orbit") return leaf_ok(fact);
  const auto& ids = rule_ids();
  if (std::find(ids.begin(), ids.end(), c.rule) == ids.end()) return false;
  if (!c.cycles.empty() || !c.path.empty()) return false;
  std::vector<const Fact*> premises;
  bool all_certified = true;
  for (const auto& id : c.premises) {
    const Fact* p = store.find(id);
    if (p == nullptr || p->id == fact.id) return false;
    all_certified = all_certified && p->status == FactStatus::Certified;
    premises.push_back(p);
  }
  const FactStatus expected = all_certified ? FactStatus::Certified : FactStatus::Conditional;
  if (fact.status != expected) return false;
  return detail::rule_supports(fact, premises);
}

const Fact* FactStore::find(const std::string& id) const {
  const auto it = facts_.find(id);
  return it == facts_.end() ? nullptr : &it->second;
}

std::vector<const Fact*> FactStore::facts() const {
  std::vector<const Fact*> out;
  out.reserve(log_.size());
  for (const auto& id : log_) out.push_back(&facts_.at(id));
  return out;
}

bool FactStore::commit(Fact fact) {
  const auto it = facts_.find(fact.id);
  if (it == facts_.end()) {
    log_.push_back(fact.id);
    facts_.emplace(fact.id, std::move(fact));
    return true;
  }
  // Only a certification replaces an existing fact; this keeps every
  // derivation chain acyclic.
  if (fact.status == FactStatus::Certified && it->second.status != FactStatus::Certified) {
    it->second = std::move(fact);
    return true;
  }
  return false;
}

std::string FactStore::assert_fact(Fact fact, std::string provenance) {
  if (fact.id.empty()) fact.id = fact_id(fact.statement);
  if (!check_certificate(fact, *this)) {
    throw Error(ErrorKind::InvalidCertificate, "certificate does not check for " + fact.statement.text());
  }
  const std::string id = fact.id;
  if (commit(std::move(fact)) && !provenance.empty()) provenance_[id] = std::move(provenance);
  return id;
}

bool FactStore::verify(const std::string& root) const {
  // 1 = on the current path, 2 = verified.
  std::map<std::string, int> state;
  std::function<bool(const std::string&)> visit = [&](const std::string& id) {
    const auto it = state.find(id);
    if (it != state.end()) return it->second == 2;
    const Fact* f = find(id);
    if (f == nullptr) return false;
    state[id] = 1;
    for (const auto& p : f->certificate.premises) {
      if (!visit(p)) return false;
    }
    if (!check_certificate(*f, *this)) return false;
    state[id] = 2;
    return true;
  };
  return visit(root);
}

std::vector<const Fact*> query(const FactStore& store, std::string_view pattern) {
  std::string_view p = pattern;
  while (!p.empty() && std::isspace(static_cast<unsigned char>(p.front()))) p.remove_prefix(1);
  while (!p.empty() && std::isspace(static_cast<unsigned char>(p.back()))) p.remove_suffix(1);
  if (p.empty() || p == "?") return store.facts();
  if (p.front() == '#') {
    const Fact* f = store.find(std::string(p.substr(1)));
    return f ? std::vector<const Fact*>{f} : std::vector<const Fact*>{};
  }
  const Term pat = Parser(p).parse();
  std::vector<const Fact*> out;
  for (const Fact* f : store.facts()) {
    const std::string text = f->statement.text();
    if (match(pat, Parser(text).parse())) out.push_back(f);
  }
  return out;
}

}  // namespace divseq
