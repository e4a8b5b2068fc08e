#include <algorithm>
#include <functional>

#include "deduce_internal.hpp"
#include "divseq/error.hpp"

namespace divseq {

namespace detail {

View::View(std::vector<const Fact*> facts, std::set<Triple> extra_universe)
    : universe_(std::move(extra_universe)) {
  for (const Fact* f : facts) {
    by_text_.emplace(f->statement.text(), f);
    by_kind_[f->statement.kind].push_back(f);
    for (auto& t : f->statement.triples()) universe_.insert(std::move(t));
  }
  for (auto& [kind, list] : by_kind_) {
    std::sort(list.begin(), list.end(),
              [](const Fact* a, const Fact* b) { return a->statement.text() < b->statement.text(); });
  }
}

const std::vector<const Fact*>& View::of_kind(StatementKind kind) const {
  static const std::vector<const Fact*> none;
  const auto it = by_kind_.find(kind);
  return it == by_kind_.end() ? none : it->second;
}

const Fact* View::find(const Statement& s) const {
  const auto it = by_text_.find(s.text());
  return it == by_text_.end() ? nullptr : it->second;
}

bool same_certificate(const KernelCertificate& a, const KernelCertificate& b) {
  if (!(a.params == b.params) || a.element != b.element || a.terms.size() != b.terms.size()) return false;
  for (std::size_t i = 0; i < a.terms.size(); ++i) {
    if (!(a.terms[i].relation == b.terms[i].relation) || a.terms[i].coefficient != b.terms[i].coefficient) {
      return false;
    }
  }
  return true;
}

namespace {

using K = StatementKind;

bool valid_triple(const Triple& t) {
  try {
    GroupRef::h(t).validate();
    return true;
  } catch (const Error&) {
    return false;
  }
}

Triple with_q(const Triple& t, BigInt q) { return Triple{t.p, std::move(q), t.domain}; }
Triple with_p(const Triple& t, BigInt p) { return Triple{std::move(p), t.q, t.domain}; }

Statement make(K kind, GroupRef a, GroupRef b = {}, BigInt n = 0) {
  Statement s;
  s.kind = kind;
  s.a = std::move(a);
  s.b = std::move(b);
  s.n = std::move(n);
  return s.normalized();
}

class Emitter {
 public:
  Emitter(std::string rule, std::vector<Candidate>& out) : rule_(std::move(rule)), out_(out) {}

  void operator()(const Statement& s, std::vector<const Fact*> premises = {},
                  std::optional<KernelCertificate> kernel = std::nullopt) const {
    try {
      s.validate();
    } catch (const Error&) {
      return;  // parameters outside every domain: the rule has no instance
    }
    Candidate c{s, rule_, {}, std::move(kernel)};
    for (const Fact* p : premises) c.premises.push_back(p->id);
    out_.push_back(std::move(c));
  }

 private:
  std::string rule_;
  std::vector<Candidate>& out_;
};

/// n >= 2 with q^n == Q.
std::optional<unsigned> power_exponent(const BigInt& q, const BigInt& Q) {
  if (abs(Q) <= abs(q)) return std::nullopt;
  BigInt v = q;
  for (unsigned n = 2;; ++n) {
    v *= q;
    if (v == Q) return n;
    if (abs(v) > abs(Q)) return std::nullopt;
  }
}

/// Universe pairs (t, T) with the same p and domain and T.q a power of t.q.
std::vector<std::pair<Triple, Triple>> power_pairs(const View& v) {
  std::vector<std::pair<Triple, Triple>> out;
  for (const auto& lo : v.universe()) {
    for (const auto& hi : v.universe()) {
      if (lo.p == hi.p && lo.domain == hi.domain && power_exponent(lo.q, hi.q)) out.emplace_back(lo, hi);
    }
  }
  return out;
}

bool is_plain_h(const GroupRef& g) { return g.variant == GroupRef::Variant::H && g.quotient_by.empty(); }

/// Instances of the shared premise q' in Ker(p,q) and Ker(p,q q').
struct AddingQ {
  const Fact* lo_member;
  const Fact* hi_member;
  Triple lo;
  Triple hi;
  BigInt x;
};

std::vector<AddingQ> adding_q(const View& v) {
  std::vector<AddingQ> out;
  for (const Fact* f : v.of_kind(K::KernelMember)) {
    const BigInt& x = f->statement.n;
    if (x == 1) continue;
    const Triple& lo = f->statement.a.params;
    const Triple hi = with_q(lo, lo.q * x);
    if (!valid_triple(hi)) continue;
    const Fact* g = v.find(make(K::KernelMember, GroupRef::h(hi), {}, x));
    if (g != nullptr) out.push_back({f, g, lo, hi, x});
  }
  return out;
}

void r1(const View& v, const Emitter& emit) {
  for (const auto& [lo, hi] : power_pairs(v)) emit(make(K::QuotientOf, GroupRef::h(lo), GroupRef::h(hi)));
}

void r2(const View& v, const Emitter& emit) {
  const auto pairs = power_pairs(v);
  for (const K kind : {K::Trivial, K::NonTrivial}) {
    for (const Fact* f : v.of_kind(kind)) {
      if (!is_plain_h(f->statement.a)) continue;
      for (const auto& [lo, hi] : pairs) {
        if (lo == f->statement.a.params) emit(make(kind, GroupRef::h(hi)), {f});
      }
    }
  }
}

void r3(const View& v, const Emitter& emit) {
  for (const Fact* f : v.of_kind(K::KernelMember)) {
    if (f->statement.n == 1) continue;
    const Triple& t = f->statement.a.params;
    emit(make(K::QuotientOf, GroupRef::h(t), GroupRef::h(with_p(t, t.p * f->statement.n))), {f});
  }
}

void r4(const View& v, const Emitter& emit) {
  for (const auto& m : adding_q(v)) {
    emit(make(K::QuotientOf, GroupRef::h(m.lo), GroupRef::h(m.hi)), {m.lo_member, m.hi_member});
    emit(make(K::QuotientOf, GroupRef::h(m.hi), GroupRef::h(m.lo)), {m.lo_member, m.hi_member});
  }
}

void r5(const View& v, const Emitter& emit) {
  for (const auto& m : adding_q(v)) {
    const GroupRef lo = GroupRef::h(m.lo), hi = GroupRef::h(m.hi);
    for (const K kind : {K::Finite, K::Trivial, K::OrderAtMost}) {
      for (const Fact* e : v.of_kind(kind)) {
        const GroupRef& g = e->statement.a;
        if (!(g == lo) && !(g == hi)) continue;
        emit(make(K::Isomorphic, lo, hi), {m.lo_member, m.hi_member, e});
        if (kind == K::Trivial) emit(make(K::Trivial, g == lo ? hi : lo), {m.lo_member, m.hi_member, e});
      }
    }
  }
}

void r6(const View& v, const Emitter& emit) {
  for (const auto& t : v.universe()) {
    const Triple pos{t.p, t.q, Domain::Positive}, nonzero{t.p, t.q, Domain::Nonzero};
    if (valid_triple(pos) && valid_triple(nonzero)) {
      emit(make(K::QuotientOf, GroupRef::h(pos), GroupRef::h(nonzero)));
    }
  }
}

void r7(const View& v, const Emitter& emit) {
  for (const auto& [lo, hi] : power_pairs(v)) {
    emit(make(K::KernelContains, GroupRef::kernel(hi), GroupRef::kernel(lo)));
  }
  for (const Fact* f : v.of_kind(K::KernelMember)) {
    if (f->statement.n == 1) continue;
    const Triple& t = f->statement.a.params;
    emit(make(K::KernelContains, GroupRef::kernel(t), GroupRef::kernel(with_p(t, t.p * f->statement.n))), {f});
  }
  for (const auto& m : adding_q(v)) {
    emit(make(K::KernelEquals, GroupRef::kernel(m.lo), GroupRef::kernel(m.hi)), {m.lo_member, m.hi_member});
  }
}

void r8(const View& v, const Emitter& emit) {
  for (const auto& t : v.universe()) emit(make(K::QuotientOf, GroupRef::overline(t), GroupRef::kernel(t)));
}

void r9(const View& v, const Emitter& emit) {
  auto divides = [](const BigInt& a, const BigInt& b) { return mpz_divisible_p(b.get_mpz_t(), a.get_mpz_t()) != 0; };
  for (const auto& lo : v.universe()) {
    for (const auto& hi : v.universe()) {
      if (lo.domain != hi.domain || lo == hi) continue;
      if (lo.q == hi.q && divides(lo.p, hi.p)) {
        const BigInt factor = hi.p / lo.p;
        if (factor != 1 && in_domain(factor, lo.domain)) {
          emit(make(K::QuotientOf, GroupRef::overline(lo, {factor}), GroupRef::overline(hi)));
        }
      }
      if (lo.p == hi.p && divides(lo.q, hi.q)) {
        const BigInt factor = hi.q / lo.q;
        if (factor != 1 && in_domain(factor, lo.domain)) {
          emit(make(K::QuotientOf, GroupRef::overline(lo, {factor}), GroupRef::overline(hi)));
        }
      }
    }
  }
}

void r10(const View& v, const Emitter& emit) {
  for (const auto& m : adding_q(v)) {
    emit(make(K::Isomorphic, GroupRef::overline(m.lo, {m.x}), GroupRef::overline(m.hi, {m.x})),
         {m.lo_member, m.hi_member});
  }
}

void r11(const View& v, const Emitter& emit) {
  for (const Fact* f : v.of_kind(K::OrderAtLeast)) {
    if (!is_plain_h(f->statement.a)) continue;
    emit(make(K::ClassLowerBound, GroupRef::sequence(f->statement.a.params), {}, f->statement.n), {f});
  }
}

void r12(const View& v, const Emitter& emit) {
  for (const Fact* f : v.of_kind(K::SingleClass)) {
    const Triple& t = f->statement.a.params;
    // A single class in the positive domain bounds the order over the nonzero rationals.
    if (t.domain == Domain::Positive) {
      emit(make(K::OrderAtMost, GroupRef::h(Triple{t.p, t.q, Domain::Nonzero}), {}, BigInt(3)), {f});
    }
    // q^n: every n-th root of the sequence's q.
    const BigInt mag = abs(t.q);
    const std::size_t bits = mpz_sizeinbase(mag.get_mpz_t(), 2);
    for (unsigned long n = 1; n <= bits; ++n) {
      BigInt r;
      if (mpz_root(r.get_mpz_t(), mag.get_mpz_t(), n) == 0 || r < 2) continue;
      std::vector<BigInt> roots;
      if (t.q > 0) {
        roots.push_back(r);
        if (n % 2 == 0) roots.push_back(-r);
      } else if (n % 2 == 1) {
        roots.push_back(-r);
      }
      for (const auto& root : roots) emit(make(K::Trivial, GroupRef::h(with_q(t, root))), {f});
    }
    // p p': every divisor of p whose cofactor lies in the domain.
    for (const auto& d : positive_divisors(abs(t.p))) {
      for (const BigInt& base : {d, BigInt(-d)}) {
        if (in_domain(t.p / base, t.domain)) emit(make(K::Trivial, GroupRef::h(with_p(t, base))), {f});
      }
    }
    // q' ~ 1 in both sequences transfers triviality across q -> q q' and back.
    for (const Fact* e : v.of_kind(K::EquivalentToOne)) {
      const GroupRef& seq = e->statement.a;
      const BigInt& x = e->statement.n;
      if (seq.params.p != t.p || seq.params.domain != t.domain || x == 1) continue;
      if (seq.params.q == t.q) {
        const Triple hi = with_q(t, t.q * x);
        const Fact* e2 = v.find(make(K::EquivalentToOne, GroupRef::sequence(hi), {}, x));
        if (e2 != nullptr) emit(make(K::Trivial, GroupRef::h(hi)), {f, e, e2});
      }
      if (seq.params.q == t.q && mpz_divisible_p(t.q.get_mpz_t(), x.get_mpz_t())) {
        const Triple lo = with_q(t, t.q / x);
        const Fact* e1 = v.find(make(K::EquivalentToOne, GroupRef::sequence(lo), {}, x));
        if (e1 != nullptr) emit(make(K::Trivial, GroupRef::h(lo)), {f, e1, e});
      }
    }
  }
}

void r13(const View& v, const Emitter& emit) {
  std::map<std::string, std::vector<const Fact*>> by_group;
  for (const Fact* f : v.of_kind(K::KernelMember)) {
    if (f->certificate.rule != "R13") by_group[f->statement.a.text()].push_back(f);
  }
  for (const auto& [group, members] : by_group) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        const Fact* a = members[i];
        const Fact* b = members[j];
        std::optional<KernelCertificate> sum;
        if (a->certificate.kernel && b->certificate.kernel) {
          sum = combine(*a->certificate.kernel, *b->certificate.kernel);
        }
        emit(make(K::KernelMember, a->statement.a, {}, a->statement.n * b->statement.n), {a, b}, std::move(sum));
      }
    }
  }
}

void r14(const View& v, const Emitter& emit) {
  const auto pairs = power_pairs(v);
  for (const Fact* f : v.of_kind(K::KernelIsAllOfF)) {
    for (const auto& [lo, hi] : pairs) {
      if (lo == f->statement.a.params) emit(make(K::KernelIsAllOfF, GroupRef::h(hi)), {f});
    }
  }
  for (const auto& m : adding_q(v)) {
    if (const Fact* s = v.find(make(K::SingleClass, GroupRef::sequence(m.hi))); s != nullptr) {
      emit(make(K::NotEquivToOneImpliesDivides, GroupRef::sequence(m.lo), {}, m.x), {m.lo_member, m.hi_member, s});
    }
    if (const Fact* s = v.find(make(K::SingleClass, GroupRef::sequence(m.lo))); s != nullptr) {
      emit(make(K::NotEquivToOneImpliesDivides, GroupRef::sequence(m.hi), {}, m.x), {m.lo_member, m.hi_member, s});
    }
  }
}

using RuleFn = void (*)(const View&, const Emitter&);

const std::map<std::string, RuleFn>& rule_table() {
  static const std::map<std::string, RuleFn> table{
      {"R1", r1},   {"R2", r2},   {"R3", r3},   {"R4", r4},   {"R5", r5},   {"R6", r6},   {"R7", r7},
      {"R8", r8},   {"R9", r9},   {"R10", r10}, {"R11", r11}, {"R12", r12}, {"R13", r13}, {"R14", r14},
  };
  return table;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

void run_rule(const std::string& rule, const View& view, std::vector<Candidate>& out) {
  const auto it = rule_table().find(rule);
  if (it == rule_table().end()) throw Error(ErrorKind::InvalidArgument, "unknown rule " + rule);
  it->second(view, Emitter(rule, out));
}

bool rule_supports(const Fact& fact, const std::vector<const Fact*>& premises) {
  std::set<Triple> universe;
  for (auto& t : fact.statement.triples()) universe.insert(std::move(t));
  const View view(premises, universe);
  std::vector<Candidate> candidates;
  run_rule(fact.certificate.rule, view, candidates);
  const std::string text = fact.statement.text();
  const auto wanted = sorted(fact.certificate.premises);
  for (const auto& c : candidates) {
    if (c.statement.text() != text || sorted(c.premises) != wanted) continue;
    if (c.kernel.has_value() != fact.certificate.kernel.has_value()) continue;
    if (c.kernel && !same_certificate(*c.kernel, *fact.certificate.kernel)) continue;
    return true;
  }
  return false;
}

}  // namespace detail

const std::vector<std::string>& rule_ids() {
  static const std::vector<std::string> ids{"R1", "R2", "R3",  "R4",  "R5",  "R6",  "R7",
                                            "R8", "R9", "R10", "R11", "R12", "R13", "R14"};
  return ids;
}

class RuleEngine {
 public:
  explicit RuleEngine(FactStore& store) : store_(store) {}

  /// Fires `rules` against one snapshot and commits canonically; true if the
  /// store changed.
  bool round(const std::vector<std::string>& rules, std::vector<std::string>& changed) {
    std::vector<detail::Candidate> candidates;
    {
      const detail::View view(store_.facts());
      for (const auto& r : rules) detail::run_rule(r, view, candidates);
    }
    std::vector<Fact> facts;
    facts.reserve(candidates.size());
    for (auto& c : candidates) {
      Fact f;
      f.statement = std::move(c.statement);
      f.id = fact_id(f.statement);
      bool certified = true;
      for (const auto& p : c.premises) certified = certified && store_.find(p)->status == FactStatus::Certified;
      f.status = certified ? FactStatus::Certified : FactStatus::Conditional;
      f.certificate.rule = std::move(c.rule);
      f.certificate.premises = std::move(c.premises);
      f.certificate.kernel = std::move(c.kernel);
      facts.push_back(std::move(f));
    }
    std::sort(facts.begin(), facts.end(), [](const Fact& a, const Fact& b) {
      const std::string ta = a.statement.text(), tb = b.statement.text();
      if (ta != tb) return ta < tb;
      if (a.status != b.status) return a.status > b.status;
      if (a.certificate.rule != b.certificate.rule) return a.certificate.rule < b.certificate.rule;
      return a.certificate.premises < b.certificate.premises;
    });
    bool any = false;
    for (auto& f : facts) {
      const std::string id = f.id;
      if (store_.commit(std::move(f))) {
        changed.push_back(id);
        any = true;
      }
    }
    return any;
  }

 private:
  FactStore& store_;
};

std::vector<std::string> apply_rules(FactStore& store, const ApplyOptions& options) {
  RuleEngine engine(store);
  std::vector<std::string> changed;
  for (const auto& r : options.rule_order) {
    if (std::find(rule_ids().begin(), rule_ids().end(), r) == rule_ids().end()) {
      throw Error(ErrorKind::InvalidArgument, "unknown rule " + r);
    }
  }
  for (std::size_t round = 0; round < options.max_rounds; ++round) {
    bool any = false;
    if (options.rule_order.empty()) {
      any = engine.round(rule_ids(), changed);
    } else {
      for (const auto& r : options.rule_order) any = engine.round({r}, changed) || any;
    }
    if (!any) break;
  }
  return changed;
}

std::string request_power(FactStore& store, const Triple& params, unsigned n) {
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "power request needs n >= 2");
  BigInt qn;
  mpz_pow_ui(qn.get_mpz_t(), params.q.get_mpz_t(), n);
  Fact f;
  f.statement.kind = StatementKind::QuotientOf;
  f.statement.a = GroupRef::h(params);
  f.statement.b = GroupRef::h(Triple{params.p, qn, params.domain});
  f.statement.validate();
  f.id = fact_id(f.statement);
  f.status = FactStatus::Certified;
  f.certificate.rule = "R1";
  return store.assert_fact(std::move(f));
}

}  // namespace divseq
