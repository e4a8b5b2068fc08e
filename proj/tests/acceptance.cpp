// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "divseq/deduce.hpp"
#include "divseq/error.hpp"
#include "divseq/serialize.hpp"
#include "oracles.hpp"

using namespace divseq;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void note(const std::string& text) { notes_.push_back(text); }

  Outcome outcome() const {
    std::ostringstream s;
    for (std::size_t i = 0; i < notes_.size(); ++i) s << (i ? "; " : "") << notes_[i];
    if (!failures_.empty()) {
      s << (notes_.empty() ? "" : "; ") << "failed:";
      for (std::size_t i = 0; i < failures_.size() && i < 5; ++i) s << " [" << failures_[i] << "]";
      if (failures_.size() > 5) s << " (+" << failures_.size() - 5 << " more)";
    }
    return {failures_.empty(), s.str()};
  }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

SequenceParams params(long p, long q, Domain d = Domain::Positive) {
  SequenceParams s{BigInt(p), BigInt(q), d};
  s.validate();
  return s;
}

HarvestConfig harvest_config(long seed_bound, std::uint64_t depth = 0) {
  HarvestConfig c;
  c.seed_bound = seed_bound;
  c.trajectory_depth = depth;
  return c;
}

std::string fmt(double s) {
  std::ostringstream o;
  o.precision(3);
  o << std::fixed << s << " s";
  return o.str();
}

bool tree_replays(const Json& node) {
  if (!node.value("replays", false)) return false;
  for (const auto& child : node.at("derivation")) {
    if (!tree_replays(child)) return false;
  }
  return true;
}

Fact member_fact(long x, long p, long q, long seed_bound = 10) {
  const auto a = kernel_member(BigInt(x), harvest(params(p, q), harvest_config(seed_bound)));
  if (!a.yes()) throw Error(ErrorKind::Internal, "no certificate for " + std::to_string(x));
  return kernel_fact(*a.certificate);
}

const std::vector<std::tuple<long, long, long>> kExampleMembers = {
    {8, 7, 2}, {8, 7, 16}, {6, 5, 2}, {6, 5, 12}, {4, 3, 2}, {4, 3, 8}};

Outcome kernel_certificates() {
  Checker c;
  const auto t0 = Clock::now();
  for (const auto& [x, p, q] : kExampleMembers) {
    const std::string name = std::to_string(x) + " in Ker(" + std::to_string(p) + "," + std::to_string(q) + ")";
    const auto a = kernel_member(BigInt(x), harvest(params(p, q), harvest_config(10)));
    c.expect(a.yes(), name + " answered Unknown");
    if (!a.yes()) continue;
    // Replay the serialized form, which is what a consumer sees.
    c.expect(replay(*a.certificate), name + " does not replay");
    c.expect(replay(kernel_certificate_from_json(kernel_certificate_json(*a.certificate))),
             name + " does not replay after serialization");
  }
  const double t = seconds_since(t0);
  c.expect(t < 1.0, "took " + fmt(t));
  c.note("6 memberships in " + fmt(t));
  return c.outcome();
}

Outcome deduction() {
  Checker c;
  FactStore s;
  for (const auto& [x, p, q] : kExampleMembers) s.assert_fact(member_fact(x, p, q));
  apply_rules(s);
  std::size_t found = 0;
  for (const auto& [p, lo, hi] : {std::tuple{7, 2, 16}, std::tuple{5, 2, 12}, std::tuple{3, 2, 8}}) {
    const std::string a = "H(" + std::to_string(p) + "," + std::to_string(lo) + ";pos)";
    const std::string b = "H(" + std::to_string(p) + "," + std::to_string(hi) + ";pos)";
    for (const auto& text : {"QuotientOf(" + a + ", " + b + ")", "QuotientOf(" + b + ", " + a + ")"}) {
      const Fact* f = s.find(parse_statement(text));
      c.expect(f != nullptr, text + " not derived");
      if (f == nullptr) continue;
      ++found;
      c.expect(f->status == FactStatus::Certified, text + " is " + std::string(to_string(f->status)));
      c.expect(tree_replays(derivation_tree_json(s, f->id)), text + " derivation does not replay");
    }
  }
  const Fact* r4 = s.find(parse_statement("QuotientOf(H(7,16;pos), H(7,2;pos))"));
  c.expect(r4 != nullptr && r4->certificate.rule == "R4", "reverse quotient not justified by R4");
  c.note(std::to_string(found) + "/6 quotient facts Certified, " + std::to_string(s.size()) + " facts in store");
  return c.outcome();
}

std::string cycle_minima(const ClassLowerBound& lb) {
  std::string out;
  for (const auto& w : lb.witnesses) out += (out.empty() ? "" : ",") + w.members.front().get_str();
  return out;
}

bool has_cycle_with(const ClassLowerBound& lb, long v) {
  for (const auto& w : lb.witnesses) {
    if (std::find(w.members.begin(), w.members.end(), BigInt(v)) != w.members.end()) return true;
  }
  return false;
}

Outcome census_p3_positive() {
  Checker c;
  const auto t0 = Clock::now();
  const auto part = census(params(3, 2), BigInt(1), BigInt(100000), Budget{});
  const double t = seconds_since(t0);
  const auto lb = class_lower_bound(part);
  c.expect(part.cycles().size() == 1, "cycles = " + std::to_string(part.cycles().size()));
  c.expect(lb.bound == 1, "bound = " + std::to_string(lb.bound));
  c.expect(part.unresolved().empty(), "unresolved = " + std::to_string(part.unresolved().size()));
  if (!lb.witnesses.empty()) {
    c.expect(lb.witnesses[0].members == std::vector<BigInt>{1, 4, 2}, "cycle is not [1,4,2]");
  }
  c.expect(t < 10.0, "took " + fmt(t));
  c.note("cycles " + std::to_string(part.cycles().size()) + " [" + cycle_minima(lb) + "], unresolved " +
         std::to_string(part.unresolved().size()) + ", " + fmt(t));
  return c.outcome();
}

Outcome census_p3_nonzero() {
  Checker c;
  const auto t0 = Clock::now();
  const auto part = census(params(3, 2, Domain::Nonzero), BigInt(-10000), BigInt(10000), Budget{});
  const auto lb = class_lower_bound(part);
  c.expect(lb.bound >= 4, "bound = " + std::to_string(lb.bound));
  for (long v : {1L, -1L, -5L, -17L}) c.expect(has_cycle_with(lb, v), "no cycle through " + std::to_string(v));
  c.expect(part.unresolved().empty(), "unresolved = " + std::to_string(part.unresolved().size()));
  c.note("cycles " + std::to_string(lb.bound) + " (minima " + cycle_minima(lb) + "), unresolved " +
         std::to_string(part.unresolved().size()) + ", " + fmt(seconds_since(t0)));
  return c.outcome();
}

Outcome census_p5_positive() {
  Checker c;
  const auto t0 = Clock::now();
  Budget b;
  b.max_steps = 10000;
  b.max_magnitude = BigInt("1000000000000000000");
  const auto part = census(params(5, 2), BigInt(1), BigInt(10000), b);
  const auto lb = class_lower_bound(part);
  c.expect(lb.bound >= 3, "bound = " + std::to_string(lb.bound));
  for (long v : {1L, 13L, 17L}) c.expect(has_cycle_with(lb, v), "no cycle through " + std::to_string(v));
  // Unresolved seeds never contribute a cycle.
  std::set<std::string> from_resolved;
  for (const auto& s : part.seeds()) {
    if (s.status == OrbitStatus::ReachedCycle) from_resolved.insert(s.cycle_id);
  }
  c.expect(from_resolved.size() == lb.bound, "bound counts cycles no resolved seed reached");
  c.note("cycles " + std::to_string(lb.bound) + " (minima " + cycle_minima(lb) + "), unresolved " +
         std::to_string(part.unresolved().size()) + " reported, " + fmt(seconds_since(t0)));
  return c.outcome();
}

std::vector<SparseVector> to_rows(const oracle::Matrix& m) {
  std::vector<SparseVector> out;
  for (const auto& r : m) {
    std::vector<BigInt> d(r.begin(), r.end());
    out.push_back(SparseVector::from_dense(d));
  }
  return out;
}

oracle::Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_int_distribution<long> entry(-5, 5);
  oracle::Matrix m(rows, std::vector<long>(cols));
  for (auto& r : m) {
    for (auto& x : r) x = entry(rng);
  }
  return m;
}

Outcome snf_agreement() {
  Checker c;
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> dim(1, 4);
  std::size_t compared = 0, infinite = 0, large = 0;
  constexpr int kMatrices = 400;
  for (int trial = 0; trial < kMatrices; ++trial) {
    const std::size_t n = dim(rng), m = dim(rng);
    const auto mat = random_matrix(rng, m, n);
    const auto report = snf_quotient(to_rows(mat), n);
    // Finiteness from the oracle: rank n, with exponent d_n.
    const auto factors = oracle::invariant_factors(mat, n);
    const bool finite = factors.size() == n;
    c.expect(report.finite() == finite, "finiteness disagrees on trial " + std::to_string(trial));
    if (!finite) {
      ++infinite;
      continue;
    }
    if (!report.order || *report.order > 625) {
      ++large;
      continue;
    }
    const std::uint64_t brute = oracle::enumerate_order(mat, n, factors.back().get_si());
    mpz_class product = 1;
    for (const auto& f : factors) product *= f;
    c.expect(product == *report.order, "trial " + std::to_string(trial) + ": determinantal product disagrees");
    ++compared;
    c.expect(BigInt(std::to_string(brute)) == *report.order,
             "trial " + std::to_string(trial) + ": snf " + report.order->get_str() + " vs " + std::to_string(brute));
  }
  c.note(std::to_string(kMatrices) + " matrices: " + std::to_string(compared) + " compared against homomorphism counts, " +
         std::to_string(infinite) + " infinite, " + std::to_string(large) + " above 625");
  return c.outcome();
}

Outcome kernel_coverage() {
  Checker c;
  const auto t0 = Clock::now();
  const auto h = harvest(params(3, 2), harvest_config(10000, 1000));
  std::size_t yes = 0;
  for (const auto p : sieve_primes(50)) {
    const auto a = kernel_member(BigInt(p), h);
    c.expect(a.yes(), std::to_string(p) + " Unknown: " + a.diagnostic);
    if (!a.yes()) continue;
    c.expect(replay(*a.certificate), std::to_string(p) + " does not replay");
    ++yes;
  }
  c.note(std::to_string(yes) + "/15 primes certified from " + std::to_string(h.relations().size()) +
         " relations over " + std::to_string(h.basis().size()) + " primes, " + fmt(seconds_since(t0)));
  return c.outcome();
}

// Each sub-property reports through the shared checker under its own label.
void factor_properties(Checker& c) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<long> wide(-1000000000L, 1000000000L), narrow(-31622, 31622);
  PrimeBasis basis(true);
  bool ok = true;
  for (int i = 0; i < 10000 && ok; ++i) {
    long n = wide(rng);
    if (n == 0) n = 1;
    ok = unfactor(factor(BigInt(n), basis, true), basis) == Rational(n);
  }
  for (int i = 0; i < 10000 && ok; ++i) {
    long a = narrow(rng), b = narrow(rng);
    if (a == 0) a = 3;
    if (b == 0) b = -2;
    ok = factor(BigInt(a) * BigInt(b), basis, true) ==
         vec_add(factor(BigInt(a), basis, true), factor(BigInt(b), basis, true));
  }
  c.expect(ok, "factor round trip/homomorphism");
}

void hnf_permutation(Checker& c) {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  bool ok = true;
  for (int t = 0; t < 200 && ok; ++t) {
    const std::size_t n = dim(rng);
    auto rows = to_rows(random_matrix(rng, dim(rng), n));
    const auto base = hnf(rows, n);
    std::shuffle(rows.begin(), rows.end(), rng);
    ok = hnf(rows, n).rows() == base.rows();
  }
  c.expect(ok, "HNF permutation invariance");
}

void replay_every_yes(Checker& c) {
  std::size_t yes = 0;
  bool ok = true;
  for (const auto& [p, q, d] : {std::tuple{3L, 2L, Domain::Positive}, std::tuple{5L, 2L, Domain::Positive},
                                std::tuple{7L, 16L, Domain::Positive}, std::tuple{3L, 2L, Domain::Nonzero}}) {
    const auto h = harvest(params(p, q, d), harvest_config(30, 20));
    for (long x = 1; x <= 300; ++x) {
      for (long sx : {x, -x}) {
        if (sx < 0 && d == Domain::Positive) continue;
        const auto a = kernel_member(BigInt(sx), h);
        if (!a.yes()) continue;
        ++yes;
        ok = ok && replay(*a.certificate);
      }
    }
  }
  c.expect(ok && yes > 0, "replay of every Yes");
  c.note(std::to_string(yes) + " Yes answers replayed");
}

void census_sharding(Checker& c) {
  Budget b;
  b.max_steps = 2000;
  b.max_magnitude = BigInt("1000000000000000");
  bool ok = true;
  for (const auto& [s, from, to] :
       {std::tuple{params(3, 2, Domain::Nonzero), -2000L, 2000L}, std::tuple{params(5, 2), 1L, 2000L}}) {
    const auto one = census_parallel(s, BigInt(from), BigInt(to), b, 1);
    for (unsigned jobs : {2u, 8u}) {
      const auto many = census_parallel(s, BigInt(from), BigInt(to), b, jobs);
      ok = ok && many.visited() == one.visited() && many.seeds().size() == one.seeds().size() &&
           many.component_count() == one.component_count() &&
           class_lower_bound(many).bound == class_lower_bound(one).bound;
      for (std::size_t i = 0; ok && i < one.seeds().size(); ++i) {
        ok = many.seeds()[i].seed == one.seeds()[i].seed && many.seeds()[i].status == one.seeds()[i].status &&
             many.seeds()[i].cycle_id == one.seeds()[i].cycle_id;
      }
    }
  }
  c.expect(ok, "census determinism across 1/2/8 shards");
}

void quotient_monotone(Checker& c) {
  bool ok = true;
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100 && ok; ++t) {
    const auto rows = to_rows(random_matrix(rng, 6, 3));
    std::vector<SparseVector> prefix;
    std::optional<BigInt> last;
    for (const auto& r : rows) {
      prefix.push_back(r);
      const auto q = snf_quotient(prefix, 3);
      if (q.order && last) ok = ok && *q.order <= *last;
      if (q.order) last = q.order;
    }
  }
  HarvestConfig fixed;
  fixed.policy = BasisPolicy::Fixed;
  fixed.prime_bound = 13;
  std::optional<BigInt> last;
  for (long n : {1L, 3L, 10L, 30L, 100L}) {
    fixed.seed_bound = n;
    const auto r = quotient_report(harvest(params(5, 2), fixed), std::nullopt);
    if (r.quotient.order && last) ok = ok && *r.quotient.order <= *last;
    if (r.quotient.order) last = r.quotient.order;
  }
  c.expect(ok, "quotient-order monotonicity");
}

void r13_sums(Checker& c) {
  FactStore s;
  s.assert_fact(member_fact(4, 3, 2));
  s.assert_fact(member_fact(5, 3, 2));
  s.assert_fact(member_fact(7, 3, 2, 30));
  apply_rules(s);
  bool ok = true;
  std::size_t products = 0;
  for (const Fact* f : s.facts()) {
    if (f->certificate.rule != "R13") continue;
    ++products;
    const auto sum = combine(*s.find(f->certificate.premises[0])->certificate.kernel,
                             *s.find(f->certificate.premises[1])->certificate.kernel);
    ok = ok && f->certificate.kernel && f->certificate.kernel->element == sum.element &&
         f->certificate.kernel->terms.size() == sum.terms.size();
    for (std::size_t i = 0; ok && i < sum.terms.size(); ++i) {
      ok = f->certificate.kernel->terms[i].coefficient == sum.terms[i].coefficient &&
           f->certificate.kernel->terms[i].relation == sum.terms[i].relation;
    }
  }
  c.expect(ok && products == 3, "R13 certificate equals premise sum");
}

FactStore rich_store() {
  FactStore s;
  for (const auto& [x, p, q] : kExampleMembers) s.assert_fact(member_fact(x, p, q));
  s.assert_fact(member_fact(5, 3, 2));
  s.assert_fact(hypothesis(parse_statement("SingleClass(C(3,8;pos))")));
  s.assert_fact(hypothesis(parse_statement("OrderAtLeast(H(5,2;pos), 2)")));
  s.assert_fact(hypothesis(parse_statement("KernelIsAllOfF(H(3,2;pos))")));
  s.assert_fact(class_bound_fact(params(3, 2), {Cycle::from_members({BigInt(1), BigInt(4), BigInt(2)})}));
  request_power(s, Triple{BigInt(7), BigInt(2), Domain::Positive}, 4);
  return s;
}

std::set<std::pair<std::string, FactStatus>> summary(const FactStore& s) {
  std::set<std::pair<std::string, FactStatus>> out;
  for (const Fact* f : s.facts()) out.emplace(f->statement.text(), f->status);
  return out;
}

void export_round_trip(Checker& c) {
  FactStore s = rich_store();
  apply_rules(s);
  const std::string doc = export_store(s);
  const FactStore back = import_store(doc);
  c.expect(export_store(back) == doc && summary(back) == summary(s), "export/import round trip");
}

void order_independence(Checker& c) {
  FactStore reference = rich_store();
  apply_rules(reference);
  const auto expected = summary(reference);
  std::mt19937_64 rng(42);
  bool ok = true;
  for (int t = 0; t < 20 && ok; ++t) {
    auto order = rule_ids();
    std::shuffle(order.begin(), order.end(), rng);
    FactStore s = rich_store();
    ApplyOptions o;
    o.rule_order = order;
    apply_rules(s, o);
    ok = summary(s) == expected;
  }
  c.expect(ok, "apply_rules order independence (20 orderings)");
  c.note(std::to_string(expected.size()) + " facts at fixpoint");
}

Outcome property_suite() {
  Checker c;
  for (const auto& f : {factor_properties, hnf_permutation, replay_every_yes, census_sharding, quotient_monotone,
                        r13_sums, export_round_trip, order_independence}) {
    try {
      f(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("threw: ") + e.what());
    }
  }
  return c.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"kernel certificates, seed bound 10", kernel_certificates},
      {"mutual quotients by deduction", deduction},
      {"census p=3 q=2 pos seeds 1..1e5", census_p3_positive},
      {"census p=3 q=2 nonzero seeds -1e4..1e4", census_p3_nonzero},
      {"census p=5 q=2 pos seeds 1..1e4", census_p5_positive},
      {"SNF order agreement", snf_agreement},
      {"kernel coverage of primes <= 50", kernel_coverage},
      {"property suite", property_suite},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << ": " << o.detail << " ["
              << fmt(seconds_since(t0)) << "]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
