#include <random>
#include <set>

#include "doctest.h"
#include "divseq/dynamics.hpp"
#include "divseq/error.hpp"
#include "oracles.hpp"

using namespace divseq;

namespace {

SequenceParams make(long p, long q, Domain d) {
  SequenceParams s{BigInt(p), BigInt(q), d};
  s.validate();
  return s;
}

Budget budget(std::uint64_t steps, const BigInt& mag = Budget::default_max_magnitude()) {
  Budget b;
  b.max_steps = steps;
  b.max_magnitude = mag;
  return b;
}

std::vector<BigInt> bigs(std::initializer_list<long> v) {
  std::vector<BigInt> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("step and parameter validation") {
  const auto s32 = make(3, 2, Domain::Positive);
  CHECK(step(BigInt(4), s32) == 2);
  CHECK(step(BigInt(1), s32) == 4);
  const auto s12 = make(1, 2, Domain::Nonzero);
  CHECK(kind_of([&] { step(BigInt(-1), s12); }) == ErrorKind::DomainViolation);
  CHECK_FALSE(try_step(BigInt(-1), s12));

  CHECK(kind_of([] { make(3, 1, Domain::Positive); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { make(3, -2, Domain::Positive); }) == ErrorKind::InvalidParams);
  CHECK(kind_of([] { make(-3, 2, Domain::Nonzero); }) == ErrorKind::InvalidParams);
  SequenceParams odd{BigInt(-3), BigInt(2), Domain::Nonzero, true};
  CHECK_NOTHROW(odd.validate());
}

TEST_CASE("orbit examples") {
  const auto r = orbit(BigInt(7), make(5, 2, Domain::Positive), budget(10));
  CHECK(r.status == OrbitStatus::BudgetExceeded);
  CHECK(r.steps == 10);
  CHECK(r.path.size() == 11);

  const auto neg = orbit(BigInt(-5), make(3, 2, Domain::Nonzero), budget(1000));
  REQUIRE(neg.status == OrbitStatus::ReachedCycle);
  REQUIRE(neg.cycle);
  CHECK(neg.cycle->members == bigs({-20, -10, -5, -14, -7}));
  CHECK(neg.cycle->verify(make(3, 2, Domain::Nonzero)));

  const auto one = orbit(BigInt(1), make(3, 2, Domain::Positive), budget(100));
  REQUIRE(one.cycle);
  CHECK(one.cycle->members == bigs({1, 4, 2}));
  CHECK(one.path == bigs({1, 4, 2, 1}));

  CHECK(kind_of([] { orbit(BigInt(0), make(3, 2, Domain::Positive), budget(10)); }) ==
        ErrorKind::InvalidArgument);
  CHECK(kind_of([] { orbit(BigInt(-1), make(3, 2, Domain::Positive), budget(10)); }) ==
        ErrorKind::InvalidArgument);

  const auto big = orbit(BigInt(7), make(5, 2, Domain::Positive), budget(1000, BigInt(100)));
  CHECK(big.status == OrbitStatus::MagnitudeExceeded);
  CHECK(abs(big.offending_value) > 100);

  const auto dv = orbit(BigInt(-1), make(1, 2, Domain::Nonzero), budget(10));
  CHECK(dv.status == OrbitStatus::DomainViolation);
  CHECK(dv.steps == 0);
  CHECK(dv.offending_value == -1);
}

TEST_CASE("cycle ids are rotation invariant and stable") {
  const auto a = Cycle::from_members(bigs({4, 2, 1}));
  const auto b = Cycle::from_members(bigs({2, 1, 4}));
  CHECK(a.members == bigs({1, 4, 2}));
  CHECK(a.id == b.id);
  CHECK(a.id.size() == 16);
  CHECK(a.id != Cycle::from_members(bigs({1, 2, 4})).id);
}

TEST_CASE("census examples") {
  const auto part = census(make(3, 2, Domain::Positive), BigInt(1), BigInt(1000), budget(100000));
  CHECK(part.cycles().size() == 1);
  CHECK(part.unresolved().empty());
  const auto lb = class_lower_bound(part);
  CHECK(lb.bound == 1);
  REQUIRE(lb.witnesses.size() == 1);
  CHECK(lb.witnesses[0].members == bigs({1, 4, 2}));
  CHECK(part.same_class(BigInt(27), BigInt(1)));

  const auto neg = census(make(3, 2, Domain::Nonzero), BigInt(-200), BigInt(200), budget(100000));
  const auto nb = class_lower_bound(neg);
  CHECK(nb.bound >= 4);
  CHECK(neg.unresolved().empty());
  for (long rep : {1L, -1L, -5L, -17L}) CHECK(neg.component_cycle(BigInt(rep)));
  CHECK_FALSE(neg.same_class(BigInt(-1), BigInt(-5)));
  CHECK_FALSE(neg.contains(BigInt(0)));

  CHECK(kind_of([] { census(make(3, 2, Domain::Positive), BigInt(-3), BigInt(3), budget(10)); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("census agrees with the direct-iteration oracle") {
  const oracle::SmallParams sp{5, 2, false};
  const auto params = make(5, 2, Domain::Positive);
  const long max_abs = 1000000000L;
  const auto part = census(params, BigInt(1), BigInt(400), budget(2000, BigInt(max_abs)));
  std::set<std::vector<long>> expected;
  for (const auto& r : part.seeds()) {
    const auto cyc = oracle::small_cycle(r.seed.get_si(), sp, 2000, max_abs);
    REQUIRE(r.resolved() == !cyc.empty());
    if (cyc.empty()) continue;
    expected.insert(cyc);
    std::vector<BigInt> members;
    for (long v : cyc) members.emplace_back(v);
    REQUIRE(r.cycle_id == Cycle::from_members(members).id);
  }
  CHECK(part.cycles().size() == expected.size());
  CHECK(expected.size() >= 3);
}

TEST_CASE("property: census matches standalone orbits") {
  const auto params = make(5, 2, Domain::Positive);
  const auto b = budget(300, BigInt("1000000000000"));
  const auto part = census(params, BigInt(1), BigInt(300), b);
  for (const auto& r : part.seeds()) {
    const auto o = orbit(r.seed, params, b);
    REQUIRE(o.status == r.status);
    REQUIRE(o.steps == r.steps);
    if (o.cycle) REQUIRE(o.cycle->id == r.cycle_id);
    // Every path value is visited, and each step is a genuine map step.
    for (std::size_t i = 0; i < o.path.size(); ++i) {
      if (abs(o.path[i]) <= b.max_magnitude) REQUIRE(part.contains(o.path[i]));
      if (i + 1 < o.path.size()) REQUIRE(step(o.path[i], params) == o.path[i + 1]);
    }
  }
}

TEST_CASE("property: census is independent of sharding") {
  for (const auto& [params, from, to] :
       {std::tuple{make(3, 2, Domain::Nonzero), -500L, 500L},
        std::tuple{make(5, 2, Domain::Positive), 1L, 600L}}) {
    const auto b = budget(2000, BigInt("1000000000000000"));
    const auto one = census_parallel(params, BigInt(from), BigInt(to), b, 1);
    for (unsigned jobs : {2u, 8u}) {
      const auto many = census_parallel(params, BigInt(from), BigInt(to), b, jobs);
      REQUIRE(many.visited() == one.visited());
      REQUIRE(many.seeds().size() == one.seeds().size());
      for (std::size_t i = 0; i < one.seeds().size(); ++i) {
        REQUIRE(many.seeds()[i].seed == one.seeds()[i].seed);
        REQUIRE(many.seeds()[i].status == one.seeds()[i].status);
        REQUIRE(many.seeds()[i].cycle_id == one.seeds()[i].cycle_id);
      }
      REQUIRE(many.component_count() == one.component_count());
      REQUIRE(class_lower_bound(many).bound == class_lower_bound(one).bound);
    }
  }
}

TEST_CASE("property: lower bound is monotone in the seed range") {
  const auto params = make(3, 2, Domain::Nonzero);
  std::size_t last = 0;
  for (long r : {1L, 5L, 20L, 100L, 400L}) {
    const auto part = census(params, BigInt(-r), BigInt(r), budget(10000));
    const auto bound = class_lower_bound(part).bound;
    REQUIRE(bound >= last);
    last = bound;
  }
  CHECK(last >= 4);
}
