#include "divseq/dynamics.hpp"

#include <algorithm>
#include <thread>

#include "divseq/error.hpp"

namespace divseq {

std::string_view to_string(Domain d) noexcept {
  return d == Domain::Positive ? "pos" : "nonzero";
}

Domain parse_domain(std::string_view text) {
  if (text == "pos" || text == "positive") return Domain::Positive;
  if (text == "nonzero") return Domain::Nonzero;
  throw Error(ErrorKind::ParseError, "unknown domain '" + std::string(text) + "' (expected pos|nonzero)");
}

bool in_domain(const BigInt& c, Domain d) noexcept {
  return d == Domain::Positive ? c > 0 : c != 0;
}

std::string_view to_string(OrbitStatus s) noexcept {
  switch (s) {
    case OrbitStatus::ReachedCycle: return "ReachedCycle";
    case OrbitStatus::BudgetExceeded: return "BudgetExceeded";
    case OrbitStatus::MagnitudeExceeded: return "MagnitudeExceeded";
    case OrbitStatus::DomainViolation: return "DomainViolation";
  }
  return "Unknown";
}

void SequenceParams::validate() const {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorKind::InvalidParams,
                "invalid parameters p=" + p.get_str() + " q=" + q.get_str() + ": " + why);
  };
  if (abs(q) < 2) fail("|q| must be at least 2");
  if (!in_domain(p, domain) || !in_domain(q, domain)) fail("p and q must lie in the domain");
  if (!allow_unusual && p < 1) fail("p < 1 requires --allow-unusual-params");
}

BigInt Budget::default_max_magnitude() {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, 36);
  return r;
}

void Budget::validate() const {
  if (max_steps < 1 || max_magnitude < 1) {
    throw Error(ErrorKind::InvalidArgument, "budget limits must be at least 1");
  }
}

std::optional<BigInt> try_step(const BigInt& c, const SequenceParams& params) {
  if (!in_domain(c, params.domain)) return std::nullopt;
  BigInt next;
  if (mpz_divisible_p(c.get_mpz_t(), params.q.get_mpz_t())) {
    mpz_divexact(next.get_mpz_t(), c.get_mpz_t(), params.q.get_mpz_t());
  } else {
    next = params.p * c + 1;
  }
  if (!in_domain(next, params.domain)) return std::nullopt;
  return next;
}

BigInt step(const BigInt& c, const SequenceParams& params) {
  auto next = try_step(c, params);
  if (!next) {
    throw Error(ErrorKind::DomainViolation, "step from " + c.get_str() + " leaves the domain");
  }
  return *next;
}

std::string cycle_id(const std::vector<BigInt>& members) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](char ch) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  };
  for (const auto& m : members) {
    for (char ch : m.get_str()) mix(ch);
    mix(',');
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kHex[h & 0xf];
    h >>= 4;
  }
  return out;
}

Cycle Cycle::from_members(std::vector<BigInt> members) {
  if (!members.empty()) {
    const auto min_it = std::min_element(members.begin(), members.end());
    std::rotate(members.begin(), min_it, members.end());
  }
  Cycle c;
  c.id = cycle_id(members);
  c.members = std::move(members);
  return c;
}

bool Cycle::verify(const SequenceParams& params) const {
  if (members.empty()) return false;
  std::vector<BigInt> sorted = members;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) return false;
  if (*std::min_element(members.begin(), members.end()) != members.front()) return false;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto next = try_step(members[i], params);
    if (!next || *next != members[(i + 1) % members.size()]) return false;
  }
  return id == cycle_id(members);
}

OrbitResult orbit(const BigInt& seed, const SequenceParams& params, const Budget& budget) {
  if (!in_domain(seed, params.domain)) {
    throw Error(ErrorKind::InvalidArgument, "seed " + seed.get_str() + " is not in the domain");
  }
  OrbitResult r;
  r.seed = seed;
  r.path.push_back(seed);
  if (abs(seed) > budget.max_magnitude) {
    r.status = OrbitStatus::MagnitudeExceeded;
    r.offending_value = seed;
    return r;
  }
  std::unordered_map<BigInt, std::size_t, BigIntHash> seen{{seed, 0}};
  for (std::uint64_t s = 1; s <= budget.max_steps; ++s) {
    auto next = try_step(r.path.back(), params);
    if (!next) {
      r.status = OrbitStatus::DomainViolation;
      r.steps = s - 1;
      r.offending_value = r.path.back();
      return r;
    }
    r.path.push_back(*next);
    r.steps = s;
    if (abs(*next) > budget.max_magnitude) {
      r.status = OrbitStatus::MagnitudeExceeded;
      r.offending_value = *next;
      return r;
    }
    const auto [it, fresh] = seen.emplace(*next, s);
    if (!fresh) {
      r.status = OrbitStatus::ReachedCycle;
      r.cycle = Cycle::from_members(std::vector<BigInt>(
          r.path.begin() + static_cast<std::ptrdiff_t>(it->second), r.path.end() - 1));
      return r;
    }
  }
  r.status = OrbitStatus::BudgetExceeded;
  r.steps = budget.max_steps;
  return r;
}

std::vector<SeedResolution> ClassPartition::unresolved() const {
  std::vector<SeedResolution> out;
  for (const auto& s : seeds_) {
    if (!s.resolved()) out.push_back(s);
  }
  return out;
}

bool ClassPartition::contains(const BigInt& v) const { return index_.count(v) != 0; }

std::size_t ClassPartition::node(const BigInt& v) {
  const auto [it, fresh] = index_.emplace(v, values_.size());
  if (fresh) values_.push_back(v);
  return it->second;
}

std::size_t ClassPartition::find(std::size_t x) const {
  std::size_t root = x;
  while (parent_[root] != root) root = parent_[root];
  while (parent_[x] != root) {
    const std::size_t next = parent_[x];
    parent_[x] = root;
    x = next;
  }
  return root;
}

void ClassPartition::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  // Smaller index becomes the root so roots are canonical.
  if (b < a) std::swap(a, b);
  parent_[b] = a;
}

void ClassPartition::finalize() {
  std::sort(values_.begin(), values_.end());
  index_.clear();
  index_.reserve(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) index_.emplace(values_[i], i);
  parent_.resize(values_.size());
  for (std::size_t i = 0; i < parent_.size(); ++i) parent_[i] = i;
  // Components are rebuilt from the visited set alone, which makes them
  // independent of the order in which seeds were walked.
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (abs(values_[i]) > budget_.max_magnitude) continue;
    const auto next = try_step(values_[i], params_);
    if (!next) continue;
    const auto it = index_.find(*next);
    if (it != index_.end()) unite(i, it->second);
  }
  for (std::size_t i = 0; i < parent_.size(); ++i) parent_[i] = find(i);
  root_cycle_.assign(values_.size(), std::string());
  for (const auto& [id, cycle] : cycles_) {
    const auto it = index_.find(cycle.members.front());
    if (it != index_.end()) root_cycle_[parent_[it->second]] = id;
  }
  std::sort(seeds_.begin(), seeds_.end(),
            [](const SeedResolution& a, const SeedResolution& b) { return a.seed < b.seed; });
}

std::optional<std::string> ClassPartition::component_cycle(const BigInt& v) const {
  const auto it = index_.find(v);
  if (it == index_.end()) return std::nullopt;
  const std::string& id = root_cycle_[parent_[it->second]];
  if (id.empty()) return std::nullopt;
  return id;
}

bool ClassPartition::same_class(const BigInt& a, const BigInt& b) const {
  const auto ia = index_.find(a);
  const auto ib = index_.find(b);
  if (ia == index_.end() || ib == index_.end()) return false;
  return parent_[ia->second] == parent_[ib->second];
}

std::size_t ClassPartition::component_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < parent_.size(); ++i) n += parent_[i] == i ? 1 : 0;
  return n;
}

ClassPartition ClassPartition::merge(std::vector<ClassPartition> parts) {
  if (parts.empty()) return ClassPartition();
  ClassPartition out(parts.front().params_, parts.front().budget_);
  bool first = true;
  for (auto& part : parts) {
    if (!(part.params_ == out.params_) || part.budget_.max_steps != out.budget_.max_steps ||
        part.budget_.max_magnitude != out.budget_.max_magnitude) {
      throw Error(ErrorKind::InvalidArgument, "cannot merge partitions with different parameters");
    }
    if (part.seeds_.empty()) continue;
    if (first) {
      out.from_ = part.from_;
      out.to_ = part.to_;
      first = false;
    } else {
      out.from_ = std::min(out.from_, part.from_);
      out.to_ = std::max(out.to_, part.to_);
    }
    for (auto& s : part.seeds_) out.seeds_.push_back(std::move(s));
    for (auto& [id, c] : part.cycles_) out.cycles_.emplace(id, std::move(c));
    for (auto& v : part.values_) out.node(v);
  }
  out.finalize();
  return out;
}

class CensusRunner {
  struct MemoEntry {
    enum class Kind : std::uint8_t { Cycle, Escape, Violation } kind;
    // Cycle: steps to reach the cycle. Escape: steps until the magnitude
    // bound is exceeded. Violation: steps until a value that cannot be stepped.
    std::uint64_t distance;
    std::uint64_t cycle_length;
    std::size_t cycle_slot;
  };

 public:
  explicit CensusRunner(ClassPartition& out) : out_(out), params_(out.params_), budget_(out.budget_) {}

  SeedResolution resolve(const BigInt& seed) {
    SeedResolution res;
    res.seed = seed;
    out_.node(seed);
    if (abs(seed) > budget_.max_magnitude) {
      res.status = OrbitStatus::MagnitudeExceeded;
      return res;
    }
    path_.clear();
    local_.clear();
    path_.push_back(seed);
    local_.emplace(seed, 0);
    if (auto it = memo_.find(seed); it != memo_.end()) return from_memo(std::move(res), 0, it->second);

    for (std::uint64_t s = 1; s <= budget_.max_steps; ++s) {
      auto next = try_step(path_.back(), params_);
      if (!next) {
        record(MemoEntry::Kind::Violation, path_.size() - 1);
        res.status = OrbitStatus::DomainViolation;
        res.steps = s - 1;
        return res;
      }
      out_.node(*next);
      if (abs(*next) > budget_.max_magnitude) {
        record(MemoEntry::Kind::Escape, path_.size());
        res.status = OrbitStatus::MagnitudeExceeded;
        res.steps = s;
        return res;
      }
      if (auto it = memo_.find(*next); it != memo_.end()) {
        const MemoEntry hit = it->second;
        record_through(hit);
        return from_memo(std::move(res), s, hit);
      }
      if (auto it = local_.find(*next); it != local_.end()) {
        const std::size_t start = it->second;
        Cycle cycle = Cycle::from_members(std::vector<BigInt>(
            path_.begin() + static_cast<std::ptrdiff_t>(start), path_.end()));
        const std::size_t slot = cycle_slots_.size();
        cycle_slots_.push_back(cycle.id);
        const std::uint64_t length = path_.size() - start;
        for (std::size_t i = 0; i < path_.size(); ++i) {
          const std::uint64_t tail = i < start ? start - i : 0;
          memo_.emplace(path_[i], MemoEntry{MemoEntry::Kind::Cycle, tail, length, slot});
        }
        res.status = OrbitStatus::ReachedCycle;
        res.cycle_id = cycle.id;
        res.steps = s;
        out_.cycles_.emplace(cycle.id, std::move(cycle));
        return res;
      }
      local_.emplace(*next, path_.size());
      path_.push_back(std::move(*next));
    }
    res.status = OrbitStatus::BudgetExceeded;
    res.steps = budget_.max_steps;
    return res;
  }

 private:
  // Memoizes the current path given that its last value is followed by `hit`.
  void record_through(const MemoEntry& hit) {
    const std::size_t n = path_.size();
    for (std::size_t i = 0; i < n; ++i) {
      MemoEntry e = hit;
      e.distance = hit.distance + (n - i);
      memo_.emplace(path_[i], e);
    }
  }

  void record(MemoEntry::Kind kind, std::uint64_t end_index) {
    for (std::size_t i = 0; i < path_.size(); ++i) {
      memo_.emplace(path_[i], MemoEntry{kind, end_index - i, 0, 0});
    }
  }

  SeedResolution from_memo(SeedResolution res, std::uint64_t offset, const MemoEntry& e) {
    const std::uint64_t limit = budget_.max_steps;
    switch (e.kind) {
      case MemoEntry::Kind::Cycle: {
        const std::uint64_t total = offset + e.distance + e.cycle_length;
        if (total <= limit) {
          res.status = OrbitStatus::ReachedCycle;
          res.cycle_id = cycle_slots_[e.cycle_slot];
          res.steps = total;
          return res;
        }
        break;
      }
      case MemoEntry::Kind::Escape: {
        const std::uint64_t total = offset + e.distance;
        if (total <= limit) {
          res.status = OrbitStatus::MagnitudeExceeded;
          res.steps = total;
          return res;
        }
        break;
      }
      case MemoEntry::Kind::Violation: {
        const std::uint64_t total = offset + e.distance;
        if (total + 1 <= limit) {
          res.status = OrbitStatus::DomainViolation;
          res.steps = total;
          return res;
        }
        break;
      }
    }
    // The standalone orbit would run out of steps first. Walk it so that the
    // visited set matches the orbit exactly.
    for (std::uint64_t s = path_.size(); s <= limit; ++s) {
      auto next = try_step(path_.back(), params_);
      if (!next) break;
      out_.node(*next);
      path_.push_back(std::move(*next));
    }
    res.status = OrbitStatus::BudgetExceeded;
    res.steps = limit;
    return res;
  }

  ClassPartition& out_;
  const SequenceParams& params_;
  const Budget& budget_;
  std::unordered_map<BigInt, MemoEntry, BigIntHash> memo_;
  std::vector<std::string> cycle_slots_;
  std::vector<BigInt> path_;
  std::unordered_map<BigInt, std::size_t, BigIntHash> local_;
};

ClassPartition census(const SequenceParams& params, const BigInt& from, const BigInt& to,
                      const Budget& budget) {
  params.validate();
  budget.validate();
  if (from > to) throw Error(ErrorKind::InvalidArgument, "empty seed range");
  if (params.domain == Domain::Positive && from < 1) {
    throw Error(ErrorKind::InvalidArgument, "seed range must be positive in the positive domain");
  }
  ClassPartition out(params, budget);
  out.from_ = from;
  out.to_ = to;
  CensusRunner runner(out);
  for (BigInt seed = from; seed <= to; ++seed) {
    if (seed == 0) continue;
    out.seeds_.push_back(runner.resolve(seed));
  }
  out.finalize();
  return out;
}

ClassPartition census_parallel(const SequenceParams& params, const BigInt& from, const BigInt& to,
                               const Budget& budget, unsigned jobs) {
  if (jobs <= 1) return census(params, from, to, budget);
  params.validate();
  budget.validate();
  if (from > to) throw Error(ErrorKind::InvalidArgument, "empty seed range");
  const BigInt count = to - from + 1;
  const BigInt shards = std::min(BigInt(jobs), count);
  std::vector<std::pair<BigInt, BigInt>> ranges;
  BigInt start = from;
  for (BigInt i = 0; i < shards; ++i) {
    const BigInt len = count / shards + (i < count % shards ? 1 : 0);
    ranges.emplace_back(start, start + len - 1);
    start += len;
  }
  std::vector<ClassPartition> parts(ranges.size());
  std::vector<std::exception_ptr> errors(ranges.size());
  std::vector<std::thread> workers;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    workers.emplace_back([&, i] {
      try {
        parts[i] = census(params, ranges[i].first, ranges[i].second, budget);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return ClassPartition::merge(std::move(parts));
}

ClassLowerBound class_lower_bound(const ClassPartition& partition) {
  ClassLowerBound out;
  for (const auto& [id, cycle] : partition.cycles()) out.witnesses.push_back(cycle);
  std::sort(out.witnesses.begin(), out.witnesses.end(),
            [](const Cycle& a, const Cycle& b) { return a.members.front() < b.members.front(); });
  out.bound = out.witnesses.size();
  return out;
}

}  // namespace divseq
