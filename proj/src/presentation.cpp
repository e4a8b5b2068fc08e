#include "divseq/presentation.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "divseq/error.hpp"

namespace divseq {

std::string_view to_string(RelationProvenance::Kind kind) noexcept {
  switch (kind) {
    case RelationProvenance::Kind::QIsOne: return "q";
    case RelationProvenance::Kind::OrbitStep: return "step";
    case RelationProvenance::Kind::SignSquared: return "sign";
  }
  return "unknown";
}

RelationProvenance::Kind parse_relation_kind(std::string_view text) {
  if (text == "q") return RelationProvenance::Kind::QIsOne;
  if (text == "step") return RelationProvenance::Kind::OrbitStep;
  if (text == "sign") return RelationProvenance::Kind::SignSquared;
  throw Error(ErrorKind::ParseError, "unknown relation kind '" + std::string(text) + "'");
}

std::string_view to_string(RowStatus s) noexcept {
  return s == RowStatus::Certified ? "Certified" : "Hypothesis";
}

Rational relation_value(const RelationProvenance& relation, const SequenceParams& params) {
  switch (relation.kind) {
    case RelationProvenance::Kind::QIsOne: return Rational(params.q);
    case RelationProvenance::Kind::SignSquared: return Rational(1);
    case RelationProvenance::Kind::OrbitStep: {
      Rational r(params.p * relation.c + 1, relation.c);
      r.canonicalize();
      return r;
    }
  }
  return Rational(1);
}

bool relation_is_valid(const RelationProvenance& relation, const SequenceParams& params) {
  switch (relation.kind) {
    case RelationProvenance::Kind::QIsOne: return true;
    case RelationProvenance::Kind::SignSquared: return params.domain == Domain::Nonzero;
    case RelationProvenance::Kind::OrbitStep: {
      const BigInt& c = relation.c;
      if (!in_domain(c, params.domain)) return false;
      if (mpz_divisible_p(c.get_mpz_t(), params.q.get_mpz_t())) return false;
      return in_domain(params.p * c + 1, params.domain);
    }
  }
  return false;
}

ColumnMap::ColumnMap(const PrimeBasis& basis) : sign_(basis.includes_sign()) {
  const auto primes = basis.primes();
  std::vector<std::size_t> order(primes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return primes[a] > primes[b]; });
  column_of_index_.resize(primes.size());
  for (std::size_t col = 0; col < order.size(); ++col) column_of_index_[order[col]] = col;
}

std::optional<std::size_t> ColumnMap::sign_column() const {
  if (!sign_) return std::nullopt;
  return column_of_index_.size();
}

SparseVector ColumnMap::to_columns(const ExponentVector& v) const {
  std::vector<SparseVector::Entry> entries;
  for (const auto& [idx, e] : v.entries()) {
    if (idx >= column_of_index_.size()) {
      throw Error(ErrorKind::BasisMismatch, "vector uses a prime outside the column map");
    }
    entries.emplace_back(column_of_index_[idx], e);
  }
  if (v.sign_exponent() != 0) {
    if (!sign_) throw Error(ErrorKind::BasisMismatch, "sign exponent without a sign column");
    entries.emplace_back(column_of_index_.size(), BigInt(1));
  }
  return SparseVector::from_entries(std::move(entries));
}

namespace {

ExponentVector relation_vector(const RelationProvenance& rel, const SequenceParams& params,
                               PrimeBasis& basis, bool extend) {
  switch (rel.kind) {
    case RelationProvenance::Kind::QIsOne: return factor(params.q, basis, extend);
    case RelationProvenance::Kind::SignSquared: return ExponentVector(basis.id(), true);
    case RelationProvenance::Kind::OrbitStep:
      return vec_sub(factor(params.p * rel.c + 1, basis, extend), factor(rel.c, basis, extend));
  }
  return ExponentVector();
}

SparseVector lattice_row(const RelationProvenance& rel, const ExponentVector& v, const ColumnMap& cols) {
  if (rel.kind == RelationProvenance::Kind::SignSquared) {
    return SparseVector::from_entries({{*cols.sign_column(), BigInt(2)}});
  }
  return cols.to_columns(v);
}

bool divides(const BigInt& q, const BigInt& c) {
  return mpz_divisible_p(c.get_mpz_t(), q.get_mpz_t()) != 0;
}

}  // namespace

bool PresentationHandle::replay_row(std::size_t i) const {
  if (i >= relations_.size()) return false;
  const RelationProvenance& rel = relations_.provenance[i];
  if (!relation_is_valid(rel, params_)) return false;
  PrimeBasis scratch = basis_;
  const ExponentVector v = relation_vector(rel, params_, scratch, false);
  return v == relations_.rows[i] &&
         lattice_row(rel, v, columns_) == lattice_.original_rows()[i];
}

PresentationHandle harvest(const SequenceParams& params, const HarvestConfig& config) {
  params.validate();
  config.budget.validate();
  if (config.seed_bound < 0) throw Error(ErrorKind::InvalidArgument, "seed bound must be >= 0");
  if (config.policy == BasisPolicy::Fixed && config.prime_bound < 2) {
    throw Error(ErrorKind::InvalidArgument, "fixed basis policy needs a prime bound >= 2");
  }

  PresentationHandle h;
  h.params_ = params;
  h.config_ = config;
  h.basis_ = PrimeBasis(params.domain == Domain::Nonzero);
  const bool extend = config.policy == BasisPolicy::Adaptive;
  if (!extend) {
    for (const auto p : sieve_primes(config.prime_bound)) h.basis_.append(BigInt(static_cast<unsigned long>(p)));
  }

  // Values whose one-step relation is harvested, in canonical order.
  std::set<BigInt> step_values;
  const BigInt& n = config.seed_bound;
  const BigInt low = params.domain == Domain::Positive ? BigInt(1) : BigInt(-n);
  std::map<BigInt, std::uint64_t> walked;
  for (BigInt c = low; c <= n; ++c) {
    if (!in_domain(c, params.domain)) continue;
    if (!divides(params.q, c)) step_values.insert(c);
    BigInt v = c;
    for (std::uint64_t remaining = config.trajectory_depth; remaining > 0; --remaining) {
      auto [it, fresh] = walked.emplace(v, remaining);
      if (!fresh) {
        if (it->second >= remaining) break;
        it->second = remaining;
      }
      if (!divides(params.q, v)) step_values.insert(v);
      auto next = try_step(v, params);
      if (!next || abs(*next) > config.budget.max_magnitude) break;
      v = std::move(*next);
    }
  }

  std::vector<RelationProvenance> candidates;
  candidates.push_back({RelationProvenance::Kind::QIsOne, 0});
  if (params.domain == Domain::Nonzero) candidates.push_back({RelationProvenance::Kind::SignSquared, 0});
  for (const auto& c : step_values) candidates.push_back({RelationProvenance::Kind::OrbitStep, c});

  for (auto& rel : candidates) {
    if (!relation_is_valid(rel, params)) {
      h.excluded_.push_back({rel, "relation leaves the domain"});
      continue;
    }
    try {
      ExponentVector v = relation_vector(rel, params, h.basis_, extend);
      h.relations_.rows.push_back(std::move(v));
      h.relations_.provenance.push_back(std::move(rel));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BasisExceeded && e.kind() != ErrorKind::FactorLimit) throw;
      h.excluded_.push_back({rel, e.what()});
    }
  }

  h.columns_ = ColumnMap(h.basis_);
  std::vector<SparseVector> rows;
  rows.reserve(h.relations_.size());
  for (std::size_t i = 0; i < h.relations_.size(); ++i) {
    rows.push_back(lattice_row(h.relations_.provenance[i], h.relations_.rows[i], h.columns_));
  }
  h.lattice_ = hnf(std::move(rows), h.columns_.width());
  return h;
}

bool replay(const KernelCertificate& certificate) {
  const SequenceParams& params = certificate.params;
  if (!in_domain(certificate.element, params.domain)) return false;
  Rational product = 1;
  for (const auto& term : certificate.terms) {
    if (!relation_is_valid(term.relation, params)) return false;
    if (term.coefficient == 0) continue;
    const BigInt k = abs(term.coefficient);
    if (!mpz_fits_ulong_p(k.get_mpz_t())) return false;
    Rational r = relation_value(term.relation, params);
    BigInt num, den;
    mpz_pow_ui(num.get_mpz_t(), r.get_num().get_mpz_t(), k.get_ui());
    mpz_pow_ui(den.get_mpz_t(), r.get_den().get_mpz_t(), k.get_ui());
    Rational power = term.coefficient > 0 ? Rational(num, den) : Rational(den, num);
    power.canonicalize();
    product *= power;
  }
  return product == Rational(certificate.element);
}

KernelCertificate combine(const KernelCertificate& a, const KernelCertificate& b) {
  if (!(a.params == b.params)) {
    throw Error(ErrorKind::InvalidArgument, "kernel certificates for different presentations");
  }
  KernelCertificate out;
  out.params = a.params;
  out.element = a.element * b.element;
  auto key = [](const RelationProvenance& r) { return std::make_pair(static_cast<int>(r.kind), r.c); };
  std::map<std::pair<int, BigInt>, std::pair<RelationProvenance, BigInt>> sum;
  for (const auto* cert : {&a, &b}) {
    for (const auto& t : cert->terms) {
      auto [it, fresh] = sum.try_emplace(key(t.relation), t.relation, BigInt(0));
      it->second.second += t.coefficient;
    }
  }
  for (auto& [k, entry] : sum) {
    if (entry.second != 0) out.terms.push_back({entry.first, entry.second});
  }
  return out;
}

KernelAnswer kernel_member(const BigInt& x, const PresentationHandle& h) {
  if (!in_domain(x, h.params().domain)) {
    throw Error(ErrorKind::InvalidArgument, "element " + x.get_str() + " is not in the domain");
  }
  KernelAnswer answer;
  ExponentVector v;
  try {
    v = factor(x, h.basis());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::BasisExceeded && e.kind() != ErrorKind::FactorLimit) throw;
    answer.diagnostic = e.kind() == ErrorKind::FactorLimit
                             ? std::string("could not factor the element (") + e.what() + ")"
                             : std::string("prime factor outside the harvested basis (") + e.what() + ")";
    return answer;
  }
  const SparseVector target = h.columns().to_columns(v);
  std::optional<MembershipCertificate> cert;
  // Prefer citing a single harvested relation when one matches exactly.
  const auto& original = h.lattice().original_rows();
  for (std::size_t i = 0; i < original.size() && !target.empty(); ++i) {
    if (original[i] == target) {
      cert = MembershipCertificate{SparseVector::from_entries({{i, BigInt(1)}}), target};
      break;
    }
  }
  if (!cert) cert = membership(target, h.lattice());
  if (!cert) {
    answer.diagnostic = "not derivable from the harvested relations";
    return answer;
  }
  KernelCertificate kc;
  kc.params = h.params();
  kc.element = x;
  for (const auto& [row, coeff] : cert->coefficients.entries()) {
    kc.terms.push_back({h.relations().provenance[row], coeff});
  }
  if (!replay(*cert, h.lattice().original_rows()) || !replay(kc)) {
    throw Error(ErrorKind::InvalidCertificate, "kernel certificate for " + x.get_str() + " failed replay");
  }
  answer.certificate = std::move(kc);
  answer.lattice_certificate = std::move(cert);
  return answer;
}

PresentationReport quotient_report(const PresentationHandle& h, const std::optional<BigInt>& report_bound) {
  PresentationReport report;
  report.quotient = snf_quotient(h.lattice());
  report.relation_count = h.relations().size();
  report.excluded_count = h.excluded().size();
  const auto primes = h.basis().primes();
  std::vector<std::size_t> order(primes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return primes[a] < primes[b]; });
  const std::size_t width = h.columns().width();
  for (const std::size_t idx : order) {
    if (report_bound && primes[idx] > *report_bound) break;
    const SparseVector unit = SparseVector::from_entries({{h.columns().column_of(idx), BigInt(1)}});
    report.primes.push_back({primes[idx], membership(unit, h.lattice()).has_value()});
  }
  if (const auto sc = h.columns().sign_column(); sc && *sc < width) {
    report.sign_certified =
        membership(SparseVector::from_entries({{*sc, BigInt(1)}}), h.lattice()).has_value();
  }
  return report;
}

std::size_t OverlineHandle::certified_rows() const {
  return static_cast<std::size_t>(std::count_if(rows_.begin(), rows_.end(), [](const OverlineRow& r) {
    return r.kind == OverlineRow::Kind::NotEquivalentToOne && r.status == RowStatus::Certified;
  }));
}

std::size_t OverlineHandle::hypothesis_rows() const {
  return static_cast<std::size_t>(std::count_if(
      rows_.begin(), rows_.end(), [](const OverlineRow& r) { return r.status == RowStatus::Hypothesis; }));
}

OverlineHandle build_overline(const SequenceParams& params, const ClassPartition& partition,
                              const HarvestConfig& config, bool allow_hypotheses) {
  params.validate();
  if (!(partition.params() == params)) {
    throw Error(ErrorKind::InvalidArgument, "partition was computed for different parameters");
  }
  const auto one = partition.component_cycle(BigInt(1));
  if (!one) {
    throw Error(ErrorKind::MissingComponentOfOne, "the component of 1 is not resolved in the partition");
  }

  OverlineHandle h;
  h.params_ = params;
  h.one_cycle_ = partition.cycles().at(*one);
  h.basis_ = PrimeBasis(params.domain == Domain::Nonzero);
  const bool extend = config.policy == BasisPolicy::Adaptive;
  if (!extend) {
    for (const auto p : sieve_primes(config.prime_bound)) h.basis_.append(BigInt(static_cast<unsigned long>(p)));
  }

  auto push = [&](OverlineRow row, const BigInt& value) {
    try {
      row.vector = factor(value, h.basis_, extend);
      h.rows_.push_back(std::move(row));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::BasisExceeded && e.kind() != ErrorKind::FactorLimit) throw;
      h.excluded_.push_back({{RelationProvenance::Kind::OrbitStep, value}, e.what()});
    }
  };

  push(OverlineRow{OverlineRow::Kind::QIsOne, params.q, {}, RowStatus::Certified, {}, {}}, params.q);
  if (params.domain == Domain::Nonzero) {
    h.rows_.push_back(OverlineRow{OverlineRow::Kind::SignSquared, BigInt(-1),
                                  ExponentVector(h.basis_.id(), true), RowStatus::Certified, {}, {}});
  }
  for (const auto& v : partition.visited()) {
    const auto cycle = partition.component_cycle(v);
    if (cycle) {
      if (*cycle == *one) continue;
      h.witnesses_.emplace(*cycle, partition.cycles().at(*cycle));
      push(OverlineRow{OverlineRow::Kind::NotEquivalentToOne, v, {}, RowStatus::Certified, *cycle, *one}, v);
    } else if (allow_hypotheses) {
      push(OverlineRow{OverlineRow::Kind::NotEquivalentToOne, v, {}, RowStatus::Hypothesis, {}, *one}, v);
    }
  }

  const ColumnMap cols(h.basis_);
  std::vector<SparseVector> rows;
  rows.reserve(h.rows_.size());
  for (const auto& r : h.rows_) {
    if (r.kind == OverlineRow::Kind::SignSquared) {
      rows.push_back(SparseVector::from_entries({{*cols.sign_column(), BigInt(2)}}));
    } else {
      rows.push_back(cols.to_columns(r.vector));
    }
  }
  h.quotient_ = snf_quotient(rows, cols.width());
  return h;
}

}  // namespace divseq
