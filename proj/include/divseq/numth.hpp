#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace divseq {

using BigInt = mpz_class;
using Rational = mpq_class;

/// Hash for use of BigInt as an unordered key.
struct BigIntHash {
  std::size_t operator()(const BigInt& v) const noexcept;
};

/// Parses a decimal integer, also accepting `10^k` and `1ek` shorthands.
BigInt parse_bigint(const std::string& text);

/// All primes <= bound in ascending order.
std::vector<std::uint64_t> sieve_primes(std::uint64_t bound);

bool is_probable_prime(const BigInt& n);

/// Append-only list of primes acting as generators of the free abelian group
/// of nonzero (or positive) rationals. Indices are stable for the lifetime of
/// the basis; copies keep the same identity so vectors built against the
/// original stay compatible with the copy.
class PrimeBasis {
 public:
  explicit PrimeBasis(bool includes_sign = false);
  PrimeBasis(const PrimeBasis& other);
  PrimeBasis& operator=(const PrimeBasis& other);
  PrimeBasis(PrimeBasis&& other) noexcept;
  PrimeBasis& operator=(PrimeBasis&& other) noexcept;
  ~PrimeBasis() = default;

  std::uint64_t id() const noexcept { return id_; }
  bool includes_sign() const noexcept { return includes_sign_; }
  std::size_t size() const;
  BigInt prime(std::size_t index) const;
  std::vector<BigInt> primes() const;
  std::optional<std::size_t> index_of(const BigInt& prime) const;

  /// Adds a prime (or returns its existing index). Throws InvalidArgument for
  /// non-primes.
  std::size_t append(const BigInt& prime);

 private:
  mutable std::shared_mutex mutex_;
  std::uint64_t id_;
  bool includes_sign_;
  std::vector<BigInt> primes_;
  std::map<BigInt, std::size_t> index_;
};

/// Element of F: sign bit (mod 2) plus sparse prime exponents keyed by basis
/// index. A default-constructed vector is the identity, unbound to any basis.
class ExponentVector {
 public:
  ExponentVector() = default;
  ExponentVector(std::uint64_t basis_id, bool has_sign)
      : basis_id_(basis_id), has_sign_(has_sign) {}

  std::uint64_t basis_id() const noexcept { return basis_id_; }
  bool has_sign() const noexcept { return has_sign_; }
  int sign_exponent() const noexcept { return sign_; }
  const std::map<std::size_t, BigInt>& entries() const noexcept { return entries_; }

  BigInt exponent(std::size_t index) const;
  void set_exponent(std::size_t index, const BigInt& value);
  void add_exponent(std::size_t index, const BigInt& delta);
  void set_sign_exponent(int value);

  bool is_identity() const noexcept { return sign_ == 0 && entries_.empty(); }

  friend bool operator==(const ExponentVector& a, const ExponentVector& b) {
    return a.sign_ == b.sign_ && a.entries_ == b.entries_;
  }

 private:
  std::uint64_t basis_id_ = 0;
  bool has_sign_ = false;
  int sign_ = 0;
  std::map<std::size_t, BigInt> entries_;
};

/// Exponent vector of n over the basis. With allow_extend, unseen prime
/// factors are appended to the basis; otherwise a leftover cofactor raises
/// BasisExceeded.
ExponentVector factor(const BigInt& n, PrimeBasis& basis, bool allow_extend);
/// Non-extending variant usable on a shared, read-only basis.
ExponentVector factor(const BigInt& n, const PrimeBasis& basis);

ExponentVector vec_add(const ExponentVector& a, const ExponentVector& b);
ExponentVector vec_sub(const ExponentVector& a, const ExponentVector& b);
ExponentVector vec_scale(const ExponentVector& a, const BigInt& k);

/// The rational number represented by v, in lowest terms.
Rational unfactor(const ExponentVector& v, const PrimeBasis& basis);

/// Prime factorization of |n| (n != 0) as ascending (prime, multiplicity)
/// pairs. Uses trial division followed by Pollard-Brent; verified by
/// multiplication. Throws FactorLimit when rho exhausts its iteration budget
/// on a composite cofactor.
std::vector<std::pair<BigInt, unsigned long>> prime_factorization(const BigInt& n);

/// Positive divisors of |n| in ascending order.
std::vector<BigInt> positive_divisors(const BigInt& n);

}  // namespace divseq
