#include "divseq/numth.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>

#include "divseq/error.hpp"

namespace divseq {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ZeroInput: return "ZeroInput";
    case ErrorKind::NegativeWithoutSign: return "NegativeWithoutSign";
    case ErrorKind::BasisExceeded: return "BasisExceeded";
    case ErrorKind::FactorLimit: return "FactorLimit";
    case ErrorKind::BasisMismatch: return "BasisMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidParams: return "InvalidParams";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::SizeGuard: return "SizeGuard";
    case ErrorKind::MissingComponentOfOne: return "MissingComponentOfOne";
    case ErrorKind::InvalidCertificate: return "InvalidCertificate";
    case ErrorKind::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorKind::CorruptCertificate: return "CorruptCertificate";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

std::size_t BigIntHash::operator()(const BigInt& v) const noexcept {
  const mpz_srcptr z = v.get_mpz_t();
  const int n = z->_mp_size < 0 ? -z->_mp_size : z->_mp_size;
  std::size_t h = static_cast<std::size_t>(z->_mp_size) * 0x9e3779b97f4a7c15ULL;
  for (int i = 0; i < n; ++i) {
    h ^= static_cast<std::size_t>(z->_mp_d[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

BigInt parse_bigint(const std::string& text) {
  auto fail = [&] { throw Error(ErrorKind::ParseError, "not an integer: '" + text + "'"); };
  if (text.empty()) fail();
  auto is_digits = [](std::string_view s, bool allow_sign) {
    if (s.empty()) return false;
    std::size_t i = 0;
    if (allow_sign && (s[0] == '-' || s[0] == '+')) i = 1;
    if (i == s.size()) return false;
    return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
  };
  for (std::string_view sep : {"^", "e", "E"}) {
    const auto pos = text.find(sep);
    if (pos == std::string::npos) continue;
    const std::string base = text.substr(0, pos);
    const std::string exp = text.substr(pos + 1);
    if (!is_digits(base, true) || !is_digits(exp, false) || exp.size() > 6) fail();
    const unsigned long e = std::stoul(exp);
    if (sep == "^") {
      BigInt b(base, 10);
      BigInt r;
      mpz_pow_ui(r.get_mpz_t(), b.get_mpz_t(), e);
      return r;
    }
    BigInt r;
    mpz_ui_pow_ui(r.get_mpz_t(), 10, e);
    return BigInt(base, 10) * r;
  }
  if (!is_digits(text, true)) fail();
  return BigInt(text[0] == '+' ? text.substr(1) : text, 10);
}

std::vector<std::uint64_t> sieve_primes(std::uint64_t bound) {
  std::vector<std::uint64_t> primes;
  if (bound < 2) return primes;
  std::vector<bool> composite(bound + 1, false);
  for (std::uint64_t i = 2; i <= bound; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (std::uint64_t j = i * i; j <= bound; j += i) composite[j] = true;
  }
  return primes;
}

bool is_probable_prime(const BigInt& n) {
  // GMP runs Baillie-PSW before the Miller-Rabin rounds; deterministic below 2^64.
  return mpz_probab_prime_p(n.get_mpz_t(), 30) > 0;
}

namespace {

std::atomic<std::uint64_t> next_basis_id{1};

constexpr std::uint64_t kTrialBound = 1000000;

const std::vector<std::uint64_t>& trial_primes() {
  static const std::vector<std::uint64_t> primes = sieve_primes(kTrialBound);
  return primes;
}

// Total polynomial evaluations per split, across all restarts. Enough for
// factors up to roughly 10^10; harder cofactors are reported, not ground on.
constexpr std::uint64_t kRhoIterationLimit = 1u << 18;

BigInt pollard_brent(const BigInt& n) {
  if (mpz_even_p(n.get_mpz_t())) return 2;
  std::uint64_t work = 0;
  for (unsigned long c = 1;; ++c) {
    BigInt y = 2, x, g = 1, q = 1, ys;
    const unsigned long m = 128;
    unsigned long r = 1;
    auto f = [&](const BigInt& v) {
      if (++work > kRhoIterationLimit) {
        throw Error(ErrorKind::FactorLimit, "no factor of " + n.get_str() + " found within the rho budget");
      }
      BigInt t = v * v + c;
      mpz_mod(t.get_mpz_t(), t.get_mpz_t(), n.get_mpz_t());
      return t;
    };
    do {
      x = y;
      for (unsigned long i = 0; i < r; ++i) y = f(y);
      unsigned long k = 0;
      do {
        ys = y;
        const unsigned long lim = std::min(m, r - k);
        for (unsigned long i = 0; i < lim; ++i) {
          y = f(y);
          BigInt d = x - y;
          q = q * abs(d);
          mpz_mod(q.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
        }
        mpz_gcd(g.get_mpz_t(), q.get_mpz_t(), n.get_mpz_t());
        k += m;
      } while (k < r && g == 1);
      r *= 2;
    } while (g == 1);
    if (g == n) {
      do {
        ys = f(ys);
        BigInt d = abs(x - ys);
        mpz_gcd(g.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
      } while (g == 1);
    }
    if (g != n) return g;
  }
}

void split_composite(const BigInt& n, std::vector<BigInt>& out) {
  if (n == 1) return;
  if (is_probable_prime(n)) {
    out.push_back(n);
    return;
  }
  BigInt root;
  if (mpz_perfect_square_p(n.get_mpz_t())) {
    mpz_sqrt(root.get_mpz_t(), n.get_mpz_t());
    split_composite(root, out);
    split_composite(root, out);
    return;
  }
  const BigInt d = pollard_brent(n);
  split_composite(d, out);
  split_composite(n / d, out);
}

}  // namespace

PrimeBasis::PrimeBasis(bool includes_sign)
    : id_(next_basis_id.fetch_add(1)), includes_sign_(includes_sign) {}

PrimeBasis::PrimeBasis(const PrimeBasis& other) {
  std::shared_lock lock(other.mutex_);
  id_ = other.id_;
  includes_sign_ = other.includes_sign_;
  primes_ = other.primes_;
  index_ = other.index_;
}

PrimeBasis& PrimeBasis::operator=(const PrimeBasis& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mutex_);
  std::shared_lock other_lock(other.mutex_);
  id_ = other.id_;
  includes_sign_ = other.includes_sign_;
  primes_ = other.primes_;
  index_ = other.index_;
  return *this;
}

PrimeBasis::PrimeBasis(PrimeBasis&& other) noexcept
    : id_(other.id_),
      includes_sign_(other.includes_sign_),
      primes_(std::move(other.primes_)),
      index_(std::move(other.index_)) {}

PrimeBasis& PrimeBasis::operator=(PrimeBasis&& other) noexcept {
  id_ = other.id_;
  includes_sign_ = other.includes_sign_;
  primes_ = std::move(other.primes_);
  index_ = std::move(other.index_);
  return *this;
}

std::size_t PrimeBasis::size() const {
  std::shared_lock lock(mutex_);
  return primes_.size();
}

BigInt PrimeBasis::prime(std::size_t index) const {
  std::shared_lock lock(mutex_);
  if (index >= primes_.size()) {
    throw Error(ErrorKind::BasisMismatch, "basis index " + std::to_string(index) + " out of range");
  }
  return primes_[index];
}

std::vector<BigInt> PrimeBasis::primes() const {
  std::shared_lock lock(mutex_);
  return primes_;
}

std::optional<std::size_t> PrimeBasis::index_of(const BigInt& prime) const {
  std::shared_lock lock(mutex_);
  const auto it = index_.find(prime);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t PrimeBasis::append(const BigInt& prime) {
  if (prime < 2 || !is_probable_prime(prime)) {
    throw Error(ErrorKind::InvalidArgument, "basis entries must be prime, got " + prime.get_str());
  }
  std::unique_lock lock(mutex_);
  const auto it = index_.find(prime);
  if (it != index_.end()) return it->second;
  primes_.push_back(prime);
  index_.emplace(prime, primes_.size() - 1);
  return primes_.size() - 1;
}

BigInt ExponentVector::exponent(std::size_t index) const {
  const auto it = entries_.find(index);
  return it == entries_.end() ? BigInt(0) : it->second;
}

void ExponentVector::set_exponent(std::size_t index, const BigInt& value) {
  if (value == 0) {
    entries_.erase(index);
  } else {
    entries_[index] = value;
  }
}

void ExponentVector::add_exponent(std::size_t index, const BigInt& delta) {
  set_exponent(index, exponent(index) + delta);
}

void ExponentVector::set_sign_exponent(int value) { sign_ = ((value % 2) + 2) % 2; }

namespace {

void check_compatible(const ExponentVector& a, const ExponentVector& b) {
  if (a.basis_id() != 0 && b.basis_id() != 0 &&
      (a.basis_id() != b.basis_id() || a.has_sign() != b.has_sign())) {
    throw Error(ErrorKind::BasisMismatch, "exponent vectors belong to different bases");
  }
}

ExponentVector combine(const ExponentVector& a, const ExponentVector& b, int sign) {
  check_compatible(a, b);
  const std::uint64_t id = a.basis_id() != 0 ? a.basis_id() : b.basis_id();
  const bool has_sign = a.basis_id() != 0 ? a.has_sign() : b.has_sign();
  ExponentVector out(id, has_sign);
  for (const auto& [i, e] : a.entries()) out.set_exponent(i, e);
  for (const auto& [i, e] : b.entries()) out.add_exponent(i, sign * e);
  out.set_sign_exponent(a.sign_exponent() + b.sign_exponent());
  return out;
}

constexpr std::size_t kTrialBasisLimit = 64;

ExponentVector factor_impl(const BigInt& n, const PrimeBasis& basis, PrimeBasis* extend) {
  if (n == 0) throw Error(ErrorKind::ZeroInput, "cannot factor zero");
  if (n < 0 && !basis.includes_sign()) {
    throw Error(ErrorKind::NegativeWithoutSign,
                "negative value " + n.get_str() + " requires a basis with a sign generator");
  }
  ExponentVector out(basis.id(), basis.includes_sign());
  if (n < 0) out.set_sign_exponent(1);
  BigInt m = abs(n);

  // Small fixed bases: trial division by the basis alone, so an unfactorable
  // cofactor is reported without running rho on it.
  if (extend == nullptr && basis.size() <= kTrialBasisLimit) {
    const std::vector<BigInt> known = basis.primes();
    for (std::size_t i = 0; i < known.size() && m > 1; ++i) {
      unsigned long count = 0;
      while (mpz_divisible_p(m.get_mpz_t(), known[i].get_mpz_t())) {
        mpz_divexact(m.get_mpz_t(), m.get_mpz_t(), known[i].get_mpz_t());
        ++count;
      }
      if (count) out.set_exponent(i, count);
    }
    if (m != 1) throw Error(ErrorKind::BasisExceeded, "leftover cofactor " + m.get_str());
    return out;
  }
  for (const auto& [prime, mult] : prime_factorization(m)) {
    std::optional<std::size_t> idx = basis.index_of(prime);
    if (!idx) {
      if (extend == nullptr) {
        throw Error(ErrorKind::BasisExceeded, "prime " + prime.get_str() + " is outside the basis");
      }
      idx = extend->append(prime);
    }
    out.add_exponent(*idx, mult);
  }
  return out;
}

}  // namespace

ExponentVector vec_add(const ExponentVector& a, const ExponentVector& b) { return combine(a, b, 1); }

ExponentVector vec_sub(const ExponentVector& a, const ExponentVector& b) { return combine(a, b, -1); }

ExponentVector vec_scale(const ExponentVector& a, const BigInt& k) {
  ExponentVector out(a.basis_id(), a.has_sign());
  for (const auto& [i, e] : a.entries()) out.set_exponent(i, e * k);
  const BigInt s = a.sign_exponent() * k;
  out.set_sign_exponent(mpz_odd_p(s.get_mpz_t()) ? 1 : 0);
  return out;
}

std::vector<std::pair<BigInt, unsigned long>> prime_factorization(const BigInt& n) {
  if (n == 0) throw Error(ErrorKind::ZeroInput, "cannot factor zero");
  BigInt m = abs(n);
  std::vector<BigInt> found;
  std::size_t since_check = 0;
  for (const std::uint64_t p : trial_primes()) {
    if (m == 1) break;
    const BigInt bp(static_cast<unsigned long>(p));
    if (bp * bp > m) {
      found.push_back(m);
      m = 1;
      break;
    }
    bool divided = false;
    while (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
      mpz_divexact_ui(m.get_mpz_t(), m.get_mpz_t(), p);
      found.push_back(bp);
      divided = true;
    }
    if (divided || ++since_check == 512) {
      since_check = 0;
      if (m > 1 && is_probable_prime(m)) {
        found.push_back(m);
        m = 1;
        break;
      }
    }
  }
  split_composite(m, found);
  std::sort(found.begin(), found.end());
  std::vector<std::pair<BigInt, unsigned long>> out;
  BigInt check = 1;
  for (const BigInt& p : found) {
    check *= p;
    if (!out.empty() && out.back().first == p) {
      ++out.back().second;
    } else {
      out.emplace_back(p, 1);
    }
  }
  if (check != abs(n)) {
    throw Error(ErrorKind::Internal, "factorization of " + n.get_str() + " failed verification");
  }
  return out;
}

std::vector<BigInt> positive_divisors(const BigInt& n) {
  std::vector<BigInt> divisors{1};
  for (const auto& [p, mult] : prime_factorization(n)) {
    const std::size_t existing = divisors.size();
    BigInt pk = 1;
    for (unsigned long k = 1; k <= mult; ++k) {
      pk *= p;
      for (std::size_t i = 0; i < existing; ++i) divisors.push_back(divisors[i] * pk);
    }
  }
  std::sort(divisors.begin(), divisors.end());
  return divisors;
}

ExponentVector factor(const BigInt& n, PrimeBasis& basis, bool allow_extend) {
  ExponentVector v = factor_impl(n, basis, allow_extend ? &basis : nullptr);
  if (unfactor(v, basis) != Rational(n)) {
    throw Error(ErrorKind::Internal, "factor/unfactor mismatch for " + n.get_str());
  }
  return v;
}

ExponentVector factor(const BigInt& n, const PrimeBasis& basis) {
  return factor_impl(n, basis, nullptr);
}

Rational unfactor(const ExponentVector& v, const PrimeBasis& basis) {
  if (v.basis_id() != 0 && v.basis_id() != basis.id()) {
    throw Error(ErrorKind::BasisMismatch, "vector does not belong to this basis");
  }
  BigInt num = 1, den = 1;
  for (const auto& [i, e] : v.entries()) {
    const BigInt p = basis.prime(i);
    if (!mpz_fits_ulong_p(BigInt(abs(e)).get_mpz_t())) {
      throw Error(ErrorKind::SizeGuard, "exponent too large to expand");
    }
    BigInt pw;
    mpz_pow_ui(pw.get_mpz_t(), p.get_mpz_t(), BigInt(abs(e)).get_ui());
    if (e > 0) {
      num *= pw;
    } else {
      den *= pw;
    }
  }
  if (v.sign_exponent() != 0) num = -num;
  Rational r(num, den);
  r.canonicalize();
  return r;
}

}  // namespace divseq
