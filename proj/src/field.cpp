#include "keyneg/field.hpp"

#include <cmath>
#include <utility>

#include "keyneg/kernels.hpp"

namespace keyneg {

namespace k = kernels;

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL,
                          31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These bases are sufficient for n < 3.3e24.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL,
                          31ULL, 37ULL}) {
    std::uint64_t x = k::pow_mod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = k::mul_mod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

FieldParams::FieldParams(std::uint64_t q, std::string name) : q_(q), name_(std::move(name)) {
  if (!is_prime(q)) throw std::invalid_argument("field modulus " + std::to_string(q) + " is not prime");
}

std::uint64_t FieldParams::add(std::uint64_t a, std::uint64_t b) const { return k::add_mod(a, b, q_); }
std::uint64_t FieldParams::sub(std::uint64_t a, std::uint64_t b) const { return k::sub_mod(a, b, q_); }
std::uint64_t FieldParams::mul(std::uint64_t a, std::uint64_t b) const { return k::mul_mod(a, b, q_); }

std::uint64_t FieldParams::inverse(std::uint64_t a) const {
  a %= q_;
  if (a == 0) throw std::invalid_argument("zero has no inverse");
  return k::pow_mod(a, q_ - 2, q_);
}

void FieldParams::require_node_count(std::uint64_t n) const {
  if (n == 0 || n >= q_)
    throw std::invalid_argument("node count " + std::to_string(n) + " must satisfy 0 < n < q");
}

FieldVector::FieldVector(FieldParams params, std::vector<std::uint64_t> elems)
    : params_(std::move(params)), elems_(std::move(elems)) {
  for (auto e : elems_)
    if (e >= params_.q()) throw std::invalid_argument("field element out of range");
}

FieldVector FieldVector::zeros(const FieldParams& params, std::size_t length) {
  return FieldVector(params, std::vector<std::uint64_t>(length, 0));
}

void FieldVector::wipe() {
  // volatile store so the zeroing is not elided before deallocation
  volatile std::uint64_t* p = elems_.data();
  for (std::size_t i = 0; i < elems_.size(); ++i) p[i] = 0;
  elems_.clear();
  elems_.shrink_to_fit();
}

namespace {
void check_compatible(const FieldVector& a, const FieldVector& b) {
  if (!(a.params() == b.params())) throw std::invalid_argument("field vectors use different moduli");
  if (a.size() != b.size()) throw std::invalid_argument("field vector length mismatch");
}
}  // namespace

FieldVector add(const FieldVector& a, const FieldVector& b) {
  check_compatible(a, b);
  FieldVector out = FieldVector::zeros(a.params(), a.size());
  k::parallel::add(a.elems(), b.elems(), out.mutable_elems(), a.params().q());
  return out;
}

FieldVector sub(const FieldVector& a, const FieldVector& b) {
  check_compatible(a, b);
  FieldVector out = FieldVector::zeros(a.params(), a.size());
  k::parallel::sub(a.elems(), b.elems(), out.mutable_elems(), a.params().q());
  return out;
}

FieldVector scale_by_inverse(const FieldVector& v, std::uint64_t n) {
  v.params().require_node_count(n);
  FieldVector out = FieldVector::zeros(v.params(), v.size());
  k::parallel::scale(v.elems(), v.params().inverse(n), out.mutable_elems(), v.params().q());
  return out;
}

void accumulate(FieldVector& acc, const FieldVector& x) {
  check_compatible(acc, x);
  k::parallel::accumulate(acc.mutable_elems(), x.elems(), acc.params().q());
}

FieldVector sum(std::span<const FieldVector> vectors) {
  if (vectors.empty()) throw std::invalid_argument("sum of an empty vector list");
  std::vector<std::span<const std::uint64_t>> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) {
    check_compatible(vectors.front(), v);
    rows.push_back(v.elems());
  }
  FieldVector out = FieldVector::zeros(vectors.front().params(), vectors.front().size());
  k::parallel::sum_rows(rows, out.mutable_elems(), out.params().q());
  return out;
}

void append_canonical(Bytes& out, const FieldVector& v) {
  out.reserve(out.size() + 8 + 8 * v.size());
  put_u64(out, v.size());
  for (auto e : v.elems()) put_u64(out, e);
}

Bytes canonical_bytes(const FieldVector& v) {
  Bytes out;
  append_canonical(out, v);
  return out;
}

FieldVector read_field_vector(ByteReader& in, const FieldParams& params) {
  const std::uint64_t len = in.u64();
  if (len > in.remaining() / 8) throw Truncated();
  std::vector<std::uint64_t> elems(len);
  for (auto& e : elems) {
    e = in.u64();
    if (e >= params.q()) throw std::invalid_argument("non-canonical residue");
  }
  return FieldVector(params, std::move(elems));
}

FixedPointCodec::FixedPointCodec(unsigned scale_bits, double clip_bound, std::uint64_t max_summands)
    : scale_bits_(scale_bits),
      scale_(std::ldexp(1.0, static_cast<int>(scale_bits))),
      clip_bound_(clip_bound),
      max_summands_(max_summands) {
  if (scale_bits > 52) throw std::invalid_argument("scale exceeds double precision");
  if (!(clip_bound > 0.0)) throw std::invalid_argument("clip bound must be positive");
  if (max_summands == 0) throw std::invalid_argument("max_summands must be positive");
}

void FixedPointCodec::check_headroom(const FieldParams& params) const {
  const long double worst = static_cast<long double>(max_summands_) * clip_bound_ * scale_;
  if (!(worst < static_cast<long double>(params.q()) / 2))
    throw std::invalid_argument("codec would wrap around: max_summands * clip_bound * scale >= q/2");
}

std::int64_t centered(std::uint64_t x, std::uint64_t q) {
  if (x > q / 2) return -static_cast<std::int64_t>(q - x);
  return static_cast<std::int64_t>(x);
}

FieldVector encode(std::span<const double> reals, const FixedPointCodec& codec,
                   const FieldParams& params, std::size_t* clipped) {
  codec.check_headroom(params);
  const std::uint64_t q = params.q();
  std::vector<std::uint64_t> elems(reals.size());
  std::size_t clip_count = 0;
  for (std::size_t i = 0; i < reals.size(); ++i) {
    double r = reals[i];
    if (std::isnan(r)) {
      r = 0.0;
      ++clip_count;
    } else if (r > codec.clip_bound()) {
      r = codec.clip_bound();
      ++clip_count;
    } else if (r < -codec.clip_bound()) {
      r = -codec.clip_bound();
      ++clip_count;
    }
    const std::int64_t v = std::llround(r * codec.scale());
    elems[i] = v >= 0 ? static_cast<std::uint64_t>(v) % q : q - static_cast<std::uint64_t>(-v);
  }
  if (clipped) *clipped += clip_count;
  return FieldVector(params, std::move(elems));
}

std::vector<double> decode(const FieldVector& v, const FixedPointCodec& codec) {
  std::vector<double> out(v.size());
  const std::uint64_t q = v.params().q();
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = static_cast<double>(centered(v[i], q)) / codec.scale();
  return out;
}

}  // namespace keyneg
