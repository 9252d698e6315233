#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "keyneg/bytes.hpp"

namespace keyneg {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

/// Deterministic Miller-Rabin, exact for every 64-bit input.
bool is_prime(std::uint64_t n);

/// The prime modulus q. Construction rejects composite moduli.
class FieldParams {
 public:
  FieldParams() : q_(kMersenne61), name_("mersenne61") {}
  explicit FieldParams(std::uint64_t q, std::string name = {});

  static FieldParams mersenne61() { return FieldParams(kMersenne61, "mersenne61"); }

  std::uint64_t q() const { return q_; }
  const std::string& name() const { return name_; }

  std::uint64_t reduce(std::uint64_t x) const { return x % q_; }
  std::uint64_t add(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t sub(std::uint64_t a, std::uint64_t b) const;
  std::uint64_t mul(std::uint64_t a, std::uint64_t b) const;
  /// Throws std::invalid_argument for a == 0 mod q.
  std::uint64_t inverse(std::uint64_t a) const;

  /// Throws unless 0 < n < q, so n has an inverse.
  void require_node_count(std::uint64_t n) const;

  friend bool operator==(const FieldParams& a, const FieldParams& b) { return a.q_ == b.q_; }

 private:
  std::uint64_t q_;
  std::string name_;
};

/// Length-L vector over Z_q. Every element is kept fully reduced.
class FieldVector {
 public:
  FieldVector() = default;
  FieldVector(FieldParams params, std::vector<std::uint64_t> elems);
  static FieldVector zeros(const FieldParams& params, std::size_t length);

  const FieldParams& params() const { return params_; }
  std::size_t size() const { return elems_.size(); }
  std::span<const std::uint64_t> elems() const { return elems_; }
  std::uint64_t operator[](std::size_t i) const { return elems_[i]; }

  /// Mutable access for kernels; callers keep elements below q.
  std::span<std::uint64_t> mutable_elems() { return elems_; }

  /// Overwrite with zeros and release storage.
  void wipe();

  friend bool operator==(const FieldVector& a, const FieldVector& b) {
    return a.params_ == b.params_ && a.elems_ == b.elems_;
  }

 private:
  FieldParams params_;
  std::vector<std::uint64_t> elems_;
};

FieldVector add(const FieldVector& a, const FieldVector& b);
FieldVector sub(const FieldVector& a, const FieldVector& b);
/// Element-wise v * n^{-1}; requires 0 < n < q.
FieldVector scale_by_inverse(const FieldVector& v, std::uint64_t n);
/// acc += x in place.
void accumulate(FieldVector& acc, const FieldVector& x);
/// Field sum of equally shaped vectors; an empty list is rejected.
FieldVector sum(std::span<const FieldVector> vectors);

/// Canonical encoding: u64 LE length, then each residue as u64 LE.
void append_canonical(Bytes& out, const FieldVector& v);
Bytes canonical_bytes(const FieldVector& v);
/// Reads one canonical FieldVector; rejects residues >= q.
FieldVector read_field_vector(ByteReader& in, const FieldParams& params);

/// Fixed-point mapping between real updates and field residues.
class FixedPointCodec {
 public:
  FixedPointCodec(unsigned scale_bits, double clip_bound, std::uint64_t max_summands);
  static FixedPointCodec defaults() { return FixedPointCodec(16, 256.0, 1024); }

  unsigned scale_bits() const { return scale_bits_; }
  double scale() const { return scale_; }
  double clip_bound() const { return clip_bound_; }
  std::uint64_t max_summands() const { return max_summands_; }

  /// Throws unless max_summands * clip_bound * scale < q / 2.
  void check_headroom(const FieldParams& params) const;

 private:
  unsigned scale_bits_;
  double scale_;
  double clip_bound_;
  std::uint64_t max_summands_;
};

/// Values outside [-clip_bound, clip_bound] (and NaN) are clipped; the
/// count is added to *clipped when given.
FieldVector encode(std::span<const double> reals, const FixedPointCodec& codec,
                   const FieldParams& params, std::size_t* clipped = nullptr);
std::vector<double> decode(const FieldVector& v, const FixedPointCodec& codec);

/// Centered lift of a residue into [-q/2, q/2].
std::int64_t centered(std::uint64_t x, std::uint64_t q);

}  // namespace keyneg
