#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "keyneg/bytes.hpp"
#include "keyneg/field.hpp"
#include "keyneg/ids.hpp"

namespace keyneg {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> msg);

/// ChaCha20 keystream generator. Seeded instances replay exactly; each
/// simulated party owns one and never shares it across threads.
class Rng {
 public:
  explicit Rng(const std::array<std::uint8_t, 32>& key);
  static Rng from_seed(std::uint64_t seed, std::uint64_t stream = 0);
  static Rng from_system();

  void fill(std::span<std::uint8_t> out);
  std::uint64_t next_u64();
  /// Uniform in [0, bound) by rejection sampling.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform();
  /// Independent child stream; the parent advances.
  Rng fork();

 private:
  void refill();

  std::array<std::uint8_t, 32> key_;
  std::uint64_t nonce_ = 0;
  std::array<std::uint8_t, 1024> buf_{};
  std::size_t pos_ = sizeof(buf_);
};

// --- signatures ----------------------------------------------------------

struct KeyPair {
  Bytes priv;
  Bytes pub;
  NodeId owner;
};

struct Signature {
  Bytes bytes;
  friend bool operator==(const Signature&, const Signature&) = default;
};

/// UF-CMA signature scheme interface.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual std::string name() const = 0;
  virtual std::size_t signature_size() const = 0;
  virtual KeyPair generate(Rng& rng, NodeId owner) const = 0;
  virtual Signature sign(std::span<const std::uint8_t> priv, std::span<const std::uint8_t> msg) const = 0;
  /// Malformed keys or signatures verify as false.
  virtual bool verify(std::span<const std::uint8_t> pub, std::span<const std::uint8_t> msg,
                      const Signature& sig) const = 0;
};

/// Ed25519 (RFC 8032).
class Ed25519 final : public SignatureScheme {
 public:
  std::string name() const override { return "ed25519"; }
  std::size_t signature_size() const override { return 64; }
  KeyPair generate(Rng& rng, NodeId owner) const override;
  Signature sign(std::span<const std::uint8_t> priv, std::span<const std::uint8_t> msg) const override;
  bool verify(std::span<const std::uint8_t> pub, std::span<const std::uint8_t> msg,
              const Signature& sig) const override;
};

const SignatureScheme& default_signature_scheme();

// --- MAC / hash ----------------------------------------------------------

using MacTag = std::array<std::uint8_t, 32>;

/// HMAC-SHA256. Throws std::invalid_argument on an empty key.
MacTag mac(std::span<const std::uint8_t> key, std::span<const std::uint8_t> msg);

/// MAC keyed by a field element (its 8-byte LE encoding).
MacTag mac_with_element(std::uint64_t key, std::span<const std::uint8_t> msg);

/// SHA-256 digest read as a little-endian 256-bit integer, reduced mod q.
std::uint64_t hash_to_field(std::span<const std::uint8_t> msg, const FieldParams& params);

// --- masks -----------------------------------------------------------------

/// L independent uniform residues drawn from rng.
FieldVector fresh_mask(Rng& rng, std::size_t length, const FieldParams& params);

using LongTermSeed = std::array<std::uint8_t, 32>;

/// Baseline mask: element e is HMAC(seed, round || e) reduced mod q.
/// A pure function of (seed, round, length, q).
FieldVector baseline_prf_mask(const LongTermSeed& seed, std::uint64_t round, std::size_t length,
                              const FieldParams& params);
FieldVector baseline_prf_mask_serial(const LongTermSeed& seed, std::uint64_t round,
                                     std::size_t length, const FieldParams& params);

}  // namespace keyneg
