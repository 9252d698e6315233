#include "keyneg/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <stdexcept>

#include "keyneg/kernels.hpp"

namespace keyneg {

namespace {

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_sodium() { static const SodiumInit init; }

std::array<std::uint8_t, 8> nonce_bytes(std::uint64_t n) {
  std::array<std::uint8_t, 8> out{};
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(n >> (8 * i));
  return out;
}

std::uint64_t reduce_le256(const std::uint8_t* digest, std::uint64_t q) {
  kernels::u128 r = 0;
  for (int i = 31; i >= 0; --i) r = ((r << 8) | digest[i]) % q;
  return static_cast<std::uint64_t>(r);
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> msg) {
  ensure_sodium();
  Digest d;
  crypto_hash_sha256(d.data(), msg.data(), msg.size());
  return d;
}

// --- Rng -------------------------------------------------------------------

Rng::Rng(const std::array<std::uint8_t, 32>& key) : key_(key) { ensure_sodium(); }

Rng Rng::from_seed(std::uint64_t seed, std::uint64_t stream) {
  Bytes material = {'k', 'e', 'y', 'n', 'e', 'g', '.', 'r', 'n', 'g'};
  put_u64(material, seed);
  put_u64(material, stream);
  return Rng(sha256(material));
}

Rng Rng::from_system() {
  ensure_sodium();
  std::array<std::uint8_t, 32> key;
  randombytes_buf(key.data(), key.size());
  return Rng(key);
}

void Rng::refill() {
  const auto nonce = nonce_bytes(nonce_++);
  crypto_stream_chacha20(buf_.data(), buf_.size(), nonce.data(), key_.data());
  pos_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
  if (out.size() >= buf_.size()) {
    const auto nonce = nonce_bytes(nonce_++);
    crypto_stream_chacha20(out.data(), out.size(), nonce.data(), key_.data());
    return;
  }
  std::size_t done = 0;
  while (done < out.size()) {
    if (pos_ == buf_.size()) refill();
    const std::size_t n = std::min(out.size() - done, buf_.size() - pos_);
    std::memcpy(out.data() + done, buf_.data() + pos_, n);
    pos_ += n;
    done += n;
  }
}

std::uint64_t Rng::next_u64() {
  std::array<std::uint8_t, 8> b;
  fill(b);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::below(0)");
  if (bound == 1) return 0;
  const unsigned bits = 64 - static_cast<unsigned>(std::countl_zero(bound - 1));
  const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  for (;;) {
    const std::uint64_t v = next_u64() & mask;
    if (v < bound) return v;
  }
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

Rng Rng::fork() {
  std::array<std::uint8_t, 32> key;
  fill(key);
  return Rng(key);
}

// --- Ed25519 ---------------------------------------------------------------

KeyPair Ed25519::generate(Rng& rng, NodeId owner) const {
  ensure_sodium();
  std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed;
  rng.fill(seed);
  KeyPair kp{Bytes(crypto_sign_SECRETKEYBYTES), Bytes(crypto_sign_PUBLICKEYBYTES), owner};
  crypto_sign_seed_keypair(kp.pub.data(), kp.priv.data(), seed.data());
  sodium_memzero(seed.data(), seed.size());
  return kp;
}

Signature Ed25519::sign(std::span<const std::uint8_t> priv, std::span<const std::uint8_t> msg) const {
  ensure_sodium();
  if (priv.size() != crypto_sign_SECRETKEYBYTES) throw std::invalid_argument("malformed Ed25519 private key");
  Signature sig{Bytes(crypto_sign_BYTES)};
  crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), priv.data());
  return sig;
}

bool Ed25519::verify(std::span<const std::uint8_t> pub, std::span<const std::uint8_t> msg,
                     const Signature& sig) const {
  ensure_sodium();
  if (pub.size() != crypto_sign_PUBLICKEYBYTES || sig.bytes.size() != crypto_sign_BYTES) return false;
  return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(), pub.data()) == 0;
}

const SignatureScheme& default_signature_scheme() {
  static const Ed25519 scheme;
  return scheme;
}

// --- MAC / hash -----------------------------------------------------------

MacTag mac(std::span<const std::uint8_t> key, std::span<const std::uint8_t> msg) {
  ensure_sodium();
  if (key.empty()) throw std::invalid_argument("MAC key must be nonempty");
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, msg.data(), msg.size());
  MacTag tag;
  crypto_auth_hmacsha256_final(&st, tag.data());
  return tag;
}

MacTag mac_with_element(std::uint64_t key, std::span<const std::uint8_t> msg) {
  const auto k = nonce_bytes(key);
  return mac(k, msg);
}

std::uint64_t hash_to_field(std::span<const std::uint8_t> msg, const FieldParams& params) {
  const Digest d = sha256(msg);
  return reduce_le256(d.data(), params.q());
}

// --- masks -----------------------------------------------------------------

static_assert(std::endian::native == std::endian::little, "fresh_mask reads keystream as LE words");

FieldVector fresh_mask(Rng& rng, std::size_t length, const FieldParams& params) {
  const std::uint64_t q = params.q();
  const unsigned bits = 64 - static_cast<unsigned>(std::countl_zero(q - 1));
  const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
  std::vector<std::uint64_t> elems(length);
  rng.fill(std::span(reinterpret_cast<std::uint8_t*>(elems.data()), length * 8));
  for (auto& e : elems) {
    e &= mask;
    while (e >= q) e = rng.next_u64() & mask;
  }
  return FieldVector(params, std::move(elems));
}

namespace {

std::uint64_t prf_element(const crypto_auth_hmacsha256_state& keyed, std::uint64_t round,
                          std::uint64_t index, std::uint64_t q) {
  crypto_auth_hmacsha256_state st = keyed;
  std::array<std::uint8_t, 16> in;
  for (int i = 0; i < 8; ++i) {
    in[i] = static_cast<std::uint8_t>(round >> (8 * i));
    in[8 + i] = static_cast<std::uint8_t>(index >> (8 * i));
  }
  crypto_auth_hmacsha256_update(&st, in.data(), in.size());
  std::array<std::uint8_t, 32> out;
  crypto_auth_hmacsha256_final(&st, out.data());
  return reduce_le256(out.data(), q);
}

crypto_auth_hmacsha256_state keyed_state(const LongTermSeed& seed) {
  ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, seed.data(), seed.size());
  return st;
}

}  // namespace

FieldVector baseline_prf_mask_serial(const LongTermSeed& seed, std::uint64_t round,
                                     std::size_t length, const FieldParams& params) {
  const auto keyed = keyed_state(seed);
  std::vector<std::uint64_t> elems(length);
  for (std::size_t e = 0; e < length; ++e) elems[e] = prf_element(keyed, round, e, params.q());
  return FieldVector(params, std::move(elems));
}

FieldVector baseline_prf_mask(const LongTermSeed& seed, std::uint64_t round, std::size_t length,
                              const FieldParams& params) {
  const auto keyed = keyed_state(seed);
  std::vector<std::uint64_t> elems(length);
  const auto n = static_cast<std::int64_t>(length);
  const std::uint64_t q = params.q();
#pragma omp parallel for schedule(static) if (length >= 4096)
  for (std::int64_t e = 0; e < n; ++e) elems[e] = prf_element(keyed, round, static_cast<std::uint64_t>(e), q);
  return FieldVector(params, std::move(elems));
}

}  // namespace keyneg
