// Copyright 2026 The nullwm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nullwm/crypto.hpp"

#include <openssl/bio.h>
#include <openssl/bn.h>
#include <openssl/core_names.h>
#include <openssl/err.h>
#include <openssl/evp.h>
#include <openssl/param_build.h>
#include <openssl/pem.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nullwm/error.hpp"

namespace nullwm {

namespace detail {
struct KeyHandle {
  EVP_PKEY* pkey = nullptr;
  explicit KeyHandle(EVP_PKEY* k) : pkey(k) {}
  KeyHandle(const KeyHandle&) = delete;
  KeyHandle& operator=(const KeyHandle&) = delete;
  ~KeyHandle() { EVP_PKEY_free(pkey); }
};
}  // namespace detail

namespace {

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using BioPtr = std::unique_ptr<BIO, Deleter<BIO, BIO_free_all>>;
using BnPtr = std::unique_ptr<BIGNUM, Deleter<BIGNUM, BN_free>>;
using BnCtxPtr = std::unique_ptr<BN_CTX, Deleter<BN_CTX, BN_CTX_free>>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, Deleter<EVP_MD_CTX, EVP_MD_CTX_free>>;
using PkeyCtxPtr =
    std::unique_ptr<EVP_PKEY_CTX, Deleter<EVP_PKEY_CTX, EVP_PKEY_CTX_free>>;
using ParamBldPtr =
    std::unique_ptr<OSSL_PARAM_BLD, Deleter<OSSL_PARAM_BLD, OSSL_PARAM_BLD_free>>;
using ParamPtr = std::unique_ptr<OSSL_PARAM, Deleter<OSSL_PARAM, OSSL_PARAM_free>>;

std::string openssl_error() {
  const unsigned long code = ERR_get_error();
  ERR_clear_error();
  if (code == 0) return "unknown OpenSSL error";
  char buf[256];
  ERR_error_string_n(code, buf, sizeof(buf));
  return buf;
}

std::shared_ptr<const detail::KeyHandle> wrap(EVP_PKEY* pkey) {
  return std::make_shared<const detail::KeyHandle>(pkey);
}

std::string bio_to_string(BIO* bio) {
  char* data = nullptr;
  const long len = BIO_get_mem_data(bio, &data);
  return std::string(data, static_cast<std::size_t>(len));
}

bool is_rsa(const EVP_PKEY* pkey) {
  return EVP_PKEY_get_base_id(pkey) == EVP_PKEY_RSA;
}

// SHA256 counter-mode byte stream used for seeded prime search.
class HashStream {
 public:
  explicit HashStream(std::uint64_t seed) : seed_(seed) {}

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == block_.size()) refill();
      b = block_[pos_++];
    }
  }

 private:
  void refill() {
    std::string msg = "nullwm-rsa-keygen";
    for (int i = 0; i < 8; ++i) msg.push_back(static_cast<char>(seed_ >> (8 * i)));
    for (int i = 0; i < 8; ++i) msg.push_back(static_cast<char>(counter_ >> (8 * i)));
    ++counter_;
    block_ = sha256(msg);
    pos_ = 0;
  }

  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  Digest block_{};
  std::size_t pos_ = 32;
};

BnPtr deterministic_prime(HashStream& stream, int bits, const BIGNUM* e,
                          BN_CTX* ctx) {
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(bits / 8));
  stream.fill(raw);
  raw.front() |= 0xC0;  // top two bits set so p*q has exactly 2*bits bits
  raw.back() |= 0x01;
  BnPtr candidate(BN_bin2bn(raw.data(), static_cast<int>(raw.size()), nullptr));
  BnPtr pm1(BN_new());
  BnPtr g(BN_new());
  if (!candidate || !pm1 || !g) throw KeyError("BN allocation failed");
  for (;;) {
    if (BN_check_prime(candidate.get(), ctx, nullptr) == 1) {
      BN_sub(pm1.get(), candidate.get(), BN_value_one());
      BN_gcd(g.get(), pm1.get(), e, ctx);
      if (BN_is_one(g.get())) return candidate;
    }
    BN_add_word(candidate.get(), 2);
  }
}

EVP_PKEY* seeded_rsa(std::uint64_t seed) {
  BnCtxPtr ctx(BN_CTX_new());
  BnPtr e(BN_new());
  BN_set_word(e.get(), RSA_F4);
  HashStream stream(seed);
  BnPtr p = deterministic_prime(stream, kRsaModulusBits / 2, e.get(), ctx.get());
  BnPtr q = deterministic_prime(stream, kRsaModulusBits / 2, e.get(), ctx.get());
  while (BN_cmp(p.get(), q.get()) == 0) {
    q = deterministic_prime(stream, kRsaModulusBits / 2, e.get(), ctx.get());
  }
  if (BN_cmp(p.get(), q.get()) < 0) std::swap(p, q);

  BnPtr n(BN_new()), d(BN_new()), dp(BN_new()), dq(BN_new()), qinv(BN_new());
  BnPtr p1(BN_new()), q1(BN_new()), phi(BN_new()), g(BN_new()), lambda(BN_new());
  BN_mul(n.get(), p.get(), q.get(), ctx.get());
  BN_sub(p1.get(), p.get(), BN_value_one());
  BN_sub(q1.get(), q.get(), BN_value_one());
  BN_mul(phi.get(), p1.get(), q1.get(), ctx.get());
  BN_gcd(g.get(), p1.get(), q1.get(), ctx.get());
  BN_div(lambda.get(), nullptr, phi.get(), g.get(), ctx.get());
  if (!BN_mod_inverse(d.get(), e.get(), lambda.get(), ctx.get())) {
    throw KeyError("seeded RSA: no modular inverse for e");
  }
  BN_mod(dp.get(), d.get(), p1.get(), ctx.get());
  BN_mod(dq.get(), d.get(), q1.get(), ctx.get());
  BN_mod_inverse(qinv.get(), q.get(), p.get(), ctx.get());

  ParamBldPtr bld(OSSL_PARAM_BLD_new());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_N, n.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_E, e.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_D, d.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR1, p.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_FACTOR2, q.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT1, dp.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_EXPONENT2, dq.get());
  OSSL_PARAM_BLD_push_BN(bld.get(), OSSL_PKEY_PARAM_RSA_COEFFICIENT1, qinv.get());
  ParamPtr params(OSSL_PARAM_BLD_to_param(bld.get()));

  PkeyCtxPtr pctx(EVP_PKEY_CTX_new_from_name(nullptr, "RSA", nullptr));
  EVP_PKEY* pkey = nullptr;
  if (!pctx || EVP_PKEY_fromdata_init(pctx.get()) <= 0 ||
      EVP_PKEY_fromdata(pctx.get(), &pkey, EVP_PKEY_KEYPAIR, params.get()) <= 0) {
    throw KeyError("seeded RSA: " + openssl_error());
  }
  return pkey;
}

PublicKey public_part(const EVP_PKEY* pkey) {
  unsigned char* der = nullptr;
  const int len = i2d_PUBKEY(const_cast<EVP_PKEY*>(pkey), &der);
  if (len <= 0) throw KeyError("cannot encode public key: " + openssl_error());
  const unsigned char* cursor = der;
  EVP_PKEY* pub = d2i_PUBKEY(nullptr, &cursor, len);
  OPENSSL_free(der);
  if (!pub) throw KeyError("cannot decode public key: " + openssl_error());
  return PublicKey(wrap(pub));
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw KeyError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace

Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("SHA256 failed: " + openssl_error());
  }
  return out;
}

Digest sha256(std::string_view data) {
  return sha256(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
}

std::string to_hex(std::span<const std::uint8_t> data) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (auto b : data) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xF]);
  }
  return out;
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw FormatError("base64: length not a multiple of 4");
  Bytes out(3 * clean.size() / 4);
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw FormatError("base64: invalid characters");
  std::size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

PrivateKey PrivateKey::from_pem(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  EVP_PKEY* pkey = PEM_read_bio_PrivateKey(bio.get(), nullptr, nullptr, nullptr);
  if (!pkey) throw KeyError("invalid private key PEM: " + openssl_error());
  if (!is_rsa(pkey)) {
    EVP_PKEY_free(pkey);
    throw KeyError("private key is not RSA");
  }
  return PrivateKey(wrap(pkey));
}

std::string PrivateKey::to_pem() const {
  if (!handle_) throw KeyError("empty private key");
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PrivateKey(bio.get(), handle_->pkey, nullptr, nullptr, 0,
                               nullptr, nullptr) != 1) {
    throw KeyError("cannot encode private key: " + openssl_error());
  }
  return bio_to_string(bio.get());
}

PublicKey PublicKey::from_pem(std::string_view pem) {
  BioPtr bio(BIO_new_mem_buf(pem.data(), static_cast<int>(pem.size())));
  EVP_PKEY* pkey = PEM_read_bio_PUBKEY(bio.get(), nullptr, nullptr, nullptr);
  if (!pkey) throw KeyError("invalid public key PEM: " + openssl_error());
  if (!is_rsa(pkey)) {
    EVP_PKEY_free(pkey);
    throw KeyError("public key is not RSA");
  }
  return PublicKey(wrap(pkey));
}

std::string PublicKey::to_pem() const {
  if (!handle_) throw KeyError("empty public key");
  BioPtr bio(BIO_new(BIO_s_mem()));
  if (PEM_write_bio_PUBKEY(bio.get(), handle_->pkey) != 1) {
    throw KeyError("cannot encode public key: " + openssl_error());
  }
  return bio_to_string(bio.get());
}

std::string PublicKey::key_id() const {
  if (!handle_) throw KeyError("empty public key");
  unsigned char* der = nullptr;
  const int len = i2d_PUBKEY(handle_->pkey, &der);
  if (len <= 0) throw KeyError("cannot encode public key: " + openssl_error());
  const Digest d = sha256(std::span<const std::uint8_t>(der, static_cast<std::size_t>(len)));
  OPENSSL_free(der);
  return to_hex(std::span<const std::uint8_t>(d.data(), 8));
}

OwnerKeys generate_keys(std::optional<std::uint64_t> seed) {
  EVP_PKEY* pkey = nullptr;
  if (seed) {
    pkey = seeded_rsa(*seed);
  } else {
    pkey = EVP_RSA_gen(kRsaModulusBits);
    if (!pkey) throw KeyError("RSA key generation failed: " + openssl_error());
  }
  OwnerKeys keys;
  keys.private_key = PrivateKey(wrap(pkey));
  keys.public_key = public_part(pkey);
  keys.key_id = keys.public_key.key_id();
  return keys;
}

void write_keys(const OwnerKeys& keys, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / kPrivateKeyFile, keys.private_key.to_pem());
  std::filesystem::permissions(dir / kPrivateKeyFile,
                               std::filesystem::perms::owner_read |
                                   std::filesystem::perms::owner_write,
                               ec);
  write_text(dir / kPublicKeyFile, keys.public_key.to_pem());
  write_text(dir / kKeyIdFile, keys.key_id + "\n");
}

OwnerKeys read_keys(const std::filesystem::path& dir) {
  OwnerKeys keys;
  keys.private_key = PrivateKey::from_pem(read_text(dir / kPrivateKeyFile));
  keys.public_key = PublicKey::from_pem(read_text(dir / kPublicKeyFile));
  keys.key_id = keys.public_key.key_id();
  return keys;
}

VerifierString::VerifierString(std::string owner_id, std::string timestamp)
    : owner_id_(std::move(owner_id)), timestamp_(std::move(timestamp)) {
  if (owner_id_.empty()) throw ValidationError("owner_id must not be empty");
  if (owner_id_.find('|') != std::string::npos) {
    throw ValidationError("owner_id must not contain '|'");
  }
  if (timestamp_.empty()) throw ValidationError("timestamp must not be empty");
  encoded_ = owner_id_ + "|" + timestamp_;
}

std::string utc_timestamp_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Bytes sign(const PrivateKey& key, const VerifierString& verifier) {
  if (key.empty()) throw KeyError("empty private key");
  EVP_PKEY* pkey = key.handle()->pkey;
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  if (EVP_DigestSignInit(md.get(), &pctx, EVP_sha256(), nullptr, pkey) != 1 ||
      EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING) != 1) {
    throw KeyError("cannot initialise signer: " + openssl_error());
  }
  const auto& msg = verifier.encoded();
  std::size_t len = 0;
  if (EVP_DigestSign(md.get(), nullptr, &len,
                     reinterpret_cast<const unsigned char*>(msg.data()),
                     msg.size()) != 1) {
    throw KeyError("signing failed: " + openssl_error());
  }
  Bytes sig(len);
  if (EVP_DigestSign(md.get(), sig.data(), &len,
                     reinterpret_cast<const unsigned char*>(msg.data()),
                     msg.size()) != 1) {
    throw KeyError("signing failed: " + openssl_error());
  }
  sig.resize(len);
  return sig;
}

bool verify_sig(const PublicKey& key, std::span<const std::uint8_t> signature,
                const VerifierString& verifier) noexcept {
  if (key.empty() || signature.empty()) return false;
  MdCtxPtr md(EVP_MD_CTX_new());
  EVP_PKEY_CTX* pctx = nullptr;
  bool ok = md &&
            EVP_DigestVerifyInit(md.get(), &pctx, EVP_sha256(), nullptr,
                                 key.handle()->pkey) == 1 &&
            EVP_PKEY_CTX_set_rsa_padding(pctx, RSA_PKCS1_PADDING) == 1;
  if (ok) {
    const auto& msg = verifier.encoded();
    ok = EVP_DigestVerify(md.get(), signature.data(), signature.size(),
                          reinterpret_cast<const unsigned char*>(msg.data()),
                          msg.size()) == 1;
  }
  ERR_clear_error();
  return ok;
}

OwnershipCredential make_credential(const OwnerKeys& keys, std::string owner_id,
                                    std::string timestamp) {
  VerifierString v(std::move(owner_id), std::move(timestamp));
  Bytes sig = sign(keys.private_key, v);
  return OwnershipCredential{std::move(v), std::move(sig), keys.public_key};
}

nlohmann::json credential_to_json(const OwnershipCredential& c) {
  return nlohmann::json{
      {"owner_id", c.verifier.owner_id()},
      {"timestamp", c.verifier.timestamp()},
      {"signature_b64", base64_encode(c.signature)},
      {"public_key_pem", c.public_key.to_pem()},
  };
}

OwnershipCredential credential_from_json(const nlohmann::json& j) {
  for (const char* field :
       {"owner_id", "timestamp", "signature_b64", "public_key_pem"}) {
    if (!j.contains(field) || !j.at(field).is_string()) {
      throw FormatError(std::string("credential: missing string field '") +
                        field + "'");
    }
  }
  PublicKey pub;
  try {
    pub = PublicKey::from_pem(j.at("public_key_pem").get<std::string>());
  } catch (const KeyError& e) {
    throw FormatError(std::string("credential: ") + e.what());
  }
  try {
    return OwnershipCredential{
        VerifierString(j.at("owner_id").get<std::string>(),
                       j.at("timestamp").get<std::string>()),
        base64_decode(j.at("signature_b64").get<std::string>()), pub};
  } catch (const ValidationError& e) {
    throw FormatError(std::string("credential: ") + e.what());
  }
}

void save_credential(const OwnershipCredential& credential,
                     const std::filesystem::path& path) {
  write_text(path, credential_to_json(credential).dump(2) + "\n");
}

OwnershipCredential load_credential(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open credential " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("credential is not valid JSON: " + std::string(e.what()));
  }
  return credential_from_json(j);
}

}  // namespace nullwm
