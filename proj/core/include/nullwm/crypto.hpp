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

// Owner identity: RSA key pairs, verifier strings, deterministic signatures
// and the credential file that binds a signature to an owner.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace nullwm {

using Bytes = std::vector<std::uint8_t>;
using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view data);

std::string to_hex(std::span<const std::uint8_t> data);
std::string base64_encode(std::span<const std::uint8_t> data);
/// Throws FormatError on malformed input.
Bytes base64_decode(std::string_view text);

namespace detail {
struct KeyHandle;
}

/// RSA private key. Cheap to copy; the underlying key is immutable.
class PrivateKey {
 public:
  PrivateKey() = default;
  /// Parses PKCS#8 or traditional RSA PEM. Throws KeyError.
  static PrivateKey from_pem(std::string_view pem);
  std::string to_pem() const;
  bool empty() const noexcept { return !handle_; }

  const detail::KeyHandle* handle() const noexcept { return handle_.get(); }
  explicit PrivateKey(std::shared_ptr<const detail::KeyHandle> h)
      : handle_(std::move(h)) {}

 private:
  std::shared_ptr<const detail::KeyHandle> handle_;
};

/// RSA public key (SubjectPublicKeyInfo).
class PublicKey {
 public:
  PublicKey() = default;
  /// Throws KeyError.
  static PublicKey from_pem(std::string_view pem);
  std::string to_pem() const;
  /// First 8 bytes of SHA256 over the DER encoding, hex.
  std::string key_id() const;
  bool empty() const noexcept { return !handle_; }

  const detail::KeyHandle* handle() const noexcept { return handle_.get(); }
  explicit PublicKey(std::shared_ptr<const detail::KeyHandle> h)
      : handle_(std::move(h)) {}

 private:
  std::shared_ptr<const detail::KeyHandle> handle_;
};

struct OwnerKeys {
  PrivateKey private_key;
  PublicKey public_key;
  std::string key_id;
};

inline constexpr int kRsaModulusBits = 2048;

/// With a seed, primes are searched deterministically from a SHA256 counter
/// stream so the same seed always yields the same key pair.
OwnerKeys generate_keys(std::optional<std::uint64_t> seed = std::nullopt);

void write_keys(const OwnerKeys& keys, const std::filesystem::path& dir);
OwnerKeys read_keys(const std::filesystem::path& dir);

inline constexpr std::string_view kPrivateKeyFile = "owner.key";
inline constexpr std::string_view kPublicKeyFile = "owner.pub";
inline constexpr std::string_view kKeyIdFile = "key_id";

/// owner_id + "|" + timestamp.
class VerifierString {
 public:
  /// Throws ValidationError if owner_id contains '|' or either part is empty.
  VerifierString(std::string owner_id, std::string timestamp);

  const std::string& owner_id() const noexcept { return owner_id_; }
  const std::string& timestamp() const noexcept { return timestamp_; }
  const std::string& encoded() const noexcept { return encoded_; }

  friend bool operator==(const VerifierString&, const VerifierString&) = default;

 private:
  std::string owner_id_;
  std::string timestamp_;
  std::string encoded_;
};

/// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp_now();

/// RSASSA-PKCS1-v1_5 over SHA256(verifier.encoded). Deterministic.
Bytes sign(const PrivateKey& key, const VerifierString& verifier);

/// Never throws; any malformed input simply fails verification.
bool verify_sig(const PublicKey& key, std::span<const std::uint8_t> signature,
                const VerifierString& verifier) noexcept;

struct OwnershipCredential {
  VerifierString verifier;
  Bytes signature;
  PublicKey public_key;

  bool signature_valid() const noexcept {
    return verify_sig(public_key, signature, verifier);
  }
};

OwnershipCredential make_credential(const OwnerKeys& keys,
                                    std::string owner_id,
                                    std::string timestamp);

nlohmann::json credential_to_json(const OwnershipCredential& credential);
/// Throws FormatError on missing fields or undecodable content.
OwnershipCredential credential_from_json(const nlohmann::json& j);

void save_credential(const OwnershipCredential& credential,
                     const std::filesystem::path& path);
OwnershipCredential load_credential(const std::filesystem::path& path);

}  // namespace nullwm
