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


// nullwm: embed, verify and attack ownership watermarks.
//
// Exit codes: 0 success (verify: pass), 1 verification failed or runtime
// error, 2 signature invalid, 64 usage error, 65 bad input data or config.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "nullwm/attacks.hpp"
#include "nullwm/config.hpp"
#include "nullwm/crypto.hpp"
#include "nullwm/dataset.hpp"
#include "nullwm/embedding.hpp"
#include "nullwm/error.hpp"
#include "nullwm/model_io.hpp"
#include "nullwm/rng.hpp"
#include "nullwm/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitBadSignature = 2;
constexpr int kExitUsage = 64;
constexpr int kExitDataError = 65;

constexpr std::uint64_t kPirateTag = 0x5049524154;
constexpr std::uint64_t kAttackerTag = 0x41545441434b;

struct Common {
  std::optional<std::uint64_t> seed;
  std::string data_dir;
  std::string config_file;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c, bool with_config) {
  cmd->add_option("--seed", c.seed, "Seed for every random choice");
  cmd->add_option("--data-dir", c.data_dir,
                  "Dataset cache directory (default: $NULLWM_DATA_DIR or ~/.cache/nullwm)");
  if (with_config) {
    cmd->add_option("--config", c.config_file, "Flat key = value run configuration")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", c.overrides, "Override one config key (key=value)");
  }
}

nullwm::RunConfig resolve_config(const Common& c) {
  nullwm::RunConfig cfg =
      c.config_file.empty() ? nullwm::RunConfig{} : nullwm::load_config(c.config_file);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw nullwm::ConfigError("--set expects key=value, got '" + kv + "'");
    }
    nullwm::set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.train.seed = *c.seed;
  nullwm::validate(cfg);
  return cfg;
}

nullwm::Dataset load(const std::string& name, const nullwm::RunConfig& cfg,
                     const Common& c) {
  nullwm::LoadOptions opts;
  opts.limit = cfg.train_limit;
  opts.test_limit = cfg.test_limit;
  opts.seed = cfg.train.seed;
  if (!c.data_dir.empty()) opts.data_dir = fs::path(c.data_dir);
  return nullwm::load_dataset(name, opts);
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw nullwm::Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw nullwm::Error("cannot create " + dir.string() + ": " + ec.message());
}

std::string ratio_tag(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", r);
  return buf;
}

// keygen -----------------------------------------------------------------

int run_keygen(const std::string& out, const Common& c) {
  const auto keys = nullwm::generate_keys(c.seed);
  ensure_dir(out);
  nullwm::write_keys(keys, out);
  std::cout << keys.key_id << "\n";
  return kExitOk;
}

// embed ------------------------------------------------------------------

struct EmbedArgs {
  std::string dataset = "synthetic";
  std::string arch = "mnist";
  std::string keys;
  std::string owner_id;
  std::string timestamp;
  std::string out;
  std::optional<int> epochs;
};

int run_embed(const EmbedArgs& a, const Common& c) {
  auto cfg = resolve_config(c);
  if (a.epochs) {
    cfg.train.max_epochs = *a.epochs;
    nullwm::validate(cfg);
  }
  const auto data = load(a.dataset, cfg, c);
  const auto spec = nullwm::ModelSpec::by_name(a.arch, data.num_classes, data.shape());
  nullwm::CredentialInputs inputs{nullwm::read_keys(a.keys), a.owner_id, a.timestamp};
  nullwm::WatermarkParams params{cfg.block_size, static_cast<float>(cfg.extreme_value)};

  const auto result = nullwm::embed_watermark(
      data, spec, inputs, cfg.train, params,
      [](nullwm::EpochRecord& r, const nullwm::ModelHandle&) {
        std::fprintf(stderr, "epoch %d  loss %.4f  nc %.4f  %.1fs\n", r.epoch, r.loss,
                     r.nc, r.seconds);
      });

  ensure_dir(a.out);
  const fs::path model_path = fs::path(a.out) / "model.nwm";
  nullwm::save_model(result.model, model_path);
  nullwm::save_credential(result.credential, fs::path(a.out) / "credential.json");
  json config_json = nullwm::config_to_json(cfg);
  config_json["dataset"] = a.dataset;
  config_json["arch"] = a.arch;
  write_json(fs::path(a.out) / "manifest.json",
             nullwm::make_manifest(config_json, result.model, model_path,
                                   result.credential));
  std::cout << "model " << model_path.string() << " sha1 "
            << nullwm::git_blob_hash_file(model_path) << "\n";
  return kExitOk;
}

// verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string model;
  std::string credential;
  std::string dataset = "synthetic";
  std::size_t samples = nullwm::kDefaultVerifySamples;
  bool full = false;
  double threshold = nullwm::kDefaultThreshold;
  std::string json_out;
  int block_size = nullwm::kDefaultBlockSize;
  float extreme_value = nullwm::kDefaultExtremeValue;
};

int run_verify(const VerifyArgs& a, const Common& c) {
  nullwm::RunConfig cfg;
  if (c.seed) cfg.train.seed = *c.seed;
  const auto model = nullwm::load_model(a.model);
  const auto cred = nullwm::load_credential(a.credential);
  const auto data = load(a.dataset, cfg, c);
  nullwm::VerifyOptions opts;
  opts.threshold = a.threshold;
  opts.sample_size = a.full ? std::nullopt : std::optional<std::size_t>(a.samples);
  opts.seed = cfg.train.seed;
  opts.block_size = a.block_size;
  opts.extreme_value = a.extreme_value;
  const auto report = nullwm::verify_watermark(model, cred, data.test, opts);
  std::cout << report.summary() << "\n";
  if (!a.json_out.empty()) write_json(a.json_out, nullwm::report_to_json(report));
  if (!report.signature_valid) return kExitBadSignature;
  return report.pass ? kExitOk : kExitFail;
}

// attack -----------------------------------------------------------------

struct AttackArgs {
  std::string kind;
  std::string model;
  std::string credential;
  std::string dataset = "synthetic";
  std::string out;
};

int run_attack(const AttackArgs& a, const Common& c) {
  const auto cfg = resolve_config(c);
  const auto model = nullwm::load_model(a.model);
  const auto data = load(a.dataset, cfg, c);
  const std::uint64_t seed = cfg.train.seed;

  std::optional<nullwm::OwnershipCredential> owner_cred;
  nullwm::AttackEval eval;
  eval.test = &data.test;
  eval.seed = seed;
  eval.phi_samples = cfg.verify_samples;
  if (!a.credential.empty()) {
    owner_cred = nullwm::load_credential(a.credential);
    if (owner_cred->signature_valid()) {
      eval.owner = nullwm::derive_spec(*owner_cred, model, cfg.block_size,
                                       static_cast<float>(cfg.extreme_value));
    } else {
      std::cerr << "warning: owner credential signature is invalid; owner watermark "
                   "not measured\n";
    }
  }

  const auto attack_cfg = nullwm::attack_config(cfg.train, model,
                                                cfg.attack.recipe,
                                                cfg.attack.attack_epochs);
  const auto attacker = nullwm::subsample(data.train, cfg.attack.attacker_samples,
                                          nullwm::derive_seed(seed, kAttackerTag));
  ensure_dir(a.out);
  auto emit = [&](const std::string& name, const nullwm::AttackReport& r) {
    write_json(fs::path(a.out) / name, nullwm::attack_report_to_json(r));
    std::cout << name << ": nc " << r.before.nc << " -> " << r.after.nc;
    if (r.after.owner) std::cout << "  owner wm " << r.before.owner->wm() << " -> "
                                 << r.after.owner->wm();
    if (r.after.pirate) std::cout << "  pirate wm " << r.before.pirate->wm() << " -> "
                                  << r.after.pirate->wm();
    std::cout << "\n";
  };

  if (a.kind == "piracy") {
    const auto keys = nullwm::generate_keys(nullwm::derive_seed(seed, kPirateTag));
    const auto pirate = nullwm::make_credential(keys, "pirate", "2000-01-01T00:00:00Z");
    const auto res = nullwm::piracy_attack(model, pirate, attacker,
                                           cfg.attack.attack_epochs, attack_cfg, eval);
    emit("piracy.json", res.report);
  } else if (a.kind == "finetune") {
    const auto res = nullwm::fine_tune(model, data.train, cfg.attack.attack_epochs,
                                       attack_cfg, eval);
    emit("finetune.json", res.report);
  } else if (a.kind == "prune") {
    for (const auto& r : nullwm::prune_sweep(model, cfg.attack.prune_ratios, eval)) {
      emit("prune_" + ratio_tag(r.ratio) + ".json", r);
    }
  } else if (a.kind == "fineprune") {
    const auto fp_cfg = nullwm::attack_config(cfg.train, model,
                                              cfg.attack.recipe,
                                              cfg.attack.fineprune_epochs);
    for (double ratio : cfg.attack.fineprune_ratios) {
      const auto res = nullwm::fine_prune(model, ratio, attacker,
                                          cfg.attack.fineprune_epochs, fp_cfg, eval,
                                          cfg.attack.calibration_samples);
      emit("fineprune_" + ratio_tag(ratio) + ".json", res.report);
    }
  } else if (a.kind == "transfer") {
    if (!owner_cred) throw nullwm::ConfigError("transfer: --credential is required");
    const auto student = load(cfg.attack.student_dataset, cfg, c);
    nullwm::VerifyOptions vopts;
    vopts.threshold = cfg.threshold;
    vopts.sample_size = cfg.verify_samples;
    vopts.seed = seed;
    vopts.block_size = cfg.block_size;
    vopts.extreme_value = static_cast<float>(cfg.extreme_value);
    const auto scope = nullwm::transfer_scope_from_string(cfg.attack.transfer_scope);
    const auto res = nullwm::transfer_and_recover(
        model, *owner_cred, student, scope, data, cfg.attack.transfer_epochs,
        cfg.attack.recover_epochs, attack_cfg, vopts);
    json j{{"kind", "transfer"},
           {"scope", nullwm::to_string(scope)},
           {"student_dataset", cfg.attack.student_dataset},
           {"student_epochs", cfg.attack.transfer_epochs},
           {"recover_epochs", cfg.attack.recover_epochs},
           {"student_nc", res.student_nc},
           {"recovered_nc", res.recovered_nc},
           {"verification", nullwm::report_to_json(res.verification)}};
    write_json(fs::path(a.out) / "transfer.json", j);
    std::cout << "transfer.json: student nc " << res.student_nc << "  recovered "
              << res.verification.summary() << "\n";
  } else {
    throw CLI::ValidationError("--kind", "unknown attack kind " + a.kind);
  }
  return kExitOk;
}

// report -----------------------------------------------------------------

int run_report(const std::string& in, const std::string& csv_dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(in)) {
    if (e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  auto wm_of = [](const json& phase, const char* who) -> std::string {
    if (!phase.contains(who) || phase[who].is_null()) return "-";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.4f", phase[who]["wm"].get<double>());
    return buf;
  };
  std::printf("%-24s %-10s %6s %8s %8s %10s %10s %10s %10s\n", "file", "kind", "ratio",
              "nc0", "nc1", "owner0", "owner1", "pirate0", "pirate1");
  if (!csv_dir.empty()) ensure_dir(csv_dir);
  for (const auto& f : files) {
    json j;
    try {
      std::ifstream s(f);
      j = json::parse(s);
    } catch (const json::exception&) {
      continue;
    }
    if (!j.contains("kind") || !j.contains("before") || !j.contains("after")) continue;
    std::printf("%-24s %-10s %6.2f %8.4f %8.4f %10s %10s %10s %10s\n",
                f.filename().string().c_str(), j["kind"].get<std::string>().c_str(),
                j.value("ratio", 0.0), j["before"]["nc"].get<double>(),
                j["after"]["nc"].get<double>(), wm_of(j["before"], "owner").c_str(),
                wm_of(j["after"], "owner").c_str(), wm_of(j["before"], "pirate").c_str(),
                wm_of(j["after"], "pirate").c_str());
    if (!csv_dir.empty() && j.contains("curve") && !j["curve"].empty()) {
      std::ofstream csv(fs::path(csv_dir) / (f.stem().string() + ".csv"));
      std::vector<std::string> cols;
      for (const auto& [k, v] : j["curve"][0].items()) cols.push_back(k);
      for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
      csv << "\n";
      for (const auto& row : j["curve"]) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          csv << (i ? "," : "") << row.value(cols[i], json()).dump();
        }
        csv << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nullwm: piracy-resistant DNN ownership watermarks"};
  app.require_subcommand(1);

  Common common;
  std::string keygen_out;
  auto* keygen = app.add_subcommand("keygen", "Generate an owner key pair");
  keygen->add_option("--out", keygen_out, "Directory for owner.key, owner.pub, key_id")
      ->required();
  add_common(keygen, common, false);

  EmbedArgs embed_args;
  auto* embed = app.add_subcommand("embed", "Train a model with an embedded watermark");
  embed->add_option("--dataset", embed_args.dataset, "mnist, synthetic or synthetic5")
      ->capture_default_str();
  embed->add_option("--arch", embed_args.arch, "mnist or small")->capture_default_str();
  embed->add_option("--keys", embed_args.keys, "Key directory from keygen")
      ->required()
      ->check(CLI::ExistingDirectory);
  embed->add_option("--owner-id", embed_args.owner_id, "Owner identifier")->required();
  embed->add_option("--timestamp", embed_args.timestamp,
                    "ISO-8601 timestamp for the verifier string (default: now)");
  embed->add_option("--epochs", embed_args.epochs, "Override max_epochs");
  embed->add_option("--out", embed_args.out, "Output directory")->required();
  add_common(embed, common, true);

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand("verify", "Verify an ownership claim");
  verify->add_option("--model", verify_args.model, "Model file")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--credential", verify_args.credential, "Credential JSON")
      ->required()
      ->check(CLI::ExistingFile);
  verify->add_option("--dataset", verify_args.dataset, "Dataset whose test split is used")
      ->capture_default_str();
  verify->add_option("--samples", verify_args.samples, "Verification sample size")
      ->capture_default_str();
  verify->add_flag("--full", verify_args.full, "Use the whole test split");
  verify->add_option("--threshold", verify_args.threshold, "Watermark threshold")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  verify->add_option("--block-size", verify_args.block_size, "Pattern block size")
      ->capture_default_str();
  verify->add_option("--extreme-value", verify_args.extreme_value, "Extreme value")
      ->capture_default_str();
  verify->add_option("--json", verify_args.json_out, "Write the report as JSON");
  add_common(verify, common, false);

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Run a robustness attack");
  attack->add_option("--kind", attack_args.kind, "Attack to run")
      ->required()
      ->check(CLI::IsMember({"piracy", "finetune", "prune", "fineprune", "transfer"}));
  attack->add_option("--model", attack_args.model, "Model file")
      ->required()
      ->check(CLI::ExistingFile);
  attack->add_option("--credential", attack_args.credential,
                     "Owner credential (measures the owner watermark)")
      ->check(CLI::ExistingFile);
  attack->add_option("--dataset", attack_args.dataset, "Dataset the model was trained on")
      ->capture_default_str();
  attack->add_option("--out", attack_args.out, "Directory for report JSON files")
      ->required();
  add_common(attack, common, true);

  std::string report_in;
  std::string report_csv;
  auto* report = app.add_subcommand("report", "Tabulate attack reports");
  report->add_option("--in", report_in, "Directory of report JSON files")
      ->required()
      ->check(CLI::ExistingDirectory);
  report->add_option("--csv", report_csv, "Write per-epoch curves as CSV here");
  add_common(report, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*keygen) return run_keygen(keygen_out, common);
    if (*embed) return run_embed(embed_args, common);
    if (*verify) return run_verify(verify_args, common);
    if (*attack) return run_attack(attack_args, common);
    if (*report) return run_report(report_in, report_csv);
  } catch (const nullwm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const nullwm::FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const nullwm::IngestionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const nullwm::KeyError& e) {
    std::cerr << "key error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const nullwm::SpecError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kExitDataError;
  } catch (const nullwm::ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
