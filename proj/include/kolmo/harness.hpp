#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kolmo/model.hpp"

namespace kolmo {

inline constexpr const char* kVersion = "0.1.0";

/// Invalid configuration; lists every offending key.
class ConfigError : public DomainError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Experiment description as flat key = value pairs. The kind selects the
/// subcommand; every other key is validated by the subcommand that reads it.
/// `out` and `threads` do not affect results and are kept out of the hash.
struct ExperimentConfig {
  std::string kind;
  std::map<std::string, std::string> values;
  std::string out_dir = "out";
  unsigned threads = 0;

  /// Lines `key = value`; `#` starts a comment; `kind`, `out` and `threads`
  /// fill the dedicated fields.
  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  void set(const std::string& key, const std::string& value);

  /// Canonical text: kind then sorted keys.
  std::string canonical() const;
  std::uint64_t hash() const;
};

struct ArtifactFile {
  std::string name;
  std::uint64_t checksum = 0;  // FNV-1a 64 of the bytes
  std::size_t bytes = 0;
};

struct Manifest {
  std::string kind;
  std::string theorem;
  std::string version = kVersion;
  std::uint64_t config_hash = 0;
  std::string config;
  std::vector<ArtifactFile> files;
  std::map<std::string, std::string> summary;
  std::string to_json() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Subcommand names accepted by `run`.
const std::vector<std::string>& subcommands();
/// Result the subcommand exercises, recorded in its manifest.
std::string theorem_of(const std::string& kind);

/// Dispatches to the subcommand, writes its artifacts and manifest.json into
/// config.out_dir. Throws ConfigError on invalid settings and NumericalError
/// on numerical failure.
Manifest run(const ExperimentConfig& config);

}  // namespace kolmo
