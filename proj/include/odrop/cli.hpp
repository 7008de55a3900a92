#pragma once

// Command-line layer: run configuration, artifact output with a checksum
// manifest, and the commands themselves.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "odrop/error.hpp"
#include "odrop/gbt.hpp"
#include "odrop/ood.hpp"
#include "odrop/synth.hpp"
#include "odrop/tabular.hpp"

namespace odrop::cli {

// Invalid configuration or usage; mapped to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "ODROP_OUTPUT_DIR";

std::string sha256_hex(std::string_view data);

// Collects every file a command writes. Files written before a failure are
// removed when the writer is destroyed without commit().
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir);
  ~ArtifactWriter();
  ArtifactWriter(const ArtifactWriter&) = delete;
  ArtifactWriter& operator=(const ArtifactWriter&) = delete;

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  void write_text(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& doc);
  // Table CSV plus its `.meta.json` sidecar.
  void write_table(const std::string& name, const tabular::Table& table);

  // Writes manifest.json (command, config and its hash, seeds, and the
  // checksum of every artifact) and keeps the outputs.
  void commit(const std::string& command, const nlohmann::json& config, const nlohmann::json& seeds);

  struct Entry {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<Entry> entries_;
};

struct PredictorSettings {
  bool search = true;  // grid search; otherwise `config` is used as is
  gbt::GridSpec grid;
  gbt::BoostConfig config;
  std::size_t folds = 5;
  std::optional<std::size_t> rfe_k;
  std::optional<std::size_t> rfe_step;
};

struct ExplainSettings {
  bool enabled = false;
  ood::Method method = ood::Method::vae_reconstruction;
  // Rejection rate for the ID/OOD flags; the peak of the method's AUROC
  // curve when unset.
  std::optional<double> rate;
  std::size_t max_rows = 2000;
  bool positive_only = true;
  bool absolute_columns = true;
};

struct RunConfig {
  std::optional<std::filesystem::path> train_csv;
  std::optional<std::filesystem::path> test_csv;
  std::optional<synth::ShiftScenario> scenario;
  std::string label_column = "label";
  std::vector<ood::Method> methods = ood::all_methods();
  std::vector<double> rate_grid;  // empty: 0, 0.01, ..., 0.40
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  PredictorSettings predictor;
  ood::OodTrainConfig ood;
  ExplainSettings explain;
  std::filesystem::path output_dir;

  // Parses the JSON config schema; throws ConfigError. Seeds of the neural
  // trainers default to `seed` when the document does not set them.
  static RunConfig from_json(const nlohmann::json& doc);
  // Echo of the configuration without the output directory, used for the
  // manifest hash.
  nlohmann::json to_json() const;
  // Checks that referenced files exist and a data source is set.
  void validate() const;
  nlohmann::json seeds_json() const;
};

std::vector<ood::Method> parse_methods(const std::vector<std::string>& tokens);
std::filesystem::path default_output_dir();

// Runs the end-to-end pipeline into `out` (without committing it).
void run_pipeline(const RunConfig& config, ArtifactWriter& out);

// Entry point of the odrop executable; returns the process exit code.
int run(int argc, char** argv);

}  // namespace odrop::cli
