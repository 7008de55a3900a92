#include <algorithm>
#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "odrop/cli.hpp"

namespace odrop::cli {

namespace fs = std::filesystem;

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

ArtifactWriter::ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  if (!fs::exists(dir_, ec)) {
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
    created_dir_ = true;
  } else if (!fs::is_directory(dir_, ec)) {
    throw IoError("output path " + dir_.string() + " is not a directory");
  }
}

ArtifactWriter::~ArtifactWriter() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& e : entries_) fs::remove(dir_ / e.name, ec);
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

void ArtifactWriter::write_text(const std::string& name, const std::string& content) {
  if (name.empty() || name.find('/') != std::string::npos || name == "manifest.json") {
    throw IoError("invalid artifact name '" + name + "'");
  }
  if (std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.name == name; })) {
    throw IoError("artifact '" + name + "' written twice");
  }
  // Registered before writing so that a partial file is still cleaned up.
  entries_.push_back({name, sha256_hex(content), content.size()});
  std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed to write " + (dir_ / name).string());
}

void ArtifactWriter::write_json(const std::string& name, const nlohmann::json& doc) {
  write_text(name, doc.dump(2) + "\n");
}

void ArtifactWriter::write_table(const std::string& name, const tabular::Table& table) {
  write_text(name, tabular::to_csv(table));
  write_text(name + ".meta.json", tabular::metadata_json(table));
}

void ArtifactWriter::commit(const std::string& command, const nlohmann::json& config, const nlohmann::json& seeds) {
  std::vector<Entry> sorted = entries_;
  std::sort(sorted.begin(), sorted.end(), [](const Entry& a, const Entry& b) { return a.name < b.name; });
  nlohmann::json doc;
  doc["format"] = "odrop.manifest";
  doc["version"] = 1;
  doc["command"] = command;
  doc["config"] = config;
  doc["config_sha256"] = sha256_hex(config.dump());
  doc["seeds"] = seeds;
  auto& list = doc["artifacts"] = nlohmann::json::array();
  for (const auto& e : sorted) list.push_back({{"path", e.name}, {"sha256", e.sha256}, {"bytes", e.bytes}});
  const std::string text = doc.dump(2) + "\n";
  std::ofstream out(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed to write the manifest");
  committed_ = true;
}

}  // namespace odrop::cli
