#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace klio::cli {

// FNV-1a 64-bit digest of a file's bytes, as a hex string.
std::string file_digest(const std::filesystem::path& p);

// Every subcommand writes one of these next to its primary output so a run
// can be reproduced and byte-verified. Timings are informational and
// excluded from determinism comparisons.
class Manifest {
 public:
  Manifest(std::string subcommand, std::uint64_t seed);

  void set_setting(const std::string& key, const nlohmann::json& value);
  void add_input(const std::filesystem::path& p);
  void add_output(const std::filesystem::path& p);
  void add_timing_ms(const std::string& stage, double ms);

  nlohmann::json to_json() const;
  void write(const std::filesystem::path& p) const;

 private:
  std::string subcommand_;
  std::uint64_t seed_;
  nlohmann::json settings_ = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::map<std::string, double> timings_;
};

}  // namespace klio::cli
