#include "klio_cli/manifest.hpp"

#include <fstream>

#include "klio/errors.hpp"

namespace klio::cli {

std::string file_digest(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw ValidationError("cannot digest missing file: " + p.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

Manifest::Manifest(std::string subcommand, std::uint64_t seed)
    : subcommand_(std::move(subcommand)), seed_(seed) {}

void Manifest::set_setting(const std::string& key, const nlohmann::json& value) {
  settings_[key] = value;
}

void Manifest::add_input(const std::filesystem::path& p) {
  inputs_.emplace_back(p.string(), file_digest(p));
}

void Manifest::add_output(const std::filesystem::path& p) {
  outputs_.emplace_back(p.string(), file_digest(p));
}

void Manifest::add_timing_ms(const std::string& stage, double ms) {
  timings_[stage] = ms;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["subcommand"] = subcommand_;
  j["seed"] = seed_;
  j["settings"] = settings_;
  j["inputs"] = nlohmann::json::array();
  for (const auto& [path, digest] : inputs_)
    j["inputs"].push_back({{"path", path}, {"digest", digest}});
  j["outputs"] = nlohmann::json::array();
  for (const auto& [path, digest] : outputs_)
    j["outputs"].push_back({{"path", path}, {"digest", digest}});
  j["timings_ms"] = timings_;
  return j;
}

void Manifest::write(const std::filesystem::path& p) const {
  std::ofstream os(p);
  if (!os) throw ValidationError("cannot write manifest: " + p.string());
  os << to_json().dump(2) << "\n";
}

}  // namespace klio::cli
