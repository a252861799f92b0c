#include "stpl/runio.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stpl::runio {

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for checksum: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

RunConfig RunConfig::parse(const std::vector<std::string>& kvs,
                           const std::map<std::string, std::string>& defaults,
                           std::vector<std::string>& errors) {
  RunConfig cfg;
  cfg.values_ = defaults;
  for (const std::string& tok : kvs) {
    const std::size_t eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) {
      errors.push_back("malformed option (expected key=value): '" + tok + "'");
      continue;
    }
    const std::string key = tok.substr(0, eq);
    if (!defaults.count(key)) {
      errors.push_back("unknown key: '" + key + "'");
      continue;
    }
    cfg.values_[key] = tok.substr(eq + 1);
  }
  return cfg;
}

const std::string& RunConfig::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("config key not registered: " + key);
  return it->second;
}

namespace {

template <typename T>
T parse_one(const std::string& key, const std::string& s, const char* what) {
  std::istringstream in(s);
  T v{};
  in >> v;
  if (in.fail() || !in.eof())
    throw std::invalid_argument("config key '" + key + "': expected " + what + ", got '" + s + "'");
  return v;
}

}  // namespace

int RunConfig::get_int(const std::string& key) const {
  return parse_one<int>(key, raw(key), "an integer");
}

std::int64_t RunConfig::get_i64(const std::string& key) const {
  return parse_one<std::int64_t>(key, raw(key), "an integer");
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  return parse_one<std::uint64_t>(key, raw(key), "a non-negative integer");
}

double RunConfig::get_double(const std::string& key) const {
  return parse_one<double>(key, raw(key), "a number");
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw std::invalid_argument("config key '" + key + "': expected 0/1/true/false, got '" + s + "'");
}

std::vector<double> RunConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::istringstream in(raw(key));
  std::string item;
  while (std::getline(in, item, ','))
    out.push_back(parse_one<double>(key, item, "a comma-separated number list"));
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  std::istringstream in(raw(key));
  std::string item;
  while (std::getline(in, item, ','))
    out.push_back(parse_one<int>(key, item, "a comma-separated integer list"));
  if (out.empty()) throw std::invalid_argument("config key '" + key + "': empty list");
  return out;
}

std::vector<std::string> RunConfig::lines() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k + "=" + v);
  return out;  // std::map iterates sorted
}

std::string make_run_dir(const std::string& root, const std::string& name, std::uint64_t seed) {
  const std::filesystem::path dir =
      std::filesystem::path(root) / name / std::to_string(seed);
  std::filesystem::create_directories(dir);
  return dir.string();
}

void write_manifest(const std::string& dir, const RunConfig& cfg, std::uint64_t seed,
                    const std::vector<std::string>& artifacts) {
  std::vector<std::string> names = artifacts;
  std::sort(names.begin(), names.end());
  std::ofstream out(std::filesystem::path(dir) / "manifest.txt");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir);
  // out_root determines where a run lives, not what it computes; leaving it
  // out keeps manifests identical when the same run is reproduced elsewhere.
  for (const std::string& line : cfg.lines())
    if (line.rfind("out_root=", 0) != 0) out << "config " << line << "\n";
  out << "seed " << seed << "\n";
  char hex[32];
  for (const std::string& name : names) {
    const std::uint64_t h = fnv1a64_file((std::filesystem::path(dir) / name).string());
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    out << "artifact " << hex << " " << name << "\n";
  }
}

}  // namespace stpl::runio
