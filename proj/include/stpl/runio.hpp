#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace stpl::runio {

/// FNV-1a 64-bit digest of a byte buffer / file.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64_file(const std::string& path);

/// key=value run configuration with a closed key set: unknown keys and
/// malformed tokens are all reported at once.
class RunConfig {
 public:
  /// `defaults` defines the allowed keys and their default raw values.
  static RunConfig parse(const std::vector<std::string>& kvs,
                         const std::map<std::string, std::string>& defaults,
                         std::vector<std::string>& errors);

  const std::string& raw(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::int64_t get_i64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;  // 0/1/true/false
  std::vector<double> get_doubles(const std::string& key) const;  // comma list
  std::vector<int> get_ints(const std::string& key) const;

  /// Sorted key=value lines for manifests and logs.
  std::vector<std::string> lines() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Creates runs/<name>/<seed>/ (like mkdir -p) and returns the path.
std::string make_run_dir(const std::string& root, const std::string& name, std::uint64_t seed);

/// manifest.txt: sorted config lines, the seed, and an FNV-1a digest per
/// artifact. Wall-clock timing files are deliberately excluded so reruns are
/// byte-identical.
void write_manifest(const std::string& dir, const RunConfig& cfg, std::uint64_t seed,
                    const std::vector<std::string>& artifacts);

}  // namespace stpl::runio
