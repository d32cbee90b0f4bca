#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "flockfp/errors.hpp"

namespace flockfp {

// Flat `key = value` configuration with dotted namespaces. Parsing is strict:
// malformed lines, duplicate keys, unparsable values and (at validation time)
// unknown keys all raise ConfigError.
class ConfigMap {
  public:
    void set(const std::string& key, const std::string& value);  // insert or overwrite
    [[nodiscard]] bool has(const std::string& key) const;

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
    [[nodiscard]] double get_double(const std::string& key, double fallback) const;
    [[nodiscard]] int get_int(const std::string& key, int fallback) const;
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
    [[nodiscard]] std::vector<double> get_vector(const std::string& key,
                                                 const std::vector<double>& fallback) const;

    // every key must be consumed by one of the getters above or listed here
    void allow(const std::string& key) const;
    void check_all_consumed() const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return kv_; }

    // canonical serialized form: sorted "key = value" lines
    [[nodiscard]] std::string canonical() const;

  private:
    std::map<std::string, std::string> kv_;
    mutable std::set<std::string> consumed_;
};

ConfigMap parse_config_file(const std::string& path);
ConfigMap parse_config_text(const std::string& text);

// "key=value" command-line override
void apply_override(ConfigMap& cfg, const std::string& assignment);

// FNV-1a over the canonical form; stamped into every CSV so outputs are
// traceable to the exact configuration
std::uint64_t config_hash(const ConfigMap& cfg);

}  // namespace flockfp
