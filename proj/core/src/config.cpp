#include "flockfp/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace flockfp {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool valid_key(const std::string& key) {
    if (key.empty() || key.front() == '.' || key.back() == '.') return false;
    for (char c : key) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'))
            return false;
    }
    return true;
}

double parse_double(const std::string& key, const std::string& raw) {
    const std::string s = trim(raw);
    double out = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("value of '" + key + "' is not a number: '" + raw + "'");
    return out;
}

}  // namespace

void ConfigMap::set(const std::string& key, const std::string& value) {
    if (!valid_key(key)) throw ConfigError("malformed configuration key '" + key + "'");
    kv_[key] = value;
}

bool ConfigMap::has(const std::string& key) const {
    const bool present = kv_.count(key) > 0;
    if (present) consumed_.insert(key);
    return present;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    return it->second;
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    return parse_double(key, it->second);
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    const std::string s = trim(it->second);
    int out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError("value of '" + key + "' is not an integer: '" + it->second + "'");
    return out;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    const std::string s = trim(it->second);
    if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "off" || s == "no") return false;
    throw ConfigError("value of '" + key + "' is not a boolean: '" + it->second + "'");
}

std::vector<double> ConfigMap::get_vector(const std::string& key,
                                          const std::vector<double>& fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    consumed_.insert(key);
    std::vector<double> out;
    std::string token;
    std::istringstream in(it->second);
    while (std::getline(in, token, ',')) {
        if (trim(token).empty())
            throw ConfigError("empty component in vector value of '" + key + "'");
        out.push_back(parse_double(key, token));
    }
    if (out.empty()) throw ConfigError("vector value of '" + key + "' is empty");
    return out;
}

void ConfigMap::allow(const std::string& key) const { consumed_.insert(key); }

void ConfigMap::check_all_consumed() const {
    for (const auto& [key, value] : kv_) {
        if (consumed_.count(key) == 0)
            throw ConfigError("unknown configuration key '" + key + "'");
    }
}

std::string ConfigMap::canonical() const {
    std::string out;
    for (const auto& [key, value] : kv_) {
        out += key;
        out += " = ";
        out += trim(value);
        out += '\n';
    }
    return out;
}

namespace {

void parse_line(ConfigMap& cfg, const std::string& raw, int line_no) {
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) return;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
        throw ConfigError("line " + std::to_string(line_no) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key))
        throw ConfigError("line " + std::to_string(line_no) + " has a malformed key '" + key +
                          "'");
    if (cfg.entries().count(key) > 0)
        throw ConfigError("duplicate configuration key '" + key + "'");
    if (value.empty())
        throw ConfigError("key '" + key + "' has an empty value");
    cfg.set(key, value);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) parse_line(cfg, line, ++line_no);
    return cfg;
}

ConfigMap parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

void apply_override(ConfigMap& cfg, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    const std::string key = trim(assignment.substr(0, eq));
    const std::string value = trim(assignment.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError("override has a malformed key '" + key + "'");
    if (value.empty()) throw ConfigError("override for '" + key + "' has an empty value");
    cfg.set(key, value);
}

std::uint64_t config_hash(const ConfigMap& cfg) {
    const std::string canon = cfg.canonical();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace flockfp
