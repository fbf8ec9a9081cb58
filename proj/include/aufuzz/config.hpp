#pragma once

#include <map>
#include <string>
#include <vector>

namespace aufuzz {

/// Flat key=value configuration with command-line override precedence.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    int get_int(const std::string& key, int fallback) const;
    double get_double(const std::string& key, double fallback) const;
    /// Comma list of non-negative integers; "a-b" ranges are expanded.
    std::vector<int> get_index_list(const std::string& key, const std::string& fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::vector<int> parse_index_list(const std::string& text);

} // namespace aufuzz
