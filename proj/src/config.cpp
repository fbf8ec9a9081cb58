#include "aufuzz/config.hpp"

#include "aufuzz/textio.hpp"

#include <fstream>
#include <stdexcept>

namespace aufuzz {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    Config cfg;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key=value, got '" + t + "'");
        cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    return cfg;
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

int Config::get_int(const std::string& key, int fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw std::runtime_error("config: key '" + key + "' is not an integer: " + it->second);
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    return parse_double(it->second);
}

std::vector<int> Config::get_index_list(const std::string& key, const std::string& fallback) const {
    return parse_index_list(get_string(key, fallback));
}

std::vector<int> parse_index_list(const std::string& text) {
    std::vector<int> out;
    for (const std::string& field : split_fields(text, ',')) {
        const std::string f = trim(field);
        if (f.empty()) continue;
        const std::size_t dash = f.find('-', 1);  // allow plain numbers only, no negatives
        if (dash == std::string::npos) {
            out.push_back(std::stoi(f));
        } else {
            const int a = std::stoi(f.substr(0, dash));
            const int b = std::stoi(f.substr(dash + 1));
            if (b < a) throw std::runtime_error("index range '" + f + "' is inverted");
            for (int i = a; i <= b; ++i) out.push_back(i);
        }
    }
    return out;
}

} // namespace aufuzz
