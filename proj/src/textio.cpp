#include "aufuzz/textio.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aufuzz {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw std::runtime_error("bad float literal: '" + s + "'");
    return v;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << name << " " << m.rows() << " " << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) out << " ";
            out << format_double(m(r, c));
        }
        out << "\n";
    }
}

Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expected_name) {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols))
        throw std::runtime_error("matrix header expected (" + expected_name + ")");
    if (name != expected_name)
        throw std::runtime_error("expected matrix '" + expected_name + "', found '" + name + "'");
    if (rows < 0 || cols < 0) throw std::runtime_error("negative matrix shape for " + expected_name);
    Eigen::MatrixXd m(rows, cols);
    std::string tok;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!(in >> tok)) throw std::runtime_error("matrix '" + expected_name + "' truncated");
            m(r, c) = parse_double(tok);
        }
    return m;
}

void write_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
    out << name << " " << v.size() << "\n";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) out << " ";
        out << format_double(v[i]);
    }
    out << "\n";
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& expected_name) {
    std::string name;
    Eigen::Index n = 0;
    if (!(in >> name >> n)) throw std::runtime_error("vector header expected (" + expected_name + ")");
    if (name != expected_name)
        throw std::runtime_error("expected vector '" + expected_name + "', found '" + name + "'");
    Eigen::VectorXd v(n);
    std::string tok;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(in >> tok)) throw std::runtime_error("vector '" + expected_name + "' truncated");
        v[i] = parse_double(tok);
    }
    return v;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t fnv1a_str(const std::string& s, std::uint64_t seed) {
    return fnv1a(s.data(), s.size(), seed);
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace aufuzz
