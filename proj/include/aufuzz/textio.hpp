#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace aufuzz {

/// Formats a double with 17 significant digits so that parsing the text
/// reproduces the exact bit pattern. All model/cache files use this.
std::string format_double(double v);

double parse_double(const std::string& s);

std::vector<std::string> split_fields(const std::string& line, char sep);

/// Writes a matrix as "<name> <rows> <cols>" followed by one row per line.
void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& in, const std::string& expected_name);

void write_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector(std::istream& in, const std::string& expected_name);

/// Writes `content` via a temporary file in the same directory, then renames.
void atomic_write_file(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

/// FNV-1a over bytes, used for cache freshness stamps.
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 1469598103934665603ull);
std::uint64_t fnv1a_str(const std::string& s, std::uint64_t seed = 1469598103934665603ull);
std::string hash_hex(std::uint64_t h);

} // namespace aufuzz
