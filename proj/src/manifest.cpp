#include "aufuzz/dataset.hpp"

#include "aufuzz/config.hpp"
#include "aufuzz/textio.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aufuzz {

Region au_region(int au) {
    static const std::set<int> upper = {1, 2, 4, 5, 6, 7, 41, 42, 43, 44, 45, 46};
    return upper.count(au) ? Region::upper : Region::lower;
}

namespace cli {

namespace {

constexpr const char* kHeader = "id\tsubject\tframes\tlandmarks\taus\texpression\tregion";

std::string resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (base / path).string();
}

std::string unresolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    std::error_code ec;
    const auto rel = std::filesystem::relative(path, base, ec);
    return ec || rel.empty() ? p : rel.string();
}

} // namespace

std::set<int> Manifest::all_aus() const {
    std::set<int> out;
    for (const auto& r : records) out.insert(r.au_set.begin(), r.au_set.end());
    return out;
}

std::set<std::string> Manifest::all_subjects() const {
    std::set<std::string> out;
    for (const auto& r : records) out.insert(r.subject);
    return out;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    const std::filesystem::path base = std::filesystem::path(path).parent_path();

    Manifest manifest;
    std::set<std::string> seen_ids;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != kHeader)
                throw std::runtime_error("manifest: unexpected header line: '" + line + "'");
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line, '\t');
        if (fields.size() != 7)
            throw std::runtime_error("manifest: expected 7 tab-separated fields: '" + line + "'");

        pipeline::LabeledSequence rec;
        rec.id = fields[0];
        rec.subject = fields[1];
        if (rec.id.empty() || rec.subject.empty())
            throw std::runtime_error("manifest: empty id or subject");
        if (!seen_ids.insert(rec.id).second)
            throw std::runtime_error("manifest: duplicate sequence id '" + rec.id + "'");

        for (const std::string& f : split_fields(fields[2], ','))
            if (!f.empty()) rec.frames.push_back(resolve(base, f));
        if (rec.frames.empty()) throw std::runtime_error("manifest: no frames for '" + rec.id + "'");
        rec.landmark_file = resolve(base, fields[3]);

        if (fields[4] != "-") {
            for (int au : parse_index_list(fields[4])) rec.au_set.insert(au);
        }
        if (fields[5] != "-") rec.expression = fields[5];

        if (fields[6] == "-") {
            for (int au : rec.au_set) rec.regions.insert(au_region(au));
        } else {
            for (const std::string& r : split_fields(fields[6], ',')) {
                if (r == "upper")
                    rec.regions.insert(Region::upper);
                else if (r == "lower")
                    rec.regions.insert(Region::lower);
                else
                    throw std::runtime_error("manifest: unknown region '" + r + "'");
            }
        }
        manifest.records.push_back(std::move(rec));
    }
    if (!header_seen) throw std::runtime_error("manifest: missing header in " + path);
    return manifest;
}

void save_manifest(const Manifest& manifest, const std::string& path) {
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::ostringstream out;
    out << kHeader << "\n";
    for (const auto& rec : manifest.records) {
        out << rec.id << "\t" << rec.subject << "\t";
        for (std::size_t i = 0; i < rec.frames.size(); ++i) {
            if (i) out << ",";
            out << unresolve(base, rec.frames[i]);
        }
        out << "\t" << unresolve(base, rec.landmark_file) << "\t";
        if (rec.au_set.empty()) {
            out << "-";
        } else {
            bool first = true;
            for (int au : rec.au_set) {
                if (!first) out << ",";
                out << au;
                first = false;
            }
        }
        out << "\t" << (rec.expression.empty() ? "-" : rec.expression) << "\t";
        if (rec.regions.empty()) {
            out << "-";
        } else {
            bool first = true;
            for (Region r : rec.regions) {
                if (!first) out << ",";
                out << (r == Region::upper ? "upper" : "lower");
                first = false;
            }
        }
        out << "\n";
    }
    atomic_write_file(path, out.str());
}

} // namespace cli
} // namespace aufuzz
