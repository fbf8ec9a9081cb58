#pragma once

#include <set>
#include <string>
#include <vector>

namespace aufuzz {

enum class Region { upper, lower };

/// FACS groups AUs 1-7 and 41-46 with the upper face; everything else here
/// is lower face.
Region au_region(int au);

namespace pipeline {

/// One image sequence: ordered frame files, the first-frame landmark file,
/// the AU codes present at apex, and the face regions they touch.
struct LabeledSequence {
    std::string id;
    std::string subject;
    std::vector<std::string> frames;
    std::string landmark_file;
    std::set<int> au_set;
    std::string expression;  // empty when unlabeled
    std::set<Region> regions;
};

} // namespace pipeline

namespace cli {

struct Manifest {
    std::vector<pipeline::LabeledSequence> records;

    std::set<int> all_aus() const;
    std::set<std::string> all_subjects() const;
};

/// Tab-separated manifest with a header line; relative file paths resolve
/// against the manifest's directory.
Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& manifest, const std::string& path);

} // namespace cli
} // namespace aufuzz
