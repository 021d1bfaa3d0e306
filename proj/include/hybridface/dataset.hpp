#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hybridface/errors.hpp"
#include "hybridface/image.hpp"

namespace hybridface {

struct LabeledImage {
    GrayImage image;
    int subject = 0;
    int pose = 0;
};

// One `known` or `unknown` manifest directive.
struct SubjectEntry {
    int subject = 0;
    std::vector<int> train_poses; // empty for unknown subjects
    std::vector<int> test_poses;
    std::string test_set;         // name of the test set the test poses feed
};

// Declarative train/test split description.
//
// Text format, one directive per line, '#' comments ignored:
//   root=<dataset directory>
//   pattern=<filename template with {subject} and {pose} placeholders>
//   known <id> train=<poses> test=<poses> [set=<name>]
//   unknown <id> test=<poses> [set=<name>]
// A pose list is comma-separated values and inclusive ranges, e.g. 1-5,7.
// Test sets default to "known" / "unknown" by directive kind.
struct SplitManifest {
    std::filesystem::path root;
    std::string image_pattern;
    std::vector<SubjectEntry> known_subjects;
    std::vector<SubjectEntry> unknown_subjects;
};

struct TestSet {
    std::string name;
    bool known = false; // probes carry an enrolled subject
    std::vector<LabeledImage> images;
};

struct DatasetSplit {
    std::vector<LabeledImage> train;
    std::vector<TestSet> test_sets;
};

namespace detail {

inline std::vector<int> parse_pose_list(const std::string& text, const std::string& where) {
    std::vector<int> poses;
    if (text.empty()) return poses;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        const auto dash = part.find('-');
        try {
            if (dash == std::string::npos) {
                poses.push_back(std::stoi(part));
            } else {
                const int lo = std::stoi(part.substr(0, dash));
                const int hi = std::stoi(part.substr(dash + 1));
                if (hi < lo)
                    throw FormatError("manifest " + where + ": empty pose range '" + part + "'");
                for (int p = lo; p <= hi; ++p) poses.push_back(p);
            }
        } catch (const std::invalid_argument&) {
            throw FormatError("manifest " + where + ": bad pose '" + part + "'");
        }
    }
    std::sort(poses.begin(), poses.end());
    poses.erase(std::unique(poses.begin(), poses.end()), poses.end());
    return poses;
}

inline std::string expand_pattern(const std::string& pattern, int subject, int pose) {
    std::string out = pattern;
    auto replace_all = [&out](const std::string& key, const std::string& value) {
        std::size_t pos = 0;
        while ((pos = out.find(key, pos)) != std::string::npos) {
            out.replace(pos, key.size(), value);
            pos += value.size();
        }
    };
    replace_all("{subject}", std::to_string(subject));
    replace_all("{pose}", std::to_string(pose));
    return out;
}

// key=value fields after the subject id
inline std::map<std::string, std::string> parse_fields(std::istringstream& line,
                                                       const std::string& where) {
    std::map<std::string, std::string> fields;
    std::string word;
    while (line >> word) {
        const auto eq = word.find('=');
        if (eq == std::string::npos || eq == 0)
            throw FormatError("manifest " + where + ": expected key=value, got '" + word + "'");
        fields[word.substr(0, eq)] = word.substr(eq + 1);
    }
    return fields;
}

} // namespace detail

inline SplitManifest parse_manifest(std::istream& in) {
    SplitManifest manifest;
    std::set<int> seen_subjects;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head)) continue;
        const std::string where = "line " + std::to_string(line_no);

        if (head.rfind("root=", 0) == 0) {
            manifest.root = head.substr(5);
            std::string rest;
            std::getline(ls, rest);
            if (!rest.empty()) manifest.root += rest; // paths may contain spaces
        } else if (head.rfind("pattern=", 0) == 0) {
            manifest.image_pattern = head.substr(8);
        } else if (head == "known" || head == "unknown") {
            SubjectEntry entry;
            if (!(ls >> entry.subject) || entry.subject < 0)
                throw FormatError("manifest " + where + ": expected a subject id");
            if (!seen_subjects.insert(entry.subject).second)
                throw FormatError("manifest " + where + ": duplicate subject " +
                                  std::to_string(entry.subject));
            auto fields = detail::parse_fields(ls, where);
            if (head == "known") {
                entry.train_poses = detail::parse_pose_list(fields["train"], where);
                if (entry.train_poses.empty())
                    throw FormatError("manifest " + where + ": known subject needs train poses");
                entry.test_poses = detail::parse_pose_list(fields["test"], where);
                for (int p : entry.test_poses)
                    if (std::binary_search(entry.train_poses.begin(), entry.train_poses.end(), p))
                        throw FormatError("manifest " + where + ": pose " + std::to_string(p) +
                                          " listed for both train and test");
                entry.test_set = fields.count("set") ? fields["set"] : "known";
                manifest.known_subjects.push_back(std::move(entry));
            } else {
                entry.test_poses = detail::parse_pose_list(fields["test"], where);
                entry.test_set = fields.count("set") ? fields["set"] : "unknown";
                manifest.unknown_subjects.push_back(std::move(entry));
            }
        } else {
            throw FormatError("manifest " + where + ": unknown directive '" + head + "'");
        }
    }
    if (manifest.image_pattern.empty())
        throw FormatError("manifest is missing a pattern= directive");
    return manifest;
}

inline SplitManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open manifest: " + path.string());
    SplitManifest manifest = parse_manifest(in);
    if (manifest.root.is_relative())
        manifest.root = path.parent_path() / manifest.root;
    return manifest;
}

// Materializes a manifest. Train images come known subject by known subject
// in manifest order, poses ascending; test sets keep directive order. All
// images must share one shape.
inline DatasetSplit load_split(const SplitManifest& manifest) {
    DatasetSplit split;
    std::size_t width = 0, height = 0;

    auto load_one = [&](int subject, int pose) {
        const std::filesystem::path path =
            manifest.root / detail::expand_pattern(manifest.image_pattern, subject, pose);
        if (!std::filesystem::exists(path))
            throw IoError("manifest names a missing file: " + path.string());
        GrayImage img = load_pgm(path);
        if (width == 0) {
            width = img.width;
            height = img.height;
        } else if (img.width != width || img.height != height) {
            throw ShapeError("image shape mismatch: " + path.string() + " is " +
                             std::to_string(img.width) + "x" + std::to_string(img.height) +
                             ", expected " + std::to_string(width) + "x" +
                             std::to_string(height));
        }
        return LabeledImage{std::move(img), subject, pose};
    };

    auto set_index = [&split](const std::string& name, bool known) -> TestSet& {
        for (TestSet& s : split.test_sets) {
            if (s.name == name) {
                if (s.known != known)
                    throw FormatError("test set '" + name +
                                      "' mixes known and unknown subjects");
                return s;
            }
        }
        split.test_sets.push_back(TestSet{name, known, {}});
        return split.test_sets.back();
    };

    for (const SubjectEntry& e : manifest.known_subjects)
        for (int pose : e.train_poses)
            split.train.push_back(load_one(e.subject, pose));

    for (const SubjectEntry& e : manifest.known_subjects) {
        if (e.test_poses.empty()) continue;
        TestSet& set = set_index(e.test_set, true);
        for (int pose : e.test_poses) set.images.push_back(load_one(e.subject, pose));
    }
    for (const SubjectEntry& e : manifest.unknown_subjects) {
        if (e.test_poses.empty()) continue;
        TestSet& set = set_index(e.test_set, false);
        for (int pose : e.test_poses) set.images.push_back(load_one(e.subject, pose));
    }
    return split;
}

} // namespace hybridface
