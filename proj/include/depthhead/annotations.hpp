#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthhead/depth_frame.hpp"

namespace depthhead {

// Ground-truth document shared by the dataset builder and the evaluator:
//   {"frames": [{"file": "f0.pgm", "heads": [{"cx":..,"cy":..,"w":..,"h":..}]}]}
// Paths are relative to the directory holding the JSON file.

struct FrameAnnotation {
    std::string file;
    std::vector<BoundingBox> heads;
};

struct AnnotationSet {
    std::vector<FrameAnnotation> frames;
};

inline nlohmann::json to_json(const BoundingBox& b) {
    return {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"h", b.h}};
}

inline BoundingBox box_from_json(const nlohmann::json& j) {
    BoundingBox b;
    b.cx = j.at("cx").get<double>();
    b.cy = j.at("cy").get<double>();
    b.w = j.at("w").get<double>();
    b.h = j.at("h").get<double>();
    if (b.w <= 0 || b.h <= 0) throw std::runtime_error("annotation box with non-positive size");
    return b;
}

inline AnnotationSet annotations_from_json(const nlohmann::json& j) {
    AnnotationSet set;
    for (const auto& jf : j.at("frames")) {
        FrameAnnotation fa;
        fa.file = jf.at("file").get<std::string>();
        for (const auto& jb : jf.value("heads", nlohmann::json::array()))
            fa.heads.push_back(box_from_json(jb));
        set.frames.push_back(std::move(fa));
    }
    return set;
}

inline nlohmann::json annotations_to_json(const AnnotationSet& set) {
    nlohmann::json frames = nlohmann::json::array();
    for (const FrameAnnotation& fa : set.frames) {
        nlohmann::json heads = nlohmann::json::array();
        for (const BoundingBox& b : fa.heads) heads.push_back(to_json(b));
        frames.push_back({{"file", fa.file}, {"heads", std::move(heads)}});
    }
    return {{"frames", std::move(frames)}};
}

inline AnnotationSet load_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open annotation file: " + path);
    nlohmann::json j;
    try {
        in >> j;
        return annotations_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed annotation file " + path + ": " + e.what());
    }
}

inline void save_annotations(const std::string& path, const AnnotationSet& set) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot create annotation file: " + path);
    out << annotations_to_json(set).dump(2) << "\n";
    if (!out) throw std::runtime_error("annotation write failed: " + path);
}

}  // namespace depthhead
