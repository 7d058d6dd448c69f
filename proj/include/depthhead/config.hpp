#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "depthhead/detector.hpp"
#include "depthhead/synth.hpp"
#include "depthhead/trainer.hpp"

namespace depthhead {

// Single JSON document steering the whole pipeline. Every field is
// optional; absent fields keep the defaults below. Anything the underlying
// modules would reject is re-validated at load time.
struct RunConfig {
    CameraIntrinsics intrinsics{365.0, 365.0, 256.0, 212.0};  // Kinect-One-like 512x424 geometry
    DetectorConfig detector;
    TrainConfig training;
    CorpusSpec synth;
    double tau = 0.5;
    bool eval_standard_iou = false;
    std::uint32_t seed = 1;

    void validate() const {
        if (intrinsics.fx <= 0 || intrinsics.fy <= 0)
            throw std::invalid_argument("RunConfig: focal lengths must be positive");
        detector.validate();
        training.validate();
        synth.validate();
        if (tau < 0 || tau > 1) throw std::invalid_argument("RunConfig: tau outside [0, 1]");
    }
};

inline nlohmann::json config_to_json(const RunConfig& c) {
    return {
        {"seed", c.seed},
        {"intrinsics",
         {{"fx", c.intrinsics.fx},
          {"fy", c.intrinsics.fy},
          {"cx", c.intrinsics.cx},
          {"cy", c.intrinsics.cy}}},
        {"extraction",
         {{"k", c.detector.extraction.k},
          {"r_mm", c.detector.extraction.r_mm},
          {"l_mm", c.detector.extraction.l_mm},
          {"min_patch", c.detector.extraction.min_patch},
          {"patch_side", c.detector.extraction.patch_side}}},
        {"detector",
         {{"score_threshold", c.detector.score_threshold},
          {"nms_overlap", c.detector.nms_overlap}}},
        {"training",
         {{"epochs", c.training.epochs},
          {"batch_size", c.training.batch_size},
          {"seed", c.training.seed},
          {"negatives_per_frame", c.training.negatives_per_frame},
          {"exclusion_overlap", c.training.exclusion_overlap}}},
        {"synth",
         {{"width", c.synth.width},
          {"height", c.synth.height},
          {"min_heads", c.synth.min_heads},
          {"max_heads", c.synth.max_heads},
          {"head_depth_mm", {c.synth.head_depth_min_mm, c.synth.head_depth_max_mm}},
          {"head_radius_mm", {c.synth.head_radius_min_mm, c.synth.head_radius_max_mm}},
          {"placement_margin_px", c.synth.placement_margin_px},
          {"torso_prob", c.synth.torso_prob},
          {"lone_distractor_prob", c.synth.lone_distractor_prob},
          {"background_mm", {c.synth.background_min_mm, c.synth.background_max_mm}},
          {"dropout_prob", c.synth.dropout_prob}}},
        {"eval", {{"tau", c.tau}, {"use_standard_iou", c.eval_standard_iou}}},
    };
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.seed = j.value("seed", c.seed);
    if (j.contains("intrinsics")) {
        const auto& ji = j.at("intrinsics");
        c.intrinsics.fx = ji.value("fx", c.intrinsics.fx);
        c.intrinsics.fy = ji.value("fy", c.intrinsics.fy);
        c.intrinsics.cx = ji.value("cx", c.intrinsics.cx);
        c.intrinsics.cy = ji.value("cy", c.intrinsics.cy);
    }
    if (j.contains("extraction")) {
        const auto& je = j.at("extraction");
        auto& e = c.detector.extraction;
        e.k = je.value("k", e.k);
        e.r_mm = je.value("r_mm", e.r_mm);
        e.l_mm = je.value("l_mm", e.l_mm);
        e.min_patch = je.value("min_patch", e.min_patch);
        e.patch_side = je.value("patch_side", e.patch_side);
    }
    if (j.contains("detector")) {
        const auto& jd = j.at("detector");
        c.detector.score_threshold = jd.value("score_threshold", c.detector.score_threshold);
        c.detector.nms_overlap = jd.value("nms_overlap", c.detector.nms_overlap);
    }
    c.training.seed = c.seed;  // inherits unless the block overrides it
    if (j.contains("training")) {
        const auto& jt = j.at("training");
        c.training.epochs = jt.value("epochs", c.training.epochs);
        c.training.batch_size = jt.value("batch_size", c.training.batch_size);
        c.training.seed = jt.value("seed", c.training.seed);
        c.training.negatives_per_frame =
            jt.value("negatives_per_frame", c.training.negatives_per_frame);
        c.training.exclusion_overlap = jt.value("exclusion_overlap", c.training.exclusion_overlap);
    }
    if (j.contains("synth")) {
        const auto& js = j.at("synth");
        auto& s = c.synth;
        s.width = js.value("width", s.width);
        s.height = js.value("height", s.height);
        s.min_heads = js.value("min_heads", s.min_heads);
        s.max_heads = js.value("max_heads", s.max_heads);
        if (js.contains("head_depth_mm")) {
            s.head_depth_min_mm = js.at("head_depth_mm").at(0).get<double>();
            s.head_depth_max_mm = js.at("head_depth_mm").at(1).get<double>();
        }
        if (js.contains("head_radius_mm")) {
            s.head_radius_min_mm = js.at("head_radius_mm").at(0).get<double>();
            s.head_radius_max_mm = js.at("head_radius_mm").at(1).get<double>();
        }
        s.placement_margin_px = js.value("placement_margin_px", s.placement_margin_px);
        s.torso_prob = js.value("torso_prob", s.torso_prob);
        s.lone_distractor_prob = js.value("lone_distractor_prob", s.lone_distractor_prob);
        if (js.contains("background_mm")) {
            s.background_min_mm = js.at("background_mm").at(0).get<double>();
            s.background_max_mm = js.at("background_mm").at(1).get<double>();
        }
        s.dropout_prob = js.value("dropout_prob", s.dropout_prob);
    }
    if (j.contains("eval")) {
        c.tau = j.at("eval").value("tau", c.tau);
        c.eval_standard_iou = j.at("eval").value("use_standard_iou", c.eval_standard_iou);
    }
    c.synth.intrinsics = c.intrinsics;  // one calibration for the whole pipeline
    c.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace depthhead
