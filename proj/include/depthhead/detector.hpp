#pragma once

#include <algorithm>
#include <chrono>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "depthhead/candidates.hpp"
#include "depthhead/depth_frame.hpp"
#include "depthhead/iou.hpp"
#include "depthhead/nn.hpp"

namespace depthhead {

struct Detection {
    BoundingBox box;
    double score = 0.0;  // head-class probability
};

struct DetectorConfig {
    ExtractionConfig extraction;
    double score_threshold = 0.5;
    double nms_overlap = 0.3;

    void validate() const {
        extraction.validate();
        if (score_threshold < 0 || score_threshold > 1)
            throw std::invalid_argument("DetectorConfig: score_threshold outside [0, 1]");
        if (nms_overlap < 0 || nms_overlap > 1)
            throw std::invalid_argument("DetectorConfig: nms_overlap outside [0, 1]");
    }
};

// Head-class probability for each candidate, in input order. Candidates are
// classified in chunks; per-sample results are independent of the chunking.
inline std::vector<double> classify_candidates(const Network<float>& model,
                                               const std::vector<Candidate>& candidates,
                                               int chunk = 64) {
    std::vector<double> scores(candidates.size());
    if (candidates.empty()) return scores;
    const int side = model.input_h();
    const std::size_t patch_count = static_cast<std::size_t>(side) * side;
    if (model.input_w() != side || model.input_c() != 1)
        throw std::invalid_argument("classify_candidates: unsupported model input shape");
    for (const Candidate& c : candidates)
        if (c.patch.size() != patch_count)
            throw std::invalid_argument("classify_candidates: patch does not match model input");

    for (std::size_t start = 0; start < candidates.size(); start += chunk) {
        const std::size_t n = std::min<std::size_t>(chunk, candidates.size() - start);
        Tensor<float> batch({static_cast<int>(n), 1, side, side});
        for (std::size_t i = 0; i < n; ++i)
            std::copy(candidates[start + i].patch.begin(), candidates[start + i].patch.end(),
                      batch.v.begin() + i * patch_count);
        const Tensor<float> probs = model.forward(batch);
        for (std::size_t i = 0; i < n; ++i)
            scores[start + i] = probs.v[i * 2 + kClassHead];
    }
    return scores;
}

// Greedy suppression on conventional overlap: repeatedly keep the
// best-scoring remaining detection and drop everything overlapping it more
// than the threshold. Score ties prefer the lexicographically smaller box.
inline std::vector<Detection> nms(std::vector<Detection> detections, double overlap_threshold) {
    std::sort(detections.begin(), detections.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.box.cx, a.box.cy, a.box.w, a.box.h) <
               std::tie(b.box.cx, b.box.cy, b.box.w, b.box.h);
    });
    std::vector<Detection> kept;
    for (const Detection& d : detections) {
        bool suppressed = false;
        for (const Detection& anchor : kept) {
            if (iou_standard(anchor.box, d.box) > overlap_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

struct DetectTiming {
    double extract_ms = 0.0;   // denoising + candidate extraction
    double classify_ms = 0.0;  // network evaluation
    double fps() const {
        const double total = extract_ms + classify_ms;
        return total > 0 ? 1000.0 / total : 0.0;
    }
};

struct DetectResult {
    std::vector<Detection> detections;
    DetectTiming timing;
};

// Full single-frame pipeline: denoise, extract candidates, classify, keep
// scores above the threshold, suppress non-maxima. The timing record covers
// extraction and classification; thresholding and suppression are noise in
// comparison and file I/O never enters the measurement.
inline DetectResult detect(const DepthFrame& frame, const Network<float>& model,
                           const DetectorConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    DetectResult result;

    const auto t0 = clock::now();
    const DepthFrame clean = denoise_zeros(frame);
    const std::vector<Candidate> candidates = extract_candidates(clean, cfg.extraction);
    const auto t1 = clock::now();
    const std::vector<double> scores = classify_candidates(model, candidates);
    const auto t2 = clock::now();

    std::vector<Detection> raw;
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (scores[i] >= cfg.score_threshold) raw.push_back({candidates[i].box, scores[i]});
    result.detections = nms(std::move(raw), cfg.nms_overlap);
    result.timing.extract_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.timing.classify_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    return result;
}

}  // namespace depthhead
