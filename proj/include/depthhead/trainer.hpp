#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthhead/adam.hpp"
#include "depthhead/annotations.hpp"
#include "depthhead/candidates.hpp"
#include "depthhead/iou.hpp"
#include "depthhead/nn.hpp"
#include "depthhead/pgm.hpp"
#include "depthhead/rng.hpp"

namespace depthhead {

struct LabeledPatch {
    std::vector<float> patch;  // patch_side^2 values in [-1, 1]
    int label = kClassNonHead;
    std::string source_frame;
    PixelPos center;
    BoundingBox box;  // the crop this patch came from
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 64;
    std::uint32_t seed = 1;
    int negatives_per_frame = 6;
    double exclusion_overlap = 0.0;  // max overlap ratio a negative may have with a head

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
        if (negatives_per_frame < 0)
            throw std::invalid_argument("TrainConfig: negatives_per_frame must be >= 0");
        if (exclusion_overlap < 0)
            throw std::invalid_argument("TrainConfig: exclusion_overlap must be >= 0");
    }
};

struct DatasetBuildResult {
    std::vector<LabeledPatch> patches;
    std::vector<std::string> warnings;
};

// Builds the labeled patch set from annotated depth frames.
//  - one positive per annotated head, cropped at the annotated center with
//    the box the distance measurement implies there (heads whose window has
//    no valid depth are skipped with a warning);
//  - negatives_per_frame negatives at random grid centers whose implied box
//    overlaps every head box by at most exclusion_overlap (strictly disjoint
//    at the default 0).
// Frames referenced by the annotations must exist; a missing file is an
// error, not a warning.
inline DatasetBuildResult build_dataset(const AnnotationSet& annotations,
                                        const std::string& base_dir,
                                        const CameraIntrinsics& intrinsics,
                                        const ExtractionConfig& extraction,
                                        const TrainConfig& cfg) {
    extraction.validate();
    cfg.validate();
    DatasetBuildResult result;
    for (std::size_t fi = 0; fi < annotations.frames.size(); ++fi) {
        const FrameAnnotation& fa = annotations.frames[fi];
        const std::string path = base_dir.empty() ? fa.file : base_dir + "/" + fa.file;
        const DepthFrame frame = denoise_zeros(read_pgm16_file(path, intrinsics));

        for (const BoundingBox& head : fa.heads) {
            const PixelPos center{
                std::clamp(static_cast<int>(std::lround(head.cx)), 0, frame.width() - 1),
                std::clamp(static_cast<int>(std::lround(head.cy)), 0, frame.height() - 1)};
            const auto d = neighborhood_mean_depth(frame, center, extraction.k);
            if (!d) {
                result.warnings.push_back("no depth at head center (" + std::to_string(center.x) +
                                          ", " + std::to_string(center.y) + ") in " + fa.file);
                continue;
            }
            const auto [w, h] = head_box_at(intrinsics, *d, extraction.r_mm);
            const BoundingBox box{static_cast<double>(center.x), static_cast<double>(center.y),
                                  w, h};
            LabeledPatch p;
            p.patch = crop_normalize(frame, box, *d, extraction);
            p.label = kClassHead;
            p.source_frame = fa.file;
            p.center = center;
            p.box = box;
            result.patches.push_back(std::move(p));
        }

        // per-frame generator keeps assembly deterministic and frame-parallelizable
        std::mt19937 rng(cfg.seed + static_cast<std::uint32_t>(fi) * 2654435761u);
        const auto grid = candidate_grid(frame.width(), frame.height(), extraction.k);
        int emitted = 0;
        const int max_attempts = 200 * std::max(1, cfg.negatives_per_frame);
        for (int attempt = 0; attempt < max_attempts && emitted < cfg.negatives_per_frame;
             ++attempt) {
            const PixelPos center =
                grid[uniform_int(rng, 0, static_cast<std::uint32_t>(grid.size() - 1))];
            const auto d = neighborhood_mean_depth(frame, center, extraction.k);
            if (!d) continue;
            const auto [w, h] = head_box_at(intrinsics, *d, extraction.r_mm);
            if (std::min(w, h) < extraction.min_patch) continue;
            const BoundingBox box{static_cast<double>(center.x), static_cast<double>(center.y), w,
                                  h};
            bool excluded = false;
            for (const BoundingBox& head : fa.heads) {
                const PaperIoU overlap = iou_paper(box, head);
                if (overlap.exact || overlap.ratio > cfg.exclusion_overlap) excluded = true;
            }
            if (excluded) continue;
            LabeledPatch p;
            p.patch = crop_normalize(frame, box, *d, extraction);
            p.label = kClassNonHead;
            p.source_frame = fa.file;
            p.center = center;
            p.box = box;
            result.patches.push_back(std::move(p));
            ++emitted;
        }
        if (emitted < cfg.negatives_per_frame) {
            result.warnings.push_back("only " + std::to_string(emitted) + "/" +
                                      std::to_string(cfg.negatives_per_frame) +
                                      " negatives found in " + fa.file);
        }
    }
    return result;
}

// Horizontal mirror of every patch, appended after the originals with labels
// kept. Mirroring is a pure pixel permutation, so applying it twice restores
// the input bit for bit.
inline std::vector<LabeledPatch> augment_flip(const std::vector<LabeledPatch>& dataset) {
    std::vector<LabeledPatch> out;
    out.reserve(dataset.size() * 2);
    out = dataset;
    for (const LabeledPatch& p : dataset) {
        const int side = static_cast<int>(std::lround(std::sqrt(p.patch.size())));
        LabeledPatch m = p;
        for (int y = 0; y < side; ++y)
            std::reverse(m.patch.begin() + static_cast<std::ptrdiff_t>(y) * side,
                         m.patch.begin() + static_cast<std::ptrdiff_t>(y + 1) * side);
        out.push_back(std::move(m));
    }
    return out;
}

struct EpochStats {
    int epoch = 0;       // 1-based
    double loss = 0.0;   // mean over the epoch's samples
    double accuracy = 0.0;
};

struct TrainResult {
    Network<float> model;
    std::vector<EpochStats> history;
};

// Minibatch training loop: seeded shuffle per epoch, forward/backward and
// one optimizer step per batch. Loss and accuracy are accumulated from the
// training batches themselves.
inline TrainResult train(const std::vector<LabeledPatch>& dataset, const TrainConfig& cfg,
                         int patch_side = 64) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    bool has_pos = false, has_neg = false;
    const std::size_t patch_count = static_cast<std::size_t>(patch_side) * patch_side;
    for (const LabeledPatch& p : dataset) {
        if (p.patch.size() != patch_count)
            throw std::invalid_argument("train: patch size does not match patch_side");
        (p.label == kClassHead ? has_pos : has_neg) = true;
    }
    if (!has_pos || !has_neg)
        throw std::invalid_argument("train: dataset must contain both classes");

    TrainResult result{make_head_network(patch_side), {}};
    Network<float>& net = result.model;
    net.init_weights(cfg.seed);
    AdamState<float> opt = AdamState<float>::for_network(net);
    std::mt19937 shuffle_rng(cfg.seed);

    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle_indices(order, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t n = std::min<std::size_t>(cfg.batch_size, order.size() - start);
            Tensor<float> batch({static_cast<int>(n), 1, patch_side, patch_side});
            std::vector<int> labels(n);
            for (std::size_t i = 0; i < n; ++i) {
                const LabeledPatch& p = dataset[order[start + i]];
                std::copy(p.patch.begin(), p.patch.end(), batch.v.begin() + i * patch_count);
                labels[i] = p.label;
            }
            const Tensor<float>& probs = net.forward_cached(batch);
            const double batch_loss = cross_entropy(probs, labels);
            if (!std::isfinite(batch_loss)) {
                throw std::runtime_error("train: non-finite loss in epoch " +
                                         std::to_string(epoch) + " at sample offset " +
                                         std::to_string(start));
            }
            loss_sum += batch_loss * static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                const float p_head = probs.v[i * 2 + kClassHead];
                const int predicted = p_head > probs.v[i * 2 + kClassNonHead] ? kClassHead
                                                                              : kClassNonHead;
                if (predicted == labels[i]) ++correct;
            }
            const auto grads = net.backward(labels);
            adam_step(net, grads, opt);
        }
        result.history.push_back({epoch, loss_sum / static_cast<double>(dataset.size()),
                                  static_cast<double>(correct) /
                                      static_cast<double>(dataset.size())});
    }
    net.drop_cache();
    return result;
}

inline void save_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot create history file: " + path);
    out << "epoch,loss,accuracy\n";
    for (const EpochStats& e : history)
        out << e.epoch << "," << e.loss << "," << e.accuracy << "\n";
}

}  // namespace depthhead
