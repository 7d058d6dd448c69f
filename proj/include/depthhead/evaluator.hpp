#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthhead/annotations.hpp"
#include "depthhead/detector.hpp"
#include "depthhead/iou.hpp"

namespace depthhead {

struct FrameDetections {
    std::string file;
    std::vector<Detection> detections;
    double detect_ms = 0.0;  // optional, feeds the fps column
};

struct FrameEvalRow {
    std::string file;
    long tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    double tp_rate = 0.0;      // tp / ground-truth heads
    double fp_rate = 0.0;      // fp / ground-truth heads (same denominator as tp_rate)
    double mean_paper_iou = 0.0;  // over matched pairs with a finite ratio
    long exact_matches = 0;       // matched pairs whose ratio degenerates
    double fps = 0.0;             // frames / summed detect time, 0 when untimed
    std::vector<FrameEvalRow> per_frame;
};

// Greedy one-to-one matching against ground truth, per frame:
//  - every head grabs the unmatched detection with the highest overlap;
//  - pairs above tau are true positives;
//  - a paired detection below tau leaves both a false positive and a false
//    negative behind, exactly like an unmatched one;
//  - tp + fn always equals the number of annotated heads.
// The threshold is compared on the protocol ratio (see iou_paper) unless
// use_standard_iou is set. Detection sets are looked up by frame file name;
// a detection file that has no annotation entry is an error.
inline EvalReport match_and_score(const std::vector<FrameDetections>& detections,
                                  const AnnotationSet& annotations, double tau,
                                  bool use_standard_iou = false) {
    if (tau < 0 || tau > 1) throw std::invalid_argument("match_and_score: tau outside [0, 1]");
    std::map<std::string, const std::vector<Detection>*> by_file;
    for (const FrameDetections& fd : detections) by_file[fd.file] = &fd.detections;
    {
        std::string unknown;
        std::map<std::string, bool> annotated;
        for (const FrameAnnotation& fa : annotations.frames) annotated[fa.file] = true;
        for (const FrameDetections& fd : detections)
            if (!annotated.count(fd.file)) unknown += (unknown.empty() ? "" : ", ") + fd.file;
        if (!unknown.empty())
            throw std::invalid_argument("match_and_score: detections for unannotated frames: " +
                                        unknown);
    }

    EvalReport report;
    double iou_sum = 0.0;
    long iou_count = 0;
    double total_ms = 0.0;
    for (const FrameDetections& fd : detections) total_ms += fd.detect_ms;

    for (const FrameAnnotation& fa : annotations.frames) {
        const auto it = by_file.find(fa.file);
        static const std::vector<Detection> kNone;
        const std::vector<Detection>& dets = it != by_file.end() ? *it->second : kNone;
        std::vector<bool> taken(dets.size(), false);
        FrameEvalRow row;
        row.file = fa.file;

        for (const BoundingBox& gt : fa.heads) {
            int best = -1;
            PaperIoU best_iou;
            double best_key = 0.0;
            for (std::size_t di = 0; di < dets.size(); ++di) {
                if (taken[di]) continue;
                const PaperIoU pi = iou_paper(gt, dets[di].box);
                const double key = pi.exact ? std::numeric_limits<double>::infinity() : pi.ratio;
                if (best < 0 || key > best_key) {
                    best = static_cast<int>(di);
                    best_key = key;
                    best_iou = pi;
                }
            }
            if (best < 0 || (!best_iou.exact && best_iou.ratio <= 0.0)) {
                ++row.fn;  // nothing overlaps this head
                continue;
            }
            taken[best] = true;
            if (best_iou.exact) {
                ++report.exact_matches;
            } else {
                iou_sum += best_iou.ratio;
                ++iou_count;
            }
            const bool hit = use_standard_iou
                                 ? iou_standard(gt, dets[best].box) > tau
                                 : best_iou.exceeds(tau);
            if (hit) {
                ++row.tp;
            } else {
                ++row.fn;  // the paired detection also counts below as fp
            }
        }
        row.fp = static_cast<long>(dets.size()) - row.tp;
        report.tp += row.tp;
        report.fp += row.fp;
        report.fn += row.fn;
        report.per_frame.push_back(std::move(row));
    }

    const long heads = report.tp + report.fn;
    report.tp_rate = heads > 0 ? static_cast<double>(report.tp) / heads : 0.0;
    report.fp_rate = heads > 0 ? static_cast<double>(report.fp) / heads : 0.0;
    report.mean_paper_iou = iou_count > 0 ? iou_sum / iou_count : 0.0;
    report.fps = total_ms > 0 ? static_cast<double>(detections.size()) / (total_ms / 1000.0) : 0.0;
    return report;
}

struct BenchRow {
    int k = 0;
    double tp_rate = 0.0;
    double mean_iou = 0.0;
    double fps = 0.0;
};

// Sweeps the sampling stride K over a frame set: detection quality falls
// and throughput rises as K grows since the candidate count shrinks
// quadratically.
inline std::vector<BenchRow> bench_table(const std::vector<std::pair<std::string, DepthFrame>>& frames,
                                         const AnnotationSet& annotations,
                                         const Network<float>& model, DetectorConfig cfg,
                                         const std::vector<int>& k_values, double tau,
                                         bool use_standard_iou = false) {
    std::vector<BenchRow> rows;
    for (const int k : k_values) {
        cfg.extraction.k = k;
        std::vector<FrameDetections> dets;
        for (const auto& [file, frame] : frames) {
            const DetectResult r = detect(frame, model, cfg);
            dets.push_back({file, r.detections, r.timing.extract_ms + r.timing.classify_ms});
        }
        const EvalReport report = match_and_score(dets, annotations, tau, use_standard_iou);
        rows.push_back({k, report.tp_rate, report.mean_paper_iou, report.fps});
    }
    return rows;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << "k,tp_rate,mean_iou,fps\n";
    for (const BenchRow& r : rows)
        out << r.k << "," << r.tp_rate << "," << r.mean_iou << "," << r.fps << "\n";
}

inline void write_report_csv(std::ostream& out, const EvalReport& r) {
    out << "tp,fp,fn,tp_rate,fp_rate,mean_paper_iou,fps\n";
    out << r.tp << "," << r.fp << "," << r.fn << "," << r.tp_rate << "," << r.fp_rate << ","
        << r.mean_paper_iou << "," << r.fps << "\n";
}

}  // namespace depthhead
