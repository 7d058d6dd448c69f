#pragma once

#include <algorithm>

#include "depthhead/depth_frame.hpp"

namespace depthhead {

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
    const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
    return (w > 0 && h > 0) ? w * h : 0.0;
}

// Overlap ratio used by the evaluation protocol: intersection area over the
// area of the symmetric difference. Note this is NOT the conventional
// intersection-over-union; for boxes with standard overlap s it equals
// s / (1 - s), and for identical boxes the denominator vanishes. That
// degenerate case is reported as `exact`, which outranks every threshold.
struct PaperIoU {
    double ratio = 0.0;
    bool exact = false;

    bool exceeds(double tau) const { return exact || ratio > tau; }
};

inline PaperIoU iou_paper(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    const double denom = uni - inter;
    if (denom <= 0.0) return {0.0, true};
    return {inter / denom, false};
}

// Conventional intersection-over-union, used where the protocol above does
// not apply (candidate suppression).
inline double iou_standard(const BoundingBox& a, const BoundingBox& b) {
    const double inter = intersection_area(a, b);
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

}  // namespace depthhead
