#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "depthhead/annotations.hpp"
#include "depthhead/depth_frame.hpp"
#include "depthhead/iou.hpp"
#include "depthhead/parallel.hpp"
#include "depthhead/pgm.hpp"
#include "depthhead/rng.hpp"

namespace depthhead {

// Closed-loop test scenes: heads and torso distractors are ellipsoids in
// camera space (x right, y down, z forward, millimeters), ray-cast through
// the pinhole model onto a background plane. Ellipsoids make every expected
// depth value analytic, so renders can be checked exactly.

struct Ellipsoid {
    double x = 0, y = 0, z = 0;     // center, mm
    double rx = 0, ry = 0, rz = 0;  // semi-axes, mm
};

struct NoiseSpec {
    double zero_dropout_prob = 0.0;
    std::uint32_t seed = 0;
};

struct SceneSpec {
    int width = 0;
    int height = 0;
    CameraIntrinsics intrinsics;
    std::vector<Ellipsoid> heads;
    std::vector<Ellipsoid> distractors;
    double background_mm = 4000.0;
    NoiseSpec noise;

    void validate() const {
        if (width <= 0 || height <= 0) throw std::invalid_argument("SceneSpec: bad frame size");
        if (intrinsics.fx <= 0 || intrinsics.fy <= 0)
            throw std::invalid_argument("SceneSpec: bad intrinsics");
        if (background_mm <= 0 || background_mm > 8000)
            throw std::invalid_argument("SceneSpec: background outside (0, 8000] mm");
        auto check = [](const Ellipsoid& e, const char* what) {
            if (e.z <= 0) throw std::invalid_argument(std::string(what) + " behind camera");
            if (e.z > 8000) throw std::invalid_argument(std::string(what) + " beyond 8000 mm");
            if (e.rx <= 0 || e.ry <= 0 || e.rz <= 0)
                throw std::invalid_argument(std::string(what) + " with non-positive radius");
        };
        for (const Ellipsoid& e : heads) check(e, "SceneSpec: head");
        for (const Ellipsoid& e : distractors) check(e, "SceneSpec: distractor");
        if (noise.zero_dropout_prob < 0 || noise.zero_dropout_prob > 1)
            throw std::invalid_argument("SceneSpec: dropout probability outside [0, 1]");
    }
};

struct RenderResult {
    DepthFrame frame;
    std::vector<BoundingBox> head_boxes;  // ground truth, one per head
};

namespace detail {

// Smallest positive depth at which the pixel ray (parameterized by z) meets
// the ellipsoid, or 0 when it misses. Ray point at depth t: (t*dx, t*dy, t).
inline double ray_ellipsoid_depth(double dx, double dy, const Ellipsoid& e) {
    const double px = dx / e.rx, py = dy / e.ry, pz = 1.0 / e.rz;
    const double qx = e.x / e.rx, qy = e.y / e.ry, qz = e.z / e.rz;
    const double a = px * px + py * py + pz * pz;
    const double b = -2.0 * (px * qx + py * qy + pz * qz);
    const double c = qx * qx + qy * qy + qz * qz - 1.0;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0) return 0.0;
    const double root = std::sqrt(disc);
    const double t1 = (-b - root) / (2.0 * a);
    if (t1 > 0) return t1;
    const double t2 = (-b + root) / (2.0 * a);
    return t2 > 0 ? t2 : 0.0;
}

}  // namespace detail

// Projected ground-truth box of a head: center through the pinhole, size
// fx*(2*rx)/z by fy*(2*ry)/z.
inline BoundingBox project_head_box(const CameraIntrinsics& intr, const Ellipsoid& e) {
    BoundingBox b;
    b.cx = intr.cx + intr.fx * e.x / e.z;
    b.cy = intr.cy + intr.fy * e.y / e.z;
    b.w = intr.fx * (2.0 * e.rx) / e.z;
    b.h = intr.fy * (2.0 * e.ry) / e.z;
    return b;
}

inline RenderResult render_depth(const SceneSpec& scene) {
    scene.validate();
    DepthFrame frame(scene.width, scene.height, scene.intrinsics);
    std::vector<const Ellipsoid*> bodies;
    for (const Ellipsoid& e : scene.heads) bodies.push_back(&e);
    for (const Ellipsoid& e : scene.distractors) bodies.push_back(&e);

    const CameraIntrinsics& intr = scene.intrinsics;
    parallel_for(static_cast<std::size_t>(scene.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        const double dy = (y - intr.cy) / intr.fy;
        for (int x = 0; x < scene.width; ++x) {
            const double dx = (x - intr.cx) / intr.fx;
            double depth = scene.background_mm;
            for (const Ellipsoid* e : bodies) {
                const double t = detail::ray_ellipsoid_depth(dx, dy, *e);
                if (t > 0 && t < depth) depth = t;
            }
            const long mm = std::lround(depth);
            frame.at(x, y) = static_cast<std::uint16_t>(std::clamp(mm, 1L, 65535L));
        }
    });

    RenderResult result{std::move(frame), {}};
    for (const Ellipsoid& e : scene.heads)
        result.head_boxes.push_back(project_head_box(intr, e));
    return result;
}

// Emulated sensor dropout: each pixel independently becomes "no measurement"
// with the given probability.
inline DepthFrame add_noise(const DepthFrame& frame, const NoiseSpec& noise) {
    if (noise.zero_dropout_prob < 0 || noise.zero_dropout_prob > 1)
        throw std::invalid_argument("add_noise: dropout probability outside [0, 1]");
    DepthFrame out = frame;
    if (noise.zero_dropout_prob == 0.0) return out;
    std::mt19937 rng(noise.seed);
    for (auto& v : out.pixels())
        if (uniform_unit(rng) < noise.zero_dropout_prob) v = 0;
    return out;
}

// Randomization ranges for corpus generation. Physical head width is drawn
// around 200 mm so the depth-scaled candidate boxes line up with the
// rendered ground truth.
struct CorpusSpec {
    int width = 512;
    int height = 424;
    CameraIntrinsics intrinsics{365.0, 365.0, 256.0, 212.0};
    int min_heads = 0;
    int max_heads = 2;
    double head_depth_min_mm = 900.0;
    double head_depth_max_mm = 2200.0;
    double head_radius_min_mm = 85.0;
    double head_radius_max_mm = 115.0;
    double placement_margin_px = 4.0;  // gap between a head box and the frame edge
    double torso_prob = 0.7;           // torso distractor under a head
    double lone_distractor_prob = 0.5; // free-standing distractor per frame
    double background_min_mm = 3500.0;
    double background_max_mm = 6000.0;
    double dropout_prob = 0.02;

    void validate() const {
        if (width <= 0 || height <= 0) throw std::invalid_argument("CorpusSpec: bad frame size");
        if (min_heads < 0 || max_heads < min_heads)
            throw std::invalid_argument("CorpusSpec: bad head count range");
        if (head_depth_min_mm > head_depth_max_mm || head_depth_min_mm <= 0)
            throw std::invalid_argument("CorpusSpec: bad depth range");
        if (head_radius_min_mm > head_radius_max_mm || head_radius_min_mm <= 0)
            throw std::invalid_argument("CorpusSpec: bad radius range");
        if (background_min_mm > background_max_mm || background_min_mm <= 0 ||
            background_max_mm > 8000)
            throw std::invalid_argument("CorpusSpec: bad background range");
        if (dropout_prob < 0 || dropout_prob > 1)
            throw std::invalid_argument("CorpusSpec: bad dropout probability");
        if (torso_prob < 0 || torso_prob > 1 || lone_distractor_prob < 0 ||
            lone_distractor_prob > 1)
            throw std::invalid_argument("CorpusSpec: bad distractor probability");
    }
};

// One random scene. Head boxes are kept pairwise disjoint and clear of
// distractor silhouettes so ground truth stays unambiguous.
inline SceneSpec random_scene(const CorpusSpec& cfg, std::uint32_t seed) {
    std::mt19937 rng(seed);
    SceneSpec scene;
    scene.width = cfg.width;
    scene.height = cfg.height;
    scene.intrinsics = cfg.intrinsics;
    scene.background_mm = uniform_real(rng, cfg.background_min_mm, cfg.background_max_mm);
    scene.noise = {cfg.dropout_prob, static_cast<std::uint32_t>(rng())};

    const int n_heads =
        static_cast<int>(uniform_int(rng, static_cast<std::uint32_t>(cfg.min_heads),
                                     static_cast<std::uint32_t>(cfg.max_heads)));
    std::vector<BoundingBox> occupied;
    const CameraIntrinsics& intr = cfg.intrinsics;

    auto place_torso = [&](const Ellipsoid& head) {
        Ellipsoid torso;
        torso.rx = uniform_real(rng, 150.0, 240.0);
        torso.ry = uniform_real(rng, 200.0, 300.0);
        torso.rz = uniform_real(rng, 100.0, 150.0);
        torso.x = head.x + uniform_real(rng, -30.0, 30.0);
        torso.y = head.y + head.ry + torso.ry * 0.85;
        torso.z = head.z + uniform_real(rng, 40.0, 140.0);
        scene.distractors.push_back(torso);
        occupied.push_back(project_head_box(intr, torso));
    };

    for (int i = 0; i < n_heads; ++i) {
        for (int attempt = 0; attempt < 60; ++attempt) {
            Ellipsoid head;
            head.z = uniform_real(rng, cfg.head_depth_min_mm, cfg.head_depth_max_mm);
            const double r = uniform_real(rng, cfg.head_radius_min_mm, cfg.head_radius_max_mm);
            head.rx = r;
            head.ry = r * uniform_real(rng, 1.0, 1.2);
            head.rz = r * uniform_real(rng, 0.85, 1.0);
            const double half_w = intr.fx * head.rx / head.z;
            const double half_h = intr.fy * head.ry / head.z;
            const double mx = half_w + cfg.placement_margin_px;
            const double my = half_h + cfg.placement_margin_px;
            if (2 * mx >= cfg.width || 2 * my >= cfg.height) continue;  // box cannot fit
            const double u = uniform_real(rng, mx, cfg.width - mx);
            const double v = uniform_real(rng, my, cfg.height - my);
            head.x = (u - intr.cx) * head.z / intr.fx;
            head.y = (v - intr.cy) * head.z / intr.fy;
            const BoundingBox box = project_head_box(intr, head);
            bool clear = true;
            for (const BoundingBox& other : occupied)
                if (intersection_area(box, other) > 0) clear = false;
            if (!clear) continue;
            scene.heads.push_back(head);
            occupied.push_back(box);
            if (uniform_unit(rng) < cfg.torso_prob) place_torso(head);
            break;
        }
    }

    if (uniform_unit(rng) < cfg.lone_distractor_prob) {
        // torso-scale blob, clearly wider than a head: pure depth carries no
        // other cue, so head-sized spheres would make the task ill-posed
        Ellipsoid blob;
        blob.z = uniform_real(rng, cfg.head_depth_min_mm, cfg.head_depth_max_mm + 500.0);
        blob.rx = uniform_real(rng, 220.0, 340.0);
        blob.ry = uniform_real(rng, 180.0, 320.0);
        blob.rz = uniform_real(rng, 90.0, 160.0);
        const double u = uniform_real(rng, 0.0, cfg.width);
        const double v = uniform_real(rng, cfg.height * 0.3, static_cast<double>(cfg.height));
        blob.x = (u - intr.cx) * blob.z / intr.fx;
        blob.y = (v - intr.cy) * blob.z / intr.fy;
        const BoundingBox box = project_head_box(intr, blob);
        bool clear = true;
        for (std::size_t i = 0; i < scene.heads.size(); ++i)
            if (intersection_area(box, project_head_box(intr, scene.heads[i])) > 0) clear = false;
        if (clear) scene.distractors.push_back(blob);
    }
    return scene;
}

// Renders `count` random frames into out_dir as 16-bit PGM files plus the
// annotation JSON. Per-frame seeds derive from the corpus seed, so the
// output is byte-identical for a given (spec, count, seed).
inline AnnotationSet generate_corpus(const CorpusSpec& cfg, int count, std::uint32_t seed,
                                     const std::string& out_dir) {
    cfg.validate();
    if (count < 1) throw std::invalid_argument("generate_corpus: count must be >= 1");

    std::vector<RenderResult> rendered(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
        const std::uint32_t frame_seed =
            seed + static_cast<std::uint32_t>(i) * 2654435761u;  // Weyl-style spacing
        const SceneSpec scene = random_scene(cfg, frame_seed);
        RenderResult r = render_depth(scene);
        r.frame = add_noise(r.frame, scene.noise);
        rendered[i] = std::move(r);
    });

    AnnotationSet set;
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04d.pgm", i);
        write_pgm16_file(out_dir + "/" + name, rendered[i].frame);
        FrameAnnotation fa;
        fa.file = name;
        fa.heads = rendered[i].head_boxes;
        set.frames.push_back(std::move(fa));
    }
    save_annotations(out_dir + "/annotations.json", set);
    return set;
}

}  // namespace depthhead
