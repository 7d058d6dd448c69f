// depthhead: depth-image head detection pipeline.
//
//   gen-synth  render a synthetic depth corpus (PGM frames + annotations)
//   train      build a patch dataset from an annotated corpus and train
//   detect     run detection over a frame or a directory of frames
//   eval       score detections against annotations
//   bench      sweep the sampling stride K and report rate/throughput
//
// All knobs live in a JSON config (see --dump-config for the defaults).
// DEPTHHEAD_THREADS caps the worker pool.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "depthhead/config.hpp"
#include "depthhead/detector.hpp"
#include "depthhead/evaluator.hpp"
#include "depthhead/model_io.hpp"
#include "depthhead/pgm.hpp"
#include "depthhead/synth.hpp"
#include "depthhead/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace depthhead;

namespace {

struct GlobalOpts {
    std::string config_path;
    bool dump_config = false;
    std::int64_t seed = -1;  // <0: keep config value
};

RunConfig effective_config(const GlobalOpts& g) {
    RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
    if (g.seed >= 0) {
        cfg.seed = static_cast<std::uint32_t>(g.seed);
        cfg.training.seed = cfg.seed;
    }
    return cfg;
}

std::vector<std::string> pgm_files_in(const std::string& input) {
    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& entry : fs::directory_iterator(input))
            if (entry.path().extension() == ".pgm") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw std::runtime_error("no .pgm frames in " + input);
    } else {
        files.push_back(input);
    }
    return files;
}

void draw_box_outline(std::vector<std::uint8_t>& gray, int w, int h, const BoundingBox& box,
                      std::uint8_t value) {
    const int x0 = std::clamp(static_cast<int>(std::lround(box.x_min())), 0, w - 1);
    const int x1 = std::clamp(static_cast<int>(std::lround(box.x_max())) - 1, 0, w - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround(box.y_min())), 0, h - 1);
    const int y1 = std::clamp(static_cast<int>(std::lround(box.y_max())) - 1, 0, h - 1);
    for (int x = x0; x <= x1; ++x) {
        gray[static_cast<std::size_t>(y0) * w + x] = value;
        gray[static_cast<std::size_t>(y1) * w + x] = value;
    }
    for (int y = y0; y <= y1; ++y) {
        gray[static_cast<std::size_t>(y) * w + x0] = value;
        gray[static_cast<std::size_t>(y) * w + x1] = value;
    }
}

json detections_to_json(const std::vector<Detection>& dets) {
    json arr = json::array();
    for (const Detection& d : dets)
        arr.push_back({{"cx", d.box.cx},
                       {"cy", d.box.cy},
                       {"w", d.box.w},
                       {"h", d.box.h},
                       {"score", d.score}});
    return arr;
}

int cmd_gen_synth(const GlobalOpts& g, const std::string& out_dir, int count) {
    RunConfig cfg = effective_config(g);
    fs::create_directories(out_dir);
    generate_corpus(cfg.synth, count, cfg.seed, out_dir);
    std::cout << "wrote " << count << " frames + annotations.json to " << out_dir << "\n";
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& data_dir, const std::string& model_out) {
    RunConfig cfg = effective_config(g);
    const AnnotationSet ann = load_annotations(data_dir + "/annotations.json");
    const DatasetBuildResult built =
        build_dataset(ann, data_dir, cfg.intrinsics, cfg.detector.extraction, cfg.training);
    for (const std::string& w : built.warnings) std::cerr << "warning: " << w << "\n";

    const auto dataset = augment_flip(built.patches);
    std::cout << "dataset: " << built.patches.size() << " patches, " << dataset.size()
              << " after flip augmentation\n";
    const TrainResult result = train(dataset, cfg.training, cfg.detector.extraction.patch_side);
    for (const EpochStats& e : result.history)
        std::cout << "epoch " << e.epoch << " loss " << e.loss << " accuracy " << e.accuracy
                  << "\n";

    if (const fs::path parent = fs::path(model_out).parent_path(); !parent.empty())
        fs::create_directories(parent);
    save_model_file(model_out, result.model);
    save_history_csv(model_out + ".history.csv", result.history);
    std::cout << "model written to " << model_out << "\n";
    return 0;
}

int cmd_detect(const GlobalOpts& g, const std::string& model_path, const std::string& input,
               const std::string& out_path, bool viz, int k_override) {
    RunConfig cfg = effective_config(g);
    if (k_override > 0) cfg.detector.extraction.k = k_override;
    cfg.detector.validate();
    const Network<float> model = load_model_file(model_path);

    json frames = json::array();
    double total_ms = 0.0;
    int n_frames = 0;
    for (const std::string& file : pgm_files_in(input)) {
        const DepthFrame frame = read_pgm16_file(file, cfg.intrinsics);
        const DetectResult r = detect(frame, model, cfg.detector);
        const std::string name = fs::path(file).filename().string();
        frames.push_back({{"file", name},
                          {"detections", detections_to_json(r.detections)},
                          {"extract_ms", r.timing.extract_ms},
                          {"classify_ms", r.timing.classify_ms}});
        total_ms += r.timing.extract_ms + r.timing.classify_ms;
        ++n_frames;
        if (viz) {
            auto gray = to_display8(frame);
            for (const Detection& d : r.detections)
                draw_box_outline(gray, frame.width(), frame.height(), d.box, 255);
            const fs::path viz_path =
                fs::path(out_path).parent_path() / (fs::path(file).stem().string() + ".viz.pgm");
            write_pgm8_file(viz_path.string(), frame.width(), frame.height(), gray);
        }
    }
    if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot create " + out_path);
    out << json{{"frames", frames}}.dump(2) << "\n";
    const double fps = total_ms > 0 ? n_frames / (total_ms / 1000.0) : 0.0;
    std::cout << n_frames << " frames, " << total_ms << " ms total, " << fps << " fps\n";
    return 0;
}

std::vector<FrameDetections> load_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open detections file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed detections " + path + ": " + e.what());
    }
    std::vector<FrameDetections> out;
    for (const auto& jf : j.at("frames")) {
        FrameDetections fd;
        fd.file = jf.at("file").get<std::string>();
        fd.detect_ms = jf.value("extract_ms", 0.0) + jf.value("classify_ms", 0.0);
        for (const auto& jd : jf.at("detections"))
            fd.detections.push_back({box_from_json(jd), jd.at("score").get<double>()});
        out.push_back(std::move(fd));
    }
    return out;
}

int cmd_eval(const GlobalOpts& g, const std::string& detections_path,
             const std::string& annotations_path, const std::string& out_path, double tau_flag) {
    RunConfig cfg = effective_config(g);
    const double tau = tau_flag >= 0 ? tau_flag : cfg.tau;
    if (tau > 1.0) throw std::runtime_error("tau must lie in [0, 1]");
    const auto dets = load_detections(detections_path);
    const AnnotationSet ann = load_annotations(annotations_path);
    const EvalReport r = match_and_score(dets, ann, tau, cfg.eval_standard_iou);

    std::cout << "tp " << r.tp << " fp " << r.fp << " fn " << r.fn << "\n"
              << "tp_rate " << r.tp_rate << " fp_rate " << r.fp_rate << " mean_iou "
              << r.mean_paper_iou << "\n";

    json per_frame = json::array();
    for (const FrameEvalRow& row : r.per_frame)
        per_frame.push_back({{"file", row.file}, {"tp", row.tp}, {"fp", row.fp}, {"fn", row.fn}});
    const json report{{"tp", r.tp},
                      {"fp", r.fp},
                      {"fn", r.fn},
                      {"tp_rate", r.tp_rate},
                      {"fp_rate", r.fp_rate},
                      {"mean_paper_iou", r.mean_paper_iou},
                      {"exact_matches", r.exact_matches},
                      {"fps", r.fps},
                      {"tau", tau},
                      {"per_frame", per_frame}};
    if (const fs::path parent = fs::path(out_path).parent_path(); !parent.empty())
        fs::create_directories(parent);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot create " + out_path);
    out << report.dump(2) << "\n";
    std::ofstream csv(fs::path(out_path).replace_extension(".csv"));
    write_report_csv(csv, r);
    return 0;
}

int cmd_bench(const GlobalOpts& g, const std::string& model_path, const std::string& data_dir,
              const std::string& k_list, const std::string& out_path) {
    RunConfig cfg = effective_config(g);
    const Network<float> model = load_model_file(model_path);
    const AnnotationSet ann = load_annotations(data_dir + "/annotations.json");

    std::vector<int> k_values;
    std::stringstream ss(k_list);
    for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty()) continue;
        const int k = std::stoi(tok);
        if (k < 1) throw std::runtime_error("K values must be >= 1");
        k_values.push_back(k);
    }

    std::vector<std::pair<std::string, DepthFrame>> frames;
    for (const FrameAnnotation& fa : ann.frames)
        frames.emplace_back(fa.file, read_pgm16_file(data_dir + "/" + fa.file, cfg.intrinsics));

    const auto rows = bench_table(frames, ann, model, cfg.detector, k_values, cfg.tau,
                                  cfg.eval_standard_iou);
    write_bench_csv(std::cout, rows);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot create " + out_path);
        write_bench_csv(out, rows);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"depth-image head detection"};
    app.require_subcommand(0, 1);
    app.fallthrough();  // global flags may follow the subcommand name
    GlobalOpts g;
    app.add_option("--config", g.config_path, "JSON config file");
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_flag("--dump-config", g.dump_config, "print the effective config and exit");

    auto* gen = app.add_subcommand("gen-synth", "render a synthetic corpus");
    std::string gen_out;
    int gen_count = 0;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--count", gen_count, "number of frames")->required()
        ->check(CLI::PositiveNumber);

    auto* train_cmd = app.add_subcommand("train", "train the classifier");
    std::string train_data, train_out;
    train_cmd->add_option("--data", train_data, "corpus directory with annotations.json")
        ->required();
    train_cmd->add_option("--out", train_out, "model output path")->required();

    auto* det = app.add_subcommand("detect", "detect heads in frames");
    std::string det_model, det_input, det_out;
    bool det_viz = false;
    int det_k = 0;
    det->add_option("--model", det_model, "model file")->required();
    det->add_option("--input", det_input, "PGM frame or directory")->required();
    det->add_option("--out", det_out, "detections JSON output")->required();
    det->add_flag("--viz", det_viz, "write annotated 8-bit previews");
    det->add_option("--k", det_k, "override sampling stride K");

    auto* ev = app.add_subcommand("eval", "score detections against annotations");
    std::string ev_dets, ev_ann, ev_out;
    double ev_tau = -1.0;
    ev->add_option("--detections", ev_dets, "detections JSON")->required();
    ev->add_option("--annotations", ev_ann, "annotation JSON")->required();
    ev->add_option("--out", ev_out, "report JSON output")->required();
    ev->add_option("--tau", ev_tau, "overlap threshold (default from config)");

    auto* bench = app.add_subcommand("bench", "K sweep: detection rate vs throughput");
    std::string bench_model, bench_data, bench_k = "3,9,21,45", bench_out;
    bench->add_option("--model", bench_model, "model file")->required();
    bench->add_option("--data", bench_data, "corpus directory with annotations.json")->required();
    bench->add_option("--k-list", bench_k, "comma-separated K values");
    bench->add_option("--out", bench_out, "CSV output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (g.dump_config) {
            std::cout << config_to_json(effective_config(g)).dump(2) << "\n";
            return 0;
        }
        if (gen->parsed()) return cmd_gen_synth(g, gen_out, gen_count);
        if (train_cmd->parsed()) return cmd_train(g, train_data, train_out);
        if (det->parsed()) return cmd_detect(g, det_model, det_input, det_out, det_viz, det_k);
        if (ev->parsed()) return cmd_eval(g, ev_dets, ev_ann, ev_out, ev_tau);
        if (bench->parsed()) return cmd_bench(g, bench_model, bench_data, bench_k, bench_out);
        std::cerr << app.help();
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
