#include "rth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "rth/dataset.hpp"
#include "rth/error.hpp"
#include "rth/index_store.hpp"
#include "rth/parallel.hpp"

namespace rth {

namespace {

std::mt19937_64 stream(const SynthConfig& cfg, std::uint32_t a, std::uint32_t b = 0, std::uint32_t c = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), a, b, c};
    return std::mt19937_64(seq);
}

}  // namespace

void SynthConfig::validate() const {
    if (scenes < 1) throw ConfigError("synthetic dataset needs at least one scene");
    if (views < 2) throw ConfigError("synthetic dataset needs at least two views per scene");
    if (train_views < 1 || train_views >= views) throw ConfigError("train_views must be in [1, views)");
    if (image_size < 16) throw ConfigError("image_size too small");
    if (max_shift < 0) throw ConfigError("max_shift must be non-negative");
    if (!(gain_min > 0.0 && gain_min <= gain_max)) throw ConfigError("invalid gain range");
    if (bias_max < 0.0 || noise_sigma_max < 0.0) throw ConfigError("invalid bias or noise range");
}

nlohmann::json to_json(const SynthConfig& cfg) {
    return {{"scenes", cfg.scenes},       {"views", cfg.views},
            {"train_views", cfg.train_views}, {"image_size", cfg.image_size},
            {"max_shift", cfg.max_shift}, {"gain_min", cfg.gain_min},
            {"gain_max", cfg.gain_max},   {"bias_max", cfg.bias_max},
            {"noise_sigma_max", cfg.noise_sigma_max}, {"seed", cfg.seed}};
}

GrayImage scene_texture(const SynthConfig& cfg, int scene) {
    auto rng = stream(cfg, static_cast<std::uint32_t>(scene), 0x7e7);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int side = cfg.image_size + 2 * cfg.max_shift;

    // value noise: random lattices at several scales, bicubic upsampled
    cv::Mat canvas = cv::Mat::zeros(side, side, CV_64F);
    const std::array<std::pair<int, double>, 5> octaves{{{3, 1.0}, {5, 0.8}, {9, 0.6}, {17, 0.45}, {33, 0.3}}};
    for (const auto& [cells, weight] : octaves) {
        cv::Mat lattice(cells, cells, CV_64F);
        for (int y = 0; y < cells; ++y)
            for (int x = 0; x < cells; ++x) lattice.at<double>(y, x) = unit(rng) - 0.5;
        cv::Mat up;
        cv::resize(lattice, up, cv::Size(side, side), 0, 0, cv::INTER_CUBIC);
        canvas += weight * up;
    }

    // dark curvilinear structures, loosely like mucosal vessels
    cv::Mat vessels = cv::Mat::zeros(side, side, CV_64F);
    const int strokes = 6 + static_cast<int>(unit(rng) * 6);
    for (int s = 0; s < strokes; ++s) {
        cv::Point2d p(unit(rng) * side, unit(rng) * side);
        double heading = unit(rng) * 2.0 * M_PI;
        const int segments = 8 + static_cast<int>(unit(rng) * 12);
        const int thickness = 1 + static_cast<int>(unit(rng) * 3);
        for (int k = 0; k < segments; ++k) {
            heading += (unit(rng) - 0.5) * 1.2;
            const cv::Point2d q = p + 10.0 * cv::Point2d(std::cos(heading), std::sin(heading));
            cv::line(vessels, cv::Point(cvRound(p.x), cvRound(p.y)), cv::Point(cvRound(q.x), cvRound(q.y)),
                     cv::Scalar(1.0), thickness, cv::LINE_AA);
            p = q;
        }
    }
    cv::GaussianBlur(vessels, vessels, cv::Size(0, 0), 1.2);
    canvas -= 0.9 * vessels;

    double lo = 0.0, hi = 0.0;
    cv::minMaxLoc(canvas, &lo, &hi);
    const double span = hi > lo ? hi - lo : 1.0;
    GrayImage out(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) out.at(x, y) = 50.0 + 155.0 * (canvas.at<double>(y, x) - lo) / span;
    return out;
}

ViewJitter view_jitter(const SynthConfig& cfg, int scene, int view) {
    auto rng = stream(cfg, static_cast<std::uint32_t>(scene), static_cast<std::uint32_t>(view) + 1, 0x1);
    std::uniform_int_distribution<int> shift(-cfg.max_shift, cfg.max_shift);
    std::uniform_real_distribution<double> gain(cfg.gain_min, cfg.gain_max);
    std::uniform_real_distribution<double> bias(-cfg.bias_max, cfg.bias_max);
    std::uniform_real_distribution<double> sigma(0.0, cfg.noise_sigma_max);
    ViewJitter j;
    j.dx = shift(rng);
    j.dy = shift(rng);
    j.gain = gain(rng);
    j.bias = bias(rng);
    j.noise_sigma = sigma(rng);
    return j;
}

GrayImage render_view(const SynthConfig& cfg, const GrayImage& texture, int scene, int view) {
    const ViewJitter j = view_jitter(cfg, scene, view);
    auto rng = stream(cfg, static_cast<std::uint32_t>(scene), static_cast<std::uint32_t>(view) + 1, 0x2);
    std::normal_distribution<double> noise(0.0, 1.0);
    GrayImage out(cfg.image_size, cfg.image_size);
    const int ox = cfg.max_shift + j.dx;
    const int oy = cfg.max_shift + j.dy;
    for (int y = 0; y < cfg.image_size; ++y)
        for (int x = 0; x < cfg.image_size; ++x)
            out.at(x, y) = j.gain * texture.at(ox + x, oy + y) + j.bias + j.noise_sigma * noise(rng);
    return out;
}

ViewSplit split_views(const SynthConfig& cfg, int scene) {
    auto rng = stream(cfg, static_cast<std::uint32_t>(scene), 0x5917);
    std::vector<int> order(cfg.views);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    ViewSplit split;
    split.train.assign(order.begin(), order.begin() + cfg.train_views);
    split.test.assign(order.begin() + cfg.train_views, order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

SynthSummary write_synthetic_dataset(const std::filesystem::path& out_dir, const SynthConfig& cfg) {
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "images", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "images").string());

    const auto file_name = [](int scene, int view) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "images/scene_%03d_view_%03d.pgm", scene, view);
        return std::string(buf);
    };

    parallel_for(static_cast<std::size_t>(cfg.scenes), [&](std::size_t s) {
        const int scene = static_cast<int>(s);
        const GrayImage texture = scene_texture(cfg, scene);
        for (int view = 0; view < cfg.views; ++view)
            write_file_atomic(out_dir / file_name(scene, view), encode_pgm(render_view(cfg, texture, scene, view)));
    });

    DatasetManifest train, test;
    train.role = ManifestRole::Train;
    test.role = ManifestRole::Test;
    for (int scene = 0; scene < cfg.scenes; ++scene) {
        const ViewSplit split = split_views(cfg, scene);
        for (int view : split.train) {
            ManifestRecord r;
            r.path = file_name(scene, view);
            r.video_id = "diagnosis";
            r.frame_idx = static_cast<int>(train.records.size());
            r.scene_label = scene;
            train.records.push_back(r);
        }
        for (int view : split.test) {
            ManifestRecord r;
            r.path = file_name(scene, view);
            r.video_id = "surveillance";
            r.frame_idx = static_cast<int>(test.records.size());
            r.scene_label = scene;
            test.records.push_back(r);
        }
    }
    write_file_atomic(out_dir / "train.jsonl", format_manifest(train));
    write_file_atomic(out_dir / "test.jsonl", format_manifest(test));
    write_file_atomic(out_dir / "synth_config.json", to_json(cfg).dump(2) + "\n");
    return {train.records.size(), test.records.size()};
}

}  // namespace rth
