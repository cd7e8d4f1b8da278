#include "rth/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "rth/clustering.hpp"
#include "rth/error.hpp"
#include "rth/forest.hpp"
#include "rth/parallel.hpp"

namespace rth {

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

nlohmann::json with_extra(nlohmann::json base, const nlohmann::json& extra) {
    for (const auto& [key, value] : extra.items()) base[key] = value;
    return base;
}

}  // namespace

std::vector<Descriptor> extract_all(const DatasetManifest& manifest, const PyramidConfig& pyramid) {
    std::vector<Descriptor> out(manifest.records.size());
    parallel_for(out.size(), [&](std::size_t i) {
        out[i] = extract(load_record(manifest.records[i], pyramid.canonical_size), pyramid);
    });
    return out;
}

TrainingResult train_from_descriptors(const std::vector<Descriptor>& descriptors, const SceneLabeling& labels,
                                      const std::vector<ManifestRecord>& records, const RunConfig& cfg,
                                      const nlohmann::json& config_echo) {
    cfg.validate();
    if (descriptors.size() != labels.size() || records.size() != labels.size())
        throw DataError("descriptors, labels and records disagree in length");
    if (descriptors.size() < 2) throw DataError("training needs at least two images");

    TrainingResult result;
    result.labels = labels;

    auto t0 = Clock::now();
    result.codes = infer_codes(labels, cfg.inference, &result.inference);
    result.timings.infer_ms = millis_since(t0);

    t0 = Clock::now();
    RetargetModel& model = result.model;
    model.pyramid = cfg.pyramid;
    model.inference = cfg.inference;
    model.forest = cfg.forest;
    model.hash = train_hash_forest(descriptors, result.codes, cfg.forest);
    model.config_echo = config_echo.dump();
    result.timings.forest_ms = millis_since(t0);

    t0 = Clock::now();
    std::vector<BinaryCode> codes(descriptors.size());
    parallel_for(codes.size(), [&](std::size_t i) { codes[i] = model.hash.encode(descriptors[i]); });
    for (std::size_t i = 0; i < codes.size(); ++i)
        model.add_entry(std::move(codes[i]), records[i].video_id, records[i].frame_idx, labels.labels[i]);
    result.timings.encode_ms = millis_since(t0);
    return result;
}

TrainingResult train_model(const DatasetManifest& train, const RunConfig& cfg, const nlohmann::json& extra_echo) {
    cfg.validate();
    if (train.records.empty()) throw DataError("training manifest is empty");
    train.validate();

    DatasetManifest labeled = train;
    std::string source = "manifest";
    TrainingTimings timings;
    std::vector<Descriptor> base_descriptors;

    if (!train.fully_labeled()) {
        if (cfg.clusters <= 0) throw DataError("training manifest lacks scene labels and clusters is 0");
        auto t0 = Clock::now();
        std::vector<GrayImage> images(train.records.size());
        parallel_for(images.size(), [&](std::size_t i) {
            images[i] = load_record(train.records[i], cfg.pyramid.canonical_size);
        });
        KMeansParams km;
        km.clusters = cfg.clusters;
        km.seed = cfg.cluster_seed();
        SceneLabeling clustered = cluster_scenes(images, km).labels;

        if (cfg.temporal_smooth > 0) {
            std::vector<std::size_t> order(train.records.size());
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const auto& ra = train.records[a];
                const auto& rb = train.records[b];
                return ra.video_id != rb.video_id ? ra.video_id < rb.video_id : ra.frame_idx < rb.frame_idx;
            });
            SceneLabeling ordered;
            for (auto i : order) ordered.labels.push_back(clustered.labels[i]);
            const SceneLabeling smoothed = smooth_temporal(ordered, cfg.temporal_smooth);
            for (std::size_t p = 0; p < order.size(); ++p) clustered.labels[order[p]] = smoothed.labels[p];
        }
        for (std::size_t i = 0; i < labeled.records.size(); ++i) labeled.records[i].scene_label = clustered.labels[i];
        timings.cluster_ms = millis_since(t0);

        t0 = Clock::now();
        base_descriptors.resize(images.size());
        parallel_for(images.size(), [&](std::size_t i) { base_descriptors[i] = extract(images[i], cfg.pyramid); });
        timings.load_ms = millis_since(t0);
        source = "kmeans";
    }

    if (cfg.shuffle_train_labels) {
        std::vector<int> shuffled;
        for (const auto& r : labeled.records) shuffled.push_back(*r.scene_label);
        std::mt19937_64 rng(cfg.shuffle_seed());
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (std::size_t i = 0; i < shuffled.size(); ++i) labeled.records[i].scene_label = shuffled[i];
    }

    const bool augment = !cfg.augment_rotations.empty();
    const DatasetManifest expanded =
        augment ? augment_rotations(labeled, cfg.augment_rotations, cfg.allow_resampled_rotation) : labeled;

    auto t0 = Clock::now();
    std::vector<Descriptor> descriptors;
    if (!base_descriptors.empty() && !augment) {
        descriptors = std::move(base_descriptors);
    } else {
        descriptors = extract_all(expanded, cfg.pyramid);
    }
    timings.load_ms += millis_since(t0);

    SceneLabeling labels;
    for (const auto& r : expanded.records) labels.labels.push_back(*r.scene_label);

    const nlohmann::json echo = with_extra(to_json(cfg), extra_echo);
    TrainingResult result = train_from_descriptors(descriptors, labels, expanded.records, cfg, echo);
    result.label_source = source;
    result.timings.load_ms = timings.load_ms;
    result.timings.cluster_ms = timings.cluster_ms;
    return result;
}

nlohmann::json training_report_json(const TrainingResult& result) {
    nlohmann::json bits = nlohmann::json::array();
    for (const auto& b : result.inference.bits)
        bits.push_back({{"bit", b.bit},
                        {"initial_objective", b.initial_objective},
                        {"final_objective", b.final_objective},
                        {"start", b.start},
                        {"sweeps", b.sweeps},
                        {"converged", b.converged}});
    std::set<int> scenes(result.labels.labels.begin(), result.labels.labels.end());
    return {{"config", nlohmann::json::parse(result.model.config_echo)},
            {"images", result.labels.size()},
            {"scenes", scenes.size()},
            {"label_source", result.label_source},
            {"inference",
             {{"seed", result.inference.seed},
              {"pairs", result.inference.pairs_used},
              {"objective_sum", result.inference.objective_sum},
              {"final_objective", result.inference.final_objective},
              {"bits", bits}}}};
}

LatencyStats latency_stats(std::vector<double> samples) {
    LatencyStats s;
    if (samples.empty()) return s;
    std::sort(samples.begin(), samples.end());
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    const std::size_t n = samples.size();
    s.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    // nearest-rank percentile
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
    return s;
}

EvalReport evaluate_model(const RetargetModel& model, const DatasetManifest& test, const RunConfig& cfg) {
    if (model.entries.empty()) throw DataError("index is empty");
    if (test.records.empty()) throw DataError("test manifest is empty");
    for (const auto& r : test.records)
        if (!r.scene_label) throw DataError("test record " + r.path + " has no ground-truth scene label");

    std::map<int, std::size_t> scene_sizes;
    for (const auto& e : model.entries) ++scene_sizes[e.scene_id];

    std::vector<std::size_t> picks(test.records.size());
    std::iota(picks.begin(), picks.end(), 0);
    std::mt19937_64 rng(cfg.query_sample_seed());
    std::shuffle(picks.begin(), picks.end(), rng);
    picks.resize(std::min<std::size_t>(picks.size(), static_cast<std::size_t>(cfg.queries)));

    EvalReport report;
    report.index_size = model.entries.size();
    report.k = cfg.k;
    const std::size_t k = std::max(cfg.k, 1);
    std::vector<double> curve_sum;

    for (auto idx : picks) {
        const auto& rec = test.records[idx];
        const int label = *rec.scene_label;
        const auto relevant = scene_sizes.find(label);
        if (relevant == scene_sizes.end())
            throw DataError("test label " + std::to_string(label) + " has no entries in the index");

        const auto bytes = read_file_bytes(rec.resolved_path);
        QueryOptions options;
        options.k = model.entries.size();
        options.crop = rec.crop;
        options.rotation_degrees = rec.rotation;
        const QueryResult result = query(model, bytes, options);

        std::vector<std::uint8_t> relevance(result.neighbors.size());
        for (std::size_t r = 0; r < relevance.size(); ++r) relevance[r] = result.neighbors[r].scene_id == label;

        QueryOutcome q;
        q.test_index = idx;
        q.path = rec.path;
        q.label = label;
        q.average_precision = average_precision(relevance, relevant->second);
        q.precision_at_1 = precision_at_k(relevance, 1);
        q.precision_at_k = precision_at_k(relevance, k);
        q.top.assign(result.neighbors.begin(),
                     result.neighbors.begin() + static_cast<std::ptrdiff_t>(std::min(k, result.neighbors.size())));
        q.timing = result.timing;

        const auto curve = interpolated_pr_curve(relevance, relevant->second);
        if (curve_sum.empty()) curve_sum.assign(curve.size(), 0.0);
        for (std::size_t i = 0; i < curve.size(); ++i) curve_sum[i] += curve[i].precision;
        report.queries.push_back(std::move(q));
    }

    const double nq = static_cast<double>(report.queries.size());
    std::vector<double> desc, enc, srch, total;
    for (const auto& q : report.queries) {
        report.precision_at_1 += q.precision_at_1 / nq;
        report.precision_at_k += q.precision_at_k / nq;
        report.mean_average_precision += q.average_precision / nq;
        desc.push_back(q.timing.descriptor_us);
        enc.push_back(q.timing.encode_us);
        srch.push_back(q.timing.search_us);
        total.push_back(q.timing.total_us());
    }
    for (std::size_t i = 0; i < curve_sum.size(); ++i)
        report.pr_curve.push_back({static_cast<double>(i) / static_cast<double>(curve_sum.size() - 1), curve_sum[i] / nq});
    report.descriptor_us = latency_stats(desc);
    report.encode_us = latency_stats(enc);
    report.search_us = latency_stats(srch);
    report.total_us = latency_stats(total);
    report.config = with_extra(to_json(cfg), {{"model_config", nlohmann::json::parse(model.config_echo)}});
    return report;
}

EvalReport run_protocol(const DatasetManifest& train, const DatasetManifest& test, const RunConfig& cfg,
                        const nlohmann::json& extra_echo) {
    if (!cfg.sanity_self_query) {
        std::set<std::string> train_videos;
        for (const auto& r : train.records) train_videos.insert(r.video_id);
        for (const auto& r : test.records)
            if (train_videos.contains(r.video_id))
                throw DataError("video '" + r.video_id + "' appears in both train and test manifests");
    }
    for (const auto& r : test.records)
        if (!r.scene_label) throw DataError("test record " + r.path + " has no ground-truth scene label");

    // training sees only the train manifest
    const TrainingResult trained = train_model(train, cfg, extra_echo);
    return evaluate_model(trained.model, test, cfg);
}

nlohmann::json report_json(const EvalReport& report) {
    nlohmann::json queries = nlohmann::json::array();
    for (const auto& q : report.queries) {
        nlohmann::json top = nlohmann::json::array();
        for (const auto& n : q.top) top.push_back({n.id, n.distance, n.scene_id});
        queries.push_back({{"test_index", q.test_index},
                           {"path", q.path},
                           {"label", q.label},
                           {"average_precision", q.average_precision},
                           {"precision_at_1", q.precision_at_1},
                           {"precision_at_k", q.precision_at_k},
                           {"top", top}});
    }
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& p : report.pr_curve) curve.push_back({{"recall", p.recall}, {"precision", p.precision}});
    return {{"config", report.config},
            {"index_size", report.index_size},
            {"k", report.k},
            {"query_count", report.queries.size()},
            {"precision_at_1", report.precision_at_1},
            {"precision_at_k", report.precision_at_k},
            {"map", report.mean_average_precision},
            {"pr_curve", curve},
            {"queries", queries}};
}

nlohmann::json timing_json(const EvalReport& report) {
    const auto stats = [](const LatencyStats& s) {
        return nlohmann::json{{"mean", s.mean}, {"median", s.median}, {"p95", s.p95}};
    };
    return {{"query_count", report.queries.size()},
            {"index_size", report.index_size},
            {"descriptor_us", stats(report.descriptor_us)},
            {"encode_us", stats(report.encode_us)},
            {"search_us", stats(report.search_us)},
            {"total_us", stats(report.total_us)}};
}

std::string pr_curve_csv(const EvalReport& report) {
    std::ostringstream out;
    out.precision(17);
    out << "recall,precision\n";
    for (const auto& p : report.pr_curve) out << p.recall << ',' << p.precision << '\n';
    return out.str();
}

}  // namespace rth
