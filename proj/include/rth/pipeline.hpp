#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "rth/code_inference.hpp"
#include "rth/dataset.hpp"
#include "rth/descriptor.hpp"
#include "rth/index_store.hpp"
#include "rth/metrics.hpp"
#include "rth/run_config.hpp"

namespace rth {

struct TrainingTimings {
    double load_ms = 0.0;  // decode, prepare, extract
    double cluster_ms = 0.0;
    double infer_ms = 0.0;
    double forest_ms = 0.0;
    double encode_ms = 0.0;
};

struct TrainingResult {
    RetargetModel model;
    SceneLabeling labels;  // labels the codes were inferred from
    CodeMatrix codes;
    InferenceReport inference;
    std::string label_source;  // "manifest" or "kmeans"
    TrainingTimings timings;
};

// Loads every record and extracts its descriptor; runs in parallel.
std::vector<Descriptor> extract_all(const DatasetManifest& manifest, const PyramidConfig& pyramid);

// Codes from labels, forests from (descriptor, code bit) pairs, index from
// the forests' own encodings of the training descriptors. records supplies
// entry metadata and must be parallel to descriptors.
TrainingResult train_from_descriptors(const std::vector<Descriptor>& descriptors, const SceneLabeling& labels,
                                      const std::vector<ManifestRecord>& records, const RunConfig& cfg,
                                      const nlohmann::json& config_echo);

// Full training on a manifest: labels from the manifest or from k-means,
// optional label shuffling and rotation augmentation, then
// train_from_descriptors. cfg must have seeds derived.
TrainingResult train_model(const DatasetManifest& train, const RunConfig& cfg,
                           const nlohmann::json& extra_echo = nlohmann::json::object());

nlohmann::json training_report_json(const TrainingResult& result);

struct QueryOutcome {
    std::size_t test_index = 0;
    std::string path;
    int label = 0;
    double average_precision = 0.0;
    double precision_at_1 = 0.0;
    double precision_at_k = 0.0;
    std::vector<Neighbor> top;  // first k of the full ranking
    QueryTiming timing;
};

struct LatencyStats {
    double mean = 0.0;
    double median = 0.0;
    double p95 = 0.0;
};

LatencyStats latency_stats(std::vector<double> samples_us);

struct EvalReport {
    nlohmann::json config;
    std::size_t index_size = 0;
    int k = 0;
    std::vector<QueryOutcome> queries;
    double precision_at_1 = 0.0;
    double precision_at_k = 0.0;
    double mean_average_precision = 0.0;
    std::vector<PrPoint> pr_curve;  // mean interpolated precision per recall level
    LatencyStats descriptor_us;
    LatencyStats encode_us;
    LatencyStats search_us;
    LatencyStats total_us;
};

// Samples cfg.queries test records (seeded), ranks the whole index for each
// and scores relevance as scene_id == the record's ground-truth label.
EvalReport evaluate_model(const RetargetModel& model, const DatasetManifest& test, const RunConfig& cfg);

// Train on train, evaluate on test. Video ids must be disjoint unless
// cfg.sanity_self_query is set.
EvalReport run_protocol(const DatasetManifest& train, const DatasetManifest& test, const RunConfig& cfg,
                        const nlohmann::json& extra_echo = nlohmann::json::object());

// Deterministic part of the report: metrics, per-query results, config.
nlohmann::json report_json(const EvalReport& report);
// Wall-clock latency statistics, kept apart so report_json stays reproducible.
nlohmann::json timing_json(const EvalReport& report);
std::string pr_curve_csv(const EvalReport& report);

}  // namespace rth
