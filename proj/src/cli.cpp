#include "rth/cli.hpp"

#include <chrono>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "rth/dataset.hpp"
#include "rth/error.hpp"
#include "rth/index_store.hpp"
#include "rth/pipeline.hpp"
#include "rth/run_config.hpp"
#include "rth/synth.hpp"

namespace rth::cli {

namespace {

// Flags that override the configuration document when given.
struct ConfigFlags {
    std::optional<std::string> config;
    std::optional<std::uint64_t> seed;
    std::optional<int> bits;
    std::optional<int> sweeps;
    std::optional<int> restarts;
    std::optional<std::uint64_t> pair_budget;
    std::optional<int> trees;
    std::optional<int> depth;
    std::optional<double> min_gain;
    std::optional<int> candidates;
    std::optional<int> canonical_size;
    std::optional<int> clusters;
    std::optional<int> temporal_smooth;
    std::optional<int> queries;
    std::optional<int> k;
    std::vector<double> augment_rotations;
    bool sanity_self_query = false;
    bool shuffle_train_labels = false;

    void attach(CLI::App& app) {
        app.add_option("--config", config, "JSON configuration document");
        app.add_option("--seed", seed, "master random seed");
        app.add_option("--bits", bits, "code length m");
        app.add_option("--sweeps", sweeps, "max coordinate-descent sweeps per bit");
        app.add_option("--restarts", restarts, "random starting columns per bit");
        app.add_option("--pair-budget", pair_budget, "cap on sampled cross-scene pairs");
        app.add_option("--trees", trees, "trees per bit forest");
        app.add_option("--depth", depth, "maximum tree depth");
        app.add_option("--min-gain", min_gain, "minimum information gain to split");
        app.add_option("--candidates", candidates, "random element pairs tried per node");
        app.add_option("--canonical-size", canonical_size, "side of the prepared square image");
        app.add_option("--clusters", clusters, "k-means scene count for unlabeled training data");
        app.add_option("--temporal-smooth", temporal_smooth, "majority filter half window over cluster labels");
        app.add_option("--queries", queries, "number of test images sampled as queries");
        app.add_option("--k", k, "precision@k cut-off");
        app.add_option("--augment-rotations", augment_rotations, "training rotation angles in degrees")
            ->delimiter(',');
        app.add_flag("--sanity-self-query", sanity_self_query, "allow the test set to equal the training set");
        app.add_flag("--shuffle-train-labels", shuffle_train_labels, "permute training labels (chance control)");
    }

    RunConfig resolve() const {
        RunConfig cfg = config ? load_run_config(*config) : RunConfig{};
        if (seed) cfg.seed = *seed;
        if (bits) cfg.inference.bits = *bits;
        if (sweeps) cfg.inference.sweeps = *sweeps;
        if (restarts) cfg.inference.restarts = *restarts;
        if (pair_budget) cfg.inference.pair_budget = *pair_budget;
        if (trees) cfg.forest.trees = *trees;
        if (depth) cfg.forest.max_depth = *depth;
        if (min_gain) cfg.forest.min_gain = *min_gain;
        if (candidates) cfg.forest.candidate_pairs = *candidates;
        if (canonical_size) cfg.pyramid.canonical_size = *canonical_size;
        if (clusters) cfg.clusters = *clusters;
        if (temporal_smooth) cfg.temporal_smooth = *temporal_smooth;
        if (queries) cfg.queries = *queries;
        if (k) cfg.k = *k;
        if (!augment_rotations.empty()) cfg.augment_rotations = augment_rotations;
        if (sanity_self_query) cfg.sanity_self_query = true;
        if (shuffle_train_labels) cfg.shuffle_train_labels = true;
        cfg.derive_seeds();
        cfg.validate();
        return cfg;
    }
};

std::filesystem::path sibling(const std::filesystem::path& path, const std::string& suffix) {
    auto p = path;
    p.replace_extension(suffix);
    return p;
}

int cmd_train(const std::string& manifest_path, const std::filesystem::path& out_path, const ConfigFlags& flags,
              std::ostream& out) {
    const RunConfig cfg = flags.resolve();
    const auto manifest = read_manifest(manifest_path, ManifestRole::Train);
    const auto trained = train_model(manifest, cfg, {{"manifest", manifest_path}});

    save(trained.model, out_path);
    const auto report_path = sibling(out_path, ".report.json");
    write_file_atomic(report_path, training_report_json(trained).dump(2) + "\n");

    const auto& t = trained.timings;
    out << std::fixed << std::setprecision(1) << "load+extract " << t.load_ms << " ms, cluster " << t.cluster_ms
        << " ms, infer " << t.infer_ms << " ms, forests " << t.forest_ms << " ms, encode " << t.encode_ms << " ms\n";
    out << "model " << out_path.string() << " (" << trained.model.entries.size() << " entries, "
        << trained.model.bits() << " bits)\n";
    out << "training report " << report_path.string() << "\n";
    return kOk;
}

int cmd_encode(const std::filesystem::path& model_path, const std::string& manifest_path,
               const std::optional<std::string>& out_path, std::ostream& out) {
    RetargetModel model = load(model_path);
    const auto manifest = read_manifest(manifest_path, ManifestRole::Test);
    const auto descriptors = extract_all(manifest, model.pyramid);
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        const auto& rec = manifest.records[i];
        BinaryCode code = model.hash.encode(descriptors[i]);
        out << nlohmann::json{{"path", rec.path}, {"video_id", rec.video_id}, {"frame_idx", rec.frame_idx},
                              {"code", code.to_string()}}
                   .dump()
            << "\n";
        if (out_path) model.add_entry(std::move(code), rec.video_id, rec.frame_idx, rec.scene_label.value_or(-1));
    }
    if (out_path) save(model, *out_path);
    return kOk;
}

int cmd_query(const std::filesystem::path& model_path, const std::filesystem::path& image_path, int k,
              const std::optional<std::string>& out_path, std::ostream& out) {
    if (k < 0) throw ConfigError("k must be non-negative");
    const RetargetModel model = load(model_path);
    const auto bytes = read_file_bytes(image_path);
    QueryOptions options;
    options.k = static_cast<std::size_t>(k);
    const auto text = to_json(query(model, bytes, options)).dump(2) + "\n";
    if (out_path)
        write_file_atomic(*out_path, text);
    else
        out << text;
    return kOk;
}

int cmd_eval(const std::optional<std::string>& model_path, const std::optional<std::string>& train_path,
             const std::string& test_path, const std::filesystem::path& out_path, const ConfigFlags& flags,
             std::ostream& out) {
    if (model_path.has_value() == train_path.has_value())
        throw ConfigError("eval needs exactly one of --model or --manifest");
    const RunConfig cfg = flags.resolve();
    const auto test = read_manifest(test_path, ManifestRole::Test);

    EvalReport report;
    if (model_path) {
        report = evaluate_model(load(*model_path), test, cfg);
    } else {
        const auto train = read_manifest(*train_path, ManifestRole::Train);
        report = run_protocol(train, test, cfg, {{"manifest", *train_path}});
    }
    write_file_atomic(out_path, report_json(report).dump(2) + "\n");
    write_file_atomic(sibling(out_path, ".pr.csv"), pr_curve_csv(report));
    write_file_atomic(sibling(out_path, ".timing.json"), timing_json(report).dump(2) + "\n");

    out << std::fixed << std::setprecision(4) << "mAP=" << report.mean_average_precision
        << " precision@1=" << report.precision_at_1 << " precision@" << report.k << "=" << report.precision_at_k
        << " queries=" << report.queries.size() << std::setprecision(3)
        << " mean_query_ms=" << report.total_us.mean / 1000.0 << "\n";
    return kOk;
}

int cmd_synth(const std::filesystem::path& out_dir, const SynthConfig& cfg, std::ostream& out) {
    const auto summary = write_synthetic_dataset(out_dir, cfg);
    out << "wrote " << cfg.scenes << " scenes x " << cfg.views << " views to " << out_dir.string() << " ("
        << summary.train_records << " train, " << summary.test_records << " test)\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Scene retargeting with regional binary-pattern descriptors and random-forest hashing"};
    app.name("rth");
    app.require_subcommand(1);

    ConfigFlags train_flags, eval_flags;
    std::string manifest, test_manifest, out_path, image;
    std::optional<std::string> model_opt, manifest_opt, out_opt;
    std::string model;
    int query_k = 10;
    SynthConfig synth;

    auto* train = app.add_subcommand("train", "train a model on a diagnosis manifest");
    train->add_option("--manifest", manifest, "training manifest (JSON lines)")->required();
    train->add_option("--out", out_path, "model file to write")->required();
    train_flags.attach(*train);

    auto* encode = app.add_subcommand("encode", "encode manifest images; optionally append them to the index");
    encode->add_option("--model", model, "model file")->required();
    encode->add_option("--manifest", manifest, "manifest of images to encode")->required();
    encode->add_option("--out", out_opt, "write the model with the encoded images appended");

    auto* query_cmd = app.add_subcommand("query", "rank index entries for one image");
    query_cmd->add_option("--model", model, "model file")->required();
    query_cmd->add_option("--image", image, "query image")->required();
    query_cmd->add_option("--k", query_k, "number of results");
    query_cmd->add_option("--out", out_opt, "write JSON here instead of stdout");

    auto* eval = app.add_subcommand("eval", "run the retrieval evaluation protocol");
    eval->add_option("--model", model_opt, "evaluate an existing model");
    eval->add_option("--manifest", manifest_opt, "train a model on this manifest first");
    eval->add_option("--test-manifest", test_manifest, "surveillance manifest with ground-truth labels")->required();
    eval->add_option("--out", out_path, "report JSON path")->required();
    eval_flags.attach(*eval);

    auto* synth_cmd = app.add_subcommand("synth", "generate the synthetic benchmark");
    synth_cmd->add_option("--out", out_path, "output directory")->required();
    synth_cmd->add_option("--scenes", synth.scenes, "scene count");
    synth_cmd->add_option("--views", synth.views, "views per scene");
    synth_cmd->add_option("--train-views", synth.train_views, "views per scene in the training manifest");
    synth_cmd->add_option("--image-size", synth.image_size, "view side in pixels");
    synth_cmd->add_option("--seed", synth.seed, "random seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "rth: " << e.what() << "\n";
        return kConfig;
    }

    try {
        if (*train) return cmd_train(manifest, out_path, train_flags, out);
        if (*encode) return cmd_encode(model, manifest, out_opt, out);
        if (*query_cmd) return cmd_query(model, image, query_k, out_opt, out);
        if (*eval) return cmd_eval(model_opt, manifest_opt, test_manifest, out_path, eval_flags, out);
        if (*synth_cmd) return cmd_synth(out_path, synth, out);
    } catch (const ConfigError& e) {
        err << "rth: configuration error: " << e.what() << "\n";
        return kConfig;
    } catch (const FormatError& e) {
        err << "rth: invalid model file: " << e.what() << "\n";
        return kModel;
    } catch (const DataError& e) {
        err << "rth: data error: " << e.what() << "\n";
        return kData;
    } catch (const IoError& e) {
        err << "rth: I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const std::exception& e) {
        err << "rth: internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}

}  // namespace rth::cli
