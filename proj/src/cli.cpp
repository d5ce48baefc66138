#include "fruitgrade/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "fruitgrade/csvio.hpp"
#include "fruitgrade/errors.hpp"
#include "fruitgrade/features.hpp"
#include "fruitgrade/imageio.hpp"
#include "fruitgrade/model_io.hpp"
#include "fruitgrade/pipeline.hpp"
#include "fruitgrade/synth.hpp"

namespace fruitgrade::cli {

namespace {

std::string format_accuracy(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

cfg::PipelineConfig config_or_default(const std::string& path) {
    if (path.empty()) return cfg::PipelineConfig{};
    return cfg::load_config(path);
}

int cmd_extract(const std::string& images_dir, const std::string& labels_path,
                const std::string& out_path, const std::string& config_path) {
    const cfg::PipelineConfig config = config_or_default(config_path);
    auto pairs = csv::read_label_pairs(labels_path);
    std::sort(pairs.begin(), pairs.end());

    csv::FeatureTable table;
    table.feature_names = feat::feature_names();
    int failures = 0;
    for (const auto& [filename, label] : pairs) {
        const std::string path = (std::filesystem::path(images_dir) / filename).string();
        try {
            const img::RgbImage image = img::load_image(path);
            table.rows.push_back(pipe::extract_from_image(image, config));
            table.filenames.push_back(filename);
            table.labels.push_back(label);
        } catch (const Error& e) {
            std::cerr << filename << ": " << e.what() << "\n";
            ++failures;
        }
    }
    csv::write_feature_table(out_path, table);
    if (failures > 0) {
        std::cerr << failures << " of " << pairs.size() << " images failed\n";
        return 2;
    }
    std::cout << "extracted " << table.rows.size() << " rows to " << out_path << "\n";
    return 0;
}

int cmd_select(const std::string& in_path, const std::string& method, const std::string& out_path,
               const std::string& config_path) {
    const cfg::PipelineConfig config = config_or_default(config_path);
    const csv::FeatureTable table = csv::read_feature_table(in_path);
    std::vector<std::string> classes;
    const ml::Dataset data = csv::make_dataset(table, &classes);
    const pipe::TransformArtifact transform = pipe::fit_transform(data.x, data.y, method, config);
    io::save_transform(out_path, transform);
    if (method == "pca") {
        char pct[32];
        std::snprintf(pct, sizeof(pct), "%.1f", 100.0 * transform.pca.explained_fraction);
        std::cout << "pca: kept " << transform.pca.output_dim() << " of " << transform.pca.input_dim()
                  << " components (" << pct << "% variance)\n";
    } else {
        std::cout << "cfs: selected " << transform.subset.size() << " slots (merit "
                  << format_accuracy(transform.merit) << "):";
        const auto& names = feat::feature_names();
        for (int idx : transform.subset) {
            std::cout << ' ';
            if (idx >= 0 && idx < static_cast<int>(names.size()))
                std::cout << names[static_cast<std::size_t>(idx)];
            else
                std::cout << idx;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_train(const std::string& in_path, const std::string& transform_path,
              const std::string& preset, const std::string& out_path,
              std::optional<std::uint64_t> seed, const std::string& config_path) {
    const cfg::PipelineConfig config = config_or_default(config_path);
    const csv::FeatureTable table = csv::read_feature_table(in_path);
    std::vector<std::string> classes;
    const ml::Dataset data = csv::make_dataset(table, &classes);
    std::optional<pipe::TransformArtifact> transform;
    if (!transform_path.empty()) transform = io::load_transform(transform_path);

    const pipe::TrainedModel model = pipe::train_model(
        data.x, data.y, classes, preset, transform, config, seed.value_or(config.seed));
    io::save_model(out_path, model);

    const ml::EvalReport report = pipe::evaluate_rows(model, data.x, data.y);
    std::cout << "trained " << preset << " on " << data.size() << " rows, training accuracy "
              << format_accuracy(report.accuracy) << "\n";
    if (model.svm && !model.svm->converged)
        std::cerr << "warning: optimizer hit the sweep cap on at least one class pair\n";
    return 0;
}

void print_report(const pipe::TrainedModel& model, const ml::EvalReport& report) {
    const std::string selection = model.transform ? model.transform->method : "none";
    std::cout << "preset       kind  selection  accuracy\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %-5s %-10s %s\n", model.preset.c_str(),
                  model.kind.c_str(), selection.c_str(), format_accuracy(report.accuracy).c_str());
    std::cout << line;

    std::size_t width = 7;
    for (const auto& name : model.classes) width = std::max(width, name.size() + 1);
    std::cout << "\nconfusion (rows = truth, cols = predicted):\n";
    std::cout << std::string(width, ' ');
    for (const auto& name : model.classes) {
        std::snprintf(line, sizeof(line), "%*s", static_cast<int>(width), name.c_str());
        std::cout << line;
    }
    std::cout << "\n";
    for (std::size_t t = 0; t < report.confusion.size(); ++t) {
        std::snprintf(line, sizeof(line), "%-*s", static_cast<int>(width), model.classes[t].c_str());
        std::cout << line;
        for (long long v : report.confusion[t]) {
            std::snprintf(line, sizeof(line), "%*lld", static_cast<int>(width), v);
            std::cout << line;
        }
        std::cout << "\n";
    }
}

int cmd_evaluate(const std::string& model_path, const std::string& in_path, int cv_folds) {
    const pipe::TrainedModel model = io::load_model(model_path);
    const csv::FeatureTable table = csv::read_feature_table(in_path);
    const std::vector<int> labels = csv::encode_labels(table.labels, model.classes);

    if (cv_folds > 0) {
        const std::vector<double> accs = pipe::cv_fold_accuracies(model, table.rows, labels, cv_folds);
        double sum = 0.0;
        for (std::size_t f = 0; f < accs.size(); ++f) {
            std::cout << "fold " << (f + 1) << ": " << format_accuracy(accs[f]) << "\n";
            sum += accs[f];
        }
        std::cout << "mean accuracy: " << format_accuracy(sum / static_cast<double>(accs.size()))
                  << " (" << accs.size() << " folds)\n";
    } else {
        const ml::EvalReport report = pipe::evaluate_rows(model, table.rows, labels);
        print_report(model, report);
    }
    return 0;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& images) {
    const pipe::TrainedModel model = io::load_model(model_path);
    int failures = 0;
    for (const auto& path : images) {
        try {
            const img::RgbImage image = img::load_image(path);
            const std::vector<double> row = pipe::extract_from_image(image, model.config);
            const int cls = pipe::predict_row(model, row);
            std::cout << path << "\t" << model.classes[static_cast<std::size_t>(cls)] << "\n";
        } catch (const Error& e) {
            std::cerr << path << ": " << e.what() << "\n";
            ++failures;
        }
    }
    return failures > 0 ? 2 : 0;
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir) {
    const synth::SynthSpec spec = synth::load_synth_spec(spec_path);
    const auto pairs = synth::generate_corpus(spec, out_dir);
    std::cout << "wrote " << pairs.size() << " images to " << out_dir << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"dried-fruit grading pipeline"};
    app.require_subcommand(1);

    std::string images_dir, labels_path, out_path, config_path;
    auto* ext = app.add_subcommand("extract", "segment images and write the feature table");
    ext->add_option("--images", images_dir, "directory holding the images")->required();
    ext->add_option("--labels", labels_path, "filename,label csv")->required();
    ext->add_option("--out", out_path, "output feature csv")->required();
    ext->add_option("--config", config_path, "pipeline config json");

    std::string sel_in, sel_method, sel_out, sel_config;
    auto* sel = app.add_subcommand("select", "fit a feature-space reduction");
    sel->add_option("--in", sel_in, "feature csv")->required();
    sel->add_option("--method", sel_method, "pca or cfs")
        ->required()
        ->check(CLI::IsMember({"pca", "cfs"}));
    sel->add_option("--out", sel_out, "output transform json")->required();
    sel->add_option("--config", sel_config, "pipeline config json");

    std::string tr_in, tr_transform, tr_preset, tr_out, tr_config;
    std::optional<std::uint64_t> tr_seed;
    auto* tr = app.add_subcommand("train", "fit a classifier preset");
    tr->add_option("--in", tr_in, "feature csv")->required();
    tr->add_option("--transform", tr_transform, "transform json from select");
    tr->add_option("--model-preset", tr_preset, "classifier preset")
        ->required()
        ->check(CLI::IsMember(pipe::preset_names()));
    tr->add_option("--out", tr_out, "output model json")->required();
    tr->add_option("--seed", tr_seed, "training seed");
    tr->add_option("--config", tr_config, "pipeline config json");

    std::string ev_model, ev_in;
    int ev_cv = 0;
    auto* ev = app.add_subcommand("evaluate", "score a model on a feature table");
    ev->add_option("--model", ev_model, "model json")->required();
    ev->add_option("--in", ev_in, "feature csv")->required();
    ev->add_option("--cv", ev_cv, "cross-validation folds (refits per fold)")
        ->check(CLI::Range(2, 1000));

    std::string pr_model;
    std::vector<std::string> pr_images;
    auto* pr = app.add_subcommand("predict", "grade images with a trained model");
    pr->add_option("--model", pr_model, "model json")->required();
    pr->add_option("images", pr_images, "image files")->required();

    std::string sy_spec, sy_out;
    auto* sy = app.add_subcommand("synth", "render a synthetic labeled corpus");
    sy->add_option("--spec", sy_spec, "corpus spec json")->required();
    sy->add_option("--out", sy_out, "output directory")->required();

    std::vector<std::string> full;
    full.reserve(args.size() + 1);
    full.push_back("fruitgrade");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<char*> argv;
    argv.reserve(full.size());
    for (auto& s : full) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (ext->parsed()) return cmd_extract(images_dir, labels_path, out_path, config_path);
        if (sel->parsed()) return cmd_select(sel_in, sel_method, sel_out, sel_config);
        if (tr->parsed()) return cmd_train(tr_in, tr_transform, tr_preset, tr_out, tr_seed, tr_config);
        if (ev->parsed()) return cmd_evaluate(ev_model, ev_in, ev_cv);
        if (pr->parsed()) return cmd_predict(pr_model, pr_images);
        if (sy->parsed()) return cmd_synth(sy_spec, sy_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}

}  // namespace fruitgrade::cli
