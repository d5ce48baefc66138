#include "fruitgrade/pipeline.hpp"

#include <algorithm>
#include <cstddef>

#include "fruitgrade/errors.hpp"
#include "fruitgrade/features.hpp"
#include "fruitgrade/rng.hpp"

namespace fruitgrade::pipe {

std::vector<double> TransformArtifact::apply(const std::vector<double>& raw) const {
    if (method == "pca") return sel::pca_project(pca, standardizer.apply(raw));
    if (method == "cfs") {
        std::vector<double> out;
        out.reserve(subset.size());
        for (int idx : subset) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= raw.size())
                throw DimensionMismatch("subset slot " + std::to_string(idx) + " out of range");
            out.push_back(raw[static_cast<std::size_t>(idx)]);
        }
        return out;
    }
    throw ConfigError("unknown transform method '" + method + "'");
}

sel::Matrix TransformArtifact::apply(const sel::Matrix& rows) const {
    sel::Matrix out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(apply(row));
    return out;
}

int TransformArtifact::output_dim(int input_dim) const {
    if (method == "pca") return pca.output_dim();
    if (method == "cfs") return static_cast<int>(subset.size());
    return input_dim;
}

TransformArtifact fit_transform(const sel::Matrix& rows, const std::vector<int>& labels,
                                const std::string& method, const cfg::PipelineConfig& config) {
    TransformArtifact t;
    t.method = method;
    if (method == "pca") {
        t.standardizer = sel::Standardizer::fit(rows);
        t.pca = sel::pca_fit(t.standardizer.apply(rows), config.pca_explained_target);
    } else if (method == "cfs") {
        const sel::FeatureSubset sub = sel::cfs_search(rows, labels, config.cfs_stall_limit);
        t.subset = sub.indices;
        t.merit = sub.merit;
    } else {
        throw ConfigError("unknown selection method '" + method + "'");
    }
    return t;
}

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {
        "ann-lm",      "ann-br",     "svm-linear", "svm-poly2",    "svm-poly3",  "svm-rbf",
        "tree-simple", "tree-medium", "tree-complex", "knn-weighted", "knn-cosine", "knn-cubic"};
    return names;
}

ModelPreset resolve_preset(const std::string& name) {
    ModelPreset p;
    p.name = name;
    if (name == "ann-lm") {
        p.kind = "mlp";
        p.mlp.method = ml::MlpMethod::levenberg_marquardt;
    } else if (name == "ann-br") {
        p.kind = "mlp";
        p.mlp.method = ml::MlpMethod::bayesian_regularization;
    } else if (name == "svm-linear") {
        p.kind = "svm";
        p.svm.kernel = ml::SvmKernel::linear;
    } else if (name == "svm-poly2") {
        p.kind = "svm";
        p.svm.kernel = ml::SvmKernel::poly;
        p.svm.degree = 2;
    } else if (name == "svm-poly3") {
        p.kind = "svm";
        p.svm.kernel = ml::SvmKernel::poly;
        p.svm.degree = 3;
    } else if (name == "svm-rbf") {
        p.kind = "svm";
        p.svm.kernel = ml::SvmKernel::gaussian;
        p.svm.gamma = 0.0;  // resolved to 1/dim at fit time
    } else if (name == "tree-simple") {
        p.kind = "tree";
        p.tree_max_splits = 4;
    } else if (name == "tree-medium") {
        p.kind = "tree";
        p.tree_max_splits = 20;
    } else if (name == "tree-complex") {
        p.kind = "tree";
        p.tree_max_splits = 100;
    } else if (name == "knn-weighted") {
        p.kind = "knn";
        p.knn_metric = ml::KnnMetric::euclidean;
        p.knn_weight = ml::KnnWeight::squared_inverse;
    } else if (name == "knn-cosine") {
        p.kind = "knn";
        p.knn_metric = ml::KnnMetric::cosine;
    } else if (name == "knn-cubic") {
        p.kind = "knn";
        p.knn_metric = ml::KnnMetric::minkowski3;
    } else {
        throw ConfigError("unknown model preset '" + name + "'");
    }
    return p;
}

TrainedModel train_model(const sel::Matrix& rows, const std::vector<int>& labels,
                         const std::vector<std::string>& classes, const std::string& preset_name,
                         const std::optional<TransformArtifact>& transform,
                         const cfg::PipelineConfig& config, std::uint64_t seed) {
    if (rows.empty()) throw EmptySamples("no training rows");
    if (labels.size() != rows.size()) throw DimensionMismatch("labels do not match rows");
    const int n_classes = static_cast<int>(classes.size());
    for (int y : labels)
        if (y < 0 || y >= n_classes) throw DimensionMismatch("label id out of range");
    const ModelPreset preset = resolve_preset(preset_name);

    TrainedModel model;
    model.preset = preset.name;
    model.kind = preset.kind;
    model.classes = classes;
    model.config = config;
    model.seed = seed;
    model.transform = transform;

    const sel::Matrix t = transform ? transform->apply(rows) : rows;
    sel::Matrix z;
    if (preset.kind == "tree") {
        z = t;
    } else {
        model.standardizer = sel::Standardizer::fit(t);
        z = model.standardizer->apply(t);
    }

    if (preset.kind == "tree") {
        model.tree = ml::tree_fit(z, labels, n_classes, preset.tree_max_splits);
    } else if (preset.kind == "knn") {
        ml::KnnModel knn;
        knn.x = z;
        knn.y = labels;
        knn.k = preset.knn_k;
        knn.metric = preset.knn_metric;
        knn.weight = preset.knn_weight;
        knn.n_classes = n_classes;
        model.knn = std::move(knn);
    } else if (preset.kind == "svm") {
        model.svm = ml::svm_fit(z, labels, n_classes, preset.svm, seed);
    } else {
        sel::Matrix x_train = z, x_val;
        std::vector<int> y_train = labels, y_val;
        if (z.size() >= 10) {
            ml::Dataset tmp;
            tmp.x = z;
            tmp.y = labels;
            const ml::SplitPlan plan = split_dataset(tmp, seed);
            x_train.clear();
            y_train.clear();
            for (int i : plan.train) {
                x_train.push_back(z[static_cast<std::size_t>(i)]);
                y_train.push_back(labels[static_cast<std::size_t>(i)]);
            }
            for (int i : plan.validation) {
                x_val.push_back(z[static_cast<std::size_t>(i)]);
                y_val.push_back(labels[static_cast<std::size_t>(i)]);
            }
        }
        model.mlp = ml::mlp_fit(x_train, y_train, x_val, y_val, n_classes, preset.mlp, seed);
    }
    return model;
}

int predict_row(const TrainedModel& model, const std::vector<double>& raw) {
    std::vector<double> v = model.transform ? model.transform->apply(raw) : raw;
    if (model.standardizer) v = model.standardizer->apply(v);
    if (model.tree) return ml::tree_predict(*model.tree, v);
    if (model.knn) return ml::knn_predict(*model.knn, v);
    if (model.svm) return ml::svm_predict(*model.svm, v);
    if (model.mlp) return ml::mlp_predict(*model.mlp, v);
    throw ConfigError("model has no trained core");
}

ml::EvalReport evaluate_rows(const TrainedModel& model, const sel::Matrix& rows,
                             const std::vector<int>& labels) {
    if (rows.size() != labels.size()) throw DimensionMismatch("labels do not match rows");
    std::vector<int> predicted;
    predicted.reserve(rows.size());
    for (const auto& row : rows) predicted.push_back(predict_row(model, row));
    return ml::evaluate_predictions(labels, predicted, model.num_classes());
}

std::vector<double> cv_fold_accuracies(const TrainedModel& model, const sel::Matrix& rows,
                                       const std::vector<int>& labels, int folds) {
    if (rows.size() != labels.size()) throw DimensionMismatch("labels do not match rows");
    const auto fold_rows = ml::kfold_indices(static_cast<int>(rows.size()), folds, model.seed);

    std::vector<double> accuracies;
    accuracies.reserve(fold_rows.size());
    std::vector<char> held(rows.size(), 0);
    for (std::size_t f = 0; f < fold_rows.size(); ++f) {
        std::fill(held.begin(), held.end(), 0);
        for (int i : fold_rows[f]) held[static_cast<std::size_t>(i)] = 1;
        sel::Matrix train_x, test_x;
        std::vector<int> train_y, test_y;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (held[i]) {
                test_x.push_back(rows[i]);
                test_y.push_back(labels[i]);
            } else {
                train_x.push_back(rows[i]);
                train_y.push_back(labels[i]);
            }
        }
        const TrainedModel fold_model =
            train_model(train_x, train_y, model.classes, model.preset, model.transform,
                        model.config, Rng::derive(model.seed, f + 1));
        accuracies.push_back(evaluate_rows(fold_model, test_x, test_y).accuracy);
    }
    return accuracies;
}

seg::FruitView process_image(const img::RgbImage& image, const cfg::PipelineConfig& config) {
    if (config.mm_per_pixel) return seg::segment_fruit(image, config.policy, *config.mm_per_pixel);
    const seg::CalibrationResult cal = seg::detect_calibration_frame(image, config.frame_side_mm);
    const img::RgbImage crop = crop_to_frame(image, cal);
    return seg::segment_fruit(crop, config.policy, cal.mm_per_pixel);
}

std::vector<double> extract_from_image(const img::RgbImage& image, const cfg::PipelineConfig& config) {
    const seg::FruitView view = process_image(image, config);
    return feat::extract_all(view, config.extraction);
}

}  // namespace fruitgrade::pipe
