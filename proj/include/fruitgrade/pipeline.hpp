#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fruitgrade/config.hpp"
#include "fruitgrade/learn.hpp"
#include "fruitgrade/segment.hpp"
#include "fruitgrade/select.hpp"

namespace fruitgrade::pipe {

/// Fitted feature-space reduction: either PCA (standardize, then project)
/// or a CFS column subset.
struct TransformArtifact {
    std::string method;  // "pca" | "cfs"
    sel::Standardizer standardizer;  // pca pre-scaling
    sel::PcaModel pca;
    std::vector<int> subset;  // cfs slots, strictly increasing
    double merit = 0.0;       // cfs search score

    std::vector<double> apply(const std::vector<double>& raw) const;
    sel::Matrix apply(const sel::Matrix& rows) const;
    int output_dim(int input_dim) const;
};

TransformArtifact fit_transform(const sel::Matrix& rows, const std::vector<int>& labels,
                                const std::string& method, const cfg::PipelineConfig& config);

/// Resolved hyperparameters behind a named preset.
struct ModelPreset {
    std::string name;
    std::string kind;  // tree | knn | svm | mlp
    int tree_max_splits = 20;
    int knn_k = 10;
    ml::KnnMetric knn_metric = ml::KnnMetric::euclidean;
    ml::KnnWeight knn_weight = ml::KnnWeight::uniform;
    ml::SvmParams svm;
    ml::MlpOptions mlp;
};

/// Throws ConfigError for unknown names.
ModelPreset resolve_preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// A trained classifier bundled with everything needed to grade a raw image:
/// extraction settings, optional feature transform, optional standardizer
/// (trees consume raw features) and the core model.
struct TrainedModel {
    std::string preset;
    std::string kind;
    std::vector<std::string> classes;  // lexicographic; ids are positions
    cfg::PipelineConfig config;
    std::uint64_t seed = 1;
    std::optional<TransformArtifact> transform;
    std::optional<sel::Standardizer> standardizer;
    std::optional<ml::DecisionTreeModel> tree;
    std::optional<ml::KnnModel> knn;
    std::optional<ml::SvmModel> svm;
    std::optional<ml::MlpModel> mlp;

    int num_classes() const { return static_cast<int>(classes.size()); }
};

/// Fits the preset's model on raw feature rows. The transform, when given,
/// is applied as-is (it is fit separately, typically on the full table).
/// Non-tree models get a standardizer fit on the transformed training rows.
/// The network preset reserves a validation share of the rows internally for
/// early stopping.
TrainedModel train_model(const sel::Matrix& rows, const std::vector<int>& labels,
                         const std::vector<std::string>& classes, const std::string& preset_name,
                         const std::optional<TransformArtifact>& transform,
                         const cfg::PipelineConfig& config, std::uint64_t seed);

int predict_row(const TrainedModel& model, const std::vector<double>& raw);
ml::EvalReport evaluate_rows(const TrainedModel& model, const sel::Matrix& rows,
                             const std::vector<int>& labels);

/// Refits the template's preset per fold (transform fixed) and scores each
/// held-out fold. Folds come from kfold_indices(n, folds, model seed).
std::vector<double> cv_fold_accuracies(const TrainedModel& model, const sel::Matrix& rows,
                                       const std::vector<int>& labels, int folds);

/// Calibrate (unless mm_per_pixel is pinned), crop and segment.
seg::FruitView process_image(const img::RgbImage& image, const cfg::PipelineConfig& config);

/// process_image followed by the 59-slot extraction.
std::vector<double> extract_from_image(const img::RgbImage& image, const cfg::PipelineConfig& config);

}  // namespace fruitgrade::pipe
