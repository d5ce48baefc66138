#include "fruitgrade/model_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "fruitgrade/errors.hpp"

namespace fruitgrade::io {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

json standardizer_to_json(const sel::Standardizer& s) {
    return json{{"means", s.means}, {"stds", s.stds}};
}

sel::Standardizer standardizer_from_json(const json& j) {
    sel::Standardizer s;
    s.means = j.at("means").get<std::vector<double>>();
    s.stds = j.at("stds").get<std::vector<double>>();
    if (s.means.size() != s.stds.size()) throw IoError("standardizer means/stds length mismatch");
    return s;
}

json transform_to_json(const pipe::TransformArtifact& t) {
    json j;
    j["format_version"] = kFormatVersion;
    j["method"] = t.method;
    if (t.method == "pca") {
        j["standardizer"] = standardizer_to_json(t.standardizer);
        j["pca"] = json{{"mean", t.pca.mean},
                        {"components", t.pca.components},
                        {"eigenvalues", t.pca.eigenvalues},
                        {"explained_fraction", t.pca.explained_fraction}};
    } else if (t.method == "cfs") {
        j["subset"] = t.subset;
        j["merit"] = t.merit;
    } else {
        throw ConfigError("unknown transform method '" + t.method + "'");
    }
    return j;
}

pipe::TransformArtifact transform_from_json(const json& j) {
    pipe::TransformArtifact t;
    t.method = j.at("method").get<std::string>();
    if (t.method == "pca") {
        t.standardizer = standardizer_from_json(j.at("standardizer"));
        const json& p = j.at("pca");
        t.pca.mean = p.at("mean").get<std::vector<double>>();
        t.pca.components = p.at("components").get<std::vector<std::vector<double>>>();
        t.pca.eigenvalues = p.at("eigenvalues").get<std::vector<double>>();
        t.pca.explained_fraction = p.at("explained_fraction").get<double>();
        for (const auto& row : t.pca.components)
            if (row.size() != t.pca.mean.size()) throw IoError("component length mismatch");
    } else if (t.method == "cfs") {
        t.subset = j.at("subset").get<std::vector<int>>();
        t.merit = j.value("merit", 0.0);
    } else {
        throw IoError("unknown transform method '" + t.method + "'");
    }
    return t;
}

const char* metric_name(ml::KnnMetric m) {
    switch (m) {
        case ml::KnnMetric::euclidean: return "euclidean";
        case ml::KnnMetric::cosine: return "cosine";
        case ml::KnnMetric::minkowski3: return "minkowski3";
    }
    return "euclidean";
}

ml::KnnMetric metric_from(const std::string& s) {
    if (s == "euclidean") return ml::KnnMetric::euclidean;
    if (s == "cosine") return ml::KnnMetric::cosine;
    if (s == "minkowski3") return ml::KnnMetric::minkowski3;
    throw IoError("unknown knn metric '" + s + "'");
}

const char* kernel_name(ml::SvmKernel k) {
    switch (k) {
        case ml::SvmKernel::linear: return "linear";
        case ml::SvmKernel::poly: return "poly";
        case ml::SvmKernel::gaussian: return "gaussian";
    }
    return "linear";
}

ml::SvmKernel kernel_from(const std::string& s) {
    if (s == "linear") return ml::SvmKernel::linear;
    if (s == "poly") return ml::SvmKernel::poly;
    if (s == "gaussian") return ml::SvmKernel::gaussian;
    throw IoError("unknown svm kernel '" + s + "'");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

json read_json(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

}  // namespace

void save_transform(const std::string& path, const pipe::TransformArtifact& transform) {
    write_text(path, transform_to_json(transform).dump(2) + "\n");
}

pipe::TransformArtifact load_transform(const std::string& path) {
    const json j = read_json(path);
    try {
        if (j.value("format_version", 0) != kFormatVersion)
            throw IoError(path + ": unsupported format_version");
        return transform_from_json(j);
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
}

void save_model(const std::string& path, const pipe::TrainedModel& model) {
    json j;
    j["format_version"] = kFormatVersion;
    j["kind"] = model.kind;
    j["preset"] = model.preset;
    j["classes"] = model.classes;
    j["seed"] = model.seed;
    j["config"] = json::parse(cfg::config_to_text(model.config));
    j["transform"] = model.transform ? transform_to_json(*model.transform) : json(nullptr);
    j["standardizer"] = model.standardizer ? standardizer_to_json(*model.standardizer) : json(nullptr);

    if (model.tree) {
        json nodes = json::array();
        for (const auto& n : model.tree->nodes)
            nodes.push_back(json{{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right},
                                 {"counts", n.counts}});
        j["tree"] = json{{"n_classes", model.tree->n_classes},
                         {"split_count", model.tree->split_count},
                         {"nodes", nodes}};
    }
    if (model.knn) {
        j["knn"] = json{{"k", model.knn->k},
                        {"metric", metric_name(model.knn->metric)},
                        {"weight", model.knn->weight == ml::KnnWeight::uniform ? "uniform" : "squared_inverse"},
                        {"n_classes", model.knn->n_classes},
                        {"x", model.knn->x},
                        {"y", model.knn->y}};
    }
    if (model.svm) {
        json pairs = json::array();
        for (const auto& p : model.svm->pairs)
            pairs.push_back(json{{"class_a", p.class_a},
                                 {"class_b", p.class_b},
                                 {"bias", p.bias},
                                 {"converged", p.converged},
                                 {"support", p.support},
                                 {"coef", p.coef}});
        j["svm"] = json{{"kernel", kernel_name(model.svm->params.kernel)},
                        {"degree", model.svm->params.degree},
                        {"gamma", model.svm->params.gamma},
                        {"c", model.svm->params.c},
                        {"tol", model.svm->params.tol},
                        {"max_sweeps", model.svm->params.max_sweeps},
                        {"dim", model.svm->dim},
                        {"n_classes", model.svm->n_classes},
                        {"converged", model.svm->converged},
                        {"pairs", pairs}};
    }
    if (model.mlp) {
        j["mlp"] = json{{"d_in", model.mlp->d_in},
                        {"hidden", model.mlp->hidden},
                        {"n_out", model.mlp->n_out},
                        {"w", model.mlp->w}};
    }
    write_text(path, j.dump(2) + "\n");
}

pipe::TrainedModel load_model(const std::string& path) {
    const json j = read_json(path);
    pipe::TrainedModel model;
    try {
        if (j.value("format_version", 0) != kFormatVersion)
            throw IoError(path + ": unsupported format_version");
        model.kind = j.at("kind").get<std::string>();
        model.preset = j.at("preset").get<std::string>();
        model.classes = j.at("classes").get<std::vector<std::string>>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.config = cfg::parse_config_text(j.at("config").dump(), path);
        if (!j.at("transform").is_null()) model.transform = transform_from_json(j["transform"]);
        if (!j.at("standardizer").is_null()) model.standardizer = standardizer_from_json(j["standardizer"]);

        if (j.contains("tree")) {
            ml::DecisionTreeModel tree;
            tree.n_classes = j["tree"].at("n_classes").get<int>();
            tree.split_count = j["tree"].at("split_count").get<int>();
            for (const auto& n : j["tree"].at("nodes")) {
                ml::TreeNode node;
                node.feature = n.at("feature").get<int>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<int>();
                node.right = n.at("right").get<int>();
                node.counts = n.at("counts").get<std::vector<long long>>();
                tree.nodes.push_back(std::move(node));
            }
            if (tree.nodes.empty()) throw IoError(path + ": tree has no nodes");
            model.tree = std::move(tree);
        }
        if (j.contains("knn")) {
            ml::KnnModel knn;
            knn.k = j["knn"].at("k").get<int>();
            knn.metric = metric_from(j["knn"].at("metric").get<std::string>());
            const std::string w = j["knn"].at("weight").get<std::string>();
            if (w != "uniform" && w != "squared_inverse") throw IoError("unknown knn weight '" + w + "'");
            knn.weight = w == "uniform" ? ml::KnnWeight::uniform : ml::KnnWeight::squared_inverse;
            knn.n_classes = j["knn"].at("n_classes").get<int>();
            knn.x = j["knn"].at("x").get<sel::Matrix>();
            knn.y = j["knn"].at("y").get<std::vector<int>>();
            if (knn.x.size() != knn.y.size()) throw IoError(path + ": knn rows/labels mismatch");
            model.knn = std::move(knn);
        }
        if (j.contains("svm")) {
            ml::SvmModel svm;
            svm.params.kernel = kernel_from(j["svm"].at("kernel").get<std::string>());
            svm.params.degree = j["svm"].at("degree").get<int>();
            svm.params.gamma = j["svm"].at("gamma").get<double>();
            svm.params.c = j["svm"].at("c").get<double>();
            svm.params.tol = j["svm"].at("tol").get<double>();
            svm.params.max_sweeps = j["svm"].at("max_sweeps").get<int>();
            svm.dim = j["svm"].at("dim").get<int>();
            svm.n_classes = j["svm"].at("n_classes").get<int>();
            svm.converged = j["svm"].at("converged").get<bool>();
            for (const auto& p : j["svm"].at("pairs")) {
                ml::SvmPairModel pair;
                pair.class_a = p.at("class_a").get<int>();
                pair.class_b = p.at("class_b").get<int>();
                pair.bias = p.at("bias").get<double>();
                pair.converged = p.at("converged").get<bool>();
                pair.support = p.at("support").get<sel::Matrix>();
                pair.coef = p.at("coef").get<std::vector<double>>();
                if (pair.support.size() != pair.coef.size()) throw IoError(path + ": svm pair size mismatch");
                svm.pairs.push_back(std::move(pair));
            }
            model.svm = std::move(svm);
        }
        if (j.contains("mlp")) {
            ml::MlpModel mlp;
            mlp.d_in = j["mlp"].at("d_in").get<int>();
            mlp.hidden = j["mlp"].at("hidden").get<int>();
            mlp.n_out = j["mlp"].at("n_out").get<int>();
            mlp.w = j["mlp"].at("w").get<std::vector<double>>();
            if (static_cast<int>(mlp.w.size()) != mlp.param_count())
                throw IoError(path + ": network weight count mismatch");
            model.mlp = std::move(mlp);
        }
    } catch (const json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    if (!model.tree && !model.knn && !model.svm && !model.mlp)
        throw IoError(path + ": model has no trained core");
    return model;
}

}  // namespace fruitgrade::io
