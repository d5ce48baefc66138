#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fruitgrade/learn.hpp"
#include "fruitgrade/select.hpp"

namespace fruitgrade::csv {

/// One feature row per image: filename, grade label, canonical feature slots.
struct FeatureTable {
    std::vector<std::string> feature_names;
    std::vector<std::string> filenames;
    std::vector<std::string> labels;
    sel::Matrix rows;

    std::size_t size() const { return rows.size(); }
};

/// Header "filename,label,<feature names>"; doubles written with %.17g so a
/// read-back is bit-exact. No quoting: field values must not contain commas.
void write_feature_table(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_table(const std::string& path);

/// Two-column "filename,label" file with a header line.
void write_label_pairs(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& pairs);
std::vector<std::pair<std::string, std::string>> read_label_pairs(const std::string& path);

/// Maps distinct labels to contiguous ids in lexicographic order.
ml::Dataset make_dataset(const FeatureTable& table, std::vector<std::string>* class_names);

/// Ids for rows of `labels` under a fixed class list. Throws IoError when a
/// label is not in the list.
std::vector<int> encode_labels(const std::vector<std::string>& labels,
                               const std::vector<std::string>& class_names);

}  // namespace fruitgrade::csv
