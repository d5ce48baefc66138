#include "fruitgrade/csvio.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "fruitgrade/errors.hpp"

namespace fruitgrade::csv {

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string read_trimmed_line(std::istream& in, bool& ok) {
    std::string line;
    ok = static_cast<bool>(std::getline(in, line));
    if (ok && !line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

double parse_double(const std::string& field, const std::string& path, std::size_t line_no) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw IoError(path + ":" + std::to_string(line_no) + ": bad number '" + field + "'");
    return v;
}

void check_field(const std::string& value, const char* what) {
    if (value.find(',') != std::string::npos || value.find('\n') != std::string::npos)
        throw IoError(std::string(what) + " may not contain commas or newlines: '" + value + "'");
}

}  // namespace

void write_feature_table(const std::string& path, const FeatureTable& table) {
    if (table.filenames.size() != table.rows.size() || table.labels.size() != table.rows.size())
        throw DimensionMismatch("feature table columns disagree on row count");
    std::ostringstream out;
    out << "filename,label";
    for (const auto& name : table.feature_names) {
        check_field(name, "column name");
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != table.feature_names.size())
            throw DimensionMismatch("row " + std::to_string(i) + " has the wrong number of features");
        check_field(table.filenames[i], "filename");
        check_field(table.labels[i], "label");
        out << table.filenames[i] << ',' << table.labels[i];
        for (double v : table.rows[i]) out << ',' << format_double(v);
        out << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << out.str();
    if (!f) throw IoError("write failed: " + path);
}

FeatureTable read_feature_table(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    bool ok = false;
    const std::string header = read_trimmed_line(f, ok);
    if (!ok) throw IoError(path + ": empty file");
    auto cols = split_line(header);
    if (cols.size() < 3 || cols[0] != "filename" || cols[1] != "label")
        throw IoError(path + ": expected header starting with filename,label");

    FeatureTable table;
    table.feature_names.assign(cols.begin() + 2, cols.end());
    std::size_t line_no = 1;
    while (true) {
        const std::string line = read_trimmed_line(f, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != cols.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols.size()) + " fields, got " + std::to_string(fields.size()));
        table.filenames.push_back(fields[0]);
        table.labels.push_back(fields[1]);
        std::vector<double> row(fields.size() - 2);
        for (std::size_t j = 2; j < fields.size(); ++j) row[j - 2] = parse_double(fields[j], path, line_no);
        table.rows.push_back(std::move(row));
    }
    return table;
}

void write_label_pairs(const std::string& path,
                       const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::ostringstream out;
    out << "filename,label\n";
    for (const auto& [file, label] : pairs) {
        check_field(file, "filename");
        check_field(label, "label");
        out << file << ',' << label << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f << out.str();
    if (!f) throw IoError("write failed: " + path);
}

std::vector<std::pair<std::string, std::string>> read_label_pairs(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    bool ok = false;
    std::size_t line_no = 0;
    bool first = true;
    while (true) {
        const std::string line = read_trimmed_line(f, ok);
        if (!ok) break;
        ++line_no;
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != 2)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected filename,label");
        if (first && fields[0] == "filename" && fields[1] == "label") {
            first = false;
            continue;
        }
        first = false;
        pairs.emplace_back(fields[0], fields[1]);
    }
    return pairs;
}

ml::Dataset make_dataset(const FeatureTable& table, std::vector<std::string>* class_names) {
    std::set<std::string> distinct(table.labels.begin(), table.labels.end());
    std::vector<std::string> names(distinct.begin(), distinct.end());
    ml::Dataset data;
    data.x = table.rows;
    data.y = encode_labels(table.labels, names);
    if (class_names) *class_names = std::move(names);
    return data;
}

std::vector<int> encode_labels(const std::vector<std::string>& labels,
                               const std::vector<std::string>& class_names) {
    std::vector<int> ids;
    ids.reserve(labels.size());
    for (const auto& label : labels) {
        const auto it = std::find(class_names.begin(), class_names.end(), label);
        if (it == class_names.end())
            throw IoError("label '" + label + "' is not among the model's classes");
        ids.push_back(static_cast<int>(it - class_names.begin()));
    }
    return ids;
}

}  // namespace fruitgrade::csv
