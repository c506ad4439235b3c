#include "crowdcertain/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crowdcertain/random.hpp"

#ifndef CROWDCERTAIN_DATA_DIR
#define CROWDCERTAIN_DATA_DIR "data"
#endif

namespace crowdcertain::data {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Splits one CSV record. Double-quoted fields may contain commas; "" escapes a quote.
std::vector<std::string> split_record(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.emplace_back(trim(cur));
    return out;
}

bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

bool contains(const std::vector<std::string>& v, std::string_view s) {
    return std::find(v.begin(), v.end(), s) != v.end();
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(path.string() + ": no column named '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const ColumnSpec& spec) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset file: " + path.string());
    if (spec.label_columns.empty()) throw Error("schema names no label column");

    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
    const auto header = split_record(line);

    std::vector<std::size_t> label_idx;
    for (const auto& name : spec.label_columns) label_idx.push_back(column_index(header, name, path));
    std::vector<std::size_t> feature_idx;
    if (spec.feature_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c)
            if (std::find(label_idx.begin(), label_idx.end(), c) == label_idx.end()) feature_idx.push_back(c);
    } else {
        for (const auto& name : spec.feature_columns) feature_idx.push_back(column_index(header, name, path));
    }
    if (feature_idx.empty()) throw Error(path.string() + ": no feature columns");

    const bool mapped = !spec.positive_values.empty();
    const bool restrict_rows = mapped && !spec.negative_values.empty();

    std::vector<double> feats;
    std::vector<Label> labels;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line);
        if (cells.size() != header.size())
            throw Error(path.string() + ": row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                        " cells, expected " + std::to_string(header.size()));

        std::vector<Label> row_labels;
        bool keep = true;
        for (std::size_t c : label_idx) {
            const std::string& cell = cells[c];
            if (mapped) {
                if (contains(spec.positive_values, cell)) {
                    row_labels.push_back(1);
                } else if (!restrict_rows || contains(spec.negative_values, cell)) {
                    row_labels.push_back(0);
                } else {
                    keep = false;
                }
            } else {
                double v;
                if (!parse_double(cell, v) || (v != 0.0 && v != 1.0))
                    throw Error(path.string() + ": row " + std::to_string(row_no) + ", column '" + header[c] +
                                "': label '" + cell + "' is not 0/1 and no binarization rule was given");
                row_labels.push_back(v == 1.0 ? 1 : 0);
            }
        }
        if (!keep) continue;

        for (std::size_t c : feature_idx) {
            double v;
            if (!parse_double(cells[c], v))
                throw Error(path.string() + ": row " + std::to_string(row_no) + ", column '" + header[c] +
                            "': non-numeric feature '" + cells[c] + "'");
            if (!std::isfinite(v))
                throw Error(path.string() + ": row " + std::to_string(row_no) + ", column '" + header[c] +
                            "': non-finite feature value");
            feats.push_back(v);
        }
        labels.insert(labels.end(), row_labels.begin(), row_labels.end());
    }

    const std::size_t f = feature_idx.size();
    const std::size_t k = label_idx.size();
    const std::size_t n = feats.size() / f;
    if (n == 0) throw Error(path.string() + ": dataset has no rows");

    Dataset ds;
    ds.name = path.stem().string();
    ds.features = Matrix<double>({n, f});
    std::copy(feats.begin(), feats.end(), ds.features.flat().begin());
    ds.truth = LabelMatrix({n, k});
    std::copy(labels.begin(), labels.end(), ds.truth.flat().begin());
    for (std::size_t c : feature_idx) ds.feature_names.push_back(header[c]);
    for (std::size_t c : label_idx) ds.class_names.push_back(header[c]);
    return ds;
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    const std::size_t f = dataset.n_features();
    const std::size_t k = dataset.n_classes();
    auto feature_name = [&](std::size_t j) {
        return j < dataset.feature_names.size() ? dataset.feature_names[j] : "x" + std::to_string(j);
    };
    auto class_name = [&](std::size_t c) {
        return c < dataset.class_names.size() ? dataset.class_names[c] : "label" + std::to_string(c);
    };
    for (std::size_t j = 0; j < f; ++j) out << feature_name(j) << ',';
    for (std::size_t c = 0; c < k; ++c) out << class_name(c) << (c + 1 < k ? "," : "\n");
    char buf[64];
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        for (std::size_t j = 0; j < f; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", dataset.features(i, j));
            out << buf << ',';
        }
        for (std::size_t c = 0; c < k; ++c) out << int(dataset.truth(i, c)) << (c + 1 < k ? "," : "\n");
    }
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

std::size_t FoldPlan::fold_size(std::size_t fold) const {
    return static_cast<std::size_t>(std::count(assignments.begin(), assignments.end(), fold));
}

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw Error("make_folds: need at least 2 folds");
    if (n < k) throw Error("make_folds: fewer instances than folds");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng = Rng::substream(seed, "folds");
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);

    FoldPlan plan{k, std::vector<std::size_t>(n), seed};
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t j = 0; j < len; ++j) plan.assignments[perm[pos++]] = f;
    }
    return plan;
}

Matrix<double> select_rows(const Matrix<double>& m, std::span<const std::size_t> rows) {
    Matrix<double> out({rows.size(), m.extent(1)});
    for (std::size_t r = 0; r < rows.size(); ++r) std::ranges::copy(m.row(rows[r]), out.row(r).begin());
    return out;
}

LabelMatrix select_rows(const LabelMatrix& m, std::span<const std::size_t> rows) {
    LabelMatrix out({rows.size(), m.extent(1)});
    for (std::size_t r = 0; r < rows.size(); ++r) std::ranges::copy(m.row(rows[r]), out.row(r).begin());
    return out;
}

LabelTensor select_rows(const LabelTensor& t, std::span<const std::size_t> rows) {
    LabelTensor out({rows.size(), t.extent(1), t.extent(2)});
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t a = 0; a < t.extent(1); ++a) std::ranges::copy(t.row(rows[r], a), out.row(r, a).begin());
    return out;
}

Dataset make_two_gaussians(std::size_t n, std::uint64_t seed, double separation) {
    // Two unit-variance Gaussians whose means differ by `separation` along the
    // (1,1) diagonal, plus two pure-noise features.
    Rng rng = Rng::substream(seed, "two-gaussians");
    Dataset ds;
    ds.name = "gaussian";
    ds.features = Matrix<double>({n, 4});
    ds.truth = LabelMatrix({n, 1});
    const double shift = separation / (2.0 * std::sqrt(2.0));
    for (std::size_t i = 0; i < n; ++i) {
        const Label y = (i % 2 == 0) ? 1 : 0;
        const double s = y ? shift : -shift;
        ds.features(i, 0) = s + rng.normal();
        ds.features(i, 1) = s + rng.normal();
        ds.features(i, 2) = rng.normal();
        ds.features(i, 3) = rng.normal();
        ds.truth(i, 0) = y;
    }
    ds.feature_names = {"x0", "x1", "noise0", "noise1"};
    ds.class_names = {"label"};
    return ds;
}

Dataset make_xor_grid(std::size_t n, std::uint64_t seed) {
    // Four blobs on the corners of a square, labelled by the XOR of the
    // coordinate signs. Unequal blob masses leave the root split some gain.
    Rng rng = Rng::substream(seed, "xor-grid");
    struct Blob {
        double cx, cy, mass;
        Label y;
    };
    constexpr Blob blobs[] = {{1, 1, 0.4, 0}, {-1, -1, 0.1, 0}, {1, -1, 0.3, 1}, {-1, 1, 0.2, 1}};
    Dataset ds;
    ds.name = "xor";
    ds.features = Matrix<double>({n, 2});
    ds.truth = LabelMatrix({n, 1});
    for (std::size_t i = 0; i < n; ++i) {
        double u = rng.uniform();
        std::size_t b = 0;
        while (b + 1 < std::size(blobs) && u >= blobs[b].mass) u -= blobs[b++].mass;
        ds.features(i, 0) = blobs[b].cx + 0.3 * rng.normal();
        ds.features(i, 1) = blobs[b].cy + 0.3 * rng.normal();
        ds.truth(i, 0) = blobs[b].y;
    }
    ds.feature_names = {"x0", "x1"};
    ds.class_names = {"label"};
    return ds;
}

std::vector<std::string> bundled_names() { return {"gaussian", "xor", "iris", "breast-cancer"}; }

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("CROWDCERTAIN_DATA_DIR")) return env;
    return CROWDCERTAIN_DATA_DIR;
}

Dataset resolve_dataset(std::string_view name_or_path, const ColumnSpec& spec) {
    if (name_or_path == "gaussian") return make_two_gaussians(1000, 0);
    if (name_or_path == "xor") return make_xor_grid(1000, 0);
    if (name_or_path == "iris") {
        ColumnSpec s{{"species"}, {}, {"setosa"}, {"versicolor"}};
        Dataset ds = load_csv(default_data_dir() / "iris.csv", s);
        ds.name = "iris";
        return ds;
    }
    if (name_or_path == "breast-cancer") {
        ColumnSpec s{{"diagnosis"}, {}, {"malignant"}, {"benign"}};
        Dataset ds = load_csv(default_data_dir() / "breast_cancer.csv", s);
        ds.name = "breast-cancer";
        return ds;
    }
    return load_csv(std::filesystem::path(name_or_path), spec);
}

}  // namespace crowdcertain::data
