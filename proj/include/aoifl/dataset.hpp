// Copyright 2026 The aoifl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aoifl {

/// Column-level description of a tabular dataset.
///
/// Before loading, `label_column` and `categorical_columns` index the columns
/// of the raw file. A loaded Dataset carries a rebuilt schema in feature-matrix
/// space: the label column has been extracted (label_column = -1) and
/// categorical indices refer to feature-matrix columns.
struct FeatureSchema {
  std::vector<std::string> feature_names;
  std::set<int> categorical_columns;
  int label_column = -1;
  int benign_class = 0;
  int n_classes = 2;
  /// Optional label vocabulary; empty means the label column holds integer
  /// class indices in [0, n_classes).
  std::vector<std::string> class_names;
};

/// Numeric feature matrix plus integer class labels. `category_values` keeps,
/// for each categorical feature column, the code -> string decode table built
/// at load time (empty for numeric columns and after one-hot expansion).
struct Dataset {
  Eigen::MatrixXd features;  // n_samples x n_features
  std::vector<int> labels;
  FeatureSchema schema;
  std::vector<std::vector<std::string>> category_values;

  Eigen::Index n_samples() const { return features.rows(); }
  Eigen::Index n_features() const { return features.cols(); }
};

/// Index list of one client's training samples.
struct ClientShard {
  std::vector<int> sample_indices;
  int owner_client = -1;

  std::size_t size() const { return sample_indices.size(); }
};

/// Parse or validation failure in a CSV file, with 1-based line/column location.
class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& path, long line, long column, const std::string& what_part)
      : std::runtime_error(format(path, line, column, what_part)), line_(line), column_(column) {}

  long line() const { return line_; }
  long column() const { return column_; }

 private:
  static std::string format(const std::string& path, long line, long column, const std::string& msg) {
    std::ostringstream os;
    os << path << ":" << line;
    if (column > 0) os << ": column " << column;
    os << ": " << msg;
    return os.str();
  }
  long line_ = 0, column_ = 0;
};

namespace detail {

/// Split one CSV record. Handles plain fields and double-quoted fields with
/// "" escapes; does not handle embedded newlines.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& s, double& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  // Non-finite cells are rejected: datasets must stay finite end to end.
  return ec == std::errc{} && ptr == last && std::isfinite(out);
}

inline bool parse_int(const std::string& s, long& out) {
  const std::string t = trim(s);
  if (t.empty()) return false;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

}  // namespace detail

/// Header row of a CSV file, for resolving column names to indices.
inline std::vector<std::string> read_csv_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError(path, 0, 0, "cannot open file");
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path, 1, 0, "missing header row");
  return detail::split_csv_line(line);
}

/// Load a CSV file (header row required) using a schema expressed in raw-file
/// column indices. Numeric cells must parse as floating point; categorical
/// cells are kept as per-column category codes (first-appearance order) with
/// the decode table stored on the Dataset; the label column must hold either
/// a declared class name or an integer in [0, n_classes).
inline Dataset load_tabular_csv(const std::string& path, const FeatureSchema& schema) {
  if (schema.n_classes < 2) throw std::invalid_argument("load_tabular_csv: n_classes must be >= 2");
  if (schema.categorical_columns.count(schema.label_column))
    throw std::invalid_argument("load_tabular_csv: label column cannot be categorical feature");
  if (schema.benign_class < 0 || schema.benign_class >= schema.n_classes)
    throw std::invalid_argument("load_tabular_csv: benign_class out of range");

  std::ifstream in(path);
  if (!in) throw CsvError(path, 0, 0, "cannot open file");

  std::string line;
  if (!std::getline(in, line)) throw CsvError(path, 1, 0, "missing header row");
  const auto header = detail::split_csv_line(line);
  const auto n_cols = static_cast<long>(header.size());
  if (schema.label_column < 0 || schema.label_column >= n_cols)
    throw CsvError(path, 1, 0, "label column index " + std::to_string(schema.label_column) +
                                   " out of range for " + std::to_string(n_cols) + " columns");
  for (int c : schema.categorical_columns) {
    if (c < 0 || c >= n_cols)
      throw CsvError(path, 1, 0, "categorical column index " + std::to_string(c) + " out of range");
  }

  // Map raw columns onto feature-matrix columns.
  std::vector<int> feature_of_raw(static_cast<std::size_t>(n_cols), -1);
  FeatureSchema out_schema;
  out_schema.benign_class = schema.benign_class;
  out_schema.n_classes = schema.n_classes;
  out_schema.class_names = schema.class_names;
  out_schema.label_column = -1;
  int n_features = 0;
  for (long c = 0; c < n_cols; ++c) {
    if (c == schema.label_column) continue;
    feature_of_raw[static_cast<std::size_t>(c)] = n_features;
    out_schema.feature_names.push_back(header[static_cast<std::size_t>(c)]);
    if (schema.categorical_columns.count(static_cast<int>(c))) out_schema.categorical_columns.insert(n_features);
    ++n_features;
  }

  std::vector<std::vector<std::string>> category_values(static_cast<std::size_t>(n_features));
  std::vector<double> values;
  std::vector<int> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<long>(fields.size()) != n_cols)
      throw CsvError(path, line_no, 0,
                     "row has " + std::to_string(fields.size()) + " columns, expected " + std::to_string(n_cols));
    for (long c = 0; c < n_cols; ++c) {
      const auto& cell = fields[static_cast<std::size_t>(c)];
      if (c == schema.label_column) {
        int label = -1;
        if (!schema.class_names.empty()) {
          const std::string name = detail::trim(cell);
          const auto it = std::find(schema.class_names.begin(), schema.class_names.end(), name);
          if (it == schema.class_names.end())
            throw CsvError(path, line_no, c + 1, "unknown label value '" + name + "'");
          label = static_cast<int>(it - schema.class_names.begin());
        } else {
          long v = 0;
          if (!detail::parse_int(cell, v) || v < 0 || v >= schema.n_classes)
            throw CsvError(path, line_no, c + 1,
                           "label '" + cell + "' is not an integer in [0, " + std::to_string(schema.n_classes) + ")");
          label = static_cast<int>(v);
        }
        labels.push_back(label);
      } else {
        const int f = feature_of_raw[static_cast<std::size_t>(c)];
        if (out_schema.categorical_columns.count(f)) {
          auto& table = category_values[static_cast<std::size_t>(f)];
          const std::string v = detail::trim(cell);
          auto it = std::find(table.begin(), table.end(), v);
          if (it == table.end()) {
            table.push_back(v);
            it = table.end() - 1;
          }
          values.push_back(static_cast<double>(it - table.begin()));
        } else {
          double v = 0.0;
          if (!detail::parse_double(cell, v))
            throw CsvError(path, line_no, c + 1, "cell '" + cell + "' is not numeric");
          values.push_back(v);
        }
      }
    }
  }
  if (labels.empty()) throw CsvError(path, line_no, 0, "file contains no data rows");

  Dataset ds;
  ds.schema = std::move(out_schema);
  ds.labels = std::move(labels);
  ds.category_values = std::move(category_values);
  const auto n_rows = static_cast<Eigen::Index>(ds.labels.size());
  ds.features.resize(n_rows, n_features);
  for (Eigen::Index i = 0; i < n_rows; ++i)
    for (Eigen::Index j = 0; j < n_features; ++j)
      ds.features(i, j) = values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_features) +
                                 static_cast<std::size_t>(j)];
  return ds;
}

/// Per-column statistics and vocabularies learned from training data only.
struct PreprocessorParams {
  /// Parallel to the fitted dataset's feature columns. For numeric columns
  /// mean/stddev hold the standardization constants (zero-variance columns
  /// store stddev 1); for categorical columns `vocab` holds the sorted
  /// category strings and mean/stddev are unused.
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<std::vector<std::string>> vocab;
  std::set<int> categorical_columns;
  int n_input_features = 0;
};

inline PreprocessorParams fit_preprocessor(const Dataset& train) {
  if (train.n_samples() == 0) throw std::invalid_argument("fit_preprocessor: empty dataset");
  PreprocessorParams params;
  const int nf = static_cast<int>(train.n_features());
  params.n_input_features = nf;
  params.categorical_columns = train.schema.categorical_columns;
  params.mean.assign(static_cast<std::size_t>(nf), 0.0);
  params.stddev.assign(static_cast<std::size_t>(nf), 1.0);
  params.vocab.resize(static_cast<std::size_t>(nf));
  const double n = static_cast<double>(train.n_samples());
  for (int j = 0; j < nf; ++j) {
    if (params.categorical_columns.count(j)) {
      auto vocab = train.category_values[static_cast<std::size_t>(j)];
      std::sort(vocab.begin(), vocab.end());
      params.vocab[static_cast<std::size_t>(j)] = std::move(vocab);
      continue;
    }
    const double mean = train.features.col(j).mean();
    const double var = (train.features.col(j).array() - mean).square().sum() / n;
    params.mean[static_cast<std::size_t>(j)] = mean;
    const double sd = std::sqrt(var);
    params.stddev[static_cast<std::size_t>(j)] = sd > 0.0 ? sd : 1.0;
  }
  return params;
}

/// Standardize numeric columns and one-hot expand categorical columns, in the
/// original column order. Categories unseen at fit time map to an all-zero
/// block. The returned schema describes the expanded feature space.
inline Dataset apply_preprocessor(const Dataset& data, const PreprocessorParams& params) {
  if (static_cast<int>(data.n_features()) != params.n_input_features)
    throw std::invalid_argument("apply_preprocessor: feature count mismatch");
  if (data.schema.categorical_columns != params.categorical_columns)
    throw std::invalid_argument("apply_preprocessor: categorical column sets differ");

  const int nf = params.n_input_features;
  int out_features = 0;
  std::vector<int> out_start(static_cast<std::size_t>(nf), 0);
  for (int j = 0; j < nf; ++j) {
    out_start[static_cast<std::size_t>(j)] = out_features;
    out_features += params.categorical_columns.count(j)
                        ? static_cast<int>(params.vocab[static_cast<std::size_t>(j)].size())
                        : 1;
  }

  Dataset out;
  out.labels = data.labels;
  out.schema.benign_class = data.schema.benign_class;
  out.schema.n_classes = data.schema.n_classes;
  out.schema.class_names = data.schema.class_names;
  out.schema.label_column = -1;
  out.schema.feature_names.reserve(static_cast<std::size_t>(out_features));
  for (int j = 0; j < nf; ++j) {
    const std::string base =
        j < static_cast<int>(data.schema.feature_names.size()) ? data.schema.feature_names[static_cast<std::size_t>(j)]
                                                               : "f" + std::to_string(j);
    if (params.categorical_columns.count(j)) {
      for (const auto& v : params.vocab[static_cast<std::size_t>(j)]) out.schema.feature_names.push_back(base + "=" + v);
    } else {
      out.schema.feature_names.push_back(base);
    }
  }
  out.category_values.assign(static_cast<std::size_t>(out_features), {});

  out.features = Eigen::MatrixXd::Zero(data.n_samples(), out_features);
  for (int j = 0; j < nf; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    if (!params.categorical_columns.count(j)) {
      out.features.col(out_start[jj]) = (data.features.col(j).array() - params.mean[jj]) / params.stddev[jj];
      continue;
    }
    const auto& vocab = params.vocab[jj];
    const auto& table = data.category_values[jj];
    // Map this dataset's category codes onto fitted vocab slots (-1 = unseen).
    std::vector<int> slot(table.size(), -1);
    for (std::size_t code = 0; code < table.size(); ++code) {
      const auto it = std::lower_bound(vocab.begin(), vocab.end(), table[code]);
      if (it != vocab.end() && *it == table[code]) slot[code] = static_cast<int>(it - vocab.begin());
    }
    for (Eigen::Index i = 0; i < data.n_samples(); ++i) {
      const auto code = static_cast<std::size_t>(data.features(i, j));
      if (code < slot.size() && slot[code] >= 0) out.features(i, out_start[jj] + slot[code]) = 1.0;
    }
  }
  return out;
}

/// Write a dataset in the same CSV form the loader accepts: a header of
/// feature names plus a final `label` column. Categorical codes are written
/// back as their string values.
inline void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (Eigen::Index j = 0; j < ds.n_features(); ++j) {
    const auto name = static_cast<std::size_t>(j) < ds.schema.feature_names.size()
                          ? ds.schema.feature_names[static_cast<std::size_t>(j)]
                          : "f" + std::to_string(j);
    out << name << ",";
  }
  out << "label\n";
  char buf[64];
  for (Eigen::Index i = 0; i < ds.n_samples(); ++i) {
    for (Eigen::Index j = 0; j < ds.n_features(); ++j) {
      const int jj = static_cast<int>(j);
      if (ds.schema.categorical_columns.count(jj)) {
        const auto& table = ds.category_values[static_cast<std::size_t>(j)];
        const auto code = static_cast<std::size_t>(ds.features(i, j));
        out << (code < table.size() ? table[code] : std::to_string(code));
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", ds.features(i, j));
        out << buf;
      }
      out << ",";
    }
    if (!ds.schema.class_names.empty()) {
      out << ds.schema.class_names[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
    } else {
      out << ds.labels[static_cast<std::size_t>(i)];
    }
    out << "\n";
  }
}

}  // namespace aoifl
