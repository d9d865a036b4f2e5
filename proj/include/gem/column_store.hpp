#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gem {

struct ColumnId {
  std::string table;   // file stem
  std::string column;  // header text, or "col_<index>" when blank
  std::size_t index = 0;

  friend bool operator==(const ColumnId&, const ColumnId&) = default;
};

/// Lookup key used by ground truth and header-embedding files.
struct ColumnKey {
  std::string table;
  std::string column;

  auto operator<=>(const ColumnKey&) const = default;
};

inline ColumnKey key_of(const ColumnId& id) { return {id.table, id.column}; }

struct NumericColumn {
  ColumnId id;
  std::string header;
  Eigen::VectorXd values;  // finite, file order, missing cells dropped
  std::size_t row_count = 0;
};

struct Corpus {
  std::vector<NumericColumn> columns;
  std::string source;

  std::size_t size() const { return columns.size(); }
  std::optional<std::size_t> find(const ColumnKey& key) const;
  std::vector<ColumnId> ids() const;
};

struct GroundTruth {
  std::map<ColumnKey, std::string> labels;

  std::optional<std::string> label_of(const ColumnId& id) const;
};

inline constexpr double kDefaultNumericThreshold = 0.95;

/// Parses a cell as a finite decimal number. Surrounding whitespace is
/// ignored; thousands separators, "inf" and "nan" are rejected.
std::optional<double> parse_number(std::string_view cell);

/// Column names for a header row: blank headers become "col_<index>" and
/// repeats get a ".1", ".2", ... suffix.
std::vector<std::string> unique_column_names(const std::vector<std::string>& headers);

/// Loads every *.csv file in `dir` (sorted by name). A column is kept when at
/// least `numeric_threshold` of its non-empty cells parse as numbers.
Corpus load_corpus(const std::filesystem::path& dir,
                   double numeric_threshold = kDefaultNumericThreshold);

/// Reads a `table,column,label` CSV.
GroundTruth load_ground_truth(const std::filesystem::path& file);

/// All column values concatenated in corpus order.
Eigen::VectorXd pooled_stack(const Corpus& corpus);

}  // namespace gem
