#include "gem/column_store.hpp"

#include "gem/csv.hpp"
#include "gem/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace gem {

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::vector<std::string> unique_column_names(const std::vector<std::string>& header) {
  std::vector<std::string> names;
  std::set<std::string> used;
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string base(trim(header[i]));
    if (base.empty()) base = "col_" + std::to_string(i);
    std::string name = base;
    for (int n = 1; used.contains(name); ++n) name = base + "." + std::to_string(n);
    used.insert(name);
    names.push_back(std::move(name));
  }
  return names;
}

std::optional<std::size_t> Corpus::find(const ColumnKey& key) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].id.table == key.table && columns[i].id.column == key.column) return i;
  return std::nullopt;
}

std::vector<ColumnId> Corpus::ids() const {
  std::vector<ColumnId> out;
  out.reserve(columns.size());
  for (const auto& c : columns) out.push_back(c.id);
  return out;
}

std::optional<std::string> GroundTruth::label_of(const ColumnId& id) const {
  const auto it = labels.find(key_of(id));
  if (it == labels.end()) return std::nullopt;
  return it->second;
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (cell.starts_with('+')) cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
    return std::nullopt;
  return v;
}

Corpus load_corpus(const std::filesystem::path& dir, double numeric_threshold) {
  if (!(numeric_threshold > 0.0 && numeric_threshold <= 1.0))
    throw std::invalid_argument("numeric threshold must lie in (0, 1]");
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw DataError("cannot read directory " + dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && lower(entry.path().extension().string()) == ".csv")
      files.push_back(entry.path());
  }
  if (ec) throw DataError("cannot read directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  Corpus corpus;
  corpus.source = dir.string();
  for (const auto& file : files) {
    const auto rows = csv::read(file);
    if (rows.empty()) continue;
    const auto names = unique_column_names(rows.front());
    const std::string table = file.stem().string();
    const std::size_t data_rows = rows.size() - 1;

    for (std::size_t c = 0; c < names.size(); ++c) {
      std::vector<double> parsed;
      std::size_t non_empty = 0;
      for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto cell = trim(rows[r][c]);
        if (cell.empty()) continue;
        ++non_empty;
        if (auto v = parse_number(cell)) parsed.push_back(*v);
      }
      if (parsed.empty()) continue;
      if (static_cast<double>(parsed.size()) < numeric_threshold * static_cast<double>(non_empty))
        continue;

      NumericColumn col;
      col.id = ColumnId{table, names[c], c};
      col.header = std::string(trim(rows.front()[c]));
      col.values = Eigen::Map<const Eigen::VectorXd>(parsed.data(),
                                                     static_cast<Eigen::Index>(parsed.size()));
      col.row_count = data_rows;
      corpus.columns.push_back(std::move(col));
    }
  }
  if (corpus.columns.empty())
    throw DataError("no numeric columns found in " + dir.string());
  return corpus;
}

GroundTruth load_ground_truth(const std::filesystem::path& file) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(file, ec))
    throw DataError("ground-truth file not found: " + file.string());
  const auto rows = csv::read(file);
  if (rows.empty() || rows.front().size() != 3 || lower(trim(rows.front()[0])) != "table" ||
      lower(trim(rows.front()[1])) != "column" || lower(trim(rows.front()[2])) != "label")
    throw DataError(file.string() + ": expected header table,column,label");

  GroundTruth gt;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    ColumnKey key{std::string(trim(rows[r][0])), std::string(trim(rows[r][1]))};
    const auto [it, inserted] = gt.labels.emplace(key, std::string(trim(rows[r][2])));
    if (!inserted)
      throw DataError(file.string() + ": duplicate entry for (" + key.table + ", " + key.column +
                      ") at row " + std::to_string(r + 1));
  }
  return gt;
}

Eigen::VectorXd pooled_stack(const Corpus& corpus) {
  if (corpus.columns.empty()) throw std::invalid_argument("pooled stack of an empty corpus");
  Eigen::Index total = 0;
  for (const auto& c : corpus.columns) total += c.values.size();
  Eigen::VectorXd stack(total);
  Eigen::Index at = 0;
  for (const auto& c : corpus.columns) {
    stack.segment(at, c.values.size()) = c.values;
    at += c.values.size();
  }
  return stack;
}

}  // namespace gem
