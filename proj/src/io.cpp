#include "gem/io.hpp"

#include "gem/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gem {

namespace {

Json to_array(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd from_array(const Json& a, const std::string& what) {
  if (!a.is_array()) throw DataError(what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw DataError(what + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("failed writing " + file.string());
}

std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json model_to_json(const GmmModeld& model, const FitConfig& cfg) {
  Json j;
  j["k"] = model.size();
  j["weights"] = to_array(model.weights);
  j["means"] = to_array(model.means);
  j["variances"] = to_array(model.variances);
  j["log_likelihood"] = model.log_likelihood;
  j["n_samples"] = model.n_samples;
  j["n_iterations"] = model.n_iterations;
  j["restart"] = model.restart;
  j["seed"] = model.seed;
  j["variance_floor"] = model.variance_floor;
  j["config"] = {{"n_components", cfg.n_components}, {"tol", cfg.tol},
                 {"max_iter", cfg.max_iter},         {"n_restarts", cfg.n_restarts},
                 {"seed", cfg.seed},                 {"variance_floor", cfg.variance_floor}};
  return j;
}

GmmModeld model_from_json(const Json& j) {
  try {
    GmmModeld m;
    m.weights = from_array(j.at("weights"), "weights");
    m.means = from_array(j.at("means"), "means");
    m.variances = from_array(j.at("variances"), "variances");
    m.log_likelihood = j.at("log_likelihood").get<double>();
    m.n_samples = j.value("n_samples", Eigen::Index{0});
    m.n_iterations = j.value("n_iterations", 0);
    m.restart = j.value("restart", 0);
    m.seed = j.value("seed", std::uint64_t{0});
    m.variance_floor = j.value("variance_floor", 0.0);
    if (j.contains("k") && j["k"].get<Eigen::Index>() != m.size())
      throw DataError("model k does not match its parameter arrays");
    m.validate();
    return m;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& file, const GmmModeld& model, const FitConfig& cfg,
                const Json& run_config) {
  Json j = model_to_json(model, cfg);
  j["run_config"] = run_config;
  write_text_file(file, j.dump(2) + "\n");
}

GmmModeld load_model(const std::filesystem::path& file) {
  Json j;
  try {
    j = Json::parse(read_text_file(file));
  } catch (const Json::exception& e) {
    throw DataError(file.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void write_embeddings(std::ostream& out, const EmbeddingSet& set, const Json& run_config) {
  Json meta = {{"mode", to_string(set.mode)},
               {"count", set.ids.size()},
               {"dim", set.vectors.cols()},
               {"responsibility_block", set.responsibility_block},
               {"run_config", run_config}};
  out << Json{{"meta", meta}}.dump() << '\n';
  for (std::size_t i = 0; i < set.ids.size(); ++i) {
    const auto& id = set.ids[i];
    Json rec = {{"table", id.table},
                {"column", id.column},
                {"index", id.index},
                {"mode", to_string(set.mode)},
                {"vector", to_array(set.vectors.row(static_cast<Eigen::Index>(i)).transpose())}};
    out << rec.dump() << '\n';
  }
}

LoadedEmbeddings read_embeddings(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open embeddings " + file.string());
  LoadedEmbeddings loaded;
  std::optional<EmbeddingMode> mode;
  std::vector<Eigen::VectorXd> rows;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = file.string() + ":" + std::to_string(lineno);
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    if (rec.contains("meta")) {
      loaded.meta = rec["meta"];
      continue;
    }
    if (!rec.contains("table") || !rec.contains("column") || !rec.contains("vector"))
      throw DataError(where + ": expected {\"table\",\"column\",\"vector\"}");
    if (rec.contains("mode")) {
      const auto m = parse_embedding_mode(rec["mode"].get<std::string>());
      if (!m) throw DataError(where + ": unknown mode");
      if (mode && *mode != *m) throw DataError(where + ": mixed embedding modes");
      mode = m;
    }
    ColumnId id{rec["table"].get<std::string>(), rec["column"].get<std::string>(),
                rec.value("index", std::size_t{0})};
    rows.push_back(from_array(rec["vector"], where + " vector"));
    if (rows.back().size() != rows.front().size())
      throw DataError(where + ": vector length differs from the first record");
    loaded.set.ids.push_back(std::move(id));
  }
  if (rows.empty()) throw DataError(file.string() + ": no embedding records");
  if (!mode && loaded.meta.contains("mode"))
    mode = parse_embedding_mode(loaded.meta["mode"].get<std::string>());
  loaded.set.mode = mode.value_or(EmbeddingMode::DistStat);
  loaded.set.responsibility_block =
      loaded.meta.is_object() ? loaded.meta.value("responsibility_block", Eigen::Index{0}) : 0;
  loaded.set.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    loaded.set.vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return loaded;
}

}  // namespace gem
