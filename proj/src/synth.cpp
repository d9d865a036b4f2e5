#include "gem/synth.hpp"

#include "gem/column_store.hpp"
#include "gem/csv.hpp"
#include "gem/error.hpp"
#include "gem/io.hpp"
#include "gem/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace gem {

namespace {

const std::map<std::string, std::size_t>& family_arity() {
  static const std::map<std::string, std::size_t> arity = {
      {"normal", 2}, {"uniform", 2}, {"exponential", 1}, {"lognormal", 2},
      {"gamma", 2},  {"beta", 2},    {"logistic", 2},
  };
  return arity;
}

}  // namespace

SynthSpec default_synth_spec() {
  SynthSpec s;
  s.types = {
      {"score", "score", "normal", {0.0, 1.0}, 20, 500},
      {"weight", "weight", "normal", {100.0, 5.0}, 20, 500},
      {"ratio", "ratio", "uniform", {0.0, 1.0}, 20, 500},
      {"wait_time", "wait_time", "exponential", {1.0}, 20, 500},
      {"income", "income", "lognormal", {0.0, 0.5}, 20, 500},
  };
  return s;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
  SynthSpec s;
  try {
    for (const auto& t : j.at("types")) {
      SynthType type;
      type.label = t.at("label").get<std::string>();
      type.header = t.value("header", type.label);
      type.family = t.at("family").get<std::string>();
      type.params = t.at("params").get<std::vector<double>>();
      type.columns = t.value("columns", 20);
      type.rows = t.value("rows", 500);
      s.types.push_back(std::move(type));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed synth spec: ") + e.what());
  }
  if (s.types.empty()) throw DataError("synth spec lists no types");
  for (const auto& t : s.types) {
    const auto it = family_arity().find(t.family);
    if (it == family_arity().end()) throw DataError("unknown distribution family '" + t.family + "'");
    if (t.params.size() != it->second)
      throw DataError("family '" + t.family + "' takes " + std::to_string(it->second) + " parameters");
    if (t.columns < 1 || t.rows < 1) throw DataError("type '" + t.label + "' needs columns, rows >= 1");
  }
  return s;
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : spec.types)
    types.push_back({{"label", t.label},
                     {"header", t.header},
                     {"family", t.family},
                     {"params", t.params},
                     {"columns", t.columns},
                     {"rows", t.rows}});
  return {{"types", types}};
}

Eigen::VectorXd draw_samples(const std::string& family, const std::vector<double>& p, int n,
                             std::mt19937_64& rng) {
  const auto it = family_arity().find(family);
  if (it == family_arity().end()) throw DataError("unknown distribution family '" + family + "'");
  if (p.size() != it->second)
    throw DataError("family '" + family + "' takes " + std::to_string(it->second) + " parameters");
  Eigen::VectorXd out(n);
  auto fill = [&](auto dist) {
    for (int i = 0; i < n; ++i) out[i] = dist(rng);
  };
  if (family == "normal") {
    fill(std::normal_distribution<double>(p[0], p[1]));
  } else if (family == "uniform") {
    fill(std::uniform_real_distribution<double>(p[0], p[1]));
  } else if (family == "exponential") {
    fill(std::exponential_distribution<double>(p[0]));
  } else if (family == "lognormal") {
    fill(std::lognormal_distribution<double>(p[0], p[1]));
  } else if (family == "gamma") {
    fill(std::gamma_distribution<double>(p[0], p[1]));
  } else if (family == "beta") {
    std::gamma_distribution<double> ga(p[0], 1.0), gb(p[1], 1.0);
    for (int i = 0; i < n; ++i) {
      const double a = ga(rng);
      out[i] = a / (a + gb(rng));
    }
  } else {  // logistic
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      double q = u(rng);
      while (q <= 0.0) q = u(rng);
      out[i] = p[0] + p[1] * std::log(q / (1.0 - q));
    }
  }
  return out;
}

SynthOutput write_synth_corpus(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir,
                               const nlohmann::json& run_config) {
  // Validates families and arities.
  synth_spec_from_json(to_json(spec));

  int tables = 0;
  for (const auto& t : spec.types) tables = std::max(tables, t.columns);

  SynthOutput out;
  std::ostringstream gt;
  gt << "table,column,label\n";
  for (int ti = 0; ti < tables; ++ti) {
    char name[32];
    std::snprintf(name, sizeof name, "t%03d", ti);
    std::vector<std::size_t> members;
    std::vector<std::string> headers;
    std::vector<Eigen::VectorXd> cols;
    int rows = 0;
    for (std::size_t k = 0; k < spec.types.size(); ++k) {
      const auto& type = spec.types[k];
      if (type.columns <= ti) continue;
      std::mt19937_64 rng(derive_seed(seed, k, static_cast<std::uint64_t>(ti)));
      members.push_back(k);
      headers.push_back(type.header);
      cols.push_back(draw_samples(type.family, type.params, type.rows, rng));
      rows = std::max(rows, type.rows);
    }
    const auto names = unique_column_names(headers);

    std::ostringstream table;
    for (std::size_t c = 0; c < headers.size(); ++c)
      table << (c ? "," : "") << csv::escape(headers[c]);
    table << '\n';
    for (int r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (c) table << ',';
        if (r < cols[c].size()) table << format_double(cols[c][r]);
      }
      table << '\n';
    }
    const auto path = out_dir / "tables" / (std::string(name) + ".csv");
    write_text_file(path, table.str());
    out.tables.push_back(path);
    for (std::size_t c = 0; c < members.size(); ++c)
      gt << name << ',' << csv::escape(names[c]) << ',' << csv::escape(spec.types[members[c]].label)
         << '\n';
  }
  out.ground_truth = out_dir / "ground_truth.csv";
  write_text_file(out.ground_truth, gt.str());
  const nlohmann::json config = {{"spec", to_json(spec)}, {"seed", seed}, {"run_config", run_config}};
  write_text_file(out_dir / "synth_config.json", config.dump(2) + "\n");
  return out;
}

}  // namespace gem
