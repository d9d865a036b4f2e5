#include "gem/commands.hpp"

#include "gem/column_store.hpp"
#include "gem/csv.hpp"
#include "gem/error.hpp"
#include "gem/eval.hpp"
#include "gem/gmm.hpp"
#include "gem/io.hpp"
#include "gem/pipeline.hpp"
#include "gem/signature.hpp"
#include "gem/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace gem::cmd {

std::uint64_t default_seed() {
  const char* env = std::getenv("GEM_SEED");
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const auto v = std::strtoull(env, &end, 10);
  return (end != nullptr && *end == '\0') ? v : 0;
}

// ---- option (de)serialization -------------------------------------------------

void to_json(Json& j, const FitParams& o) {
  j = {{"components", o.components}, {"tol", o.tol},   {"max_iter", o.max_iter},
       {"restarts", o.restarts},     {"seed", o.seed}, {"variance_floor", o.variance_floor}};
}

void from_json(const Json& j, FitParams& o) {
  const FitParams d;
  o.components = j.value("components", d.components);
  o.tol = j.value("tol", d.tol);
  o.max_iter = j.value("max_iter", d.max_iter);
  o.restarts = j.value("restarts", d.restarts);
  o.seed = j.value("seed", d.seed);
  o.variance_floor = j.value("variance_floor", d.variance_floor);
}

void to_json(Json& j, const FitOptions& o) {
  j = {{"input", o.input},   {"out", o.out},
       {"threshold", o.threshold}, {"fit", o.fit},
       {"bic_candidates", o.bic_candidates}, {"threads", o.threads}};
}

void from_json(const Json& j, FitOptions& o) {
  const FitOptions d;
  o.input = j.value("input", d.input);
  o.out = j.value("out", d.out);
  o.threshold = j.value("threshold", d.threshold);
  o.fit = j.value("fit", d.fit);
  o.bic_candidates = j.value("bic_candidates", d.bic_candidates);
  o.threads = j.value("threads", d.threads);
}

void to_json(Json& j, const EmbedOptions& o) {
  j = {{"input", o.input},
       {"model", o.model},
       {"out", o.out},
       {"mode", o.mode},
       {"concat_layout", o.concat_layout},
       {"headers", o.headers},
       {"fallback_headers", o.fallback_headers},
       {"header_dim", o.header_dim},
       {"header_seed", o.header_seed},
       {"threshold", o.threshold},
       {"fit", o.fit},
       {"bins", o.bins},
       {"frequencies", o.frequencies},
       {"prototypes", o.prototypes},
       {"threads", o.threads}};
}

void from_json(const Json& j, EmbedOptions& o) {
  const EmbedOptions d;
  o.input = j.value("input", d.input);
  o.model = j.value("model", d.model);
  o.out = j.value("out", d.out);
  o.mode = j.value("mode", d.mode);
  o.concat_layout = j.value("concat_layout", d.concat_layout);
  o.headers = j.value("headers", d.headers);
  o.fallback_headers = j.value("fallback_headers", d.fallback_headers);
  o.header_dim = j.value("header_dim", d.header_dim);
  o.header_seed = j.value("header_seed", d.header_seed);
  o.threshold = j.value("threshold", d.threshold);
  o.fit = j.value("fit", d.fit);
  o.bins = j.value("bins", d.bins);
  o.frequencies = j.value("frequencies", d.frequencies);
  o.prototypes = j.value("prototypes", d.prototypes);
  o.threads = j.value("threads", d.threads);
}

void to_json(Json& j, const EvalOptions& o) {
  j = {{"embeddings", o.embeddings}, {"ground_truth", o.ground_truth}, {"out", o.out},
       {"neighbors", o.neighbors},   {"clusters", o.clusters},         {"k_rule", o.k_rule},
       {"seed", o.seed},             {"timestamp", o.timestamp}};
}

void from_json(const Json& j, EvalOptions& o) {
  const EvalOptions d;
  o.embeddings = j.value("embeddings", d.embeddings);
  o.ground_truth = j.value("ground_truth", d.ground_truth);
  o.out = j.value("out", d.out);
  o.neighbors = j.value("neighbors", d.neighbors);
  o.clusters = j.value("clusters", d.clusters);
  o.k_rule = j.value("k_rule", d.k_rule);
  o.seed = j.value("seed", d.seed);
  o.timestamp = j.value("timestamp", d.timestamp);
}

void to_json(Json& j, const BenchOptions& o) {
  j = {{"input", o.input},         {"ground_truth", o.ground_truth}, {"out", o.out},
       {"candidates", o.candidates}, {"threshold", o.threshold},     {"fit", o.fit},
       {"threads", o.threads}};
}

void from_json(const Json& j, BenchOptions& o) {
  const BenchOptions d;
  o.input = j.value("input", d.input);
  o.ground_truth = j.value("ground_truth", d.ground_truth);
  o.out = j.value("out", d.out);
  o.candidates = j.value("candidates", d.candidates);
  o.threshold = j.value("threshold", d.threshold);
  o.fit = j.value("fit", d.fit);
  o.threads = j.value("threads", d.threads);
}

void to_json(Json& j, const SynthOptions& o) {
  j = {{"spec", o.spec}, {"out", o.out}, {"seed", o.seed}};
}

void from_json(const Json& j, SynthOptions& o) {
  const SynthOptions d;
  o.spec = j.value("spec", d.spec);
  o.out = j.value("out", d.out);
  o.seed = j.value("seed", d.seed);
}

Json run_config(const std::string& command, const Json& options) {
  return {{"command", command}, {"options", options}};
}

// ---- helpers --------------------------------------------------------------------

namespace {

FitConfig make_fit_config(const FitParams& p, int threads) {
  FitConfig cfg;
  cfg.n_components = p.components;
  cfg.tol = p.tol;
  cfg.max_iter = p.max_iter;
  cfg.n_restarts = p.restarts;
  cfg.seed = p.seed;
  cfg.variance_floor = p.variance_floor;
  cfg.n_threads = threads;
  cfg.validate();
  return cfg;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void log_restarts(const FitReport<double>& report, std::ostream& log) {
  for (const auto& r : report.restarts)
    log << "  restart " << r.restart << " (seed " << r.seed << "): mean log-likelihood "
        << std::setprecision(10) << r.mean_log_likelihood.back() << " after "
        << r.model.n_iterations << " iterations\n";
  log << "  best: restart " << report.model.restart << ", total log-likelihood "
      << std::setprecision(12) << report.model.log_likelihood << '\n';
}

std::string id_label(const ColumnId& id) { return id.table + "/" + id.column; }

Json report_to_json(const EvalReport& r) {
  Json per_type = Json::object();
  for (const auto& [label, m] : r.per_type)
    per_type[label] = {{"precision", m.precision}, {"recall", m.recall}, {"support", m.support}};
  Json j = {{"mode", r.mode},
            {"k_rule", r.neighbor_count == NeighborCount::SupportMinusOne ? "support-1" : "support"},
            {"macro_precision", r.macro_precision},
            {"macro_recall", r.macro_recall},
            {"per_type", per_type},
            {"skipped", r.skipped},
            {"evaluated_columns", r.evaluated_columns},
            {"unlabeled_columns", r.unlabeled_columns}};
  j["acc"] = r.acc ? Json(*r.acc) : Json(nullptr);
  j["ari"] = r.ari ? Json(*r.ari) : Json(nullptr);
  return j;
}

std::string report_table(const EvalReport& r) {
  std::ostringstream os;
  std::size_t width = 10;
  for (const auto& [label, m] : r.per_type) width = std::max(width, label.size());
  os << std::left << std::setw(static_cast<int>(width)) << "type" << "  support  precision  recall\n";
  os << std::fixed << std::setprecision(4);
  for (const auto& [label, m] : r.per_type)
    os << std::left << std::setw(static_cast<int>(width)) << label << "  " << std::right
       << std::setw(7) << m.support << "  " << std::setw(9) << m.precision << "  " << std::setw(6)
       << m.recall << '\n';
  os << std::left << std::setw(static_cast<int>(width)) << "macro" << "  " << std::right
     << std::setw(7) << r.evaluated_columns << "  " << std::setw(9) << r.macro_precision << "  "
     << std::setw(6) << r.macro_recall << '\n';
  if (!r.skipped.empty()) {
    os << "skipped (support 1):";
    for (const auto& s : r.skipped) os << ' ' << s;
    os << '\n';
  }
  if (r.acc) os << "ACC " << *r.acc << "  ARI " << *r.ari << '\n';
  return os.str();
}

double macro_precision_for(const Corpus& corpus, const GroundTruth& gt, const GmmModeld& model) {
  gem::EmbedOptions opts;
  opts.mode = EmbeddingMode::DistStat;
  const auto set = embed_corpus(corpus, &model, opts);
  return precision_recall_at_k(cosine_matrix(set.ids, set.vectors), gt).macro_precision;
}

}  // namespace

// ---- commands -------------------------------------------------------------------

void run_fit(const FitOptions& o, std::ostream& log) {
  require(!o.input.empty(), "--input is required");
  for (int k : o.bic_candidates) require(k >= 1, "BIC candidates must be >= 1");
  FitConfig cfg = make_fit_config(o.fit, o.threads);

  const Corpus corpus = load_corpus(o.input, o.threshold);
  const Eigen::VectorXd stack = pooled_stack(corpus);
  log << "fit: " << corpus.size() << " numeric columns, " << stack.size() << " values\n";

  GmmModeld model;
  if (o.bic_candidates.empty()) {
    const auto report = fit_traced(stack, cfg);
    log_restarts(report, log);
    model = report.model;
  } else {
    const auto sel = select_components_bic(stack, o.bic_candidates, cfg);
    for (const auto& [k, score] : sel.scores) {
      log << "K=" << k << " BIC " << std::setprecision(12) << score << '\n';
      log_restarts(sel.reports.at(k), log);
    }
    log << "selected K=" << sel.best_k << '\n';
    model = sel.best_model();
    cfg.n_components = sel.best_k;
  }
  save_model(o.out, model, cfg, run_config("fit", o));
  log << "wrote " << o.out << '\n';
}

void run_embed(const EmbedOptions& o, std::ostream& log) {
  require(!o.input.empty(), "--input is required");
  const auto mode = parse_embedding_mode(o.mode);
  require(mode.has_value(), "unknown mode '" + o.mode + "'");
  const auto layout = parse_concat_layout(o.concat_layout);
  require(layout.has_value(), "unknown concat layout '" + o.concat_layout + "'");
  require(o.header_dim >= 8, "--header-dim must be >= 8");
  if (uses_header_context(*mode))
    require(!o.headers.empty() || o.fallback_headers,
            "mode " + o.mode + " needs --headers FILE or --fallback-headers");

  gem::EmbedOptions opts;
  opts.mode = *mode;
  opts.layout = *layout;
  if (!o.headers.empty()) opts.headers_file = o.headers;
  opts.fallback_headers = o.fallback_headers;
  opts.header_dim = o.header_dim;
  opts.header_seed = o.header_seed;
  opts.baselines = {o.bins, o.frequencies, o.prototypes};
  opts.baselines.validate();
  opts.fit = make_fit_config(o.fit, o.threads);

  const Corpus corpus = load_corpus(o.input, o.threshold);
  std::optional<GmmModeld> model;
  const bool signature_mode = !(*mode == EmbeddingMode::Ple || *mode == EmbeddingMode::Paf ||
                                *mode == EmbeddingMode::Ks || *mode == EmbeddingMode::SquashingGmm);
  if (signature_mode) {
    if (!o.model.empty()) {
      model = load_model(o.model);
    } else {
      const auto report = fit_traced(pooled_stack(corpus), opts.fit);
      log_restarts(report, log);
      model = report.model;
    }
  }
  const auto set = embed_corpus(corpus, model ? &*model : nullptr, opts);

  std::ostringstream text;
  write_embeddings(text, set, run_config("embed", o));
  write_text_file(o.out, text.str());
  log << "embed: " << set.ids.size() << " columns, mode " << o.mode << ", dimension "
      << set.vectors.cols() << " -> " << o.out << '\n';
}

void run_eval(const EvalOptions& o, std::ostream& log) {
  require(!o.embeddings.empty(), "--embeddings is required");
  require(!o.ground_truth.empty(), "--ground-truth is required");
  require(o.clusters == "none" || o.clusters == "argmax" || o.clusters == "kmeans",
          "--clusters must be none, argmax or kmeans");
  require(o.k_rule == "support-1" || o.k_rule == "support", "--k-rule must be support-1 or support");

  const auto gt = load_ground_truth(o.ground_truth);
  const auto loaded = read_embeddings(o.embeddings);
  const auto& set = loaded.set;
  const auto sim = cosine_matrix(set.ids, set.vectors);
  auto report = precision_recall_at_k(
      sim, gt, o.k_rule == "support" ? NeighborCount::Support : NeighborCount::SupportMinusOne);
  report.mode = std::string(to_string(set.mode));

  if (o.clusters != "none") {
    std::vector<Eigen::Index> rows;
    std::vector<int> truth;
    std::map<std::string, int> label_ids;
    for (std::size_t i = 0; i < set.ids.size(); ++i) {
      if (auto l = gt.label_of(set.ids[i])) {
        rows.push_back(static_cast<Eigen::Index>(i));
        truth.push_back(label_ids.emplace(*l, static_cast<int>(label_ids.size())).first->second);
      }
    }
    Eigen::MatrixXd labeled(static_cast<Eigen::Index>(rows.size()), set.vectors.cols());
    for (std::size_t r = 0; r < rows.size(); ++r)
      labeled.row(static_cast<Eigen::Index>(r)) = set.vectors.row(rows[r]);
    std::vector<int> pred;
    if (o.clusters == "argmax") {
      require(has_responsibility_block(set.mode) && set.responsibility_block > 0,
              "argmax clustering needs D or D+S embeddings");
      pred = assign_clusters_argmax(labeled, set.responsibility_block);
    } else {
      pred = kmeans_clusters(labeled, static_cast<int>(label_ids.size()), o.seed);
    }
    if (truth.size() >= 2) {
      report.acc = clustering_acc(pred, truth);
      report.ari = adjusted_rand_index(pred, truth);
    }
  }

  Json j = report_to_json(report);
  j["clusters"] = o.clusters;
  j["embeddings_meta"] = loaded.meta.is_null() ? Json(nullptr) : loaded.meta.value("run_config", Json());
  j["run_config"] = run_config("eval", o);
  if (o.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::ostringstream ts;
    ts << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ");
    j["timestamp"] = ts.str();
  } else {
    j["timestamp"] = nullptr;
  }
  write_text_file(o.out, j.dump(2) + "\n");

  if (!o.neighbors.empty()) {
    std::ostringstream csv;
    csv << "table,column,label,k,true_positives,precision,neighbors\n";
    for (const auto& c : report.columns) {
      const auto& id = set.ids[static_cast<std::size_t>(c.index)];
      std::string nb;
      for (auto j2 : c.neighbors) nb += (nb.empty() ? "" : ";") + id_label(set.ids[static_cast<std::size_t>(j2)]);
      csv << csv::escape(id.table) << ',' << csv::escape(id.column) << ',' << csv::escape(c.label) << ','
          << c.k << ',' << c.true_positives << ',' << format_double(c.precision) << ','
          << csv::escape(nb) << '\n';
    }
    write_text_file(o.neighbors, csv.str());
  }
  log << report_table(report);
  log << "wrote " << o.out << '\n';
}

void run_bench(const BenchOptions& o, std::ostream& log) {
  require(!o.input.empty(), "--input is required");
  require(!o.ground_truth.empty(), "--ground-truth is required");
  require(!o.candidates.empty(), "--candidates must list at least one component count");
  for (int k : o.candidates) require(k >= 1, "component counts must be >= 1");
  FitConfig cfg = make_fit_config(o.fit, o.threads);

  std::vector<int> ks = o.candidates;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const Corpus corpus = load_corpus(o.input, o.threshold);
  const auto gt = load_ground_truth(o.ground_truth);
  const Eigen::VectorXd stack = pooled_stack(corpus);

  std::ostringstream out;
  out << "# run_config: " << Json(run_config("bench", o)).dump() << '\n';
  out << "components,macro_precision\n";
  double lo = 1.0, hi = 0.0;
  for (int k : ks) {
    cfg.n_components = k;
    const auto start = std::chrono::steady_clock::now();
    const auto model = fit(stack, cfg);
    const double p = macro_precision_for(corpus, gt, model);
    const std::chrono::duration<double> took = std::chrono::steady_clock::now() - start;
    lo = std::min(lo, p);
    hi = std::max(hi, p);
    out << k << ',' << format_double(p) << '\n';
    log << "K=" << k << " macro precision " << std::fixed << std::setprecision(4) << p << " ("
        << std::setprecision(2) << took.count() << " s)\n"
        << std::defaultfloat;
  }
  write_text_file(o.out, out.str());
  log << "spread (max - min) " << std::fixed << std::setprecision(4) << hi - lo << '\n'
      << std::defaultfloat << "wrote " << o.out << '\n';
}

void run_synth(const SynthOptions& o, std::ostream& log) {
  require(!o.out.empty(), "--out is required");
  SynthSpec spec = default_synth_spec();
  if (!o.spec.empty()) {
    Json j;
    try {
      j = Json::parse(read_text_file(o.spec));
    } catch (const Json::exception& e) {
      throw DataError(o.spec + ": " + e.what());
    }
    spec = synth_spec_from_json(j);
  }
  const auto written = write_synth_corpus(spec, o.seed, o.out, run_config("synth", o));
  log << "synth: " << written.tables.size() << " tables, " << spec.types.size()
      << " types -> " << o.out << '\n';
}

// ---- provenance -------------------------------------------------------------------

Json read_run_config(const std::filesystem::path& artifact) {
  std::filesystem::path file = artifact;
  if (std::filesystem::is_directory(file)) file /= "synth_config.json";
  const std::string text = read_text_file(file);
  const std::string first = text.substr(0, text.find('\n'));

  Json cfg;
  constexpr std::string_view csv_prefix = "# run_config: ";
  try {
    if (first.starts_with(csv_prefix)) {
      cfg = Json::parse(first.substr(csv_prefix.size()));
    } else if (Json head = Json::parse(first, nullptr, false); !head.is_discarded() && head.contains("meta")) {
      cfg = head["meta"].value("run_config", Json());
    } else {
      cfg = Json::parse(text).value("run_config", Json());
    }
  } catch (const Json::exception& e) {
    throw DataError(file.string() + ": cannot read run configuration: " + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("command") || !cfg.contains("options"))
    throw DataError(file.string() + " carries no run configuration");
  return cfg;
}

void rerun(const std::filesystem::path& artifact, const std::optional<std::string>& out,
           std::ostream& log) {
  const Json cfg = read_run_config(artifact);
  Json options = cfg["options"];
  if (out) options["out"] = *out;
  const auto command = cfg["command"].get<std::string>();
  log << "rerun: " << command << '\n';
  if (command == "fit") return run_fit(options.get<FitOptions>(), log);
  if (command == "embed") return run_embed(options.get<EmbedOptions>(), log);
  if (command == "eval") return run_eval(options.get<EvalOptions>(), log);
  if (command == "bench") return run_bench(options.get<BenchOptions>(), log);
  if (command == "synth") return run_synth(options.get<SynthOptions>(), log);
  throw DataError("unknown command '" + command + "' in " + artifact.string());
}

}  // namespace gem::cmd
