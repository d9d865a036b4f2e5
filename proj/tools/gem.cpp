// gem: column embeddings from pooled Gaussian mixtures.
//
//   gem synth  --out DIR [--spec FILE] [--seed N]
//   gem fit    --input DIR --out model.json [--components 50 --tol 1e-3 --restarts 10 ...]
//   gem embed  --input DIR [--model model.json] --mode D+S --out emb.jsonl
//   gem eval   --embeddings emb.jsonl --ground-truth gt.csv --out report.json
//   gem bench  --input DIR --ground-truth gt.csv --candidates 5,10,25,50,100
//   gem rerun  ARTIFACT [--out PATH]
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include "gem/commands.hpp"
#include "gem/error.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

using namespace gem::cmd;

void add_fit_params(CLI::App* app, FitParams& p) {
  app->add_option("--components", p.components, "Mixture components K")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--tol", p.tol, "Convergence threshold on mean log-likelihood")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--max-iter", p.max_iter, "EM iteration cap per restart")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--restarts", p.restarts, "Independent EM initializations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app->add_option("--seed", p.seed, "Base RNG seed (default: GEM_SEED or 0)")->capture_default_str();
  app->add_option("--variance-floor", p.variance_floor,
                  "Minimum component variance (0: 1e-6 x pooled variance)")
      ->check(CLI::NonNegativeNumber);
}

void add_threshold(CLI::App* app, double& t) {
  app->add_option("--threshold", t, "Fraction of non-empty cells that must be numeric")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
}

void add_threads(CLI::App* app, int& threads) {
  app->add_option("--threads", threads, "Worker threads for EM restarts")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-mixture column embeddings for numeric table columns"};
  app.require_subcommand(1);

  const std::uint64_t seed = default_seed();

  FitOptions fit_o;
  fit_o.fit.seed = seed;
  auto* fit = app.add_subcommand("fit", "Fit the pooled mixture to a CSV corpus");
  fit->add_option("--input", fit_o.input, "Directory of CSV tables")->required();
  fit->add_option("--out", fit_o.out, "Model JSON")->capture_default_str();
  add_fit_params(fit, fit_o.fit);
  fit->add_option("--bic-candidates", fit_o.bic_candidates,
                  "Pick K among these by BIC (comma separated)")
      ->delimiter(',');
  add_threshold(fit, fit_o.threshold);
  add_threads(fit, fit_o.threads);

  EmbedOptions emb_o;
  emb_o.fit.seed = seed;
  auto* embed = app.add_subcommand("embed", "Write one embedding per numeric column");
  embed->add_option("--input", emb_o.input, "Directory of CSV tables")->required();
  embed->add_option("--model", emb_o.model, "Model JSON (fitted inline when omitted)");
  embed->add_option("--out", emb_o.out, "Embeddings JSONL")->capture_default_str();
  embed->add_option("--mode", emb_o.mode)
      ->check(CLI::IsMember({"D", "D+S", "D+S+C-concat", "D+S+C-agg", "ple", "paf", "ks", "sqgmm"}))
      ->capture_default_str();
  embed->add_option("--concat-layout", emb_o.concat_layout, "D+S+C-concat layout")
      ->check(CLI::IsMember({"P|S|F", "P|S"}))
      ->capture_default_str();
  embed->add_option("--headers", emb_o.headers, "Header-embedding JSONL");
  embed->add_flag("--fallback-headers", emb_o.fallback_headers,
                  "Hash header tokens instead of reading a header-embedding file");
  embed->add_option("--header-dim", emb_o.header_dim, "Fallback header dimension")
      ->check(CLI::Range(8, 1 << 16))
      ->capture_default_str();
  embed->add_option("--header-seed", emb_o.header_seed, "Fallback header seed")->capture_default_str();
  embed->add_option("--bins", emb_o.bins, "PLE bins")->check(CLI::PositiveNumber)->capture_default_str();
  embed->add_option("--frequencies", emb_o.frequencies, "PAF frequencies")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  embed->add_option("--prototypes", emb_o.prototypes, "Squashing-GMM prototypes")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_fit_params(embed, emb_o.fit);
  add_threshold(embed, emb_o.threshold);
  add_threads(embed, emb_o.threads);

  EvalOptions eval_o;
  eval_o.seed = seed;
  auto* eval = app.add_subcommand("eval", "Precision/recall@k and clustering metrics");
  eval->add_option("--embeddings", eval_o.embeddings, "Embeddings JSONL")->required();
  eval->add_option("--ground-truth", eval_o.ground_truth, "table,column,label CSV")->required();
  eval->add_option("--out", eval_o.out, "Report JSON")->capture_default_str();
  eval->add_option("--neighbors", eval_o.neighbors, "Optional per-column neighbour CSV");
  eval->add_option("--clusters", eval_o.clusters)
      ->check(CLI::IsMember({"none", "argmax", "kmeans"}))
      ->capture_default_str();
  eval->add_option("--k-rule", eval_o.k_rule, "Neighbours per column")
      ->check(CLI::IsMember({"support-1", "support"}))
      ->capture_default_str();
  eval->add_option("--seed", eval_o.seed, "k-means seed")->capture_default_str();
  eval->add_flag("--timestamp", eval_o.timestamp, "Record wall-clock time in the report");

  BenchOptions bench_o;
  bench_o.fit.seed = seed;
  auto* bench = app.add_subcommand("bench", "D+S macro precision across component counts");
  bench->add_option("--input", bench_o.input, "Directory of CSV tables")->required();
  bench->add_option("--ground-truth", bench_o.ground_truth, "table,column,label CSV")->required();
  bench->add_option("--out", bench_o.out, "Result CSV")->capture_default_str();
  bench->add_option("--candidates", bench_o.candidates, "Component counts (comma separated)")
      ->delimiter(',')
      ->capture_default_str();
  add_fit_params(bench, bench_o.fit);
  add_threshold(bench, bench_o.threshold);
  add_threads(bench, bench_o.threads);

  SynthOptions synth_o;
  synth_o.seed = seed;
  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic corpus");
  synth->add_option("--spec", synth_o.spec, "JSON type list (built-in five types when omitted)");
  synth->add_option("--seed", synth_o.seed)->capture_default_str();
  synth->add_option("--out", synth_o.out, "Output directory")->capture_default_str();

  std::string artifact;
  std::string rerun_out;
  auto* re = app.add_subcommand("rerun", "Repeat the command recorded in an artifact");
  re->add_option("artifact", artifact, "Model, embeddings, report, bench CSV or synth directory")
      ->required();
  re->add_option("--out", rerun_out, "Write to this path instead of the recorded one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*fit) run_fit(fit_o, std::cout);
    else if (*embed) run_embed(emb_o, std::cout);
    else if (*eval) run_eval(eval_o, std::cout);
    else if (*bench) run_bench(bench_o, std::cout);
    else if (*synth) run_synth(synth_o, std::cout);
    else if (*re)
      rerun(artifact, rerun_out.empty() ? std::nullopt : std::optional<std::string>(rerun_out),
            std::cout);
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const gem::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const gem::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
