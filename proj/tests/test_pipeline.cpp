#include "doctest.h"

#include "gem/error.hpp"
#include "gem/io.hpp"
#include "gem/pipeline.hpp"
#include "gem/signature.hpp"
#include "support.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

using namespace gem;
using doctest::Approx;
using gem::test::TempDir;

namespace {

Corpus small_corpus(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Corpus c;
  c.columns.push_back(test::make_column("t0", "age", 0, test::normal_draws(120, 40, 8, rng)));
  c.columns.push_back(test::make_column("t0", "price", 1, test::normal_draws(120, 5, 1, rng)));
  c.columns.push_back(test::make_column("t1", "age", 0, test::normal_draws(120, 38, 9, rng)));
  c.columns.push_back(test::make_column("t1", "unit price", 1, test::normal_draws(120, 6, 1, rng)));
  return c;
}

GmmModeld small_model(const Corpus& c, int k = 4) {
  FitConfig cfg;
  cfg.n_components = k;
  cfg.n_restarts = 2;
  cfg.seed = 3;
  return fit(pooled_stack(c), cfg);
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("vector widths per mode") {
    const auto c = small_corpus(1);
    const auto m = small_model(c);
    EmbedOptions o;
    o.fallback_headers = true;
    o.header_dim = 32;
    o.baselines = {6, 5, 3};
    o.fit.n_restarts = 2;

    struct Case {
      EmbeddingMode mode;
      ConcatLayout layout;
      Eigen::Index width;
    };
    const Case cases[] = {
        {EmbeddingMode::Distributional, ConcatLayout::WithFeatures, 4},
        {EmbeddingMode::DistStat, ConcatLayout::WithFeatures, 11},
        {EmbeddingMode::DistStatContextConcat, ConcatLayout::WithFeatures, 11 + 32 + 7},
        {EmbeddingMode::DistStatContextConcat, ConcatLayout::SignatureAndHeader, 11 + 32},
        {EmbeddingMode::DistStatContextAggregate, ConcatLayout::WithFeatures, 32},
        {EmbeddingMode::Ple, ConcatLayout::WithFeatures, 6},
        {EmbeddingMode::Paf, ConcatLayout::WithFeatures, 10},
        {EmbeddingMode::Ks, ConcatLayout::WithFeatures, 7},
        {EmbeddingMode::SquashingGmm, ConcatLayout::WithFeatures, 3},
    };
    for (const auto& k : cases) {
      CAPTURE(to_string(k.mode));
      o.mode = k.mode;
      o.layout = k.layout;
      const auto set = embed_corpus(c, &m, o);
      CHECK(set.vectors.rows() == 4);
      CHECK(set.vectors.cols() == k.width);
      CHECK(set.vectors.allFinite());
      CHECK(set.ids.size() == 4);
      if (k.mode != EmbeddingMode::Ple && k.mode != EmbeddingMode::Paf &&
          k.mode != EmbeddingMode::SquashingGmm)
        CHECK(embedding_width(k.mode, k.layout, 4, 32) == k.width);
    }
    CHECK(embedding_width(EmbeddingMode::DistStat, ConcatLayout::WithFeatures, 50, 384) == 57);
    CHECK(embedding_width(EmbeddingMode::DistStatContextConcat, ConcatLayout::WithFeatures, 50, 384) == 448);
  }

  TEST_CASE("D+S rows are the signatures and D rows are normalized responsibilities") {
    const auto c = small_corpus(2);
    const auto m = small_model(c);
    const auto sigs = signature_matrix(c, m);
    EmbedOptions o;
    const auto ds = embed_corpus(c, &m, o);
    o.mode = EmbeddingMode::Distributional;
    const auto d = embed_corpus(c, &m, o);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      CHECK(ds.vectors.row(r).transpose() == sigs.rows[i].normalized);
      CHECK(ds.vectors.row(r).cwiseAbs().sum() == Approx(1.0).epsilon(1e-12));
      CHECK(d.vectors.row(r).sum() == Approx(1.0).epsilon(1e-12));
    }
    CHECK(ds.responsibility_block == 4);
  }

  TEST_CASE("identical headers differ only in the value blocks") {
    const auto c = small_corpus(3);
    const auto m = small_model(c);
    EmbedOptions o;
    o.mode = EmbeddingMode::DistStatContextConcat;
    o.fallback_headers = true;
    o.header_dim = 16;
    const auto set = embed_corpus(c, &m, o);
    // t0.age and t1.age share a header.
    CHECK(set.vectors.row(0).segment(11, 16) == set.vectors.row(2).segment(11, 16));
    CHECK(set.vectors.row(0).head(11) != set.vectors.row(2).head(11));
    CHECK(set.vectors.row(0).segment(11, 16).cwiseAbs().sum() == Approx(1.0));
  }

  TEST_CASE("context modes need headers and signature modes need a model") {
    const auto c = small_corpus(4);
    const auto m = small_model(c);
    EmbedOptions o;
    o.mode = EmbeddingMode::DistStatContextAggregate;
    CHECK_THROWS_AS(embed_corpus(c, &m, o), std::invalid_argument);
    o.mode = EmbeddingMode::DistStat;
    CHECK_THROWS_AS(embed_corpus(c, nullptr, o), std::invalid_argument);
  }

  TEST_CASE("header file feeds the context block") {
    TempDir dir("pipe");
    const auto c = small_corpus(5);
    const auto m = small_model(c);
    std::string text;
    for (const auto& col : c.columns)
      text += "{\"table\":\"" + col.id.table + "\",\"column\":\"" + col.id.column +
              "\",\"vector\":[1,-3,0,4]}\n";
    test::write_file(dir / "h.jsonl", text);
    EmbedOptions o;
    o.mode = EmbeddingMode::DistStatContextConcat;
    o.layout = ConcatLayout::SignatureAndHeader;
    o.headers_file = dir / "h.jsonl";
    const auto set = embed_corpus(c, &m, o);
    REQUIRE(set.vectors.cols() == 11 + 4);
    CHECK(set.vectors(0, 12) == Approx(-3.0 / 8));
  }

  TEST_CASE("model JSON round-trip is exact") {
    const auto c = small_corpus(6);
    const auto m = small_model(c, 5);
    FitConfig cfg;
    cfg.n_components = 5;
    TempDir dir("io");
    save_model(dir / "m.json", m, cfg, {{"command", "fit"}, {"options", Json::object()}});
    const auto back = load_model(dir / "m.json");
    CHECK(back.weights == m.weights);
    CHECK(back.means == m.means);
    CHECK(back.variances == m.variances);
    CHECK(back.log_likelihood == m.log_likelihood);
    CHECK(back.variance_floor == m.variance_floor);
    CHECK(back.seed == m.seed);

    EmbedOptions o;
    const auto a = embed_corpus(c, &m, o);
    const auto b = embed_corpus(c, &back, o);
    CHECK(a.vectors == b.vectors);
  }

  TEST_CASE("doubles survive text round-trips") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 2000; ++i) {
      double v;
      const auto b = bits(rng);
      std::memcpy(&v, &b, sizeof v);
      if (!std::isfinite(v)) continue;
      CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
      CHECK(Json::parse(Json(v).dump()).get<double>() == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(std::numeric_limits<double>::denorm_min()) != "0");
  }

  TEST_CASE("bad model files are data errors") {
    TempDir dir("io");
    test::write_file(dir / "junk.json", "{not json");
    CHECK_THROWS_AS(load_model(dir / "junk.json"), DataError);
    test::write_file(dir / "bad.json", R"({"weights":[0.5,0.6],"means":[0,1],"variances":[1,1],"log_likelihood":0})");
    CHECK_THROWS_AS(load_model(dir / "bad.json"), DataError);
    test::write_file(dir / "neg.json", R"({"weights":[1],"means":[0],"variances":[-1],"log_likelihood":0})");
    CHECK_THROWS_AS(load_model(dir / "neg.json"), DataError);
    CHECK_THROWS_AS(load_model(dir / "absent.json"), DataError);
  }

  TEST_CASE("embeddings JSONL round-trip") {
    const auto c = small_corpus(8);
    const auto m = small_model(c);
    EmbedOptions o;
    const auto set = embed_corpus(c, &m, o);
    TempDir dir("io");
    std::ostringstream text;
    write_embeddings(text, set, {{"command", "embed"}});
    test::write_file(dir / "e.jsonl", text.str());
    const auto back = read_embeddings(dir / "e.jsonl");
    CHECK(back.set.vectors == set.vectors);
    CHECK(back.set.mode == EmbeddingMode::DistStat);
    CHECK(back.set.responsibility_block == 4);
    CHECK(back.set.ids == set.ids);
    CHECK(back.meta["run_config"]["command"] == "embed");

    test::write_file(dir / "ragged.jsonl",
                     "{\"table\":\"a\",\"column\":\"x\",\"vector\":[1,2]}\n"
                     "{\"table\":\"a\",\"column\":\"y\",\"vector\":[1]}\n");
    CHECK_THROWS_AS(read_embeddings(dir / "ragged.jsonl"), DataError);
    test::write_file(dir / "empty.jsonl", "");
    CHECK_THROWS_AS(read_embeddings(dir / "empty.jsonl"), DataError);
  }
}
