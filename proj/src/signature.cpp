#include "gem/signature.hpp"

namespace gem {

SignatureSet signature_matrix(const Corpus& corpus, const GmmModeld& model) {
  model.validate();
  std::vector<StatFeatures<double>> features;
  features.reserve(corpus.size());
  for (const auto& col : corpus.columns) features.push_back(stat_features(col.values));
  const auto standardized = standardize_features<double>(features);

  SignatureSet out;
  out.standardizer = standardized.standardizer;
  out.rows.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& col = corpus.columns[i];
    SignatureVector sig;
    sig.id = col.id;
    sig.mean_probs = mean_component_probs(col.values, model);
    sig.std_features = standardized.values.row(static_cast<Eigen::Index>(i)).transpose();
    sig.normalized = build_signature(sig.mean_probs, sig.std_features);
    out.rows.push_back(std::move(sig));
  }
  return out;
}

}  // namespace gem
