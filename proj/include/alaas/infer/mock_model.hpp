#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace alaas::infer {

// Deterministic stand-in for a real classifier. Embeddings are a keyed hash
// expansion of (model_version, feature values) into [-1,1]^D; probabilities
// are a softmax over a fixed affine map whose weights are derived from
// model_version, so switching versions observably changes every output.
class MockModel {
 public:
  MockModel(std::string model_version, std::size_t classes, std::size_t embed_dim);

  // prob_row must hold `classes` doubles, embed_row `embed_dim`.
  void run(const std::vector<double>& features, double* prob_row,
           double* embed_row) const;

  std::size_t classes() const { return classes_; }
  std::size_t embed_dim() const { return embed_dim_; }
  const std::string& model_version() const { return version_; }

 private:
  std::string version_;
  std::size_t classes_;
  std::size_t embed_dim_;
  std::uint64_t version_hash_;
  std::vector<double> weights_;  // classes x embed_dim, then classes biases
};

}  // namespace alaas::infer
