#include "alaas/infer/mock_model.hpp"

#include <cmath>
#include <cstring>

#include "alaas/core/rng.hpp"

namespace alaas::infer {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

std::uint64_t fnv1a(const void* bytes, std::size_t len,
                    std::uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

double to_signed_unit(std::uint64_t u) {
  // [0,1) on 53 bits, then into [-1,1).
  return (u >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

// Fills out[0..count) from consecutive Philox blocks in the given substream.
void expand(std::uint64_t key, std::uint64_t substream, std::size_t count,
            double* out) {
  for (std::size_t b = 0; b * 4 < count; ++b) {
    rng::Block blk =
        rng::philox4x64({b, substream, 0, 0}, key, rng::kStreamMockModel);
    for (std::size_t i = 0; i < 4 && b * 4 + i < count; ++i) {
      out[b * 4 + i] = to_signed_unit(blk[i]);
    }
  }
}

constexpr std::uint64_t kSubstreamWeights = 1;
constexpr std::uint64_t kSubstreamEmbed = 2;

}  // namespace

MockModel::MockModel(std::string model_version, std::size_t classes,
                     std::size_t embed_dim)
    : version_(std::move(model_version)), classes_(classes), embed_dim_(embed_dim) {
  version_hash_ = fnv1a(version_.data(), version_.size());
  weights_.resize(classes_ * embed_dim_ + classes_);
  expand(version_hash_, kSubstreamWeights, weights_.size(), weights_.data());
  double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim_));
  for (std::size_t i = 0; i < classes_ * embed_dim_; ++i) weights_[i] *= scale;
}

void MockModel::run(const std::vector<double>& features, double* prob_row,
                    double* embed_row) const {
  std::uint64_t fh = fnv1a(features.data(), features.size() * sizeof(double),
                           version_hash_);
  for (std::size_t b = 0; b * 4 < embed_dim_; ++b) {
    rng::Block blk = rng::philox4x64({b, fh, kSubstreamEmbed, 0}, version_hash_,
                                     rng::kStreamMockModel);
    for (std::size_t i = 0; i < 4 && b * 4 + i < embed_dim_; ++i) {
      embed_row[b * 4 + i] = to_signed_unit(blk[i]);
    }
  }

  const double* bias = weights_.data() + classes_ * embed_dim_;
  double max_logit = -1e300;
  for (std::size_t c = 0; c < classes_; ++c) {
    const double* w = weights_.data() + c * embed_dim_;
    double logit = bias[c];
    for (std::size_t d = 0; d < embed_dim_; ++d) logit += w[d] * embed_row[d];
    prob_row[c] = logit;
    if (logit > max_logit) max_logit = logit;
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < classes_; ++c) {
    prob_row[c] = std::exp(prob_row[c] - max_logit);
    sum += prob_row[c];
  }
  for (std::size_t c = 0; c < classes_; ++c) prob_row[c] /= sum;
}

}  // namespace alaas::infer
