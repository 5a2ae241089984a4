#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "alaas/core/types.hpp"

// The nine selection strategies. All are pure and deterministic: same input
// (including row order for the seeded ones) gives the same Selection. Ties
// break toward the smaller SampleId everywhere.
namespace alaas::strategy {

// Matrices are borrowed, not owned; null means absent. row_ids is the pool
// for strategies that need no matrix at all (Random); when a matrix is
// present its row_ids win.
struct StrategyInput {
  const core::ProbabilityMatrix* probs = nullptr;
  const core::EmbeddingMatrix* embeds = nullptr;
  const core::EmbeddingMatrix* labeled_embeds = nullptr;
  std::vector<core::SampleId> row_ids;
  std::uint64_t budget = 0;
  std::uint64_t seed = 0;
};

struct Selection {
  std::vector<core::SampleId> ids;  // length == budget, distinct
  std::vector<double> scores;       // aligned with ids
};

// Uncertainty scores, higher = more informative. Each validates the matrix
// and throws MalformedMatrix on a simplex violation.
std::vector<double> score_lc(const core::ProbabilityMatrix& probs);  // 1 - p_top1
std::vector<double> score_mc(const core::ProbabilityMatrix& probs);  // 1 - (p1 - p2)
std::vector<double> score_rc(const core::ProbabilityMatrix& probs);  // p2 / p1
std::vector<double> score_es(const core::ProbabilityMatrix& probs);  // -sum p ln p

// B rows with the largest scores, output ordered by descending score then
// ascending id.
Selection select_top_b(const std::vector<double>& scores,
                       const std::vector<core::SampleId>& row_ids,
                       std::uint64_t budget);

// Uniform without replacement: Fisher-Yates over the ids sorted ascending,
// ids returned in draw order, scores all 0.
Selection select_random(std::vector<core::SampleId> row_ids, std::uint64_t budget,
                        std::uint64_t seed);

// Greedy k-center: repeatedly take the pool point farthest (Euclidean) from
// the current center set, seeded with labeled_embeds. With no labeled centers
// the first pick is the smallest SampleId and its score is the max distance
// from it to any pool point. Scores are the min-distance at pick time and
// never increase.
Selection select_kcenter_greedy(const core::EmbeddingMatrix& embeds,
                                const core::EmbeddingMatrix& labeled_embeds,
                                std::uint64_t budget);

// Same greedy kernel; the name pins the feature space to model embeddings.
Selection select_coreset(const core::EmbeddingMatrix& embeds,
                         const core::EmbeddingMatrix& labeled_embeds,
                         std::uint64_t budget);

// k = B clusters (kmeans++ then Lloyd, <= 100 iterations or relative inertia
// improvement < 1e-4), then the nearest still-unselected sample per centroid
// in centroid order. Scores are Euclidean distance to the centroid.
Selection select_kmeans(const core::EmbeddingMatrix& embeds, std::uint64_t budget,
                        std::uint64_t seed);

// Prefilter the top beta*B rows by LC, then LC-weighted k-means over the
// survivors (weights floored at 1e-12; uniform weights reproduce
// select_kmeans on the prefiltered set exactly).
Selection select_dbal(const core::ProbabilityMatrix& probs,
                      const core::EmbeddingMatrix& embeds, std::uint64_t budget,
                      std::uint32_t beta, std::uint64_t seed);

// Dispatch by kind; throws MissingInput naming the absent matrix.
Selection run_strategy(const core::StrategyKind& kind, const StrategyInput& input);

using StrategyFn = std::function<Selection(const StrategyInput&)>;

// In-process extension point: strategies registered under a string name.
// Built-ins are pre-registered under every accepted alias (DBAL with its
// default beta). Custom strategies must honor the Selection invariants.
class Registry {
 public:
  static Registry& global();

  Registry();

  void add(const std::string& name, StrategyFn fn);  // InvalidValue if taken
  std::optional<StrategyFn> find(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, StrategyFn> fns_;
};

}  // namespace alaas::strategy
