#include "alaas/strategy/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "alaas/core/error.hpp"
#include "alaas/core/rng.hpp"
#include "alaas/kernels/kernels.hpp"

namespace alaas::strategy {

using core::EmbeddingMatrix;
using core::Error;
using core::ErrorCode;
using core::ProbabilityMatrix;
using core::SampleId;

namespace {

void require_valid(const ProbabilityMatrix& probs) {
  if (auto v = probs.violation()) {
    throw Error(ErrorCode::MalformedMatrix, *v);
  }
}

void require_valid(const EmbeddingMatrix& embeds) {
  if (auto v = embeds.violation()) {
    throw Error(ErrorCode::MalformedMatrix, *v);
  }
}

}  // namespace

std::vector<double> score_lc(const ProbabilityMatrix& probs) {
  require_valid(probs);
  const auto& k = kernels::active();
  std::vector<double> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    out[r] = 1.0 - k.row_max(probs.row(r), probs.classes);
  }
  return out;
}

std::vector<double> score_mc(const ProbabilityMatrix& probs) {
  require_valid(probs);
  const auto& k = kernels::active();
  std::vector<double> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double top1, top2;
    k.row_top2(probs.row(r), probs.classes, &top1, &top2);
    out[r] = 1.0 - (top1 - top2);
  }
  return out;
}

std::vector<double> score_rc(const ProbabilityMatrix& probs) {
  require_valid(probs);
  const auto& k = kernels::active();
  std::vector<double> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    double top1, top2;
    k.row_top2(probs.row(r), probs.classes, &top1, &top2);
    out[r] = top2 / top1;  // top1 >= 1/C > 0 on the simplex
  }
  return out;
}

std::vector<double> score_es(const ProbabilityMatrix& probs) {
  require_valid(probs);
  std::vector<double> out(probs.rows);
  for (std::size_t r = 0; r < probs.rows; ++r) {
    const double* p = probs.row(r);
    double h = 0.0;
    for (std::size_t c = 0; c < probs.classes; ++c) {
      if (p[c] > 0.0) h -= p[c] * std::log(p[c]);
    }
    out[r] = h;
  }
  return out;
}

Selection select_top_b(const std::vector<double>& scores,
                       const std::vector<SampleId>& row_ids,
                       std::uint64_t budget) {
  if (scores.size() != row_ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "scores and row_ids differ in length");
  }
  if (budget > scores.size()) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " +
                    std::to_string(scores.size()));
  }
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return row_ids[a] < row_ids[b];
  };
  std::partial_sort(idx.begin(), idx.begin() + budget, idx.end(), better);
  Selection sel;
  sel.ids.reserve(budget);
  sel.scores.reserve(budget);
  for (std::uint64_t i = 0; i < budget; ++i) {
    sel.ids.push_back(row_ids[idx[i]]);
    sel.scores.push_back(scores[idx[i]]);
  }
  return sel;
}

Selection select_random(std::vector<SampleId> row_ids, std::uint64_t budget,
                        std::uint64_t seed) {
  if (budget > row_ids.size()) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " +
                    std::to_string(row_ids.size()));
  }
  std::sort(row_ids.begin(), row_ids.end());
  rng::Philox gen(seed, rng::kStreamRandomSelect);
  Selection sel;
  sel.ids.reserve(budget);
  for (std::uint64_t i = 0; i < budget; ++i) {
    std::uint64_t j = i + gen.next_below(row_ids.size() - i);
    std::swap(row_ids[i], row_ids[j]);
    sel.ids.push_back(row_ids[i]);
  }
  sel.scores.assign(budget, 0.0);
  return sel;
}

namespace {

Selection kcenter_greedy(const EmbeddingMatrix& embeds,
                         const EmbeddingMatrix& labeled, std::uint64_t budget) {
  require_valid(embeds);
  require_valid(labeled);
  if (labeled.rows > 0 && labeled.dim != embeds.dim) {
    throw Error(ErrorCode::DimensionMismatch,
                "labeled embedding dim " + std::to_string(labeled.dim) +
                    " vs pool dim " + std::to_string(embeds.dim));
  }
  if (budget > embeds.rows) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " +
                    std::to_string(embeds.rows));
  }
  const auto& k = kernels::active();
  const std::size_t n = embeds.rows;
  const double* points = embeds.data.data();
  Selection sel;
  if (budget == 0) return sel;

  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  std::vector<char> picked(n, 0);

  auto pick = [&](std::size_t idx, double score) {
    picked[idx] = 1;
    sel.ids.push_back(embeds.row_ids[idx]);
    sel.scores.push_back(score);
    k.min_sqdist_update(embeds.row(idx), points, n, embeds.dim, mind.data());
  };

  if (labeled.rows == 0) {
    // No centers yet: seed with the smallest id; its score is the max
    // distance from it to any pool point, which keeps the score sequence
    // non-increasing (the second pick attains exactly that distance).
    std::size_t first = 0;
    for (std::size_t r = 1; r < n; ++r) {
      if (embeds.row_ids[r] < embeds.row_ids[first]) first = r;
    }
    double far = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      far = std::max(far, k.squared_l2(embeds.row(first), embeds.row(r), embeds.dim));
    }
    pick(first, std::sqrt(far));
  } else {
    for (std::size_t l = 0; l < labeled.rows; ++l) {
      k.min_sqdist_update(labeled.row(l), points, n, embeds.dim, mind.data());
    }
  }

  while (sel.ids.size() < budget) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (picked[r]) continue;
      if (mind[r] > best_d ||
          (mind[r] == best_d && embeds.row_ids[r] < embeds.row_ids[best])) {
        best = r;
        best_d = mind[r];
      }
    }
    pick(best, std::sqrt(best_d));
  }
  return sel;
}

// Weighted Lloyd over `embeds` with k = budget clusters; empty `weights`
// means uniform. kmeans++ sampling ignores weights (they shape only the
// centroid means), so uniform weights reproduce the unweighted run exactly.
Selection lloyd_select(const EmbeddingMatrix& embeds, std::uint64_t budget,
                       std::uint64_t seed, std::vector<double> weights) {
  if (budget > embeds.rows) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " +
                    std::to_string(embeds.rows));
  }
  Selection sel;
  if (budget == 0) return sel;
  const auto& k = kernels::active();
  const std::size_t n = embeds.rows;
  const std::size_t dim = embeds.dim;
  const std::size_t kk = budget;
  const double* points = embeds.data.data();
  if (weights.empty()) weights.assign(n, 1.0);

  std::vector<double> centers(kk * dim);
  std::vector<char> is_center(n, 0);
  std::vector<double> mind(n, std::numeric_limits<double>::infinity());
  rng::Philox gen(seed, rng::kStreamKMeans);

  auto place_center = [&](std::size_t c, std::size_t row) {
    std::copy_n(embeds.row(row), dim, centers.begin() + c * dim);
    is_center[row] = 1;
    k.min_sqdist_update(embeds.row(row), points, n, dim, mind.data());
  };

  place_center(0, gen.next_below(n));
  for (std::size_t c = 1; c < kk; ++c) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) total += mind[r];
    std::size_t pick = n;
    if (total > 0.0) {
      double x = gen.next_double() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        if (mind[r] <= 0.0) continue;
        acc += mind[r];
        pick = r;
        if (acc > x) break;
      }
    } else {
      // All remaining points coincide with existing centers; fall back to
      // the smallest-id row that is not yet a center.
      for (std::size_t r = 0; r < n; ++r) {
        if (is_center[r]) continue;
        if (pick == n || embeds.row_ids[r] < embeds.row_ids[pick]) pick = r;
      }
    }
    place_center(c, pick);
  }

  std::vector<std::size_t> assign(n, 0);
  double prev_inertia = -1.0;
  for (int iter = 0; iter < 100; ++iter) {
    double inertia = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t best = 0;
      double best_d = k.squared_l2(centers.data(), embeds.row(r), dim);
      for (std::size_t c = 1; c < kk; ++c) {
        double d = k.squared_l2(centers.data() + c * dim, embeds.row(r), dim);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[r] = best;
      inertia += weights[r] * best_d;
    }
    if (prev_inertia >= 0.0 &&
        (prev_inertia == 0.0 || prev_inertia - inertia < 1e-4 * prev_inertia)) {
      break;
    }
    prev_inertia = inertia;
    std::vector<double> sums(kk * dim, 0.0);
    std::vector<double> wsum(kk, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      k.axpy(weights[r], embeds.row(r), sums.data() + assign[r] * dim, dim);
      wsum[assign[r]] += weights[r];
    }
    for (std::size_t c = 0; c < kk; ++c) {
      if (wsum[c] <= 0.0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < dim; ++d) {
        centers[c * dim + d] = sums[c * dim + d] / wsum[c];
      }
    }
  }

  // One sample per centroid: nearest still-unselected row, ties to the
  // smaller id, visiting centroids in creation order.
  std::vector<char> picked(n, 0);
  for (std::size_t c = 0; c < kk; ++c) {
    std::size_t best = n;
    double best_d = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (picked[r]) continue;
      double d = k.squared_l2(centers.data() + c * dim, embeds.row(r), dim);
      if (best == n || d < best_d ||
          (d == best_d && embeds.row_ids[r] < embeds.row_ids[best])) {
        best = r;
        best_d = d;
      }
    }
    picked[best] = 1;
    sel.ids.push_back(embeds.row_ids[best]);
    sel.scores.push_back(std::sqrt(best_d));
  }
  return sel;
}

}  // namespace

Selection select_kcenter_greedy(const EmbeddingMatrix& embeds,
                                const EmbeddingMatrix& labeled_embeds,
                                std::uint64_t budget) {
  return kcenter_greedy(embeds, labeled_embeds, budget);
}

Selection select_coreset(const EmbeddingMatrix& embeds,
                         const EmbeddingMatrix& labeled_embeds,
                         std::uint64_t budget) {
  return kcenter_greedy(embeds, labeled_embeds, budget);
}

Selection select_kmeans(const EmbeddingMatrix& embeds, std::uint64_t budget,
                        std::uint64_t seed) {
  require_valid(embeds);
  return lloyd_select(embeds, budget, seed, {});
}

Selection select_dbal(const ProbabilityMatrix& probs, const EmbeddingMatrix& embeds,
                      std::uint64_t budget, std::uint32_t beta, std::uint64_t seed) {
  require_valid(embeds);
  if (beta < 1) {
    throw Error(ErrorCode::InvalidValue, "dbal beta must be >= 1");
  }
  if (probs.rows != embeds.rows || probs.row_ids != embeds.row_ids) {
    throw Error(ErrorCode::RowMisalignment,
                "probability and embedding rows are not aligned");
  }
  if (budget > probs.rows) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(budget) + " exceeds pool of " +
                    std::to_string(probs.rows));
  }
  std::vector<double> lc = score_lc(probs);
  std::uint64_t keep = std::min<std::uint64_t>(
      static_cast<std::uint64_t>(beta) * budget, probs.rows);
  Selection top = select_top_b(lc, probs.row_ids, keep);

  std::unordered_map<SampleId, std::size_t> row_of;
  row_of.reserve(embeds.rows);
  for (std::size_t r = 0; r < embeds.rows; ++r) row_of.emplace(embeds.row_ids[r], r);

  EmbeddingMatrix sub;
  sub.rows = top.ids.size();
  sub.dim = embeds.dim;
  sub.row_ids = top.ids;
  sub.data.resize(sub.rows * sub.dim);
  std::vector<double> weights(sub.rows);
  double wmax = 0.0;
  for (std::size_t i = 0; i < sub.rows; ++i) {
    std::copy_n(embeds.row(row_of.at(top.ids[i])), sub.dim,
                sub.data.begin() + i * sub.dim);
    weights[i] = std::max(top.scores[i], 1e-12);
    wmax = std::max(wmax, weights[i]);
  }
  for (double& w : weights) w /= wmax;  // conditioning; all-equal becomes 1.0
  return lloyd_select(sub, budget, seed, std::move(weights));
}

Selection run_strategy(const core::StrategyKind& kind, const StrategyInput& input) {
  using core::Strategy;
  auto need_probs = [&]() -> const ProbabilityMatrix& {
    if (!input.probs) {
      throw Error(ErrorCode::MissingInput,
                  std::string("strategy ") + core::strategy_name(kind.name) +
                      " requires probs");
    }
    return *input.probs;
  };
  auto need_embeds = [&]() -> const EmbeddingMatrix& {
    if (!input.embeds) {
      throw Error(ErrorCode::MissingInput,
                  std::string("strategy ") + core::strategy_name(kind.name) +
                      " requires embeds");
    }
    return *input.embeds;
  };
  if (input.probs && input.embeds && input.probs->row_ids != input.embeds->row_ids) {
    throw Error(ErrorCode::RowMisalignment,
                "probability and embedding rows are not aligned");
  }

  switch (kind.name) {
    case Strategy::LC:
      return select_top_b(score_lc(need_probs()), need_probs().row_ids, input.budget);
    case Strategy::MC:
      return select_top_b(score_mc(need_probs()), need_probs().row_ids, input.budget);
    case Strategy::RC:
      return select_top_b(score_rc(need_probs()), need_probs().row_ids, input.budget);
    case Strategy::ES:
      return select_top_b(score_es(need_probs()), need_probs().row_ids, input.budget);
    case Strategy::Random: {
      std::vector<SampleId> ids = input.probs    ? input.probs->row_ids
                                  : input.embeds ? input.embeds->row_ids
                                                 : input.row_ids;
      return select_random(std::move(ids), input.budget, input.seed);
    }
    case Strategy::KCG:
    case Strategy::CoreSet: {
      static const EmbeddingMatrix kNoLabeled;
      const EmbeddingMatrix& labeled =
          input.labeled_embeds ? *input.labeled_embeds : kNoLabeled;
      return kind.name == Strategy::KCG
                 ? select_kcenter_greedy(need_embeds(), labeled, input.budget)
                 : select_coreset(need_embeds(), labeled, input.budget);
    }
    case Strategy::KMeans:
      return select_kmeans(need_embeds(), input.budget, input.seed);
    case Strategy::DBAL:
      return select_dbal(need_probs(), need_embeds(), input.budget, kind.beta,
                         input.seed);
  }
  throw Error(ErrorCode::InvalidValue, "unhandled strategy kind");
}

Registry& Registry::global() {
  static Registry instance;
  return instance;
}

Registry::Registry() {
  for (const std::string& alias : core::strategy_aliases()) {
    core::StrategyKind kind{*core::strategy_from_name(alias), 10};
    fns_.emplace(alias, [kind](const StrategyInput& in) {
      return run_strategy(kind, in);
    });
  }
}

void Registry::add(const std::string& name, StrategyFn fn) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = fns_.emplace(name, std::move(fn));
  if (!inserted) {
    throw Error(ErrorCode::InvalidValue, "strategy name already registered: " + name);
  }
}

std::optional<StrategyFn> Registry::find(const std::string& name) const {
  std::lock_guard lock(mu_);
  auto it = fns_.find(name);
  if (it == fns_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Registry::names() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  out.reserve(fns_.size());
  for (const auto& [name, fn] : fns_) out.push_back(name);
  return out;
}

}  // namespace alaas::strategy
