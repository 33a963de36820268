#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "specattn/attention.hpp"
#include "specattn/kv_store.hpp"

namespace specattn {

enum class Strategy {
  kWindow,        // attention sink + sliding window, query-agnostic
  kQuestLike,     // per-step page min/max upper bounds against the live query
  kLastAccepted,  // top-k for the last accepted token's logit row
  kAllDraft,      // top-k of the column score summed over every draft row
  kCollect2,      // top-k from the first-draft and bonus rows only
  kCollect2Weights,  // collect-2 scored on softmax weights instead of logits
};

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);
bool strategy_uses_logits(Strategy s);
// Rows a verifying forward must capture: 0 = none, 2 = first+bonus, -1 = all.
int collect_rows_needed(Strategy s);

struct SelectorConfig {
  Strategy strategy = Strategy::kCollect2;
  double sparse_ratio = 0.25;  // fraction of prefix tokens retained, in (0, 1]
  int64_t k_min = 16;          // floor on the retained-token budget
  int64_t window = 0;          // Window strategy; 0 derives it from sparse_ratio
  int64_t sink = 4;            // Window strategy: always-kept oldest tokens
  int64_t page_size = 8;       // QuestLike page granularity
  void validate() const;
};

// Per-layer set of retained prefix positions.
struct SelectionSet {
  int64_t layer = 0;
  std::vector<int64_t> indices;  // strictly increasing absolute positions
  int64_t k = 0;                 // == indices.size()
  Strategy source = Strategy::kWindow;
};

// Retained-token budget: clamp(round(sparse_ratio * prefix_len), k_min, prefix_len).
int64_t selection_k(double sparse_ratio, int64_t prefix_len, int64_t k_min);

// Mean over heads and over the selected rows of the raw logits; masked
// entries are excluded, columns with no finite entry score -inf.
// row_labels must name rows present in L; throws std::invalid_argument when
// empty or absent.
Eigen::VectorXd score_columns(const LogitMatrix& L, std::span<const int> row_labels);

// Same aggregation over softmax(row * 1/sqrt(head_dim)) attention weights;
// all-masked columns still score -inf so they can never be selected.
Eigen::VectorXd score_columns_weights(const LogitMatrix& L, std::span<const int> row_labels);

// Indices of the k largest scores, ties broken toward the lower index,
// returned sorted ascending. -inf scores are never selected (k shrinks).
// Throws std::invalid_argument when k exceeds the score count.
std::vector<int64_t> topk_indices(const Eigen::Ref<const Eigen::VectorXd>& scores, int64_t k);

SelectionSet select_all_draft(const LogitMatrix& L, const SelectorConfig& cfg);
SelectionSet select_collect2(const LogitMatrix& L, const SelectorConfig& cfg);
SelectionSet select_last_accepted(const LogitMatrix& L, int accepted_count,
                                  const SelectorConfig& cfg);

// sink oldest positions plus window most recent positions of [0, prefix_len),
// deduplicated; independent of any logits.
SelectionSet select_window(int64_t prefix_len, const SelectorConfig& cfg, int64_t layer = 0);

// Query-aware selection over the store's page summaries: page upper bound
// sum_d max(q_d*min_d, q_d*max_d), summed over query heads, pages taken best
// first until k tokens are covered (the final page is trimmed from its
// high end). q_heads is (n_q_heads x head_dim) of post-rotary query rows.
SelectionSet select_quest(const RowMatrixXf& q_heads, const KvStore& kv, int64_t layer,
                          int64_t prefix_len, const SelectorConfig& cfg);

// |A intersect B| / k for two equally sized index sets.
double overlap_ratio(std::span<const int64_t> a, std::span<const int64_t> b);

}  // namespace specattn
