#include "specattn/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace specattn {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kWindow: return "window";
    case Strategy::kQuestLike: return "quest";
    case Strategy::kLastAccepted: return "last_accepted";
    case Strategy::kAllDraft: return "all_draft";
    case Strategy::kCollect2: return "collect2";
    case Strategy::kCollect2Weights: return "collect2_weights";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  for (Strategy s : {Strategy::kWindow, Strategy::kQuestLike, Strategy::kLastAccepted,
                     Strategy::kAllDraft, Strategy::kCollect2, Strategy::kCollect2Weights}) {
    if (name == strategy_name(s)) return s;
  }
  throw std::invalid_argument("unknown selector strategy: " + name);
}

bool strategy_uses_logits(Strategy s) {
  return s == Strategy::kLastAccepted || s == Strategy::kAllDraft || s == Strategy::kCollect2 ||
         s == Strategy::kCollect2Weights;
}

int collect_rows_needed(Strategy s) {
  switch (s) {
    case Strategy::kWindow:
    case Strategy::kQuestLike:
      return 0;
    case Strategy::kCollect2:
    case Strategy::kCollect2Weights:
      return 2;
    case Strategy::kLastAccepted:
    case Strategy::kAllDraft:
      return -1;
  }
  return 0;
}

void SelectorConfig::validate() const {
  if (!(sparse_ratio > 0.0) || sparse_ratio > 1.0) {
    throw std::invalid_argument("SelectorConfig: sparse_ratio must be in (0, 1]");
  }
  if (k_min < 0) throw std::invalid_argument("SelectorConfig: k_min must be >= 0");
  if (strategy == Strategy::kWindow && sink + window < 1) {
    throw std::invalid_argument("SelectorConfig: sink + window must be >= 1");
  }
  if (strategy == Strategy::kQuestLike && page_size < 1) {
    throw std::invalid_argument("SelectorConfig: page_size must be >= 1");
  }
}

int64_t selection_k(double sparse_ratio, int64_t prefix_len, int64_t k_min) {
  const int64_t wanted = static_cast<int64_t>(std::llround(sparse_ratio * static_cast<double>(prefix_len)));
  return std::min(prefix_len, std::max(wanted, k_min));
}

namespace {

std::vector<int> resolve_rows(const LogitMatrix& L, std::span<const int> row_labels) {
  if (row_labels.empty()) {
    throw std::invalid_argument("score_columns: empty row subset");
  }
  std::vector<int> rows;
  rows.reserve(row_labels.size());
  for (int label : row_labels) {
    const int r = L.row_for_label(label);
    if (r < 0) {
      throw std::invalid_argument("score_columns: row label " + std::to_string(label) +
                                  " not collected");
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

Eigen::VectorXd score_columns(const LogitMatrix& L, std::span<const int> row_labels) {
  const std::vector<int> rows = resolve_rows(L, row_labels);
  const int64_t cols = L.cols();
  Eigen::VectorXd scores(cols);
  for (int64_t i = 0; i < cols; ++i) {
    double sum = 0.0;
    int64_t count = 0;
    for (const RowMatrixXf& head : L.head_logits) {
      for (int r : rows) {
        const float l = head(r, i);
        if (l == kMaskedLogit) continue;
        sum += static_cast<double>(l);
        ++count;
      }
    }
    scores[i] = count > 0 ? sum / static_cast<double>(count)
                          : -std::numeric_limits<double>::infinity();
  }
  return scores;
}

Eigen::VectorXd score_columns_weights(const LogitMatrix& L, std::span<const int> row_labels) {
  const std::vector<int> rows = resolve_rows(L, row_labels);
  const int64_t cols = L.cols();
  if (L.head_dim < 1) {
    throw std::invalid_argument("score_columns_weights: LogitMatrix lacks head_dim");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(L.head_dim));
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cols);
  Eigen::VectorXd finite_count = Eigen::VectorXd::Zero(cols);
  int64_t terms = 0;
  for (const RowMatrixXf& head : L.head_logits) {
    for (int r : rows) {
      const Eigen::VectorXd w = softmax_stable(head.row(r).transpose(), scale);
      sum += w;
      ++terms;
      for (int64_t i = 0; i < cols; ++i) {
        if (head(r, i) != kMaskedLogit) finite_count[i] += 1.0;
      }
    }
  }
  Eigen::VectorXd scores = sum / static_cast<double>(terms);
  for (int64_t i = 0; i < cols; ++i) {
    if (finite_count[i] == 0.0) scores[i] = -std::numeric_limits<double>::infinity();
  }
  return scores;
}

std::vector<int64_t> topk_indices(const Eigen::Ref<const Eigen::VectorXd>& scores, int64_t k) {
  const int64_t n = scores.size();
  if (k < 0 || k > n) {
    throw std::invalid_argument("topk_indices: k out of range");
  }
  std::vector<int64_t> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  // descending score, ties toward the lower index
  std::sort(order.begin(), order.end(), [&scores](int64_t a, int64_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  std::vector<int64_t> picked;
  picked.reserve(static_cast<size_t>(k));
  for (int64_t i = 0; i < k; ++i) {
    const int64_t idx = order[static_cast<size_t>(i)];
    if (scores[idx] == -std::numeric_limits<double>::infinity()) break;  // never select masked
    picked.push_back(idx);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

namespace {

SelectionSet set_from_scores(const LogitMatrix& L, const Eigen::VectorXd& scores,
                             const SelectorConfig& cfg, Strategy source) {
  SelectionSet set;
  set.layer = L.layer;
  set.source = source;
  const int64_t k = selection_k(cfg.sparse_ratio, L.cols(), cfg.k_min);
  set.indices = topk_indices(scores, k);
  set.k = static_cast<int64_t>(set.indices.size());
  return set;
}

Eigen::VectorXd score_by_metric(const LogitMatrix& L, std::span<const int> rows,
                                const SelectorConfig& cfg) {
  if (cfg.strategy == Strategy::kCollect2Weights) {
    return score_columns_weights(L, rows);
  }
  return score_columns(L, rows);
}

}  // namespace

SelectionSet select_all_draft(const LogitMatrix& L, const SelectorConfig& cfg) {
  return set_from_scores(L, score_by_metric(L, L.row_labels, cfg), cfg, cfg.strategy);
}

SelectionSet select_collect2(const LogitMatrix& L, const SelectorConfig& cfg) {
  if (L.row_labels.empty()) {
    throw std::invalid_argument("select_collect2: no collected rows");
  }
  const int first = *std::min_element(L.row_labels.begin(), L.row_labels.end());
  const int last = *std::max_element(L.row_labels.begin(), L.row_labels.end());
  std::vector<int> rows = {first};
  if (last != first) rows.push_back(last);
  return set_from_scores(L, score_by_metric(L, rows, cfg), cfg, cfg.strategy);
}

SelectionSet select_last_accepted(const LogitMatrix& L, int accepted_count,
                                  const SelectorConfig& cfg) {
  const int label = accepted_count + 1;
  if (L.row_for_label(label) < 0) {
    throw std::invalid_argument("select_last_accepted: row " + std::to_string(label) +
                                " not collected");
  }
  const std::vector<int> rows = {label};
  return set_from_scores(L, score_by_metric(L, rows, cfg), cfg, cfg.strategy);
}

SelectionSet select_window(int64_t prefix_len, const SelectorConfig& cfg, int64_t layer) {
  if (prefix_len < 0) {
    throw std::invalid_argument("select_window: negative prefix length");
  }
  SelectionSet set;
  set.layer = layer;
  set.source = Strategy::kWindow;
  const int64_t sink_end = std::min(cfg.sink, prefix_len);
  const int64_t win_begin = std::max(prefix_len - cfg.window, sink_end);
  for (int64_t i = 0; i < sink_end; ++i) set.indices.push_back(i);
  for (int64_t i = win_begin; i < prefix_len; ++i) set.indices.push_back(i);
  set.k = static_cast<int64_t>(set.indices.size());
  return set;
}

SelectionSet select_quest(const RowMatrixXf& q_heads, const KvStore& kv, int64_t layer,
                          int64_t prefix_len, const SelectorConfig& cfg) {
  if (!kv.page_summaries_enabled()) {
    throw std::invalid_argument("select_quest: page summaries not enabled on the store");
  }
  if (prefix_len > kv.size()) {
    throw std::out_of_range("select_quest: prefix beyond store length");
  }
  SelectionSet set;
  set.layer = layer;
  set.source = Strategy::kQuestLike;
  if (prefix_len == 0) return set;

  const int64_t page = kv.page_size();
  const int64_t n_pages = (prefix_len + page - 1) / page;
  const int64_t group = q_heads.rows() / kv.n_kv_heads();
  Eigen::VectorXd bounds = Eigen::VectorXd::Zero(n_pages);
  for (int64_t h = 0; h < q_heads.rows(); ++h) {
    const int64_t kv_head = h / group;
    const auto mins = kv.page_min(layer, kv_head);
    const auto maxs = kv.page_max(layer, kv_head);
    const Eigen::RowVectorXf q = q_heads.row(h);
    for (int64_t p = 0; p < n_pages; ++p) {
      bounds[p] += static_cast<double>(
          (q.cwiseProduct(mins.row(p)).cwiseMax(q.cwiseProduct(maxs.row(p)))).sum());
    }
  }

  const int64_t k = selection_k(cfg.sparse_ratio, prefix_len, cfg.k_min);
  std::vector<int64_t> page_order(static_cast<size_t>(n_pages));
  std::iota(page_order.begin(), page_order.end(), 0);
  std::sort(page_order.begin(), page_order.end(), [&bounds](int64_t a, int64_t b) {
    if (bounds[a] != bounds[b]) return bounds[a] > bounds[b];
    return a < b;
  });

  std::vector<int64_t> picked;
  picked.reserve(static_cast<size_t>(k));
  for (int64_t rank = 0; rank < n_pages && static_cast<int64_t>(picked.size()) < k; ++rank) {
    const int64_t p = page_order[static_cast<size_t>(rank)];
    const int64_t begin = p * page;
    const int64_t end = std::min(begin + page, prefix_len);
    for (int64_t i = begin; i < end && static_cast<int64_t>(picked.size()) < k; ++i) {
      picked.push_back(i);
    }
  }
  std::sort(picked.begin(), picked.end());
  set.indices = std::move(picked);
  set.k = static_cast<int64_t>(set.indices.size());
  return set;
}

double overlap_ratio(std::span<const int64_t> a, std::span<const int64_t> b) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("overlap_ratio: sets must be non-empty and equally sized");
  }
  size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common, ++i, ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size());
}

}  // namespace specattn
