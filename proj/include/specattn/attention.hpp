#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "specattn/weights.hpp"

namespace specattn {

// Sentinel for masked attention logits; masked entries never receive weight
// and are skipped by column scoring.
inline constexpr float kMaskedLogit = -std::numeric_limits<float>::infinity();

// Pre-softmax attention logits captured during a forward pass, one matrix per
// query head. Values are raw q.k dot products (no 1/sqrt(d) scale), recorded
// after causal/banded masking; masked entries hold kMaskedLogit. Rows are
// the collected verification queries, columns the eligible prefix tokens.
struct LogitMatrix {
  int64_t layer = 0;
  int64_t head_dim = 0;                   // for the weights-metric softmax scale
  std::vector<RowMatrixXf> head_logits;   // per q-head: rows x cols
  std::vector<RowMatrixXf> head_queries;  // per q-head: rows x head_dim (optional capture)
  std::vector<int> row_labels;            // 1-based position t of each row in 1..gamma+1
  int64_t col_offset = 0;                 // absolute position of column 0

  int64_t rows() const { return head_logits.empty() ? 0 : head_logits[0].rows(); }
  int64_t cols() const { return head_logits.empty() ? 0 : head_logits[0].cols(); }
  int64_t n_heads() const { return static_cast<int64_t>(head_logits.size()); }

  // Row index carrying label t, or -1.
  int row_for_label(int t) const {
    for (size_t i = 0; i < row_labels.size(); ++i) {
      if (row_labels[i] == t) return static_cast<int>(i);
    }
    return -1;
  }
};

// softmax(logits * scale) with max-subtraction, accumulated in double.
// Entries equal to kMaskedLogit get zero probability; throws
// std::domain_error when no finite entry exists. scale must be positive.
Eigen::VectorXd softmax_stable(const Eigen::Ref<const Eigen::VectorXf>& logits,
                               double scale = 1.0);

// softmax(q.K^T * scale) V with the value aggregation accumulated in double.
// K and V are (m x head_dim) key/value rows; m >= 1.
Eigen::VectorXf attend(const Eigen::Ref<const Eigen::VectorXf>& q,
                       const Eigen::Ref<const RowMatrixXf>& K,
                       const Eigen::Ref<const RowMatrixXf>& V, float scale);

struct AttendCollectResult {
  Eigen::VectorXf output;         // attention over prefix + window keys
  Eigen::VectorXf prefix_logits;  // raw unscaled q.k per prefix row
};

// attend over the concatenation [prefix; window], additionally returning the
// raw logits of the prefix part. The window holds the always-attended
// recent/draft keys; the prefix may be empty.
AttendCollectResult attend_collect(const Eigen::Ref<const Eigen::VectorXf>& q,
                                   const Eigen::Ref<const RowMatrixXf>& K_prefix,
                                   const Eigen::Ref<const RowMatrixXf>& V_prefix,
                                   const Eigen::Ref<const RowMatrixXf>& K_window,
                                   const Eigen::Ref<const RowMatrixXf>& V_window, float scale);

}  // namespace specattn
