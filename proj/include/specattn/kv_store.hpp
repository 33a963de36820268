#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "specattn/config.hpp"
#include "specattn/weights.hpp"

namespace specattn {

// Token-granular key/value storage, one growable (tokens x head_dim) pair of
// row-major buffers per (layer, kv_head). The decode loop is the single
// writer; appends past committed() are provisional until the owner either
// truncates them away or moves the committed mark forward.
class KvStore {
 public:
  explicit KvStore(const ModelConfig& config);

  int64_t size() const { return len_; }
  int64_t committed() const { return committed_; }
  int64_t max_context() const { return max_context_; }
  int64_t n_layers() const { return n_layers_; }
  int64_t n_kv_heads() const { return n_kv_heads_; }
  int64_t head_dim() const { return head_dim_; }

  int64_t bytes_per_token() const { return 2 * n_layers_ * n_kv_heads_ * head_dim_ * 4; }
  int64_t kv_bytes(int64_t context_len) const { return context_len * bytes_per_token(); }

  // Appends one token's keys/values for every (layer, kv_head); both inputs
  // are (n_layers * n_kv_heads) x head_dim with rows in layer-major order.
  // Returns the new length. Throws std::length_error past max_context.
  int64_t append(const RowMatrixXf& keys, const RowMatrixXf& values);

  // Rolls back to to_len tokens; the committed mark is clamped accordingly.
  // Throws std::out_of_range when to_len exceeds the current length.
  void truncate(int64_t to_len);

  void set_committed(int64_t len);

  // Copies of the key/value rows at the given strictly increasing positions.
  std::pair<RowMatrixXf, RowMatrixXf> gather(int64_t layer, int64_t kv_head,
                                             std::span<const int64_t> indices) const;

  // Zero-copy views of the first size() rows, for the attention path.
  Eigen::Block<const RowMatrixXf> keys(int64_t layer, int64_t kv_head) const {
    return slab(keys_, layer, kv_head).topRows(len_);
  }
  Eigen::Block<const RowMatrixXf> values(int64_t layer, int64_t kv_head) const {
    return slab(values_, layer, kv_head).topRows(len_);
  }

  // Page min/max summaries over keys for query-aware selection; maintained
  // incrementally by append/truncate once enabled.
  void enable_page_summaries(int64_t page_size);
  bool page_summaries_enabled() const { return page_size_ > 0; }
  int64_t page_size() const { return page_size_; }
  int64_t n_pages() const;
  Eigen::Block<const RowMatrixXf> page_min(int64_t layer, int64_t kv_head) const;
  Eigen::Block<const RowMatrixXf> page_max(int64_t layer, int64_t kv_head) const;

 private:
  const RowMatrixXf& slab(const std::vector<RowMatrixXf>& s, int64_t layer,
                          int64_t kv_head) const {
    return s[static_cast<size_t>(layer * n_kv_heads_ + kv_head)];
  }
  RowMatrixXf& slab(std::vector<RowMatrixXf>& s, int64_t layer, int64_t kv_head) {
    return s[static_cast<size_t>(layer * n_kv_heads_ + kv_head)];
  }
  void ensure_capacity(int64_t rows);
  void refresh_tail_page();

  int64_t n_layers_;
  int64_t n_kv_heads_;
  int64_t head_dim_;
  int64_t max_context_;
  int64_t len_ = 0;
  int64_t committed_ = 0;
  int64_t capacity_ = 0;
  std::vector<RowMatrixXf> keys_;
  std::vector<RowMatrixXf> values_;

  int64_t page_size_ = 0;
  std::vector<RowMatrixXf> page_min_;
  std::vector<RowMatrixXf> page_max_;
};

}  // namespace specattn
