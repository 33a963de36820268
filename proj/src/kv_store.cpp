#include "specattn/kv_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace specattn {

KvStore::KvStore(const ModelConfig& cfg)
    : n_layers_(cfg.n_layers),
      n_kv_heads_(cfg.n_kv_heads),
      head_dim_(cfg.head_dim),
      max_context_(cfg.max_context) {
  keys_.resize(static_cast<size_t>(n_layers_ * n_kv_heads_));
  values_.resize(static_cast<size_t>(n_layers_ * n_kv_heads_));
}

void KvStore::ensure_capacity(int64_t rows) {
  if (rows <= capacity_) return;
  int64_t next = std::max<int64_t>(capacity_ * 2, 128);
  next = std::min(std::max(next, rows), max_context_);
  for (auto* slabs : {&keys_, &values_}) {
    for (RowMatrixXf& m : *slabs) {
      m.conservativeResize(next, head_dim_);
    }
  }
  capacity_ = next;
}

int64_t KvStore::append(const RowMatrixXf& keys, const RowMatrixXf& values) {
  if (len_ >= max_context_) {
    throw std::length_error("KvStore: append past max_context");
  }
  const int64_t slabs = n_layers_ * n_kv_heads_;
  if (keys.rows() != slabs || values.rows() != slabs || keys.cols() != head_dim_ ||
      values.cols() != head_dim_) {
    throw std::invalid_argument("KvStore: append expects one row per (layer, kv_head)");
  }
  ensure_capacity(len_ + 1);
  for (int64_t layer = 0; layer < n_layers_; ++layer) {
    for (int64_t head = 0; head < n_kv_heads_; ++head) {
      const int64_t r = layer * n_kv_heads_ + head;
      slab(keys_, layer, head).row(len_) = keys.row(r);
      slab(values_, layer, head).row(len_) = values.row(r);
    }
  }
  ++len_;
  if (page_size_ > 0) refresh_tail_page();
  return len_;
}

void KvStore::truncate(int64_t to_len) {
  if (to_len < 0 || to_len > len_) {
    throw std::out_of_range("KvStore: truncate beyond current length");
  }
  len_ = to_len;
  committed_ = std::min(committed_, len_);
  if (page_size_ > 0) refresh_tail_page();
}

void KvStore::set_committed(int64_t len) {
  if (len < 0 || len > len_) {
    throw std::out_of_range("KvStore: committed mark beyond current length");
  }
  committed_ = len;
}

std::pair<RowMatrixXf, RowMatrixXf> KvStore::gather(int64_t layer, int64_t kv_head,
                                                    std::span<const int64_t> indices) const {
  if (layer < 0 || layer >= n_layers_ || kv_head < 0 || kv_head >= n_kv_heads_) {
    throw std::out_of_range("KvStore: gather layer/head out of range");
  }
  int64_t prev = -1;
  for (int64_t i : indices) {
    if (i <= prev || i >= len_) {
      throw std::out_of_range("KvStore: gather indices must be strictly increasing and in range");
    }
    prev = i;
  }
  const int64_t n = static_cast<int64_t>(indices.size());
  RowMatrixXf k(n, head_dim_), v(n, head_dim_);
  const RowMatrixXf& ks = slab(keys_, layer, kv_head);
  const RowMatrixXf& vs = slab(values_, layer, kv_head);
  for (int64_t r = 0; r < n; ++r) {
    k.row(r) = ks.row(indices[static_cast<size_t>(r)]);
    v.row(r) = vs.row(indices[static_cast<size_t>(r)]);
  }
  return {std::move(k), std::move(v)};
}

void KvStore::enable_page_summaries(int64_t page_size) {
  if (page_size < 1) {
    throw std::invalid_argument("KvStore: page_size must be >= 1");
  }
  page_size_ = page_size;
  const int64_t max_pages = (max_context_ + page_size_ - 1) / page_size_;
  page_min_.assign(static_cast<size_t>(n_layers_ * n_kv_heads_), RowMatrixXf(max_pages, head_dim_));
  page_max_.assign(static_cast<size_t>(n_layers_ * n_kv_heads_), RowMatrixXf(max_pages, head_dim_));
  // rebuild all pages for already-present tokens
  for (int64_t layer = 0; layer < n_layers_; ++layer) {
    for (int64_t head = 0; head < n_kv_heads_; ++head) {
      const RowMatrixXf& ks = slab(keys_, layer, head);
      RowMatrixXf& mins = slab(page_min_, layer, head);
      RowMatrixXf& maxs = slab(page_max_, layer, head);
      for (int64_t p = 0; p * page_size_ < len_; ++p) {
        const int64_t begin = p * page_size_;
        const int64_t rows = std::min(page_size_, len_ - begin);
        mins.row(p) = ks.middleRows(begin, rows).colwise().minCoeff();
        maxs.row(p) = ks.middleRows(begin, rows).colwise().maxCoeff();
      }
    }
  }
}

int64_t KvStore::n_pages() const {
  if (page_size_ <= 0) return 0;
  return (len_ + page_size_ - 1) / page_size_;
}

Eigen::Block<const RowMatrixXf> KvStore::page_min(int64_t layer, int64_t kv_head) const {
  return slab(page_min_, layer, kv_head).topRows(n_pages());
}

Eigen::Block<const RowMatrixXf> KvStore::page_max(int64_t layer, int64_t kv_head) const {
  return slab(page_max_, layer, kv_head).topRows(n_pages());
}

void KvStore::refresh_tail_page() {
  if (len_ == 0) return;
  const int64_t p = (len_ - 1) / page_size_;
  const int64_t begin = p * page_size_;
  const int64_t rows = len_ - begin;
  for (int64_t layer = 0; layer < n_layers_; ++layer) {
    for (int64_t head = 0; head < n_kv_heads_; ++head) {
      const RowMatrixXf& ks = slab(keys_, layer, head);
      slab(page_min_, layer, head).row(p) = ks.middleRows(begin, rows).colwise().minCoeff();
      slab(page_max_, layer, head).row(p) = ks.middleRows(begin, rows).colwise().maxCoeff();
    }
  }
}

}  // namespace specattn
