#include "specattn/attention.hpp"

#include <cmath>
#include <stdexcept>

namespace specattn {

Eigen::VectorXd softmax_stable(const Eigen::Ref<const Eigen::VectorXf>& logits, double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("softmax_stable: scale must be positive");
  }
  const int64_t n = logits.size();
  double max_scaled = -std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < n; ++i) {
    const float l = logits[i];
    if (l == kMaskedLogit) continue;
    max_scaled = std::max(max_scaled, static_cast<double>(l) * scale);
  }
  if (!std::isfinite(max_scaled)) {
    throw std::domain_error("softmax_stable: no finite logit");
  }
  Eigen::VectorXd probs(n);
  double sum = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const float l = logits[i];
    const double w = (l == kMaskedLogit) ? 0.0 : std::exp(static_cast<double>(l) * scale - max_scaled);
    probs[i] = w;
    sum += w;
  }
  probs /= sum;
  return probs;
}

namespace {

// Shared two-segment core: logits and the value aggregation walk the prefix
// rows then the window rows, so the split never changes the arithmetic.
Eigen::VectorXf attend_segments(const Eigen::Ref<const Eigen::VectorXf>& q,
                                const Eigen::Ref<const RowMatrixXf>& K0,
                                const Eigen::Ref<const RowMatrixXf>& V0,
                                const Eigen::Ref<const RowMatrixXf>& K1,
                                const Eigen::Ref<const RowMatrixXf>& V1, float scale,
                                Eigen::VectorXf* raw_prefix_logits) {
  const int64_t m0 = K0.rows();
  const int64_t m1 = K1.rows();
  const int64_t m = m0 + m1;
  if (m < 1) {
    throw std::invalid_argument("attend: at least one key required");
  }
  const int64_t d = q.size();
  if (K0.cols() != d || K1.cols() != d || V0.cols() != d || V1.cols() != d ||
      V0.rows() != m0 || V1.rows() != m1) {
    throw std::invalid_argument("attend: shape mismatch");
  }

  Eigen::VectorXf logits(m);
  for (int64_t i = 0; i < m0; ++i) logits[i] = q.dot(K0.row(i));
  for (int64_t i = 0; i < m1; ++i) logits[m0 + i] = q.dot(K1.row(i));
  if (raw_prefix_logits != nullptr) *raw_prefix_logits = logits.head(m0);

  const Eigen::VectorXd w = softmax_stable(logits, static_cast<double>(scale));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for (int64_t i = 0; i < m0; ++i) acc += w[i] * V0.row(i).transpose().cast<double>();
  for (int64_t i = 0; i < m1; ++i) acc += w[m0 + i] * V1.row(i).transpose().cast<double>();
  return acc.cast<float>();
}

}  // namespace

Eigen::VectorXf attend(const Eigen::Ref<const Eigen::VectorXf>& q,
                       const Eigen::Ref<const RowMatrixXf>& K,
                       const Eigen::Ref<const RowMatrixXf>& V, float scale) {
  static const RowMatrixXf empty(0, 0);
  RowMatrixXf none(0, q.size());
  return attend_segments(q, none, none, K, V, scale, nullptr);
}

AttendCollectResult attend_collect(const Eigen::Ref<const Eigen::VectorXf>& q,
                                   const Eigen::Ref<const RowMatrixXf>& K_prefix,
                                   const Eigen::Ref<const RowMatrixXf>& V_prefix,
                                   const Eigen::Ref<const RowMatrixXf>& K_window,
                                   const Eigen::Ref<const RowMatrixXf>& V_window, float scale) {
  AttendCollectResult out;
  out.output = attend_segments(q, K_prefix, V_prefix, K_window, V_window, scale,
                               &out.prefix_logits);
  return out;
}

}  // namespace specattn
