#include "sced/cluster.hpp"

#include <cmath>
#include <limits>
#include <set>

namespace sced {

PosteriorMatrix posteriors(const Dataset& data, const EllipticalParams& params, double h,
                           const TransformSpec& transform, const Partition& partition_for_g) {
  const Vector y = transform_sample(data, partition_for_g, params, transform);
  const GeneratorEstimate g(y, h, transform);
  const double det = params.scatter.determinant();
  const int n = static_cast<int>(data.n());
  const int k = params.k();
  const int p = params.p();
  Eigen::LLT<Matrix> llt(params.scatter);

  PosteriorMatrix out;
  out.probs.resize(n, k);
  Vector num(k);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      const double yc = transform_y(data.values.row(i).transpose(),
                                    params.means.row(c).transpose(), llt, transform);
      num[c] = params.probs[c] * plugin_weight(yc, p, det, transform) * g(yc);
    }
    const double den = num.sum();
    if (den <= 0.0) {
      out.probs.row(i).setConstant(1.0 / double(k));
      ++out.n_uniform_rows;
    } else {
      out.probs.row(i) = (num / den).transpose();
    }
  }
  return out;
}

Partition refine_partition(const PosteriorMatrix& post) {
  const int n = static_cast<int>(post.probs.rows());
  const int k = static_cast<int>(post.probs.cols());
  std::vector<int> labels(n, 0);
  for (int i = 0; i < n; ++i) {
    double best = post.probs(i, 0);
    for (int c = 1; c < k; ++c)
      if (post.probs(i, c) > best) {
        best = post.probs(i, c);
        labels[i] = c;
      }
  }
  return Partition(std::move(labels), k);
}

RefineResult refine_loop(const Dataset& data, const Partition& start,
                         const EllipticalParams& start_params, PlObjective objective,
                         const TransformSpec& transform, const FitConfig& config) {
  RefineResult best;
  best.objective = -std::numeric_limits<double>::infinity();

  Partition part = start;
  EllipticalParams params = start_params;
  std::set<std::vector<int>> seen;
  seen.insert(part.labels);

  std::vector<double> history;
  RefineResult cur;
  bool cycle = false;
  bool converged = false;
  for (int it = 0; it < config.refine_max_iter; ++it) {
    if (objective == PlObjective::kHard) params.probs = pi_hat(part);

    const Vector y = transform_sample(data, part, params, transform);
    const BandwidthSelection sel = cv_bandwidth(y, config.cv_grid_size);

    const MaximizeResult m =
        maximize(objective, params, data, part, sel.h_hat, transform, config);
    params = m.params;

    cur.partition = part;
    cur.params = params;
    cur.h_tilde = sel.h_tilde;
    cur.h_hat = sel.h_hat;
    cur.objective = m.value;
    cur.iterations = it + 1;
    history.push_back(m.value);
    if (m.value > best.objective) best = cur;

    const PosteriorMatrix post = posteriors(data, params, sel.h_hat, transform, part);
    Partition next = refine_partition(post);
    if (!next.proper()) break;
    if (next.labels == part.labels) {
      best = cur;
      converged = true;
      break;
    }
    if (seen.count(next.labels)) {
      cycle = true;
      break;
    }
    seen.insert(next.labels);
    part = std::move(next);
  }
  best.objective_history = std::move(history);
  best.iterations = cur.iterations;
  best.cycle_detected = cycle;
  best.converged = converged;
  return best;
}

}  // namespace sced
