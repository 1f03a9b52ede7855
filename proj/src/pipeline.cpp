#include "sced/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include "sced/init.hpp"
#include "sced/parallel.hpp"
#include "sced/rng.hpp"

namespace sced {

namespace {

double now_ms() {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Matrix sample_variance(const Dataset& data) {
  const Vector mean = data.values.colwise().mean();
  const int n = static_cast<int>(data.n());
  Matrix var = Matrix::Zero(data.p(), data.p());
  for (int i = 0; i < n; ++i) {
    const Vector r = data.values.row(i).transpose() - mean;
    var.noalias() += r * r.transpose();
  }
  return var / double(n);
}

// expand cluster means to one row per observation
Matrix expand_means(const Matrix& means, const Partition& part) {
  Matrix beta(part.n(), means.cols());
  for (int i = 0; i < part.n(); ++i) beta.row(i) = means.row(part.labels[i]);
  return beta;
}

double sp_objective(const Dataset& data, const Matrix& beta, const Matrix& mu,
                    const Matrix& W_half, double lambda) {
  double fit = 0.5 * (data.values - beta).rowwise().squaredNorm().sum();
  double pen = 0.0;
  const Matrix wb = beta * W_half;
  const Matrix wmu = mu * W_half;
  for (int i = 0; i < beta.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < mu.rows(); ++c)
      best = std::min(best, (wb.row(i) - wmu.row(c)).lpNorm<1>());
    pen += best;
  }
  return fit + lambda * pen;
}

}  // namespace

FitReport fit_once(const Dataset& data, int k, const FitConfig& config) {
  config.validate();
  const int n = static_cast<int>(data.n());
  const int p = static_cast<int>(data.p());
  if (k < 1 || k > n) throw ScedError("cluster count out of range");
  const TransformSpec tf{config.d0, p};

  FitReport rep;
  rep.k = k;

  Partition step4_partition;
  EllipticalParams step4_params;

  if (k == 1) {
    std::vector<int> labels(n, 0);
    step4_partition = Partition(std::move(labels), 1);
    auto [scatter, sigma2] = scatter_from_variance(sample_variance(data));
    step4_params.means = data.values.colwise().mean();
    step4_params.scatter = scatter;
    step4_params.probs = Vector::Ones(1);
    rep.sigma2_x = sigma2;
  } else {
    // Steps 1-2: k-means seeding and Mahalanobis refinement
    double t0 = now_ms();
    const Partition km = kmeans(data, k, config.seed, config.kmeans_restarts);
    rep.kmeans_stage.partition = km;
    rep.kmeans_stage.params.means = cluster_means(data, km);
    rep.kmeans_stage.objective = -within_ss(data, km, rep.kmeans_stage.params.means);
    rep.kmeans_stage.wall_ms = now_ms() - t0;
    rep.kmeans_stage.present = true;

    t0 = now_ms();
    int kb = k;
    try {
      kb = std::max(k, kbar(n));
    } catch (const TooFewPoints&) {
      kb = k;
    }
    std::vector<InitResult> inits(kb - k + 1);
    for (int l = k; l <= kb; ++l)
      inits[l - k] = init_refine(data, l, task_seed(config.seed, 0x1515, l),
                                 config.init_max_iter, config.kmeans_restarts);
    const InitResult& is = inits[0];
    rep.is_stage.partition = is.partition;
    rep.is_stage.params.means = is.means;
    rep.is_stage.objective = -is.within_ss;
    rep.is_stage.wall_ms = now_ms() - t0;
    rep.is_stage.present = true;

    // Step 3: separation penalty from the best warm start
    t0 = now_ms();
    Eigen::SelfAdjointEigenSolver<Matrix> es(is.pooled_var);
    if (es.eigenvalues().minCoeff() <= 1e-12) throw SingularPooledVariance();
    const Matrix w_half_inv = es.operatorInverseSqrt();
    const Matrix W = w_half_inv * w_half_inv;
    const Matrix W_half = sqrt_spd(W);

    int best_l = 0;
    double best_obj = std::numeric_limits<double>::infinity();
    for (int idx = 0; idx <= kb - k; ++idx) {
      const Matrix beta0 = expand_means(inits[idx].means, inits[idx].partition);
      double lam1;
      try {
        lam1 = lambda_grid(beta0, is.means, W_half, config.lambda_grid_size).front();
      } catch (const DegenerateGrid&) {
        continue;
      }
      const double obj = sp_objective(data, beta0, is.means, W_half, lam1);
      if (obj < best_obj) {
        best_obj = obj;
        best_l = idx;
      }
    }
    const Matrix beta0 = expand_means(inits[best_l].means, inits[best_l].partition);
    const SpResult sp = sp_path_fit(data, k, beta0, is.means, W, config);
    rep.lambda_star = sp.lambda;
    for (const auto& e : sp.path.entries) {
      rep.lambda_values.push_back(e.lambda);
      rep.lambda_fit_ss.push_back(e.fit_ss);
    }
    if (sp.lambda_bound_warning)
      rep.warnings.push_back("selected lambda is below the theoretical bound");

    auto [scatter, sigma2] = scatter_from_variance(sp.sigma_x_cluster);
    rep.sigma2_x = sigma2;
    step4_partition = sp.partition;
    step4_params.means = sp.mu;
    step4_params.scatter = scatter;

    rep.sp_stage.partition = sp.partition;
    rep.sp_stage.params.means = sp.mu;
    rep.sp_stage.params.scatter = scatter;
    rep.sp_stage.objective =
        -sp_objective(data, sp.beta, sp.mu, W_half, sp.lambda);
    rep.sp_stage.wall_ms = now_ms() - t0;
    rep.sp_stage.present = true;

    if (!sp.partition.proper()) {
      rep.warnings.push_back("separation-penalty partition left empty clusters");
      rep.degraded = true;
      step4_partition = is.partition;
      step4_params.means = is.means;
    }
  }
  step4_params.probs = pi_hat(step4_partition);
  step4_params = validate_params(step4_params);

  // Step 4: bandwidth selection and pseudo-likelihood maximization
  double t0 = now_ms();
  const Vector y0 = transform_sample(data, step4_partition, step4_params, tf);
  const BandwidthSelection bw = cv_bandwidth(y0, config.cv_grid_size);
  rep.h_tilde = bw.h_tilde;
  rep.h_hat = bw.h_hat;

  const bool run_pml = !config.use_pl2 || config.both_objectives;
  const bool run_pmml = config.use_pl2 || config.both_objectives;
  if (run_pml) {
    const MaximizeResult m = maximize(PlObjective::kHard, step4_params, data,
                                      step4_partition, bw.h_hat, tf, config);
    rep.pml_stage.partition = step4_partition;
    rep.pml_stage.params = m.params;
    rep.pml_stage.objective = m.value;
    rep.pml_stage.present = true;
  }
  if (run_pmml) {
    const MaximizeResult m = maximize(PlObjective::kMarginal, step4_params, data,
                                      step4_partition, bw.h_hat, tf, config);
    rep.pmml_stage.partition = step4_partition;
    rep.pmml_stage.params = m.params;
    rep.pmml_stage.objective = m.value;
    rep.pmml_stage.present = true;
  }
  const StageReport& step4 = config.use_pl2 ? rep.pmml_stage : rep.pml_stage;
  rep.pml_stage.wall_ms = rep.pmml_stage.wall_ms = (now_ms() - t0) / 2.0;

  // Steps 5-6: optimal-clustering refinement
  t0 = now_ms();
  const PlObjective obj = config.use_pl2 ? PlObjective::kMarginal : PlObjective::kHard;
  try {
    const RefineResult rf =
        refine_loop(data, step4_partition, step4.params, obj, tf, config);
    rep.oc_stage.partition = rf.partition;
    rep.oc_stage.params = rf.params;
    rep.oc_stage.objective = rf.objective;
    rep.oc_stage.present = true;
    rep.h_tilde_star = rf.h_tilde;
    rep.h_hat_star = rf.h_hat;
    if (rf.cycle_detected) rep.warnings.push_back("refinement cycled; kept best iterate");
  } catch (const ScedError& e) {
    rep.warnings.push_back(std::string("refinement failed: ") + e.what());
    rep.degraded = true;
    rep.oc_stage.partition = step4_partition;
    rep.oc_stage.params = step4.params;
    rep.oc_stage.objective = step4.objective;
    rep.oc_stage.present = true;
    rep.h_tilde_star = bw.h_tilde;
    rep.h_hat_star = bw.h_hat;
  }
  rep.oc_stage.wall_ms = now_ms() - t0;

  rep.loo_loglik = loo_marginal_loglik(rep.oc_stage.params, data, rep.oc_stage.partition,
                                       rep.h_tilde_star, tf);
  return rep;
}

SpicCurve select_k_curve(const Dataset& data, const FitConfig& config,
                         std::vector<FitReport>* reports) {
  const int count = config.k_max - config.k_min + 1;
  std::vector<FitReport> local(count);
  auto fit_k = [&](int k) -> KFitOutcome {
    KFitOutcome out;
    try {
      FitReport r = fit_once(data, k, config);
      out.loo_loglik = r.loo_loglik;
      local[k - config.k_min] = std::move(r);
    } catch (const std::exception& e) {
      out.failed = true;
      out.error = e.what();
    }
    return out;
  };
  SpicCurve curve =
      select_k(static_cast<int>(data.n()), static_cast<int>(data.p()), config.k_min,
               config.k_max, fit_k, thread_count(config.threads));
  if (reports) *reports = std::move(local);
  return curve;
}

}  // namespace sced
