#include "sced/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "sced/parallel.hpp"
#include "sced/pipeline.hpp"
#include "sced/plik.hpp"
#include "sced/rng.hpp"

namespace sced {

namespace {

constexpr double kM1Cap = 11.25;  // 45/4, support bound of the M1 generator

// radial density of M1 (unnormalized): r^{p+9} (45/4 - r^2)^{1/4} on [0, rmax]
double m1_radial_unnorm(double r, int p) {
  const double s = kM1Cap - r * r;
  if (s <= 0.0 || r < 0.0) return 0.0;
  return std::pow(r, p + 9) * std::pow(s, 0.25);
}

struct M1Table {
  std::vector<double> r;    // 4096 grid points
  std::vector<double> cdf;  // normalized
  double second_moment = 0.0;
};

const M1Table& m1_table(int p) {
  static std::mutex mu;
  static std::map<int, M1Table> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;

  M1Table t;
  const int m = 4096;
  const double rmax = std::sqrt(kM1Cap);
  t.r.resize(m);
  t.cdf.resize(m);
  std::vector<double> dens(m);
  for (int j = 0; j < m; ++j) {
    t.r[j] = rmax * double(j) / double(m - 1);
    dens[j] = m1_radial_unnorm(t.r[j], p);
  }
  t.cdf[0] = 0.0;
  double ssum = 0.0;
  for (int j = 1; j < m; ++j) {
    const double dr = t.r[j] - t.r[j - 1];
    const double seg = 0.5 * (dens[j] + dens[j - 1]) * dr;
    t.cdf[j] = t.cdf[j - 1] + seg;
    ssum += 0.5 * (dens[j] * t.r[j] * t.r[j] + dens[j - 1] * t.r[j - 1] * t.r[j - 1]) * dr;
  }
  const double total = t.cdf[m - 1];
  for (int j = 0; j < m; ++j) t.cdf[j] /= total;
  t.second_moment = ssum / total;
  return cache.emplace(p, std::move(t)).first->second;
}

}  // namespace

double radial_second_moment(Generator gen, int p) {
  if (gen == Generator::kM2) return double(p);
  return m1_table(p).second_moment;
}

double sample_radial(Generator gen, int p, std::mt19937_64& rng) {
  if (gen == Generator::kM2) {
    std::chi_squared_distribution<double> chi2{double(p)};
    return std::sqrt(chi2(rng));
  }
  const M1Table& t = m1_table(p);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  const auto it = std::lower_bound(t.cdf.begin(), t.cdf.end(), u);
  const size_t j = std::min<size_t>(std::max<ptrdiff_t>(it - t.cdf.begin(), 1), t.cdf.size() - 1);
  const double c0 = t.cdf[j - 1], c1 = t.cdf[j];
  const double w = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
  return t.r[j - 1] + w * (t.r[j] - t.r[j - 1]);
}

SimDesign SimDesign::make(Generator gen, int p, int k, double sigma, int n) {
  if (p < 1 || n < 2 || sigma <= 0.0) throw ScedError("invalid design");
  if (k != 2 && k != 3) throw ScedError("designs define mean sets for k = 2 or 3 only");
  SimDesign d;
  d.generator = gen;
  d.p = p;
  d.k = k;
  d.n = n;
  d.sigma = sigma;
  d.means = Matrix::Zero(k, p);
  // the non-origin mean alternates (1.5, 0, 1.5, 0, ...)
  const int alt = k == 2 ? 1 : 2;
  for (int j = 0; j < p; j += 2) d.means(alt, j) = 1.5;
  if (k == 2) {
    d.probs = Vector(2);
    d.probs << 0.6, 0.4;
  } else {
    d.means.row(1).setConstant(1.5);
    d.probs = Vector(3);
    d.probs << 0.4, 0.3, 0.3;
  }
  d.sigma_x = sigma * sigma *
              (0.175 * Matrix::Identity(p, p) + 0.075 * Matrix::Ones(p, p));
  return d;
}

std::string SimDesign::cell_key() const {
  std::ostringstream os;
  os << (generator == Generator::kM1 ? "m1" : "m2") << "_p" << p << "_k" << k << "_s"
     << sigma << "_n" << n;
  return os.str();
}

SimDraw generate_dataset(const SimDesign& design, std::mt19937_64& rng) {
  const int n = design.n;
  const int p = design.p;
  const Matrix root = sqrt_spd(design.sigma_x);
  const double scale = std::sqrt(double(p) / radial_second_moment(design.generator, p));

  Matrix values(n, p);
  std::vector<int> labels(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    const double u = u01(rng);
    int c = 0;
    double acc = design.probs[0];
    while (c + 1 < design.k && u > acc) acc += design.probs[++c];
    labels[i] = c;

    Vector dir(p);
    double norm2 = 0.0;
    do {
      for (int j = 0; j < p; ++j) dir[j] = gauss(rng);
      norm2 = dir.squaredNorm();
    } while (norm2 <= 0.0);
    dir /= std::sqrt(norm2);
    const double r = sample_radial(design.generator, p, rng);
    values.row(i) =
        design.means.row(labels[i]) + (root * (scale * r * dir)).transpose();
  }

  SimDraw draw;
  draw.data = Dataset(std::move(values));
  draw.truth = Partition(std::move(labels), design.k);
  draw.params.means = design.means;
  auto [scatter, sigma2] = scatter_from_variance(design.sigma_x);
  (void)sigma2;
  draw.params.scatter = scatter;
  draw.params.probs = design.probs;
  return draw;
}

double rand_index(const Partition& a, const Partition& b) {
  if (a.n() != b.n()) throw LengthMismatch();
  const int n = a.n();
  Eigen::MatrixXi table = Eigen::MatrixXi::Zero(a.k, b.k);
  for (int i = 0; i < n; ++i) ++table(a.labels[i], b.labels[i]);
  auto choose2 = [](long long m) { return m * (m - 1) / 2; };
  long long sum_cells = 0;
  for (int i = 0; i < a.k; ++i)
    for (int j = 0; j < b.k; ++j) sum_cells += choose2(table(i, j));
  long long sum_rows = 0, sum_cols = 0;
  for (int i = 0; i < a.k; ++i) sum_rows += choose2(table.row(i).sum());
  for (int j = 0; j < b.k; ++j) sum_cols += choose2(table.col(j).sum());
  const long long total = choose2(n);
  // agreements = pairs together in both + pairs apart in both
  const long long agree = total + 2 * sum_cells - sum_rows - sum_cols;
  return double(agree) / double(total);
}

double rse(const Vector& estimate, const Vector& truth) {
  if (estimate.size() != truth.size()) throw LengthMismatch();
  return std::sqrt((estimate - truth).squaredNorm() / double(truth.size()));
}

std::vector<int> align_clusters(const Matrix& est_means, const Matrix& true_means) {
  const int k = static_cast<int>(true_means.rows());
  if (est_means.rows() != k) throw LengthMismatch();
  if (k > 8) throw ScedError("alignment supports k <= 8");
  std::vector<int> perm(k), best(k);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int c = 0; c < k; ++c)
      cost += (est_means.row(perm[c]) - true_means.row(c)).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (a.count == 0) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.count;
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.mc_se = std::sqrt(ss / double(a.count - 1) / double(a.count));
  }
  return a;
}

namespace {

using nlohmann::json;

std::string checkpoint_path(const std::string& dir, const SimDesign& d, int rep) {
  return dir + "/" + d.cell_key() + "_r" + std::to_string(rep) + ".json";
}

json metrics_to_json(const RepMetrics& m) {
  return json{{"ri_kmeans", m.ri_kmeans}, {"ri_is", m.ri_is},
              {"ri_sp", m.ri_sp},         {"ri_oc", m.ri_oc},
              {"rse_means_pml", m.rse_means_pml}, {"rse_var_pmml", m.rse_var_pmml},
              {"selected_k", m.selected_k}, {"failed", m.failed},
              {"error", m.error}};
}

RepMetrics metrics_from_json(const json& j) {
  RepMetrics m;
  m.ri_kmeans = j.at("ri_kmeans").get<double>();
  m.ri_is = j.at("ri_is").get<double>();
  m.ri_sp = j.at("ri_sp").get<double>();
  m.ri_oc = j.at("ri_oc").get<double>();
  m.rse_means_pml = j.at("rse_means_pml").get<double>();
  m.rse_var_pmml = j.at("rse_var_pmml").get<double>();
  m.selected_k = j.at("selected_k").get<int>();
  m.failed = j.at("failed").get<bool>();
  m.error = j.at("error").get<std::string>();
  return m;
}

Vector stack_rows(const Matrix& m, const std::vector<int>& perm) {
  Vector v(m.size());
  int pos = 0;
  for (size_t c = 0; c < perm.size(); ++c)
    for (int j = 0; j < m.cols(); ++j) v[pos++] = m(perm[c], j);
  return v;
}

Vector upper_triangle(const Matrix& m) {
  const int p = static_cast<int>(m.rows());
  Vector v(p * (p + 1) / 2);
  int pos = 0;
  for (int i = 0; i < p; ++i)
    for (int j = i; j < p; ++j) v[pos++] = m(i, j);
  return v;
}

}  // namespace

std::vector<RepMetrics> run_cell(const SimDesign& design, const BenchOptions& options) {
  std::vector<RepMetrics> out(options.replications);
  if (!options.checkpoint_dir.empty())
    std::filesystem::create_directories(options.checkpoint_dir);

  const TransformSpec tf{options.config.d0, design.p};
  parallel_for(options.replications, thread_count(options.threads), [&](int rep) {
    if (!options.checkpoint_dir.empty()) {
      const std::string path = checkpoint_path(options.checkpoint_dir, design, rep);
      std::ifstream in(path);
      if (in) {
        out[rep] = metrics_from_json(json::parse(in));
        return;
      }
    }

    RepMetrics m;
    try {
      auto rng =
          make_rng(task_seed(options.config.seed, std::hash<std::string>{}(design.cell_key()),
                             static_cast<std::uint64_t>(rep)));
      const SimDraw draw = generate_dataset(design, rng);

      FitConfig cfg = options.config;
      cfg.seed = task_seed(options.config.seed, 0xf17, static_cast<std::uint64_t>(rep),
                           std::hash<std::string>{}(design.cell_key()));
      cfg.threads = 1;
      cfg.both_objectives = options.compute_rse;
      const FitReport rep_fit = fit_once(draw.data, design.k, cfg);

      if (rep_fit.kmeans_stage.present)
        m.ri_kmeans = rand_index(rep_fit.kmeans_stage.partition, draw.truth);
      if (rep_fit.is_stage.present)
        m.ri_is = rand_index(rep_fit.is_stage.partition, draw.truth);
      if (rep_fit.sp_stage.present)
        m.ri_sp = rand_index(rep_fit.sp_stage.partition, draw.truth);
      if (rep_fit.oc_stage.present)
        m.ri_oc = rand_index(rep_fit.oc_stage.partition, draw.truth);

      if (options.compute_rse && rep_fit.pml_stage.present) {
        const auto perm = align_clusters(rep_fit.pml_stage.params.means, design.means);
        m.rse_means_pml = rse(stack_rows(rep_fit.pml_stage.params.means, perm),
                              stack_rows(design.means, [&] {
                                std::vector<int> id(design.k);
                                std::iota(id.begin(), id.end(), 0);
                                return id;
                              }()));
      }
      if (options.compute_rse && rep_fit.pmml_stage.present) {
        const Matrix var_hat =
            estimate_variance_matrix(draw.data, rep_fit.pmml_stage.partition,
                                     rep_fit.pmml_stage.params, tf);
        m.rse_var_pmml = rse(upper_triangle(var_hat), upper_triangle(design.sigma_x));
      }

      if (options.do_select_k) {
        FitConfig sk = cfg;
        sk.k_min = options.k_range_min;
        sk.k_max = options.k_range_max;
        sk.both_objectives = false;
        const SpicCurve curve = select_k_curve(draw.data, sk);
        m.selected_k = curve.selected_k;
      }
    } catch (const std::exception& e) {
      m.failed = true;
      m.error = e.what();
    }
    out[rep] = m;

    if (!options.checkpoint_dir.empty()) {
      const std::string path = checkpoint_path(options.checkpoint_dir, design, rep);
      std::ofstream of(path + ".tmp");
      of << metrics_to_json(out[rep]).dump(2) << "\n";
      of.close();
      std::filesystem::rename(path + ".tmp", path);
    }
  });
  return out;
}

}  // namespace sced
