#include <cstdint>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sced/io.hpp"
#include "sced/parallel.hpp"
#include "sced/pipeline.hpp"
#include "sced/rng.hpp"
#include "sced/sim.hpp"

namespace {

int run_fit(const std::string& csv_path, int k, int k_min, int k_max, std::uint64_t seed,
            double d0, int lambda_grid, const std::string& objective, int threads,
            const std::string& out_dir, bool no_standardize) {
  const std::string bytes = sced::read_file(csv_path);
  const sced::CsvTable table = sced::read_csv(csv_path);
  sced::Dataset data(table.values);
  if (!no_standardize) data = sced::standardize(data);

  sced::FitConfig cfg;
  cfg.seed = seed;
  cfg.d0 = d0;
  cfg.lambda_grid_size = lambda_grid;
  cfg.use_pl2 = objective != "pl1";
  cfg.threads = threads;

  if (k > 0) {
    cfg.k_min = cfg.k_max = k;
    const sced::FitReport report = sced::fit_once(data, k, cfg);
    sced::write_fit_report(out_dir, report, nullptr, data, cfg,
                           sced::content_hash(bytes));
    std::cout << "fit complete: k=" << k << " loo_loglik=" << report.loo_loglik << "\n";
  } else {
    cfg.k_min = k_min;
    cfg.k_max = k_max;
    std::vector<sced::FitReport> reports;
    const sced::SpicCurve curve = sced::select_k_curve(data, cfg, &reports);
    const sced::FitReport& best = reports[curve.selected_k - cfg.k_min];
    sced::write_fit_report(out_dir, best, &curve, data, cfg, sced::content_hash(bytes));
    std::cout << "selected k=" << curve.selected_k << "\n";
    for (const auto& pt : curve.points) {
      std::cout << "  k=" << pt.k;
      if (pt.failed)
        std::cout << " failed: " << pt.error << "\n";
      else
        std::cout << " spic=" << pt.spic_value << " loo=" << pt.loo_loglik << "\n";
    }
  }
  return 0;
}

int run_simulate(const std::string& model, int p, int k, double sigma, int n,
                 std::uint64_t seed, const std::string& out_csv,
                 const std::string& truth_path) {
  sced::Generator gen;
  if (model == "m1") {
    gen = sced::Generator::kM1;
  } else if (model == "m2") {
    gen = sced::Generator::kM2;
  } else {
    std::cerr << "unknown model '" << model << "'\n";
    return 2;
  }
  const sced::SimDesign design = sced::SimDesign::make(gen, p, k, sigma, n);
  auto rng = sced::make_rng(seed);
  const sced::SimDraw draw = sced::generate_dataset(design, rng);

  std::vector<std::string> header(p);
  for (int j = 0; j < p; ++j) header[j] = "x" + std::to_string(j + 1);
  sced::write_csv(out_csv, header, draw.data.values);
  if (!truth_path.empty()) sced::write_truth(truth_path, design, draw, seed);
  std::cout << "wrote " << n << "x" << p << " sample to " << out_csv << "\n";
  return 0;
}

int run_bench(const std::string& grid_path, const std::string& out_dir, std::uint64_t seed,
              int threads) {
  const auto cells = sced::read_bench_grid(grid_path);
  std::vector<std::vector<sced::RepMetrics>> results;
  bool any_cell_failed = false;
  for (const auto& cell : cells) {
    sced::BenchOptions opt;
    opt.config.seed = seed;
    opt.config.k_min = opt.config.k_max = cell.design.k;
    opt.replications = cell.replications;
    opt.do_select_k = cell.do_select_k;
    opt.k_range_min = cell.k_range_min;
    opt.k_range_max = cell.k_range_max;
    opt.compute_rse = cell.compute_rse;
    opt.checkpoint_dir = out_dir + "/checkpoints";
    opt.threads = threads;
    results.push_back(sced::run_cell(cell.design, opt));

    int failures = 0;
    std::vector<double> km, is, sp, oc;
    for (const auto& m : results.back()) {
      if (m.failed) {
        ++failures;
        continue;
      }
      if (m.ri_kmeans >= 0) km.push_back(m.ri_kmeans);
      if (m.ri_is >= 0) is.push_back(m.ri_is);
      if (m.ri_sp >= 0) sp.push_back(m.ri_sp);
      if (m.ri_oc >= 0) oc.push_back(m.ri_oc);
    }
    if (failures == cell.replications) any_cell_failed = true;
    auto fmt = [](const sced::Aggregate& a) {
      std::ostringstream os;
      os << std::fixed << std::setprecision(2) << 100.0 * a.mean << " ("
         << 100.0 * a.mc_se << ")";
      return os.str();
    };
    std::cout << cell.design.cell_key() << "  kmeans " << fmt(sced::aggregate(km))
              << "  IS " << fmt(sced::aggregate(is)) << "  SP " << fmt(sced::aggregate(sp))
              << "  OC " << fmt(sced::aggregate(oc)) << "  failures " << failures << "\n";
  }
  sced::write_bench_results(out_dir, cells, results);
  return any_cell_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semiparametric clusterwise elliptical distribution toolkit"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "fit the model to a CSV file");
  std::string csv_path, out_dir = "out", objective = "pl2", k_range;
  int k = 0, threads = 0, lambda_grid = 20;
  std::uint64_t seed = 0;
  double d0 = 1.0;
  bool no_standardize = false;
  fit->add_option("csv", csv_path, "input CSV with header")->required();
  fit->add_option("--k", k, "number of clusters");
  fit->add_option("--k-range", k_range, "inclusive range A:B for selection");
  fit->add_option("--seed", seed, "random seed");
  fit->add_option("--d0", d0, "transformation constant");
  fit->add_option("--lambda-grid", lambda_grid, "shrinkage grid size");
  fit->add_option("--objective", objective, "pl1 or pl2")
      ->check(CLI::IsMember({"pl1", "pl2"}));
  fit->add_option("--threads", threads, "worker threads (0 = auto)");
  fit->add_option("--out", out_dir, "output directory");
  fit->add_flag("--no-standardize", no_standardize, "skip column standardization");

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a benchmark dataset");
  std::string model = "m2", sim_out = "sim.csv", truth_path = "truth.json";
  int sp = 2, sk = 2, sn = 250;
  double ssigma = 1.0;
  std::uint64_t sseed = 0;
  sim->add_option("--model", model, "m1 or m2")->check(CLI::IsMember({"m1", "m2"}));
  sim->add_option("--p", sp, "dimension")->check(CLI::PositiveNumber);
  sim->add_option("--k", sk, "clusters (2 or 3)");
  sim->add_option("--sigma", ssigma, "scale")->check(CLI::PositiveNumber);
  sim->add_option("--n", sn, "sample size")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sseed, "random seed");
  sim->add_option("--out", sim_out, "output CSV path");
  sim->add_option("--truth", truth_path, "truth sidecar path (empty to skip)");

  // bench
  auto* bench = app.add_subcommand("bench", "run a Monte Carlo grid");
  std::string grid_path, bench_out = "bench_out";
  std::uint64_t bseed = 0;
  int bthreads = 0;
  bench->add_option("grid", grid_path, "JSON grid file")->required();
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--seed", bseed, "random seed");
  bench->add_option("--threads", bthreads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit) {
      int k_min = 1, k_max = 1;
      if (!k_range.empty()) {
        const auto pos = k_range.find(':');
        if (pos == std::string::npos) {
          std::cerr << "--k-range must be A:B\n";
          return 2;
        }
        k_min = std::stoi(k_range.substr(0, pos));
        k_max = std::stoi(k_range.substr(pos + 1));
        if (k_min < 1 || k_max < k_min) {
          std::cerr << "invalid --k-range\n";
          return 2;
        }
        k = 0;
      } else if (k < 1) {
        std::cerr << "provide --k or --k-range\n";
        return 2;
      }
      return run_fit(csv_path, k, k_min, k_max, seed, d0, lambda_grid, objective, threads,
                     out_dir, no_standardize);
    }
    if (*sim) return run_simulate(model, sp, sk, ssigma, sn, sseed, sim_out, truth_path);
    if (*bench) return run_bench(grid_path, bench_out, bseed, bthreads);
  } catch (const sced::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const sced::ScedError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 3;
  }
  return 2;
}
