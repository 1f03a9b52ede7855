#include "sced/io.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace sced {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line, int lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch == '\r') {
      // tolerated at end of line
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError(lineno, static_cast<int>(line.size()), "unterminated quote");
  fields.push_back(cur);
  return fields;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json labels_to_json(const Partition& part) {
  json a = json::array();
  for (int lab : part.labels) a.push_back(lab + 1);  // 1-based externally
  return a;
}

json stage_to_json(const StageReport& st) {
  json j;
  j["present"] = st.present;
  if (!st.present) return j;
  j["labels"] = labels_to_json(st.partition);
  j["means"] = matrix_to_json(st.params.means);
  if (st.params.scatter.size() > 0) j["scatter"] = matrix_to_json(st.params.scatter);
  if (st.params.probs.size() > 0) j["probs"] = vector_to_json(st.params.probs);
  j["objective"] = st.objective;
  j["wall_ms"] = st.wall_ms;
  return j;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScedError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << h;
  return os.str();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScedError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, 1, "missing header row");
  CsvTable table;
  table.header = split_csv_line(line, 1);
  const int p = static_cast<int>(table.header.size());

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, lineno);
    if (static_cast<int>(fields.size()) != p)
      throw ParseError(lineno, 1, "expected " + std::to_string(p) + " fields");
    std::vector<double> row(p);
    for (int j = 0; j < p; ++j) {
      try {
        size_t used = 0;
        row[j] = std::stod(fields[j], &used);
        if (used != fields[j].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw ParseError(lineno, j + 1, "not a number: '" + fields[j] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(lineno, 1, "no data rows");
  table.values.resize(rows.size(), p);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < p; ++j) table.values(i, j) = rows[i][j];
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  std::ofstream out(path);
  if (!out) throw ScedError("cannot write " + path);
  out << std::setprecision(17);
  for (size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (int i = 0; i < values.rows(); ++i) {
    for (int j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
    out << "\n";
  }
}

void write_fit_report(const std::string& out_dir, const FitReport& report,
                      const SpicCurve* curve, const Dataset& data, const FitConfig& config,
                      const std::string& input_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  fs::create_directories(out_dir + "/plotdata");

  json j;
  j["schema"] = "sced-report-v1";
  j["timestamp"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  j["input_hash"] = input_hash;
  j["k"] = report.k;
  j["config"] = {{"k_min", config.k_min},
                 {"k_max", config.k_max},
                 {"d0", config.d0},
                 {"lambda_grid_size", config.lambda_grid_size},
                 {"admm_tol", config.admm_tol},
                 {"admm_max_iter", config.admm_max_iter},
                 {"cv_grid_size", config.cv_grid_size},
                 {"refine_max_iter", config.refine_max_iter},
                 {"objective", config.use_pl2 ? "pl2" : "pl1"},
                 {"seed", config.seed}};
  j["stages"] = {{"kmeans", stage_to_json(report.kmeans_stage)},
                 {"is", stage_to_json(report.is_stage)},
                 {"sp", stage_to_json(report.sp_stage)},
                 {"pml", stage_to_json(report.pml_stage)},
                 {"pmml", stage_to_json(report.pmml_stage)},
                 {"oc", stage_to_json(report.oc_stage)}};
  j["bandwidths"] = {{"h_tilde", report.h_tilde},
                     {"h_hat", report.h_hat},
                     {"h_tilde_star", report.h_tilde_star},
                     {"h_hat_star", report.h_hat_star}};
  j["lambda"] = {{"selected", report.lambda_star},
                 {"grid", report.lambda_values},
                 {"fit_ss", report.lambda_fit_ss}};
  j["loo_loglik"] = report.loo_loglik;
  j["sigma2_x"] = report.sigma2_x;
  j["diagnostics"] = {{"n_clamped", report.n_clamped},
                      {"degraded", report.degraded},
                      {"warnings", report.warnings}};
  if (curve) {
    json pts = json::array();
    for (const auto& pt : curve->points)
      pts.push_back({{"k", pt.k},
                     {"loo_loglik", pt.loo_loglik},
                     {"spic", pt.spic_value},
                     {"failed", pt.failed},
                     {"error", pt.error}});
    j["spic"] = {{"points", pts}, {"selected_k", curve->selected_k}};
  }
  {
    std::ofstream out(out_dir + "/report.json");
    out << j.dump(2) << "\n";
  }

  // assignments with posterior rows of the refined stage
  const StageReport& oc = report.oc_stage;
  const TransformSpec tf{config.d0, static_cast<int>(data.p())};
  Matrix post;
  if (oc.present && report.h_hat_star > 0.0) {
    post = posteriors(data, oc.params, report.h_hat_star, tf, oc.partition).probs;
  } else {
    post = Matrix::Ones(data.n(), 1);
  }
  {
    std::ofstream out(out_dir + "/assignments.csv");
    out << std::setprecision(17);
    out << "row,label";
    for (int c = 0; c < post.cols(); ++c) out << ",posterior_" << (c + 1);
    out << "\n";
    for (int i = 0; i < static_cast<int>(data.n()); ++i) {
      out << (i + 1) << "," << (oc.present ? oc.partition.labels[i] + 1 : 1);
      for (int c = 0; c < post.cols(); ++c) out << "," << post(i, c);
      out << "\n";
    }
  }

  // plot data: generator curve, criterion curve, lambda path
  if (oc.present && report.h_hat_star > 0.0) {
    const Vector y = transform_sample(data, oc.partition, oc.params, tf);
    const GeneratorEstimate g(y, report.h_hat_star, tf);
    const double ymax = y.maxCoeff() + report.h_hat_star;
    Matrix curve_pts(256, 2);
    for (int i = 0; i < 256; ++i) {
      const double yy = ymax * double(i) / 255.0;
      curve_pts(i, 0) = yy;
      curve_pts(i, 1) = g(yy);
    }
    write_csv(out_dir + "/plotdata/ghat.csv", {"y", "ghat"}, curve_pts);
  }
  if (curve) {
    Matrix pts(curve->points.size(), 3);
    for (size_t i = 0; i < curve->points.size(); ++i) {
      pts(i, 0) = curve->points[i].k;
      pts(i, 1) = curve->points[i].loo_loglik;
      pts(i, 2) = curve->points[i].spic_value;
    }
    write_csv(out_dir + "/plotdata/spic.csv", {"k", "loo_loglik", "spic"}, pts);
  }
  if (!report.lambda_values.empty()) {
    Matrix pts(report.lambda_values.size(), 2);
    for (size_t i = 0; i < report.lambda_values.size(); ++i) {
      pts(i, 0) = report.lambda_values[i];
      pts(i, 1) = report.lambda_fit_ss[i];
    }
    write_csv(out_dir + "/plotdata/lambda_path.csv", {"lambda", "fit_ss"}, pts);
  }
}

void write_truth(const std::string& path, const SimDesign& design, const SimDraw& draw,
                 std::uint64_t seed) {
  json j;
  j["schema"] = "sced-truth-v1";
  j["model"] = design.generator == Generator::kM1 ? "m1" : "m2";
  j["p"] = design.p;
  j["k"] = design.k;
  j["n"] = design.n;
  j["sigma"] = design.sigma;
  j["seed"] = seed;
  j["labels"] = labels_to_json(draw.truth);
  j["means"] = matrix_to_json(design.means);
  j["sigma_x"] = matrix_to_json(design.sigma_x);
  j["probs"] = vector_to_json(design.probs);
  std::ofstream out(path);
  if (!out) throw ScedError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<BenchCellSpec> read_bench_grid(const std::string& path) {
  const json j = json::parse(read_file(path));
  if (!j.is_array()) throw ScedError("bench grid must be a JSON array");
  std::vector<BenchCellSpec> cells;
  for (const auto& e : j) {
    BenchCellSpec cell;
    const std::string model = e.at("model").get<std::string>();
    Generator gen;
    if (model == "m1") {
      gen = Generator::kM1;
    } else if (model == "m2") {
      gen = Generator::kM2;
    } else {
      throw ScedError("unknown model '" + model + "'");
    }
    cell.design = SimDesign::make(gen, e.at("p").get<int>(), e.at("k").get<int>(),
                                  e.at("sigma").get<double>(), e.at("n").get<int>());
    cell.replications = e.value("reps", 50);
    cell.do_select_k = e.value("select_k", false);
    if (e.contains("k_range")) {
      cell.k_range_min = e["k_range"].at(0).get<int>();
      cell.k_range_max = e["k_range"].at(1).get<int>();
    }
    cell.compute_rse = e.value("rse", true);
    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_bench_results(const std::string& out_dir,
                         const std::vector<BenchCellSpec>& cells,
                         const std::vector<std::vector<RepMetrics>>& results) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir + "/results.csv");
    out << std::setprecision(17);
    out << "cell,rep,ri_kmeans,ri_is,ri_sp,ri_oc,rse_means_pml,rse_var_pmml,selected_k,"
           "failed\n";
    for (size_t c = 0; c < cells.size(); ++c) {
      const std::string key = cells[c].design.cell_key();
      for (size_t r = 0; r < results[c].size(); ++r) {
        const RepMetrics& m = results[c][r];
        out << key << "," << r << "," << m.ri_kmeans << "," << m.ri_is << "," << m.ri_sp
            << "," << m.ri_oc << "," << m.rse_means_pml << "," << m.rse_var_pmml << ","
            << m.selected_k << "," << (m.failed ? 1 : 0) << "\n";
      }
    }
  }

  json summary = json::array();
  for (size_t c = 0; c < cells.size(); ++c) {
    auto collect = [&](auto getter) {
      std::vector<double> vals;
      for (const RepMetrics& m : results[c]) {
        if (m.failed) continue;
        const double v = getter(m);
        if (v >= 0.0) vals.push_back(v);
      }
      return aggregate(vals);
    };
    const Aggregate ri_km = collect([](const RepMetrics& m) { return m.ri_kmeans; });
    const Aggregate ri_is = collect([](const RepMetrics& m) { return m.ri_is; });
    const Aggregate ri_sp = collect([](const RepMetrics& m) { return m.ri_sp; });
    const Aggregate ri_oc = collect([](const RepMetrics& m) { return m.ri_oc; });
    const Aggregate rse_m = collect([](const RepMetrics& m) { return m.rse_means_pml; });
    const Aggregate rse_v = collect([](const RepMetrics& m) { return m.rse_var_pmml; });
    const Aggregate sel_k = collect(
        [](const RepMetrics& m) { return m.selected_k > 0 ? double(m.selected_k) : -1.0; });
    int failures = 0;
    for (const RepMetrics& m : results[c])
      if (m.failed) ++failures;
    auto agg_json = [](const Aggregate& a) {
      return json{{"mean", a.mean}, {"mc_se", a.mc_se}, {"count", a.count}};
    };
    summary.push_back({{"cell", cells[c].design.cell_key()},
                       {"ri_kmeans", agg_json(ri_km)},
                       {"ri_is", agg_json(ri_is)},
                       {"ri_sp", agg_json(ri_sp)},
                       {"ri_oc", agg_json(ri_oc)},
                       {"rse_means_pml", agg_json(rse_m)},
                       {"rse_var_pmml", agg_json(rse_v)},
                       {"selected_k", agg_json(sel_k)},
                       {"failures", failures}});
  }
  std::ofstream out(out_dir + "/summary.json");
  out << summary.dump(2) << "\n";
}

}  // namespace sced
