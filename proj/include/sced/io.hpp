#pragma once

#include <string>
#include <vector>

#include "sced/pipeline.hpp"
#include "sced/sim.hpp"
#include "sced/types.hpp"

namespace sced {

struct ParseError : ScedError {
  int line;
  int column;
  ParseError(int l, int c, const std::string& msg)
      : ScedError("parse error at line " + std::to_string(l) + ", column " +
                  std::to_string(c) + ": " + msg),
        line(l),
        column(c) {}
};

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

// RFC-4180 numeric CSV with a mandatory header row
CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

// report.json / assignments.csv / plotdata emission for one fit
void write_fit_report(const std::string& out_dir, const FitReport& report,
                      const SpicCurve* curve, const Dataset& data, const FitConfig& config,
                      const std::string& input_hash);

void write_truth(const std::string& path, const SimDesign& design, const SimDraw& draw,
                 std::uint64_t seed);

// stable content hash of a byte string (FNV-1a, hex)
std::string content_hash(const std::string& bytes);
std::string read_file(const std::string& path);

struct BenchCellSpec {
  SimDesign design;
  int replications = 50;
  bool do_select_k = false;
  int k_range_min = 1;
  int k_range_max = 5;
  bool compute_rse = true;
};

std::vector<BenchCellSpec> read_bench_grid(const std::string& path);

void write_bench_results(const std::string& out_dir,
                         const std::vector<BenchCellSpec>& cells,
                         const std::vector<std::vector<RepMetrics>>& results);

}  // namespace sced
