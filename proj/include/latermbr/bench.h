#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "latermbr/approx.h"

namespace latermbr {

struct BenchRow {
  int n = 0;
  std::string method;
  int rep = 0;
  double seconds = 0.0;
};

struct BenchOptions {
  std::vector<int> sizes{10, 50, 100, 200};
  std::vector<std::string> methods{"naive", "batch"};  // plus "approx"
  int repetitions = 5;
  uint64_t seed = 1;
  int vocab = 20;
  int min_len = 1;
  int max_len = 15;
  int approx_hidden = 32;
};

// Times one full rerank of a synthetic N-candidate sentence per repetition.
// The same candidate sets are reused across methods. Row order: methods as
// given, sizes ascending, reps ascending.
std::vector<BenchRow> run_bench(const BenchOptions& options);

// Long-format CSV: n,method,rep,seconds.
void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows);

// Mean seconds over the rows of one (method, n) cell.
double bench_mean(const std::vector<BenchRow>& rows, const std::string& method,
                  int n);

}  // namespace latermbr
