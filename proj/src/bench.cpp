#include "latermbr/bench.h"

#include <algorithm>
#include <chrono>
#include <memory>
#include <ostream>
#include <random>

#include "latermbr/io_util.h"
#include "latermbr/synth.h"

namespace latermbr {

std::vector<BenchRow> run_bench(const BenchOptions& options) {
  if (options.repetitions < 1 || options.sizes.empty() ||
      options.methods.empty()) {
    throw InvalidInputError("run_bench: bad options");
  }
  std::vector<int> sizes = options.sizes;
  std::sort(sizes.begin(), sizes.end());

  // One candidate set per size, shared by every method and repetition.
  std::vector<std::vector<Evidence>> sets;
  sets.reserve(sizes.size());
  std::mt19937_64 gen(options.seed);
  for (int n : sizes) {
    sets.push_back(random_candidates(gen, n, options.vocab, options.min_len,
                                     options.max_len));
  }

  const ExactBleuDiscrepancy exact;
  std::unique_ptr<ApproxDiscrepancy> approx;
  for (const std::string& method : options.methods) {
    if (method == "approx") {
      approx = std::make_unique<ApproxDiscrepancy>(ApproxParams::init(
          options.vocab, options.approx_hidden, options.seed));
    } else if (method != "naive" && method != "batch") {
      throw InvalidInputError("run_bench: unknown method " + method);
    }
  }

  // Consuming the best risk keeps the calls observable end to end.
  volatile double sink = 0.0;
  std::vector<BenchRow> rows;
  for (const std::string& method : options.methods) {
    for (size_t k = 0; k < sizes.size(); ++k) {
      const std::vector<Evidence>& cands = sets[k];
      const EvidenceSpace space(cands);
      for (int rep = 0; rep < options.repetitions; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        RiskReport report;
        if (method == "naive") {
          report = naive_rerank_early_stop(cands, space, exact);
        } else if (method == "batch") {
          report = mbr_rerank(cands, space, exact);
        } else {
          report = mbr_rerank(cands, space, *approx);
        }
        const auto stop = std::chrono::steady_clock::now();
        sink = sink + report.risks[static_cast<size_t>(report.best())];
        rows.push_back(BenchRow{
            sizes[k], method, rep,
            std::chrono::duration<double>(stop - start).count()});
      }
    }
  }
  (void)sink;
  return rows;
}

void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
  out << "n,method,rep,seconds\n";
  for (const BenchRow& row : rows) {
    out << row.n << "," << row.method << "," << row.rep << ","
        << fmt_double(row.seconds) << "\n";
  }
}

double bench_mean(const std::vector<BenchRow>& rows, const std::string& method,
                  int n) {
  double sum = 0.0;
  int count = 0;
  for (const BenchRow& row : rows) {
    if (row.method == method && row.n == n) {
      sum += row.seconds;
      ++count;
    }
  }
  if (count == 0) {
    throw InvalidInputError("bench_mean: no rows for " + method);
  }
  return sum / count;
}

}  // namespace latermbr
