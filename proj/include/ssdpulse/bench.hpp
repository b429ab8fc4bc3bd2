#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssdpulse/ssd.hpp"

namespace ssdpulse {

struct BenchRow {
    std::string formulation;  // "recurrence" | "quadratic" | "chunked"
    std::int64_t seq_len = 0;
    std::int64_t wall_ns = 0;  // best of reps
};

struct SsdBenchResult {
    std::vector<BenchRow> rows;  // formulations x lengths, fixed order
    double max_rel_err = 0.0;    // three-way output agreement at the smallest T
    double chunked_ratio = 0.0;    // wall(T_max) / wall(T_min)
    double quadratic_ratio = 0.0;
    double recurrence_ratio = 0.0;
};

// Times the three formulations on seeded random inputs per length. Outputs
// are cross-checked for agreement before any timing is recorded.
SsdBenchResult run_ssd_bench(const SsdConfig& cfg,
                             const std::vector<std::int64_t>& lengths,
                             int reps, std::uint64_t seed);

std::string bench_csv(const SsdBenchResult& r);

// Random SSD inputs with decay factors in [0.85, 0.999].
SsdInputs random_ssd_inputs(const SsdConfig& cfg, std::int64_t seq_len,
                            std::uint64_t seed);

// Largest |a-b| / max(|a|, |b|, 1e-6) over all elements.
double max_rel_err(const Tensor& a, const Tensor& b);

}  // namespace ssdpulse
