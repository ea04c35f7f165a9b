#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "rcwalk/coupling.hpp"
#include "rcwalk/kernel.hpp"
#include "rcwalk/stats.hpp"
#include "rcwalk/traps.hpp"

namespace rcwalk {

struct HittingRecord {
  std::int64_t level = 0;
  std::optional<std::int64_t> time;
  bool censored() const { return !time.has_value(); }
};

// First n >= 0 with X_n . e1 = floor(h).
HittingRecord first_hitting_time(std::span<const std::int64_t> e1, double h);
inline HittingRecord first_hitting_time(const WalkPath& path, double h) {
  auto t = path.e1_trace();
  return first_hitting_time(std::span<const std::int64_t>(t), h);
}

// n >= 1 with X_n . e1 > X_k . e1 for all k < n. Time 0 is never fresh.
std::vector<std::int64_t> detect_fresh_epochs(std::span<const std::int64_t> e1);

struct RegenerationLog {
  std::vector<std::int64_t> fresh_epochs;
  std::vector<std::int64_t> regenerations;
  bool censored_tail = false;
};

// Fresh epochs never undercut afterwards; a candidate is kept once the walk
// has climbed confirm_margin levels above it.
RegenerationLog detect_regenerations(std::span<const std::int64_t> e1, std::int64_t confirm_margin = 64);
inline RegenerationLog detect_regenerations(const WalkPath& path, std::int64_t confirm_margin = 64) {
  auto t = path.e1_trace();
  return detect_regenerations(std::span<const std::int64_t>(t), confirm_margin);
}

// Increments (X_{R_{n+1}} - X_{R_n}, R_{n+1} - R_n) for n >= 2.
RegenerationIncrements hyperplane_increments(const WalkPath& path, const RegenerationLog& log);

// Ratio of means over increments from R_2 on, batch-means errors.
VectorEstimate regeneration_speed(const WalkPath& path, const RegenerationLog& log, std::size_t batches = 20);

// Ratio pooled over independent replicas (each replica one sample of sums).
VectorEstimate pooled_increment_ratio(const std::vector<RegenerationIncrements>& per_replica);

struct MomentReport {
  std::uint64_t increments = 0;
  double lambda = 0.0;
  double c = 0.0;
  MeanSE scaled_mean;       // lambda^2 (R_{n+1} - R_n)
  double scaled_variance = 0.0;
  MeanSE exp_moment;        // exp(c lambda^2 (R_{n+1} - R_n))
};

MomentReport inter_regeneration_moments(const std::vector<RegenerationLog>& logs, double lambda, double c);

struct LadderLog {
  std::vector<std::int64_t> ladder_times;
  std::vector<std::int64_t> depths;
  std::vector<std::int64_t> occupation_times;  // T_A; -1 when the path ends inside A
  std::uint64_t inconclusive = 0;
  bool censored = false;
};

struct LadderOptions {
  std::int64_t box_radius = 64;
};

// L_0 = 0; L_{i+1} is the first fresh epoch above X_{L_i} . e1 + d(A_i).
// T_A counts steps until the walk is back at or below the starting level or
// outside A.
LadderLog ladder_decomposition(const WalkPath& path, const ConductanceField& field, const LadderOptions& options = {});

void write_regeneration_csv(std::ostream& os, std::size_t replica, const RegenerationLog& log,
                            std::span<const std::int64_t> e1, bool header);
void write_ladder_csv(std::ostream& os, std::size_t replica, const LadderLog& log, bool header);

}  // namespace rcwalk
