#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "dcndp/graph.hpp"
#include "dcndp/policy.hpp"

namespace dcndp {

inline constexpr const char* kTraceFormat = "dcndp-trace/1";

struct DayRecord {
  int day = 0;
  NodeSet vaccinated;  // empty for imported traces
  std::int64_t n_vaccinated = 0;
  std::int64_t cum_vaccinated = 0;
  std::int64_t one_hop = 0;
  std::int64_t two_hop = 0;
  double r0 = 0.0;
};

struct RolloutTrace {
  std::string policy;
  std::uint64_t seed = 0;
  std::int64_t daily_budget = 0;
  std::vector<DayRecord> days;  // days[0] is the pre-vaccination record
};

struct SimulationOptions {
  int days = 100;
  double budget_frac = 0.01;
  std::uint64_t seed = 1;
  double efficacy = 1.0;
};

/// Daily budget ceil(budget_frac * n), drawn uniformly from the earliest phase that
/// still has unvaccinated nodes and spilling into later phases within the day.
RolloutTrace simulate(const Graph& g, const Policy& policy, const SimulationOptions& opts = {});

/// Same, with the phase of every node given directly.
RolloutTrace simulate_phased(const Graph& g, const std::vector<int>& phase_of, const std::string& name,
                             const SimulationOptions& opts = {});

/// True when every day vaccinated all nodes of earlier phases that were still
/// unvaccinated at the start of that day before touching a later phase.
bool respects_phase_order(const RolloutTrace& trace, const std::vector<int>& phase_of);

enum class Metric { OneHop, TwoHop, R0 };
std::string to_string(Metric m);

struct MetricComparison {
  Metric metric = Metric::OneHop;
  double area_shrink_percent = 0.0;
  double days_with_improvement_percent = 0.0;
  double daily_improvement_mean = 0.0;
  double daily_improvement_std = 0.0;
};

/// a is the candidate, b the baseline. Throws DomainError on unequal lengths.
MetricComparison compare(const RolloutTrace& a, const RolloutTrace& b, Metric metric);
std::vector<MetricComparison> compare_all(const RolloutTrace& a, const RolloutTrace& b);

/// Series of one metric, day 0 first.
std::vector<double> series(const RolloutTrace& t, Metric metric);

/// Comment line with format/policy/seed/budget, then
/// day,n_vaccinated_today,cum_vaccinated,one_hop,two_hop,r0.
void export_trace(const RolloutTrace& t, std::ostream& out);
/// Warnings (such as a format version mismatch) go to `warnings`, or stderr when null.
RolloutTrace import_trace(std::istream& in, std::vector<std::string>* warnings = nullptr);

void write_comparison(const std::vector<MetricComparison>& stats, std::ostream& out);

}  // namespace dcndp
