#include "dcndp/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

#include "dcndp/errors.hpp"
#include "text_util.hpp"

namespace dcndp {

namespace {

std::int64_t int_field(std::string_view s, std::int64_t line) {
  const auto v = detail::parse_int(s);
  if (!v) throw ParseError("expected an integer, got '" + std::string(s) + "'", line);
  return *v;
}

double real_field(std::string_view s, std::int64_t line) {
  const auto v = detail::parse_double(s);
  if (!v) throw ParseError("expected a number, got '" + std::string(s) + "'", line);
  return *v;
}

}  // namespace

RolloutTrace simulate(const Graph& g, const Policy& policy, const SimulationOptions& opts) {
  if (!policy.phases.empty() && policy.phases.front().always()) {
    return simulate_phased(g, std::vector<int>(static_cast<std::size_t>(g.n()), 0), policy.name, opts);
  }
  return simulate_phased(g, assign_phases(policy, feature_table(g)), policy.name, opts);
}

RolloutTrace simulate_phased(const Graph& g, const std::vector<int>& phase_of, const std::string& name,
                             const SimulationOptions& opts) {
  if (!(opts.budget_frac > 0.0 && opts.budget_frac <= 1.0)) throw ConfigError("budget fraction must lie in (0, 1]");
  if (opts.efficacy != 1.0) throw ConfigError("only efficacy 1.0 is supported");
  if (opts.days < 0) throw ConfigError("day count must be nonnegative");
  if (static_cast<Node>(phase_of.size()) != g.n()) throw DomainError("phase assignment does not cover the graph");

  RolloutTrace t;
  t.policy = name;
  t.seed = opts.seed;
  t.daily_budget = static_cast<std::int64_t>(std::ceil(opts.budget_frac * static_cast<double>(g.n()) - 1e-9));

  int num_phases = 0;
  for (int p : phase_of) {
    if (p < 0) throw DomainError("negative phase index");
    num_phases = std::max(num_phases, p + 1);
  }
  std::vector<std::vector<Node>> pools(num_phases);
  for (Node v = 0; v < g.n(); ++v) pools[phase_of[v]].push_back(v);

  NodeMask removed(g.n(), 0);
  auto record = [&](int day, NodeSet vaccinated, std::int64_t cum) {
    DayRecord d;
    d.day = day;
    d.n_vaccinated = static_cast<std::int64_t>(vaccinated.size());
    d.vaccinated = std::move(vaccinated);
    d.cum_vaccinated = cum;
    d.one_hop = count_khop_residual(g, removed, 1);
    d.two_hop = count_khop_residual(g, removed, 2);
    d.r0 = r0(g, removed, 1.0);
    t.days.push_back(std::move(d));
  };

  std::mt19937_64 rng(opts.seed);
  std::int64_t cum = 0;
  record(0, {}, 0);
  std::size_t phase = 0;
  for (int day = 1; day <= opts.days; ++day) {
    NodeSet today;
    std::int64_t left = t.daily_budget;
    while (left > 0 && phase < pools.size()) {
      auto& pool = pools[phase];
      if (pool.empty()) {
        ++phase;
        continue;
      }
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t j = pick(rng);
      today.push_back(pool[j]);
      pool[j] = pool.back();
      pool.pop_back();
      --left;
    }
    for (Node v : today) removed[v] = 1;
    std::sort(today.begin(), today.end());
    cum += static_cast<std::int64_t>(today.size());
    record(day, std::move(today), cum);
  }
  return t;
}

bool respects_phase_order(const RolloutTrace& trace, const std::vector<int>& phase_of) {
  NodeMask done(phase_of.size(), 0);
  for (const auto& d : trace.days) {
    int latest = -1;
    for (Node v : d.vaccinated) latest = std::max(latest, phase_of[v]);
    NodeMask today(phase_of.size(), 0);
    for (Node v : d.vaccinated) today[v] = 1;
    for (std::size_t v = 0; v < phase_of.size(); ++v) {
      if (!done[v] && phase_of[v] < latest && !today[v]) return false;
    }
    for (Node v : d.vaccinated) {
      if (done[v]) return false;
      done[v] = 1;
    }
  }
  return true;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::OneHop: return "one_hop";
    case Metric::TwoHop: return "two_hop";
    case Metric::R0: return "r0";
  }
  return "?";
}

std::vector<double> series(const RolloutTrace& t, Metric metric) {
  std::vector<double> out;
  out.reserve(t.days.size());
  for (const auto& d : t.days) {
    switch (metric) {
      case Metric::OneHop: out.push_back(static_cast<double>(d.one_hop)); break;
      case Metric::TwoHop: out.push_back(static_cast<double>(d.two_hop)); break;
      case Metric::R0: out.push_back(d.r0); break;
    }
  }
  return out;
}

MetricComparison compare(const RolloutTrace& a, const RolloutTrace& b, Metric metric) {
  if (a.days.size() != b.days.size()) throw DomainError("traces differ in length");
  const auto ya = series(a, metric), yb = series(b, metric);
  MetricComparison c;
  c.metric = metric;
  if (ya.empty()) return c;

  auto area = [](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < y.size(); ++i) s += (y[i] + y[i + 1]) / 2.0;
    return s;
  };
  const double area_a = area(ya), area_b = area(yb);
  c.area_shrink_percent = area_b == 0.0 ? 0.0 : 100.0 * (area_b - area_a) / area_b;

  std::int64_t better = 0;
  std::vector<double> improvement;
  for (std::size_t d = 0; d < ya.size(); ++d) {
    if (ya[d] < yb[d]) ++better;
    if (yb[d] != 0.0) improvement.push_back(100.0 * (yb[d] - ya[d]) / yb[d]);
  }
  c.days_with_improvement_percent = 100.0 * static_cast<double>(better) / static_cast<double>(ya.size());
  if (!improvement.empty()) {
    double mean = 0.0;
    for (double x : improvement) mean += x;
    mean /= static_cast<double>(improvement.size());
    double var = 0.0;
    for (double x : improvement) var += (x - mean) * (x - mean);
    var /= static_cast<double>(improvement.size());
    c.daily_improvement_mean = mean;
    c.daily_improvement_std = std::sqrt(var);
  }
  return c;
}

std::vector<MetricComparison> compare_all(const RolloutTrace& a, const RolloutTrace& b) {
  return {compare(a, b, Metric::OneHop), compare(a, b, Metric::TwoHop), compare(a, b, Metric::R0)};
}

void export_trace(const RolloutTrace& t, std::ostream& out) {
  out << "# format=" << kTraceFormat << " policy=" << t.policy << " seed=" << t.seed
      << " daily_budget=" << t.daily_budget << '\n';
  out << "day,n_vaccinated_today,cum_vaccinated,one_hop,two_hop,r0\n";
  for (const auto& d : t.days) {
    out << d.day << ',' << d.n_vaccinated << ',' << d.cum_vaccinated << ',' << d.one_hop << ',' << d.two_hop << ','
        << detail::format_double(d.r0) << '\n';
  }
}

RolloutTrace import_trace(std::istream& in, std::vector<std::string>* warnings) {
  auto warn = [&](const std::string& w) {
    if (warnings) {
      warnings->push_back(w);
    } else {
      std::cerr << "warning: " << w << '\n';
    }
  };
  RolloutTrace t;
  std::string line;
  std::int64_t lineno = 0;
  bool header = false, format_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto s = detail::trim(line);
    if (s.empty()) continue;
    if (s.front() == '#') {
      std::istringstream meta{std::string(s.substr(1))};
      std::string token;
      while (meta >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = token.substr(0, eq), value = token.substr(eq + 1);
        if (key == "format") {
          format_seen = true;
          if (value != kTraceFormat) {
            warn("trace format '" + value + "' differs from supported '" + kTraceFormat + "'");
          }
        } else if (key == "policy") {
          t.policy = value;
        } else if (key == "seed") {
          t.seed = static_cast<std::uint64_t>(int_field(value, lineno));
        } else if (key == "daily_budget") {
          t.daily_budget = int_field(value, lineno);
        }
      }
      continue;
    }
    const auto cols = detail::split(s, ',');
    if (!header) {
      const std::vector<std::string> expected{"day", "n_vaccinated_today", "cum_vaccinated", "one_hop", "two_hop", "r0"};
      if (cols.size() != expected.size() || !std::equal(cols.begin(), cols.end(), expected.begin())) {
        throw ParseError("unexpected trace header", lineno);
      }
      header = true;
      continue;
    }
    if (cols.size() != 6) throw ParseError("expected 6 columns", lineno);
    DayRecord d;
    d.day = static_cast<int>(int_field(cols[0], lineno));
    d.n_vaccinated = int_field(cols[1], lineno);
    d.cum_vaccinated = int_field(cols[2], lineno);
    d.one_hop = int_field(cols[3], lineno);
    d.two_hop = int_field(cols[4], lineno);
    d.r0 = real_field(cols[5], lineno);
    t.days.push_back(std::move(d));
  }
  if (!header) throw ParseError("trace has no header");
  if (!format_seen) warn("trace carries no format version");
  return t;
}

void write_comparison(const std::vector<MetricComparison>& stats, std::ostream& out) {
  out << "metric,area_shrink_percent,days_with_improvement_percent,daily_improvement_mean,daily_improvement_std\n";
  for (const auto& c : stats) {
    out << to_string(c.metric) << ',' << detail::format_double(c.area_shrink_percent) << ','
        << detail::format_double(c.days_with_improvement_percent) << ','
        << detail::format_double(c.daily_improvement_mean) << ',' << detail::format_double(c.daily_improvement_std)
        << '\n';
  }
}

}  // namespace dcndp
