#include "wracma/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

namespace wracma {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

const char* stop_rule_name(RoundStopRule r) {
  switch (r) {
    case RoundStopRule::min_iterations_then_either:
      return "min-iterations";
    case RoundStopRule::either_condition:
      return "either";
    case RoundStopRule::both_conditions:
      return "both";
  }
  return "min-iterations";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (problems.empty()) throw ConfigError("config: at least one problem is required");
  for (const auto& p : problems) {
    try {
      const auto& info = problem_info(p.id);
      if (!p.b.empty() && !info.takes_interaction) {
        throw ConfigError("config: problem " + p.id + " does not take b");
      }
      for (double b : p.b) {
        if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("config: b must be positive");
      }
    } catch (const std::out_of_range& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  if (m < 1 || n < 1) throw ConfigError("config: m and n must be >= 1");
  if (m != n) throw ConfigError("config: the benchmark problems require m == n");
  if (algorithms.empty()) throw ConfigError("config: at least one algorithm is required");
  if (trials < 1) throw ConfigError("config: trials must be >= 1");
  if (budget < 0) throw ConfigError("config: budget must be non-negative");
  if (!(target_gap >= 0.0)) throw ConfigError("config: target_gap must be non-negative");
  try {
    wra.validate();
    zo.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

SolverConfig ExperimentConfig::solver_config() const {
  SolverConfig sc;
  sc.m = m;
  sc.n = n;
  sc.budget = budget;
  sc.target_gap = target_gap;
  sc.outer_pop_size = outer_pop_size;
  sc.wra = wra;
  sc.zo = zo;
  return sc;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    for (const auto& p : j.at("problems")) {
      ProblemEntry entry;
      if (p.is_string()) {
        entry.id = p.get<std::string>();
      } else {
        entry.id = p.at("id").get<std::string>();
        if (p.contains("b")) {
          const auto& b = p.at("b");
          entry.b = b.is_array() ? b.get<std::vector<double>>() : std::vector<double>{b.get<double>()};
        }
      }
      c.problems.push_back(std::move(entry));
    }
    c.m = get_or(j, "m", c.m);
    c.n = get_or(j, "n", c.n);
    if (j.contains("algorithms")) {
      c.algorithms.clear();
      for (const auto& a : j.at("algorithms")) {
        c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
      }
    }
    c.trials = get_or(j, "trials", c.trials);
    c.budget = get_or(j, "budget", c.budget);
    c.target_gap = get_or(j, "target_gap", c.target_gap);
    c.seed_base = get_or(j, "seed_base", c.seed_base);
    c.outer_pop_size = get_or(j, "outer_pop_size", c.outer_pop_size);
    c.record_wall_time = get_or(j, "record_wall_time", c.record_wall_time);
    c.workers = get_or(j, "workers", c.workers);
    if (j.contains("output")) {
      const auto& o = j.at("output");
      c.output.csv = get_or<std::string>(o, "csv", "");
      c.output.json = get_or<std::string>(o, "json", "");
      c.output.scaling = get_or<std::string>(o, "scaling", "");
    }
    if (j.contains("wra")) {
      const auto& w = j.at("wra");
      c.wra.tau_threshold = get_or(w, "tau_threshold", c.wra.tau_threshold);
      c.wra.c_max = get_or(w, "c_max", c.wra.c_max);
      c.wra.v_min = get_or(w, "v_min", c.wra.v_min);
      c.wra.t_min = get_or(w, "t_min", c.wra.t_min);
      c.wra.max_rounds = get_or(w, "max_rounds", c.wra.max_rounds);
      c.wra.inner_pop_size = get_or(w, "inner_pop_size", c.wra.inner_pop_size);
      const auto rule = get_or<std::string>(w, "stop_rule", "min-iterations");
      if (rule == "min-iterations") {
        c.wra.stop_rule = RoundStopRule::min_iterations_then_either;
      } else if (rule == "either") {
        c.wra.stop_rule = RoundStopRule::either_condition;
      } else if (rule == "both") {
        c.wra.stop_rule = RoundStopRule::both_conditions;
      } else {
        throw ConfigError("config: wra.stop_rule must be \"min-iterations\", \"either\" or \"both\"");
      }
    }
    if (j.contains("zopgda")) {
      const auto& z = j.at("zopgda");
      c.zo.eta_x = get_or(z, "eta_x", c.zo.eta_x);
      c.zo.eta_y = get_or(z, "eta_y", c.zo.eta_y);
      c.zo.directions = get_or(z, "q", c.zo.directions);
      c.zo.smoothing = get_or(z, "mu", c.zo.smoothing);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json problems = json::array();
  for (const auto& p : c.problems) {
    json e{{"id", p.id}};
    if (!p.b.empty()) e["b"] = p.b;
    problems.push_back(e);
  }
  json algorithms = json::array();
  for (auto a : c.algorithms) algorithms.push_back(std::string(to_string(a)));
  return json{
      {"problems", problems},
      {"m", c.m},
      {"n", c.n},
      {"algorithms", algorithms},
      {"trials", c.trials},
      {"budget", c.budget},
      {"target_gap", c.target_gap},
      {"seed_base", c.seed_base},
      {"outer_pop_size", c.outer_pop_size},
      {"record_wall_time", c.record_wall_time},
      {"output", {{"csv", c.output.csv}, {"json", c.output.json}, {"scaling", c.output.scaling}}},
      {"wra",
       {{"tau_threshold", c.wra.tau_threshold},
        {"c_max", c.wra.c_max},
        {"v_min", c.wra.v_min},
        {"t_min", c.wra.t_min},
        {"max_rounds", c.wra.max_rounds},
        {"inner_pop_size", c.wra.inner_pop_size},
        {"stop_rule", stop_rule_name(c.wra.stop_rule)}}},
      {"zopgda",
       {{"eta_x", c.zo.eta_x}, {"eta_y", c.zo.eta_y}, {"q", c.zo.directions}, {"mu", c.zo.smoothing}}},
  };
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t cell_seed(std::uint64_t seed_base, const std::string& problem, double b,
                        Algorithm algorithm, int trial) {
  std::uint64_t h = splitmix64(seed_base);
  h = splitmix64(h ^ fnv1a(problem));
  h = splitmix64(h ^ std::bit_cast<std::uint64_t>(b));
  h = splitmix64(h ^ fnv1a(to_string(algorithm)));
  h = splitmix64(h ^ static_cast<std::uint64_t>(trial));
  return h;
}

std::vector<Cell> expand_cells(const ExperimentConfig& config) {
  std::vector<Cell> cells;
  for (const auto& p : config.problems) {
    std::vector<std::optional<double>> bs;
    if (p.b.empty()) {
      bs.push_back(std::nullopt);
    } else {
      bs.assign(p.b.begin(), p.b.end());
    }
    for (const auto& b : bs) {
      for (auto algorithm : config.algorithms) {
        for (int t = 0; t < config.trials; ++t) {
          const double b_value = b.value_or(0.0);
          cells.push_back(
              {p.id, b, algorithm, t, cell_seed(config.seed_base, p.id, b_value, algorithm, t)});
        }
      }
    }
  }
  return cells;
}

int worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WRACMA_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunRecord run_cell(const ExperimentConfig& config, const Cell& cell) {
  try {
    const auto problem = make_problem(cell.problem, config.m, config.n, cell.b);
    RunRecord rec = solve(cell.algorithm, *problem, config.solver_config(), cell.seed);
    if (!config.record_wall_time) rec.wall_ms = 0.0;
    return rec;
  } catch (const std::exception& e) {
    RunRecord rec;
    rec.problem = cell.problem;
    rec.b = cell.b.value_or(1.0);
    rec.algorithm = std::string(to_string(cell.algorithm));
    rec.seed = cell.seed;
    rec.verdict = Verdict::aborted;
    rec.final_gap = std::numeric_limits<double>::infinity();
    rec.message = e.what();
    return rec;
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto cells = expand_cells(config);
  ExperimentResult result;
  result.records.resize(cells.size());

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      result.records[i] = run_cell(config, cells[i]);
    }
  };
  const int workers = std::min<int>(worker_count(config.workers), static_cast<int>(cells.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  result.summaries = summarize(result.records, config.budget);
  return result;
}

std::pair<double, double> mean_and_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / values.size();
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (values.size() - 1))};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile: empty input");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - lo;
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

// Gap of a run at f-call count c: the last history sample at or before c.
double gap_at(const RunRecord& r, double c) {
  double gap = r.initial_gap;
  for (const auto& h : r.history) {
    if (static_cast<double>(h.fcalls) > c) break;
    gap = h.gap;
  }
  return gap;
}

}  // namespace

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records, std::int64_t budget) {
  // cell key -> record indices, in first-appearance order
  std::vector<std::tuple<std::string, double, std::string>> keys;
  std::map<std::tuple<std::string, double, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto key = std::make_tuple(records[i].problem, records[i].b, records[i].algorithm);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(i);
  }

  constexpr int kCurvePoints = 50;
  const double top = std::log10(static_cast<double>(std::max<std::int64_t>(budget, 10)));

  std::vector<CellSummary> out;
  for (const auto& key : keys) {
    const auto& idx = groups.at(key);
    CellSummary s;
    std::tie(s.problem, s.b, s.algorithm) = key;
    s.trials = static_cast<int>(idx.size());
    std::vector<double> success_fcalls;
    for (auto i : idx) {
      if (records[i].verdict == Verdict::success) {
        success_fcalls.push_back(static_cast<double>(records[i].fcalls));
      }
    }
    s.successes = static_cast<int>(success_fcalls.size());
    s.success_rate = static_cast<double>(s.successes) / s.trials;
    if (!success_fcalls.empty()) {
      const auto [mean, sd] = mean_and_std(success_fcalls);
      s.mean_fcalls = mean;
      s.std_fcalls = sd;
    }
    std::int64_t last = -1;
    for (int k = 0; k < kCurvePoints; ++k) {
      const auto c = static_cast<std::int64_t>(std::llround(std::pow(10.0, top * k / (kCurvePoints - 1))));
      if (c <= last) continue;
      last = c;
      std::vector<double> gaps;
      for (auto i : idx) gaps.push_back(gap_at(records[i], static_cast<double>(c)));
      s.curve.push_back({c, quantile(gaps, 0.5), quantile(gaps, 0.25), quantile(gaps, 0.75)});
    }
    out.push_back(std::move(s));
  }
  return out;
}

json to_json(const CellSummary& s) {
  json curve = json::array();
  for (const auto& p : s.curve) curve.push_back({p.fcalls, p.median, p.q25, p.q75});
  return json{{"problem", s.problem},
              {"b", s.b},
              {"algorithm", s.algorithm},
              {"trials", s.trials},
              {"successes", s.successes},
              {"success_rate", s.success_rate},
              {"mean_fcalls", s.mean_fcalls ? json(*s.mean_fcalls) : json(nullptr)},
              {"std_fcalls", s.std_fcalls ? json(*s.std_fcalls) : json(nullptr)},
              {"curve", curve}};
}

CellSummary summary_from_json(const json& j) {
  CellSummary s;
  s.problem = j.at("problem").get<std::string>();
  s.b = j.at("b").get<double>();
  s.algorithm = j.at("algorithm").get<std::string>();
  s.trials = j.at("trials").get<int>();
  s.successes = j.at("successes").get<int>();
  s.success_rate = j.at("success_rate").get<double>();
  if (!j.at("mean_fcalls").is_null()) s.mean_fcalls = j.at("mean_fcalls").get<double>();
  if (!j.at("std_fcalls").is_null()) s.std_fcalls = j.at("std_fcalls").get<double>();
  for (const auto& p : j.at("curve")) {
    s.curve.push_back({p.at(0).get<std::int64_t>(), p.at(1).get<double>(), p.at(2).get<double>(),
                       p.at(3).get<double>()});
  }
  return s;
}

json to_json(const RunRecord& r) {
  json hist = json::array();
  for (const auto& h : r.history) hist.push_back({h.fcalls, h.gap, h.best_gap});
  json j{{"problem", r.problem},
         {"b", r.b},
         {"algorithm", r.algorithm},
         {"seed", r.seed},
         {"verdict", std::string(to_string(r.verdict))},
         {"fcalls", r.fcalls},
         {"final_gap", std::isfinite(r.final_gap) ? json(r.final_gap) : json(nullptr)},
         {"initial_gap", r.initial_gap},
         {"iterations", r.iterations},
         {"wall_ms", r.wall_ms},
         {"hyperparameters_hash", r.hyperparameters_hash},
         {"history", hist}};
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

std::string records_csv(const std::vector<RunRecord>& records) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", r.wall_ms);
    os << r.problem << ',' << format_double(r.b) << ',' << r.algorithm << ',' << r.seed << ','
       << to_string(r.verdict) << ',' << r.fcalls << ',' << format_double(r.final_gap) << ','
       << wall << '\n';
  }
  return os.str();
}

std::string scaling_csv(const std::vector<CellSummary>& summaries) {
  std::ostringstream os;
  os << "problem,algorithm,b,trials,success_rate,mean_fcalls,std_fcalls\n";
  auto sorted = summaries;
  std::stable_sort(sorted.begin(), sorted.end(), [](const CellSummary& l, const CellSummary& r) {
    return std::tie(l.problem, l.algorithm, l.b) < std::tie(r.problem, r.algorithm, r.b);
  });
  for (const auto& s : sorted) {
    os << s.problem << ',' << s.algorithm << ',' << format_double(s.b) << ',' << s.trials << ','
       << format_double(s.success_rate) << ','
       << (s.mean_fcalls ? format_double(*s.mean_fcalls) : "") << ','
       << (s.std_fcalls ? format_double(*s.std_fcalls) : "") << '\n';
  }
  return os.str();
}

json results_json(const ExperimentConfig& config, const ExperimentResult& result) {
  json summaries = json::array();
  for (const auto& s : result.summaries) summaries.push_back(to_json(s));
  json records = json::array();
  for (const auto& r : result.records) records.push_back(to_json(r));
  return json{{"config", to_json(config)}, {"summaries", summaries}, {"records", records}};
}

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw OutputError("cannot write '" + path + "'");
  out << content;
  if (!out) throw OutputError("cannot write '" + path + "'");
}

}  // namespace

void emit_results(const ExperimentConfig& config, const ExperimentResult& result) {
  if (result.records.empty()) throw std::invalid_argument("emit_results: no records");
  if (!config.output.csv.empty()) write_file(config.output.csv, records_csv(result.records));
  if (!config.output.json.empty()) {
    write_file(config.output.json, results_json(config, result).dump(2) + "\n");
  }
  if (!config.output.scaling.empty()) {
    write_file(config.output.scaling, scaling_csv(result.summaries));
  }
}

double linear_fit_residual(const std::vector<double>& feature, const std::vector<double>& y) {
  if (feature.size() != y.size() || feature.size() < 2) {
    throw std::invalid_argument("linear_fit_residual: need matching inputs of length >= 2");
  }
  const auto k = static_cast<Eigen::Index>(y.size());
  Matrix design(k, 2);
  Vector target(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = feature[i];
    target[i] = y[i];
  }
  const Vector coef = design.colPivHouseholderQr().solve(target);
  return (design * coef - target).squaredNorm();
}

}  // namespace wracma
