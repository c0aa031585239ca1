#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

#include "fairreg/csv.hpp"
#include "fairreg/data_model.hpp"
#include "fairreg/estimators.hpp"
#include "fairreg/evaluation.hpp"
#include "fairreg/fairness_metrics.hpp"
#include "fairreg/random.hpp"
#include "fairreg/synthgen.hpp"

namespace fairreg::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// One subcommand's parameters: defaults, then the config file, then flags.
class Params {
 public:
  explicit Params(CLI::App* app) : app_(app) {}

  template <class T>
  void add(const std::string& key, T def, const std::string& help) {
    values_[key] = def;
    auto store = std::make_shared<T>(def);
    CLI::Option* opt = app_->add_option(flag_name(key), *store, help);
    if constexpr (std::is_same_v<T, std::vector<std::string>>) opt->delimiter(',');
    flags_.push_back([this, key, store, opt] {
      if (opt->count() > 0) values_[key] = *store;
    });
  }

  void add_flag(const std::string& key, const std::string& help) {
    values_[key] = false;
    auto store = std::make_shared<bool>(false);
    CLI::Option* opt = app_->add_flag(flag_name(key), *store, help);
    flags_.push_back([this, key, store, opt] {
      if (opt->count() > 0) values_[key] = *store;
    });
  }

  bool has(const std::string& key) const { return values_.contains(key); }

  /// Config values must have the default's JSON type.
  void set_from_config(const std::string& key, const json& value) {
    const json& def = values_.at(key);
    const bool ok = (def.is_number() && value.is_number()) || (def.is_string() && value.is_string()) ||
                    (def.is_boolean() && value.is_boolean()) ||
                    (def.is_array() && value.is_array() &&
                     std::all_of(value.begin(), value.end(), [](const json& v) { return v.is_string(); }));
    if (!ok) fail(ErrorKind::config, "config key '" + key + "' has the wrong type (expected " + def.type_name() + ")");
    if (def.is_number_unsigned() && !(value.is_number_unsigned() || (value.is_number_integer() && value >= 0))) {
      fail(ErrorKind::config, "config key '" + key + "' must be a nonnegative integer");
    }
    if (def.is_number_integer() && !value.is_number_integer()) {
      fail(ErrorKind::config, "config key '" + key + "' must be an integer");
    }
    values_[key] = value;
  }

  void apply_flags() {
    for (auto& f : flags_) f();
  }

  template <class T>
  T get(const std::string& key) const {
    return values_.at(key).get<T>();
  }
  const json& values() const noexcept { return values_; }

 private:
  static std::string flag_name(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
  }

  CLI::App* app_;
  json values_ = json::object();
  std::vector<std::function<void()>> flags_;
};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Files written by one command, recorded for the manifest.
class RunOutputs {
 public:
  explicit RunOutputs(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << content;
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
    files_.push_back({{"file", name}, {"bytes", content.size()}, {"fnv1a64", hex64(fnv1a64(content))}});
  }

  const fs::path& dir() const noexcept { return dir_; }
  const json& files() const noexcept { return files_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

std::string table_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

json measure_json(const Measure& m) {
  json j;
  to_json(j, m);
  return j;
}

// ---- shared pieces -------------------------------------------------------------

struct Globals {
  std::uint64_t seed = 1;
  unsigned workers = 0;
  std::string format = "csv";
  fs::path out_dir = ".";
};

void add_dataset_params(Params& p) {
  p.add<std::string>("data", "", "Input CSV");
  p.add<std::string>("outcome", "y", "Outcome column");
  p.add<std::vector<std::string>>("groups", {}, "Group indicator columns (0/1)");
  p.add<std::vector<std::string>>("features", {}, "Feature columns (default: all remaining)");
  p.add<std::string>("id_col", "", "Observation id column");
  p.add_flag("no_intercept", "Do not prepend an intercept column");
  p.add<long>("min_binary_count", 0, "Drop 0/1 features with fewer ones than this");
  p.add<std::string>("group", "", "Protected group (default: the only group column)");
}

Dataset load_dataset(const Params& p) {
  const auto path = p.get<std::string>("data");
  if (path.empty()) fail(ErrorKind::config, "--data is required");
  CsvLoadOptions opts;
  opts.outcome_col = p.get<std::string>("outcome");
  opts.group_cols = p.get<std::vector<std::string>>("groups");
  opts.feature_cols = p.get<std::vector<std::string>>("features");
  opts.add_intercept = !p.get<bool>("no_intercept");
  if (const auto id = p.get<std::string>("id_col"); !id.empty()) opts.id_col = id;
  opts.min_binary_count = p.get<long>("min_binary_count");
  return load_csv(path, opts);
}

std::string protected_group(const Params& p, const Dataset& ds) {
  auto g = p.get<std::string>("group");
  if (g.empty()) {
    if (ds.groups().size() != 1) fail(ErrorKind::config, "--group is required when there is not exactly one group");
    g = ds.groups().front().name;
  }
  if (!ds.has_group(g)) fail(ErrorKind::unknown_group, "unknown group '" + g + "'");
  return g;
}

std::vector<FitSpec> grid_specs(const Params& p, const std::string& group) {
  const auto preset = p.get<std::string>("preset");
  std::vector<FitSpec> specs;
  if (preset == "simulation-table") {
    specs = simulation_table_grid(group);
  } else if (preset == "analysis-table") {
    specs = analysis_table_grid(group);
  } else if (!preset.empty()) {
    fail(ErrorKind::config, "unknown preset '" + preset + "' (simulation-table, analysis-table)");
  }
  for (const auto& text : p.get<std::vector<std::string>>("specs")) specs.push_back(FitSpec::parse(text, group));
  if (specs.empty()) fail(ErrorKind::config, "no specs: give --preset or --specs");
  return specs;
}

MetricsMode metrics_mode(const Params& p) {
  const auto mode = p.get<std::string>("metrics_mode");
  if (mode == "pooled") return MetricsMode::pooled;
  if (mode == "fold_averaged") return MetricsMode::fold_averaged;
  fail(ErrorKind::config, "metrics_mode must be pooled or fold_averaged");
}

std::string table_ext(const Globals& g) { return g.format == "json" ? ".json" : ".csv"; }

std::string emit_table(const Globals& g, const std::vector<std::string>& header,
                       const std::vector<std::vector<json>>& rows) {
  if (g.format == "json") {
    json arr = json::array();
    for (const auto& r : rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = r[i];
      arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
  }
  std::vector<std::vector<std::string>> text;
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& v : r) {
      if (v.is_null()) {
        cells.emplace_back("NA");
      } else if (v.is_string()) {
        cells.push_back(v.get<std::string>());
      } else if (v.is_boolean()) {
        cells.emplace_back(v.get<bool>() ? "1" : "0");
      } else if (v.is_number_integer() || v.is_number_unsigned()) {
        cells.push_back(v.dump());
      } else {
        cells.push_back(format_double(v.get<double>()));
      }
    }
    text.push_back(std::move(cells));
  }
  return table_csv(header, text);
}

// ---- commands -------------------------------------------------------------------

struct CommandResult {
  int exit_code = kOk;
  json summary = json::object();
};

CommandResult cmd_simulate_population(const Globals& g, const Params& p, RunOutputs& out) {
  const auto size = p.get<long>("size");
  if (size < 1) fail(ErrorKind::config, "size must be >= 1");
  const SimPopulation pop = generate_population(size, g.seed);
  out.write(p.get<std::string>("name") + ".csv", population_csv(pop));

  CommandResult r;
  const double n = static_cast<double>(pop.size);
  json moments = json::object();
  for (std::size_t k = 0; k < 9; ++k) {
    double s = 0.0;
    for (double v : pop.x[k]) s += v;
    moments["X" + std::to_string(k + 1)] = s / n;
  }
  double a1 = 0, a2 = 0, both = 0, y1 = 0, y2 = 0;
  for (std::size_t i = 0; i < pop.a1.size(); ++i) {
    a1 += pop.a1[i];
    a2 += pop.a2[i];
    both += pop.a1[i] && pop.a2[i];
    y1 += pop.y1[i];
    y2 += pop.y2[i];
  }
  moments["A1"] = a1 / n;
  moments["A2"] = a2 / n;
  moments["A1_and_A2"] = both / n;
  moments["Y1"] = y1 / n;
  moments["Y2"] = y2 / n;
  r.summary = {{"rows", pop.size}, {"means", moments}};
  return r;
}

CommandResult cmd_generate_analysis(const Globals& g, const Params& p, RunOutputs& out) {
  AnalysisSynthConfig cfg;
  cfg.n = p.get<long>("n");
  cfg.seed = g.seed;
  if (const auto path = p.get<std::string>("coefficients"); !path.empty()) {
    cfg.coef = AnalysisCoefficients::load(path);
  }
  const AnalysisData data = generate_analysis_data(cfg);
  out.write(p.get<std::string>("name") + ".csv", to_csv(data.dataset, "y", true));
  const AnalysisSummary& s = data.summary;
  CommandResult r;
  r.summary = {{"rows", s.n},
               {"zero_spend_share", s.zero_spend_share},
               {"observed_zero_share", s.observed_zero_share},
               {"group", std::string(kAnalysisGroup)},
               {"group_prevalence", s.group_prevalence},
               {"mean_y", s.mean_y},
               {"median_y", s.median_y},
               {"min_y", s.min_y},
               {"max_y", s.max_y},
               {"mean_y_group", s.mean_y_group},
               {"mean_y_complement", s.mean_y_complement}};
  return r;
}

json fit_json(const FitResult& f, const MetricsReport& m) {
  json j = {{"label", f.spec.label()},
            {"spec", f.spec.to_text()},
            {"group", f.spec.group_label},
            {"constraint_active", f.constraint_active},
            {"multiplier", f.multiplier},
            {"kkt_residual", f.kkt_residual},
            {"objective_value", f.objective_value},
            {"penalty_value", f.penalty_value},
            {"rank", f.rank},
            {"diagnostics", f.diagnostics}};
  json metrics;
  to_json(metrics, m);
  j["in_sample_metrics"] = std::move(metrics);
  return j;
}

CommandResult cmd_fit(const Globals& g, const Params& p, RunOutputs& out) {
  const Dataset ds = load_dataset(p);
  const std::string spec_text = p.get<std::string>("spec");
  const Estimator estimator = estimator_from_string(std::string_view(spec_text).substr(0, spec_text.find(':')));
  const bool needs_group = estimator != Estimator::ols ||
                           !p.get<std::string>("compare_to").empty() || !p.get<std::string>("group").empty();
  const std::string group = needs_group || !ds.groups().empty() ? protected_group(p, ds) : std::string{};
  const FitSpec spec = FitSpec::parse(spec_text, group);
  const FitResult result = fit(ds, spec);
  const Vector yhat = result.predict(ds.x());
  const MetricsReport metrics = group.empty() ? MetricsReport{} :
      metrics_report(as_values(yhat), as_values(ds.y()), ds.group(group).mask);

  const std::string stem = p.get<std::string>("name");
  std::vector<std::vector<json>> theta_rows;
  for (std::size_t j = 0; j < result.feature_names.size(); ++j) {
    theta_rows.push_back({result.feature_names[j], result.theta[static_cast<Index>(j)]});
  }
  out.write(stem + "_theta" + table_ext(g), emit_table(g, {"feature", "coefficient"}, theta_rows));
  json diag = fit_json(result, metrics);

  if (const auto ref_text = p.get<std::string>("compare_to"); !ref_text.empty()) {
    const FitResult ref = fit(ds, FitSpec::parse(ref_text, group));
    std::vector<std::size_t> order(result.feature_names.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    const Vector diff = result.theta - ref.theta;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(diff[static_cast<Index>(a)]) > std::abs(diff[static_cast<Index>(b)]);
    });
    std::vector<std::vector<json>> rows;
    for (std::size_t j : order) {
      const auto jj = static_cast<Index>(j);
      rows.push_back({result.feature_names[j], ref.theta[jj], result.theta[jj], diff[jj]});
    }
    out.write(stem + "_diff" + table_ext(g), emit_table(g, {"feature", "reference", "fitted", "difference"}, rows));
    diag["reference"] = fit_json(ref, group.empty() ? MetricsReport{} :
        metrics_report(as_values(Vector(ref.predict(ds.x()))), as_values(ds.y()), ds.group(group).mask));
  }
  out.write(stem + ".json", diag.dump(2) + "\n");
  CommandResult r;
  r.summary = {{"label", spec.label()}, {"rows", ds.n()}, {"features", ds.p()}};
  return r;
}

const std::vector<std::string> kMetricHeader{"R2", "PR_g", "PR_c", "NC_g", "NC_c", "MRD", "FairCov", "FairCovScaled"};

std::vector<json> report_cells(const MetricsReport& m) {
  return {measure_json(m.r2),         measure_json(m.pred_ratio_g), measure_json(m.pred_ratio_c),
          measure_json(m.net_comp_g), measure_json(m.net_comp_c),   measure_json(m.mean_resid_diff),
          measure_json(m.fair_cov),   measure_json(m.fair_cov_scaled)};
}

CommandResult cmd_experiment(const Globals& g, const Params& p, RunOutputs& out) {
  const Dataset ds = load_dataset(p);
  const std::string group = protected_group(p, ds);
  ExperimentGrid grid;
  grid.dataset = &ds;
  grid.group_label = group;
  grid.specs = grid_specs(p, group);
  const auto folds = p.get<int>("folds");
  grid.cv = p.get<bool>("stratify") ? make_folds(ds.n(), folds, g.seed, ds.group(group).mask)
                                    : make_folds(ds.n(), folds, g.seed);
  ExperimentOptions opts;
  opts.mode = metrics_mode(p);
  opts.workers = g.workers;
  opts.fold_detail = p.get<bool>("fold_detail");
  const ExperimentResult res = run_experiment(grid, opts);

  std::vector<std::string> header{"Method", "Spec"};
  header.insert(header.end(), kMetricHeader.begin(), kMetricHeader.end());
  header.insert(header.end(), {"n_g", "n_c", "InSample_R2", "InSample_NC_g", "InSample_SSE"});
  for (const auto& other : ds.groups()) {
    if (other.name != group) header.push_back("NC_" + other.name);
  }
  header.insert(header.end(), {"ConstraintActiveFolds", "Status", "Error"});

  std::vector<std::vector<json>> rows;
  for (const auto& row : res.rows) {
    std::vector<json> r{row.label, row.spec.to_text()};
    for (auto& c : report_cells(row.cv_metrics)) r.push_back(std::move(c));
    r.push_back(row.cv_metrics.n_g);
    r.push_back(row.cv_metrics.n_c);
    r.push_back(measure_json(row.in_sample.r2));
    r.push_back(measure_json(row.in_sample.net_comp_g));
    r.push_back(row.full_fit ? json(row.full_fit->objective_value) : json(nullptr));
    std::size_t k = 0;
    for (const auto& other : ds.groups()) {
      if (other.name == group) continue;
      r.push_back(k < row.other_groups.size() ? measure_json(row.other_groups[k].second) : json(nullptr));
      ++k;
    }
    r.push_back(row.folds_constraint_active);
    r.push_back(row.error ? "error" : "ok");
    r.push_back(row.error ? *row.error : std::string{});
    rows.push_back(std::move(r));
  }
  const std::string stem = p.get<std::string>("name");
  out.write(stem + table_ext(g), emit_table(g, header, rows));

  if (opts.fold_detail) {
    std::vector<std::string> fh{"Method", "Fold"};
    fh.insert(fh.end(), kMetricHeader.begin(), kMetricHeader.end());
    fh.insert(fh.end(), {"n_g", "n_c"});
    for (const auto& name : ds.feature_names()) fh.push_back("theta_" + name);
    std::vector<std::vector<json>> frows;
    for (const auto& row : res.rows) {
      for (std::size_t f = 0; f < row.fold_metrics.size(); ++f) {
        std::vector<json> r{row.label, f + 1};
        for (auto& c : report_cells(row.fold_metrics[f])) r.push_back(std::move(c));
        r.push_back(row.fold_metrics[f].n_g);
        r.push_back(row.fold_metrics[f].n_c);
        for (Index j = 0; j < row.fold_theta[f].size(); ++j) r.push_back(row.fold_theta[f][j]);
        frows.push_back(std::move(r));
      }
    }
    out.write(stem + "_folds" + table_ext(g), emit_table(g, fh, frows));
  }

  CommandResult r;
  r.exit_code = res.all_succeeded() ? kOk : kRuntimeError;
  r.summary = {{"group", group},
               {"rows", ds.n()},
               {"specs", grid.specs.size()},
               {"failed_specs", std::count_if(res.rows.begin(), res.rows.end(),
                                              [](const ExperimentRow& x) { return x.error.has_value(); })},
               {"cstar_cv", res.cstar_cv ? json(*res.cstar_cv) : json(nullptr)}};
  return r;
}

CommandResult cmd_replicate(const Globals& g, const Params& p, RunOutputs& out) {
  const SimPopulation pop = generate_population(p.get<long>("population_size"), g.seed);
  ReplicationOptions opts;
  opts.n = p.get<long>("n");
  opts.draws = p.get<int>("draws");
  opts.draw_seed = p.get<std::uint64_t>("draw_seed");
  opts.k = p.get<int>("folds");
  opts.mode = metrics_mode(p);
  opts.workers = g.workers;
  opts.add_intercept = !p.get<bool>("no_intercept");
  const int scenario = p.get<int>("scenario");
  const ReplicationTable table = replicate_simulation(pop, scenario, grid_specs(p, "A1"), opts);

  const std::vector<std::string> header{"Method", "Spec", "R2", "PR_g1", "NC_g1", "NC_g2", "FairCov",
                                        "InSampleSSE", "SSENotBelowOLS", "DrawsOK", "Error"};
  std::vector<std::vector<json>> rows;
  bool all_ok = true;
  for (const auto& r : table.rows) {
    const bool ok = r.draws_ok > 0;
    all_ok = all_ok && !r.error;
    rows.push_back({r.label, r.spec.to_text(), ok ? json(r.r2) : json(nullptr), ok ? json(r.pr_g1) : json(nullptr),
                    ok ? json(r.nc_g1) : json(nullptr), ok ? json(r.nc_g2) : json(nullptr),
                    ok ? json(r.fair_cov) : json(nullptr), ok ? json(r.in_sample_sse) : json(nullptr),
                    r.sse_not_below_ols, r.draws_ok, r.error.value_or("")});
  }
  out.write(p.get<std::string>("name") + table_ext(g), emit_table(g, header, rows));
  CommandResult r;
  r.exit_code = all_ok ? kOk : kRuntimeError;
  r.summary = {{"scenario", scenario}, {"n", opts.n}, {"draws", opts.draws}, {"population_size", pop.size}};
  return r;
}

// ---- driver ---------------------------------------------------------------------

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::schema:
    case ErrorKind::parse:
    case ErrorKind::unknown_group:
    case ErrorKind::empty_dataset: return kConfigError;
    default: return kRuntimeError;
  }
}

json read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot open config file " + path);
  try {
    json cfg = json::parse(in);
    if (!cfg.is_object()) fail(ErrorKind::config, "config file must hold a JSON object");
    return cfg;
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, "config file " + path + ": " + e.what());
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fair regression estimators, metrics and simulation generators", "fairreg"};
  app.set_version_flag("--version", FAIRREG_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Params global(&app);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  global.add<std::uint64_t>("seed", 1, "RNG seed");
  global.add<unsigned>("workers", 0, "Worker threads (0 = available parallelism)");
  global.add<std::string>("format", "csv", "Table format: csv or json");
  global.add<std::string>("out_dir", ".", "Output directory");

  std::map<std::string, std::pair<std::unique_ptr<Params>, CLI::App*>> commands;
  const auto command = [&](const std::string& name, const std::string& help) -> Params& {
    CLI::App* sub = app.add_subcommand(name, help);
    auto& slot = commands[name];
    slot = {std::make_unique<Params>(sub), sub};
    return *slot.first;
  };

  Params& sim = command("simulate-population", "Generate the simulation population");
  sim.add<long>("size", kDefaultPopulationSize, "Population size");
  sim.add<std::string>("name", "population", "Output file stem");

  Params& gen = command("generate-analysis", "Generate two-part analysis data");
  gen.add<long>("n", 100'000, "Row count");
  gen.add<std::string>("coefficients", "", "Coefficient table (default: shipped table)");
  gen.add<std::string>("name", "analysis", "Output file stem");

  Params& fitp = command("fit", "Fit one estimator on a CSV dataset");
  add_dataset_params(fitp);
  fitp.add<std::string>("spec", "ols", "Estimator spec, e.g. netcomp_penalized:lambda=1000");
  fitp.add<std::string>("compare_to", "", "Reference spec for a coefficient diff table");
  fitp.add<std::string>("name", "fit", "Output file stem");

  Params& exp = command("experiment", "Cross-validated comparison over a spec grid");
  add_dataset_params(exp);
  exp.add<std::string>("preset", "", "simulation-table or analysis-table");
  exp.add<std::vector<std::string>>("specs", {}, "Additional specs");
  exp.add<int>("folds", 5, "Fold count");
  exp.add_flag("stratify", "Stratify folds by the protected group");
  exp.add<std::string>("metrics_mode", "pooled", "pooled or fold_averaged");
  exp.add_flag("fold_detail", "Also write per-fold metrics and coefficients");
  exp.add<std::string>("name", "experiment", "Output file stem");

  Params& rep = command("replicate-sim", "Repeated-sample simulation study");
  rep.add<int>("scenario", 1, "Scenario 1, 2 or 3");
  rep.add<long>("n", 10'000, "Rows per draw");
  rep.add<int>("draws", 50, "Number of draws");
  rep.add<std::uint64_t>("draw_seed", 2, "Seed for row sampling and folds");
  rep.add<long>("population_size", kDefaultPopulationSize, "Population size (population seed is --seed)");
  rep.add<std::string>("preset", "simulation-table", "Spec preset ('' for none)");
  rep.add<std::vector<std::string>>("specs", {}, "Additional specs");
  rep.add<int>("folds", 5, "Fold count");
  rep.add<std::string>("metrics_mode", "pooled", "pooled or fold_averaged");
  rep.add_flag("no_intercept", "Fit without an intercept column");
  rep.add<std::string>("name", "replication", "Output file stem");

  std::vector<char*> argv;
  std::vector<std::string> storage = args.empty() ? std::vector<std::string>{"fairreg"} : args;
  for (auto& a : storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  std::string name;
  Params* params = nullptr;
  for (auto& [n, slot] : commands) {
    if (slot.second->parsed()) {
      name = n;
      params = slot.first.get();
    }
  }

  try {
    if (!config_path.empty()) {
      const json file_config = read_config(config_path);
      for (const auto& [key, value] : file_config.items()) {
        if (params->has(key)) {
          params->set_from_config(key, value);
        } else if (global.has(key)) {
          global.set_from_config(key, value);
        } else {
          fail(ErrorKind::config, "unknown config key '" + key + "' for " + name);
        }
      }
    }
    global.apply_flags();
    params->apply_flags();

    Globals g;
    g.seed = global.get<std::uint64_t>("seed");
    g.workers = global.get<unsigned>("workers");
    g.format = global.get<std::string>("format");
    g.out_dir = global.get<std::string>("out_dir");
    if (g.format != "csv" && g.format != "json") fail(ErrorKind::config, "--format must be csv or json");

    // The hashed config holds everything that determines output content.
    json config = {{"command", name}, {"seed", g.seed}, {"format", g.format}};
    for (const auto& [key, value] : params->values().items()) config[key] = value;
    RunOutputs outputs(g.out_dir);

    CommandResult result;
    if (name == "simulate-population") result = cmd_simulate_population(g, *params, outputs);
    if (name == "generate-analysis") result = cmd_generate_analysis(g, *params, outputs);
    if (name == "fit") result = cmd_fit(g, *params, outputs);
    if (name == "experiment") result = cmd_experiment(g, *params, outputs);
    if (name == "replicate-sim") result = cmd_replicate(g, *params, outputs);

    const std::string config_text = config.dump();
    json manifest = {{"tool", "fairreg"},
                     {"version", FAIRREG_VERSION},
                     {"command", name},
                     {"config_hash", hex64(fnv1a64(config_text))},
                     {"config", config},
                     {"outputs", outputs.files()},
                     {"summary", result.summary},
                     {"exit_code", result.exit_code}};
    outputs.write(params->get<std::string>("name") + ".manifest.json", manifest.dump(2) + "\n");
    for (const auto& f : outputs.files()) out << (outputs.dir() / f["file"].get<std::string>()).string() << "\n";
    return result.exit_code;
  } catch (const Error& e) {
    err << "fairreg " << name << ": " << to_string(e.kind()) << " error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "fairreg " << name << ": error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fairreg::cli
