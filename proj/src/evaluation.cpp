#include "fairreg/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "fairreg/random.hpp"

namespace fairreg {

namespace {

unsigned resolve_workers(unsigned requested, std::size_t tasks) {
  unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(w, std::max<std::size_t>(tasks, 1)));
}

/// Runs task(i) for i in [0, count) on `workers` threads. Tasks must not throw.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& task) {
  workers = resolve_workers(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
}

Vector predict_rows(const Matrix& x, const std::vector<Index>& rows, const Vector& theta) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = x.row(rows[r]).dot(theta);
  return out;
}

Measure mean_of(const std::vector<const Measure*>& ms) {
  double sum = 0.0;
  int count = 0;
  for (const Measure* m : ms) {
    if (m->defined()) {
      sum += **m;
      ++count;
    }
  }
  if (count == 0) return Measure::undefined("undefined in every fold");
  Measure out = Measure::of(sum / count);
  if (count < static_cast<int>(ms.size())) out.reason = "averaged over " + std::to_string(count) + " folds";
  return out;
}

MetricsReport average_reports(const std::vector<MetricsReport>& reports) {
  MetricsReport out;
  const auto field = [&](Measure MetricsReport::*member) {
    std::vector<const Measure*> ms;
    for (const auto& r : reports) ms.push_back(&(r.*member));
    return mean_of(ms);
  };
  out.r2 = field(&MetricsReport::r2);
  out.net_comp_g = field(&MetricsReport::net_comp_g);
  out.net_comp_c = field(&MetricsReport::net_comp_c);
  out.pred_ratio_g = field(&MetricsReport::pred_ratio_g);
  out.pred_ratio_c = field(&MetricsReport::pred_ratio_c);
  out.fair_cov = field(&MetricsReport::fair_cov);
  out.fair_cov_scaled = field(&MetricsReport::fair_cov_scaled);
  // Keeps the MRD identity on the averaged row.
  if (out.net_comp_g.defined() && out.net_comp_c.defined()) {
    out.mean_resid_diff = Measure::of(*out.net_comp_g - *out.net_comp_c);
  } else {
    out.mean_resid_diff = Measure::undefined("group or complement undefined");
  }
  for (const auto& r : reports) {
    out.n_g += r.n_g;
    out.n_c += r.n_c;
  }
  return out;
}

std::vector<MetricsReport> fold_reports(const Dataset& ds, const CvResult& cv, MaskView mask,
                                        std::optional<double> cstar) {
  std::vector<MetricsReport> out;
  for (const auto& rows : cv.fold_rows) {
    std::vector<double> yhat, y;
    Mask m;
    for (Index i : rows) {
      yhat.push_back(cv.pooled_yhat[i]);
      y.push_back(ds.y()[i]);
      m.push_back(mask[static_cast<std::size_t>(i)]);
    }
    out.push_back(metrics_report(yhat, y, m, cstar));
  }
  return out;
}

FitSpec with_group(FitSpec spec, const std::string& group) {
  if (spec.estimator != Estimator::ols && spec.group_label.empty()) spec.group_label = group;
  return spec;
}

}  // namespace

std::vector<Index> CvPlan::held_out(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

std::vector<Index> CvPlan::training(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

CvPlan make_folds(Index n, int k, std::uint64_t seed, std::optional<MaskView> stratify) {
  if (k < 2) fail(ErrorKind::fold, "fold count must be at least 2");
  if (k > n) fail(ErrorKind::fold, "fold count " + std::to_string(k) + " exceeds n = " + std::to_string(n));
  if (stratify && static_cast<Index>(stratify->size()) != n) fail(ErrorKind::fold, "stratify mask length mismatch");

  RngStream rng(seed, "folds");
  const auto shuffle = [&](std::vector<Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };
  std::vector<Index> order;
  if (stratify) {
    std::vector<Index> members, others;
    for (Index i = 0; i < n; ++i) ((*stratify)[static_cast<std::size_t>(i)] ? members : others).push_back(i);
    shuffle(members);
    shuffle(others);
    order = std::move(members);
    order.insert(order.end(), others.begin(), others.end());
  } else {
    order.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    shuffle(order);
  }
  CvPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignment.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    plan.assignment[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  }
  return plan;
}

CvResult cross_validate(const Dataset& ds, const FitSpec& spec, const CvPlan& cv) {
  if (cv.n() != ds.n()) fail(ErrorKind::fold, "fold plan length does not match the dataset");
  CvResult out;
  out.pooled_yhat = Vector::Zero(ds.n());
  for (int f = 0; f < cv.k; ++f) {
    std::vector<Index> held = cv.held_out(f);
    const std::vector<Index> train = cv.training(f);
    try {
      const Dataset split = ds.subset(train);
      FitResult r = fit(split, spec);
      const Vector pred = predict_rows(ds.x(), held, r.theta);
      for (std::size_t j = 0; j < held.size(); ++j) out.pooled_yhat[held[j]] = pred[static_cast<Index>(j)];
      out.fold_fits.push_back(std::move(r));
    } catch (const Error& e) {
      fail(ErrorKind::fold, "fold " + std::to_string(f + 1) + " of " + std::to_string(cv.k) + " (" +
                                std::string(to_string(e.kind())) + "): " + e.what());
    }
    out.fold_rows.push_back(std::move(held));
  }
  return out;
}

void ExperimentGrid::validate() const {
  if (dataset == nullptr) fail(ErrorKind::config, "experiment grid has no dataset");
  if (specs.empty()) fail(ErrorKind::config, "experiment grid has no specs");
  if (cv.n() != dataset->n()) fail(ErrorKind::config, "fold plan length does not match the dataset");
  if (!dataset->has_group(group_label)) fail(ErrorKind::unknown_group, "unknown group '" + group_label + "'");
  for (const auto& s : specs) {
    if (s.estimator != Estimator::ols && !s.group_label.empty() && s.group_label != group_label) {
      fail(ErrorKind::config, "spec '" + s.label() + "' protects group '" + s.group_label +
                                  "' but the grid protects '" + group_label + "'");
    }
  }
}

bool ExperimentResult::all_succeeded() const {
  return std::all_of(rows.begin(), rows.end(), [](const ExperimentRow& r) { return !r.error; });
}

void sort_by_net_compensation(std::vector<ExperimentRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ExperimentRow& a, const ExperimentRow& b) {
    const bool da = a.cv_metrics.net_comp_g.defined();
    const bool db = b.cv_metrics.net_comp_g.defined();
    if (da != db) return da;
    if (!da) return false;
    return *a.cv_metrics.net_comp_g > *b.cv_metrics.net_comp_g;
  });
}

ExperimentResult run_experiment(const ExperimentGrid& grid, const ExperimentOptions& options) {
  grid.validate();
  const Dataset& ds = *grid.dataset;
  const MaskView mask = ds.group(grid.group_label).mask;
  const Values y = as_values(ds.y());

  ExperimentResult result;
  result.group_label = grid.group_label;
  // Reference covariance for the scaled column; an OLS failure only leaves it undefined.
  try {
    const CvResult ols_cv = cross_validate(ds, FitSpec::ols(), grid.cv);
    const Measure c = fair_covariance(as_values(ols_cv.pooled_yhat), y, mask);
    if (c.defined()) result.cstar_cv = *c;
    const Vector full = fit_ols(ds).predict(ds.x());
    const Measure ci = fair_covariance(as_values(full), y, mask);
    if (ci.defined()) result.cstar_in_sample = *ci;
  } catch (const Error&) {
  }

  result.rows.resize(grid.specs.size());
  parallel_for(grid.specs.size(), options.workers, [&](std::size_t idx) {
    ExperimentRow& row = result.rows[idx];
    row.spec = with_group(grid.specs[idx], grid.group_label);
    row.label = row.spec.label();
    try {
      const CvResult cv = cross_validate(ds, row.spec, grid.cv);
      const Values pooled = as_values(cv.pooled_yhat);
      if (options.mode == MetricsMode::pooled) {
        row.cv_metrics = metrics_report(pooled, y, mask, result.cstar_cv);
      } else {
        row.cv_metrics = average_reports(fold_reports(ds, cv, mask, result.cstar_cv));
      }
      for (const auto& g : ds.groups()) {
        if (g.name == grid.group_label) continue;
        Measure nc;
        try {
          nc = Measure::of(net_compensation(pooled, y, g.mask));
        } catch (const Error& e) {
          nc = Measure::undefined(e.what());
        }
        row.other_groups.emplace_back(g.name, std::move(nc));
      }
      double kkt = 0.0;
      for (const auto& f : cv.fold_fits) {
        kkt += f.kkt_residual;
        row.folds_constraint_active += f.constraint_active ? 1 : 0;
      }
      row.mean_kkt_residual = kkt / static_cast<double>(cv.fold_fits.size());
      if (options.fold_detail) {
        row.fold_metrics = fold_reports(ds, cv, mask, result.cstar_cv);
        for (const auto& f : cv.fold_fits) row.fold_theta.push_back(f.theta);
      }
      row.pooled_yhat = cv.pooled_yhat;

      FitResult full = fit(ds, row.spec);
      const Vector in_pred = full.predict(ds.x());
      row.in_sample = metrics_report(as_values(in_pred), y, mask, result.cstar_in_sample);
      row.full_fit = std::move(full);
    } catch (const Error& e) {
      row.error = e.what();
      row.error_kind = e.kind();
    } catch (const std::exception& e) {
      row.error = e.what();
      row.error_kind = ErrorKind::solver;
    }
    if (row.error) {
      const Measure na = Measure::undefined("spec failed");
      row.cv_metrics = {na, na, na, na, na, na, na, na, 0, 0};
      row.in_sample = row.cv_metrics;
    }
  });
  if (options.sort_by_net_compensation) sort_by_net_compensation(result.rows);
  return result;
}

std::vector<FitSpec> simulation_table_grid(const std::string& group) {
  std::vector<FitSpec> specs;
  for (double lambda : {100.0, 1000.0, 5000.0}) specs.push_back(FitSpec::netcomp_penalized(group, lambda));
  specs.push_back(FitSpec::avg_constrained(group));
  specs.push_back(FitSpec::cov_constrained(group, 0.2, CstarScale::covariance));
  for (double lambda : {100.0, 1000.0, 5000.0}) specs.push_back(FitSpec::mrd_penalized(group, lambda));
  for (double alpha : {0.2, 0.4, 0.6, 0.8}) specs.push_back(FitSpec::weighted_avg(group, alpha));
  for (double z : {0.2, 0.6, 1.0}) specs.push_back(FitSpec::netcomp_constrained(group, z));
  specs.push_back(FitSpec::ols());
  return specs;
}

std::vector<FitSpec> analysis_table_grid(const std::string& group) {
  return {FitSpec::netcomp_penalized(group, 20000.0),
          FitSpec::avg_constrained(group),
          FitSpec::cov_constrained(group, 0.2, CstarScale::covariance),
          FitSpec::weighted_avg(group, 0.2),
          FitSpec::mrd_penalized(group, 30000.0),
          FitSpec::ols()};
}

std::vector<Index> sample_without_replacement(Index size, Index n, std::uint64_t seed) {
  if (n < 0 || n > size) {
    fail(ErrorKind::config, "sample size " + std::to_string(n) + " exceeds population " + std::to_string(size));
  }
  std::vector<Index> idx(static_cast<std::size_t>(size));
  for (Index i = 0; i < size; ++i) idx[static_cast<std::size_t>(i)] = i;
  RngStream rng(seed, "sample");
  for (Index i = 0; i < n; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::uint64_t>(size - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(n));
  return idx;
}

namespace {

struct DrawCell {
  bool ok = false;
  std::string error;
  double r2 = 0, pr_g1 = 0, nc_g1 = 0, nc_g2 = 0, fair_cov = 0, sse = 0;
};

double defined_or_zero(const Measure& m) { return m.defined() ? *m : 0.0; }

}  // namespace

ReplicationTable replicate_simulation(const SimPopulation& pop, int scenario, const std::vector<FitSpec>& specs,
                                      const ReplicationOptions& options) {
  if (options.draws < 1) fail(ErrorKind::config, "draws must be >= 1");
  if (specs.empty()) fail(ErrorKind::config, "replication needs at least one spec");
  if (options.n > pop.size) {
    fail(ErrorKind::config, "n = " + std::to_string(options.n) + " exceeds the population size " +
                                std::to_string(pop.size));
  }
  const ScenarioSpec scen = ScenarioSpec::get(scenario);
  std::vector<FitSpec> grid;
  for (const auto& s : specs) grid.push_back(with_group(s, "A1"));

  const CounterRng seeds(options.draw_seed, "replicate");
  std::vector<std::vector<DrawCell>> cells(static_cast<std::size_t>(options.draws));
  std::vector<double> ols_sse(cells.size(), 0.0);

  parallel_for(cells.size(), options.workers, [&](std::size_t d) {
    auto& row = cells[d];
    row.resize(grid.size());
    try {
      const auto rows = sample_without_replacement(pop.size, options.n, seeds.bits(d, 0));
      const Dataset ds = scenario_design(pop, scen, options.add_intercept, std::span<const Index>(rows));
      const CvPlan cv = make_folds(ds.n(), options.k, seeds.bits(d, 1));
      const MaskView g1 = ds.group("A1").mask;
      const MaskView g2 = ds.group("A2").mask;
      const Values y = as_values(ds.y());
      ols_sse[d] = fit_ols(ds).objective_value;
      for (std::size_t s = 0; s < grid.size(); ++s) {
        DrawCell& c = row[s];
        try {
          const CvResult res = cross_validate(ds, grid[s], cv);
          const Values yhat = as_values(res.pooled_yhat);
          MetricsReport rep;
          if (options.mode == MetricsMode::pooled) {
            rep = metrics_report(yhat, y, g1);
          } else {
            rep = average_reports(fold_reports(ds, res, g1, std::nullopt));
          }
          c.r2 = defined_or_zero(rep.r2);
          c.pr_g1 = defined_or_zero(rep.pred_ratio_g);
          c.nc_g1 = defined_or_zero(rep.net_comp_g);
          c.fair_cov = defined_or_zero(rep.fair_cov);
          c.nc_g2 = net_compensation(yhat, y, g2);
          c.sse = fit(ds, grid[s]).objective_value;
          c.ok = true;
        } catch (const std::exception& e) {
          c.error = "draw " + std::to_string(d + 1) + ": " + e.what();
        }
      }
    } catch (const std::exception& e) {
      for (auto& c : row) c.error = "draw " + std::to_string(d + 1) + ": " + e.what();
    }
  });

  ReplicationTable table;
  table.scenario = scenario;
  table.n = options.n;
  table.draws = options.draws;
  for (std::size_t s = 0; s < grid.size(); ++s) {
    ReplicationRow r;
    r.spec = grid[s];
    r.label = grid[s].label();
    for (std::size_t d = 0; d < cells.size(); ++d) {
      const DrawCell& c = cells[d][s];
      if (!c.ok) {
        if (!r.error) r.error = c.error;
        continue;
      }
      ++r.draws_ok;
      r.r2 += c.r2;
      r.pr_g1 += c.pr_g1;
      r.nc_g1 += c.nc_g1;
      r.nc_g2 += c.nc_g2;
      r.fair_cov += c.fair_cov;
      r.in_sample_sse += c.sse;
      if (c.sse < ols_sse[d] * (1.0 - 1e-9)) r.sse_not_below_ols = false;
    }
    if (r.draws_ok > 0) {
      const double k = r.draws_ok;
      r.r2 /= k;
      r.pr_g1 /= k;
      r.nc_g1 /= k;
      r.nc_g2 /= k;
      r.fair_cov /= k;
      r.in_sample_sse /= k;
    }
    table.rows.push_back(std::move(r));
  }
  std::stable_sort(table.rows.begin(), table.rows.end(), [](const ReplicationRow& a, const ReplicationRow& b) {
    if ((a.draws_ok > 0) != (b.draws_ok > 0)) return a.draws_ok > 0;
    return a.nc_g1 > b.nc_g1;
  });
  return table;
}

}  // namespace fairreg
