#include "fairreg/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace fairreg {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::schema: return "schema";
    case ErrorKind::parse: return "parse";
    case ErrorKind::empty_dataset: return "empty_dataset";
    case ErrorKind::unknown_group: return "unknown_group";
    case ErrorKind::degenerate_group: return "degenerate_group";
    case ErrorKind::infeasible: return "infeasible";
    case ErrorKind::solver: return "solver";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::config: return "config";
    case ErrorKind::pair_cap: return "pair_cap";
    case ErrorKind::fold: return "fold";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

Dataset::Dataset(Vector y, Matrix x, std::vector<std::string> feature_names,
                 std::vector<Group> groups, std::vector<std::string> ids)
    : y_(std::move(y)),
      x_(std::move(x)),
      feature_names_(std::move(feature_names)),
      groups_(std::move(groups)),
      ids_(std::move(ids)) {
  const Index n = y_.size();
  if (n < 1) fail(ErrorKind::empty_dataset, "dataset has no observations");
  if (x_.rows() != n) {
    fail(ErrorKind::schema, "design matrix has " + std::to_string(x_.rows()) +
                                " rows but outcome has " + std::to_string(n));
  }
  if (static_cast<Index>(feature_names_.size()) != x_.cols()) {
    fail(ErrorKind::schema, "feature name count does not match design columns");
  }
  std::set<std::string> seen;
  for (const auto& name : feature_names_) {
    if (!seen.insert(name).second) fail(ErrorKind::schema, "duplicate feature column '" + name + "'");
  }
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i])) {
      fail(ErrorKind::numeric, "non-finite outcome at row " + std::to_string(i));
    }
  }
  if (!x_.allFinite()) {
    for (Index i = 0; i < n; ++i) {
      if (!x_.row(i).allFinite()) {
        fail(ErrorKind::numeric, "non-finite feature value at row " + std::to_string(i));
      }
    }
  }
  std::set<std::string> group_names;
  for (const auto& g : groups_) {
    if (!group_names.insert(g.name).second) {
      fail(ErrorKind::schema, "duplicate group '" + g.name + "'");
    }
    if (static_cast<Index>(g.mask.size()) != n) {
      fail(ErrorKind::schema, "group '" + g.name + "' has wrong length");
    }
    for (std::size_t i = 0; i < g.mask.size(); ++i) {
      if (g.mask[i] > 1) {
        fail(ErrorKind::parse, "group '" + g.name + "' has a non 0/1 value at row " + std::to_string(i));
      }
    }
  }
  if (ids_.empty()) {
    ids_.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) ids_.push_back(std::to_string(i + 1));
  } else if (static_cast<Index>(ids_.size()) != n) {
    fail(ErrorKind::schema, "id count does not match observation count");
  }
}

bool Dataset::has_intercept() const noexcept {
  return !feature_names_.empty() && feature_names_.front() == kInterceptName;
}

bool Dataset::has_group(std::string_view label) const noexcept {
  return std::any_of(groups_.begin(), groups_.end(), [&](const Group& g) { return g.name == label; });
}

const Group& Dataset::group(std::string_view label) const {
  for (const auto& g : groups_) {
    if (g.name == label) return g;
  }
  fail(ErrorKind::unknown_group, "unknown group '" + std::string(label) + "'");
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  const auto m = static_cast<Index>(rows.size());
  Vector y(m);
  Matrix x(m, p());
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  std::vector<Group> groups;
  for (const auto& g : groups_) groups.push_back({g.name, Mask(rows.size())});
  for (Index r = 0; r < m; ++r) {
    const Index i = rows[static_cast<std::size_t>(r)];
    if (i < 0 || i >= n()) fail(ErrorKind::schema, "subset row out of range");
    y[r] = y_[i];
    x.row(r) = x_.row(i);
    ids.push_back(ids_[static_cast<std::size_t>(i)]);
    for (std::size_t k = 0; k < groups_.size(); ++k) {
      groups[k].mask[static_cast<std::size_t>(r)] = groups_[k].mask[static_cast<std::size_t>(i)];
    }
  }
  return Dataset(std::move(y), std::move(x), feature_names_, std::move(groups), std::move(ids));
}

GroupView count_group(std::string_view label, MaskView mask) {
  GroupView view;
  view.label = std::string(label);
  view.mask = mask;
  for (auto v : mask) view.n_g += v != 0;
  view.n_c = static_cast<Index>(mask.size()) - view.n_g;
  view.p_hat = mask.empty() ? 0.0 : static_cast<double>(view.n_g) / static_cast<double>(mask.size());
  return view;
}

GroupView group_view(const Dataset& ds, std::string_view label) {
  const Group& g = ds.group(label);
  GroupView view = count_group(label, g.mask);
  if (view.n_g == 0) {
    fail(ErrorKind::degenerate_group, "group '" + view.label + "' has no members");
  }
  if (view.n_c == 0) {
    fail(ErrorKind::degenerate_group, "group '" + view.label + "' has an empty complement");
  }
  return view;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) fail(ErrorKind::numeric, "cannot format value");
  return std::string(buf, end);
}

// --- FitSpec ---------------------------------------------------------------

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::ols: return "ols";
    case Estimator::avg_constrained: return "avg_constrained";
    case Estimator::weighted_avg_constrained: return "weighted_avg_constrained";
    case Estimator::cov_constrained: return "cov_constrained";
    case Estimator::mrd_penalized: return "mrd_penalized";
    case Estimator::netcomp_penalized: return "netcomp_penalized";
    case Estimator::netcomp_constrained: return "netcomp_constrained";
  }
  return "unknown";
}

Estimator estimator_from_string(std::string_view name) {
  for (auto e : {Estimator::ols, Estimator::avg_constrained, Estimator::weighted_avg_constrained,
                 Estimator::cov_constrained, Estimator::mrd_penalized, Estimator::netcomp_penalized,
                 Estimator::netcomp_constrained}) {
    if (to_string(e) == name) return e;
  }
  fail(ErrorKind::config, "unknown estimator '" + std::string(name) + "'");
}

namespace {

void require(bool present, bool needed, std::string_view param, Estimator e) {
  if (present && !needed) {
    fail(ErrorKind::config, std::string(param) + " is not a hyperparameter of " + std::string(to_string(e)));
  }
  if (!present && needed) {
    fail(ErrorKind::config, std::string(to_string(e)) + " requires " + std::string(param));
  }
}

std::string short_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

void FitSpec::validate() const {
  const bool wants_lambda = estimator == Estimator::mrd_penalized || estimator == Estimator::netcomp_penalized;
  require(lambda.has_value(), wants_lambda, "lambda", estimator);
  require(alpha.has_value(), estimator == Estimator::weighted_avg_constrained, "alpha", estimator);
  require(m.has_value(), estimator == Estimator::cov_constrained, "m", estimator);
  require(z.has_value(), estimator == Estimator::netcomp_constrained, "z", estimator);
  if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) fail(ErrorKind::config, "lambda must be >= 0");
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) fail(ErrorKind::config, "alpha must be in [0,1]");
  if (m && !(*m >= 0.0 && *m <= 1.0)) fail(ErrorKind::config, "m must be in [0,1]");
  if (z && !(*z >= 0.0 && std::isfinite(*z))) fail(ErrorKind::config, "z must be >= 0");
  if (!(solver_tol > 0.0)) fail(ErrorKind::config, "solver_tol must be positive");
  if (estimator != Estimator::ols && group_label.empty()) {
    fail(ErrorKind::config, std::string(to_string(estimator)) + " requires a group label");
  }
}

std::string FitSpec::label() const {
  switch (estimator) {
    case Estimator::ols: return "OLS";
    case Estimator::avg_constrained: return "Average";
    case Estimator::weighted_avg_constrained: return "Weighted Average, alpha=" + short_number(alpha.value_or(0));
    case Estimator::cov_constrained: return "Covariance, m=" + short_number(m.value_or(0));
    case Estimator::mrd_penalized: return "Mean Residual Difference, lambda=" + short_number(lambda.value_or(0));
    case Estimator::netcomp_penalized: return "Net Compensation, lambda=" + short_number(lambda.value_or(0));
    case Estimator::netcomp_constrained: return "Net Compensation Constraint, z=" + short_number(z.value_or(0));
  }
  return "?";
}

FitSpec FitSpec::parse(std::string_view text, const std::string& group) {
  const auto colon = text.find(':');
  FitSpec s;
  s.estimator = estimator_from_string(text.substr(0, colon));
  if (s.estimator != Estimator::ols) s.group_label = group;
  std::string_view rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorKind::config, "spec parameter '" + std::string(item) + "' must be key=value");
    }
    const std::string key(item.substr(0, eq));
    const std::string_view value = item.substr(eq + 1);
    if (key == "scale") {
      if (value == "constraint_sum") {
        s.cstar_scale = CstarScale::constraint_sum;
      } else if (value == "covariance") {
        s.cstar_scale = CstarScale::covariance;
      } else {
        fail(ErrorKind::config, "scale must be constraint_sum or covariance, got '" + std::string(value) + "'");
      }
      continue;
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || end != value.data() + value.size()) {
      fail(ErrorKind::config, "spec parameter '" + key + "' has non-numeric value '" + std::string(value) + "'");
    }
    if (key == "lambda") {
      s.lambda = v;
    } else if (key == "alpha") {
      s.alpha = v;
    } else if (key == "m") {
      s.m = v;
    } else if (key == "z") {
      s.z = v;
    } else if (key == "relative") {
      s.z_relative_to_group_mean = v != 0.0;
    } else if (key == "tol") {
      s.solver_tol = v;
    } else {
      fail(ErrorKind::config, "unknown spec parameter '" + key + "'");
    }
  }
  s.validate();
  return s;
}

std::string FitSpec::to_text() const {
  std::string out(to_string(estimator));
  std::vector<std::string> params;
  if (lambda) params.push_back("lambda=" + format_double(*lambda));
  if (alpha) params.push_back("alpha=" + format_double(*alpha));
  if (m) params.push_back("m=" + format_double(*m));
  if (z) params.push_back("z=" + format_double(*z));
  if (estimator == Estimator::cov_constrained && cstar_scale == CstarScale::covariance) {
    params.emplace_back("scale=covariance");
  }
  if (z_relative_to_group_mean) params.emplace_back("relative=1");
  if (solver_tol != 1e-8) params.push_back("tol=" + format_double(solver_tol));
  for (std::size_t i = 0; i < params.size(); ++i) out += (i == 0 ? ":" : ",") + params[i];
  return out;
}

FitSpec FitSpec::ols() { return FitSpec{}; }

FitSpec FitSpec::avg_constrained(std::string group) {
  FitSpec s;
  s.estimator = Estimator::avg_constrained;
  s.group_label = std::move(group);
  return s;
}

FitSpec FitSpec::weighted_avg(std::string group, double alpha) {
  FitSpec s;
  s.estimator = Estimator::weighted_avg_constrained;
  s.group_label = std::move(group);
  s.alpha = alpha;
  return s;
}

FitSpec FitSpec::cov_constrained(std::string group, double m, CstarScale scale) {
  FitSpec s;
  s.estimator = Estimator::cov_constrained;
  s.group_label = std::move(group);
  s.m = m;
  s.cstar_scale = scale;
  return s;
}

FitSpec FitSpec::mrd_penalized(std::string group, double lambda) {
  FitSpec s;
  s.estimator = Estimator::mrd_penalized;
  s.group_label = std::move(group);
  s.lambda = lambda;
  return s;
}

FitSpec FitSpec::netcomp_penalized(std::string group, double lambda) {
  FitSpec s;
  s.estimator = Estimator::netcomp_penalized;
  s.group_label = std::move(group);
  s.lambda = lambda;
  return s;
}

FitSpec FitSpec::netcomp_constrained(std::string group, double z, bool relative) {
  FitSpec s;
  s.estimator = Estimator::netcomp_constrained;
  s.group_label = std::move(group);
  s.z = z;
  s.z_relative_to_group_mean = relative;
  return s;
}

}  // namespace fairreg
