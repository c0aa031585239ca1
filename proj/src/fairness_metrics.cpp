#include "fairreg/fairness_metrics.hpp"

#include <cmath>

#include "fairreg/random.hpp"

namespace fairreg {

namespace {

void check_lengths(Values yhat, Values y, std::size_t mask_size) {
  if (yhat.size() != y.size() || y.size() != mask_size) {
    fail(ErrorKind::schema, "prediction, outcome and mask lengths differ");
  }
}

void check_lengths(Values yhat, Values y) {
  if (yhat.size() != y.size()) fail(ErrorKind::schema, "prediction and outcome lengths differ");
}

struct SideMeans {
  double resid_g = 0.0, resid_c = 0.0;  // sums of yhat - y
  double yhat_g = 0.0, y_g = 0.0;
  double yhat_c = 0.0, y_c = 0.0;
  std::size_t n_g = 0, n_c = 0;
};

SideMeans side_sums(Values yhat, Values y, MaskView mask) {
  check_lengths(yhat, y, mask.size());
  SideMeans s;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (mask[i]) {
      s.resid_g += yhat[i] - y[i];
      s.yhat_g += yhat[i];
      s.y_g += y[i];
      ++s.n_g;
    } else {
      s.resid_c += yhat[i] - y[i];
      s.yhat_c += yhat[i];
      s.y_c += y[i];
      ++s.n_c;
    }
  }
  return s;
}

Measure ratio(double num, double den, const char* side) {
  if (den == 0.0) return Measure::undefined(std::string(side) + " outcome sum is zero");
  return Measure::of(num / den);
}

}  // namespace

double net_compensation(Values yhat, Values y, MaskView mask) {
  const SideMeans s = side_sums(yhat, y, mask);
  if (s.n_g == 0) fail(ErrorKind::degenerate_group, "group has no members");
  return s.resid_g / static_cast<double>(s.n_g);
}

double mean_residual_difference(Values yhat, Values y, MaskView mask) {
  const SideMeans s = side_sums(yhat, y, mask);
  if (s.n_g == 0 || s.n_c == 0) fail(ErrorKind::degenerate_group, "group or complement is empty");
  return s.resid_g / static_cast<double>(s.n_g) - s.resid_c / static_cast<double>(s.n_c);
}

Measure predictive_ratio(Values yhat, Values y, MaskView mask) {
  const SideMeans s = side_sums(yhat, y, mask);
  if (s.n_g == 0) fail(ErrorKind::degenerate_group, "group has no members");
  return ratio(s.yhat_g, s.y_g, "group");
}

Measure fair_covariance(Values yhat, Values y, MaskView mask, bool scale_by_cstar, std::optional<double> cstar) {
  check_lengths(yhat, y, mask.size());
  const std::size_t n = y.size();
  if (n < 2) return Measure::undefined("fewer than two observations");
  // Two passes: means first, then centred cross products.
  double a_bar = 0.0, r_bar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    a_bar += mask[i] ? 1.0 : 0.0;
    r_bar += y[i] - yhat[i];
  }
  a_bar /= static_cast<double>(n);
  r_bar /= static_cast<double>(n);
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += ((mask[i] ? 1.0 : 0.0) - a_bar) * ((y[i] - yhat[i]) - r_bar);
  }
  cov /= static_cast<double>(n);
  if (!scale_by_cstar) return Measure::of(cov);

  if (!cstar) return Measure::undefined("no reference covariance supplied");
  if (*cstar == 0.0 || !std::isfinite(*cstar)) return Measure::undefined("reference covariance is zero");
  const double scaled = cov / *cstar;
  if (scaled < 0.0) return {0.0, "clamped from " + format_double(scaled)};
  if (scaled > 1.0) return {1.0, "clamped from " + format_double(scaled)};
  return Measure::of(scaled);
}

Measure r_squared(Values yhat, Values y) {
  check_lengths(yhat, y);
  if (y.empty()) return Measure::undefined("no observations");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double sse = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    sse += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    sst += (y[i] - mean) * (y[i] - mean);
  }
  if (sst == 0.0) return Measure::undefined("outcome is constant");
  return Measure::of(1.0 - sse / sst);
}

double group_residual_difference(Values yhat, Values y, MaskView mask, const OutcomeDistance& distance,
                                 const PairOptions& options) {
  check_lengths(yhat, y, mask.size());
  std::vector<std::size_t> members, others;
  for (std::size_t i = 0; i < y.size(); ++i) (mask[i] ? members : others).push_back(i);
  if (members.empty() || others.empty()) fail(ErrorKind::degenerate_group, "group or complement is empty");

  const auto resid = [&](std::size_t i) { return y[i] - yhat[i]; };
  const auto term = [&](std::size_t i, std::size_t j) { return distance(y[i], y[j]) * (resid(i) - resid(j)); };

  const double pairs = static_cast<double>(members.size()) * static_cast<double>(others.size());
  double mean = 0.0;
  if (pairs <= static_cast<double>(options.max_pairs)) {
    double total = 0.0;
    for (std::size_t i : members) {
      for (std::size_t j : others) total += term(i, j);
    }
    mean = total / pairs;
  } else if (options.sample_pairs) {
    if (*options.sample_pairs == 0) fail(ErrorKind::config, "sample_pairs must be positive");
    RngStream rng(options.seed, "group_residual_difference");
    double total = 0.0;
    for (std::uint64_t s = 0; s < *options.sample_pairs; ++s) {
      const std::size_t i = members[rng.below(members.size())];
      const std::size_t j = others[rng.below(others.size())];
      total += term(i, j);
    }
    mean = total / static_cast<double>(*options.sample_pairs);
  } else {
    fail(ErrorKind::pair_cap, format_double(pairs) + " pairs exceed the cap of " +
                                  std::to_string(options.max_pairs) + "; enable pair sampling");
  }
  return mean * mean;
}

MetricsReport metrics_report(Values yhat, Values y, MaskView mask, std::optional<double> cstar) {
  const SideMeans s = side_sums(yhat, y, mask);
  MetricsReport r;
  r.n_g = static_cast<Index>(s.n_g);
  r.n_c = static_cast<Index>(s.n_c);
  r.r2 = r_squared(yhat, y);

  if (s.n_g == 0) {
    r.net_comp_g = r.pred_ratio_g = Measure::undefined("group has no members");
  } else {
    r.net_comp_g = Measure::of(s.resid_g / static_cast<double>(s.n_g));
    r.pred_ratio_g = ratio(s.yhat_g, s.y_g, "group");
  }
  if (s.n_c == 0) {
    r.net_comp_c = r.pred_ratio_c = Measure::undefined("complement has no members");
  } else {
    r.net_comp_c = Measure::of(s.resid_c / static_cast<double>(s.n_c));
    r.pred_ratio_c = ratio(s.yhat_c, s.y_c, "complement");
  }
  if (r.net_comp_g.defined() && r.net_comp_c.defined()) {
    r.mean_resid_diff = Measure::of(*r.net_comp_g - *r.net_comp_c);
  } else {
    r.mean_resid_diff = Measure::undefined("group or complement is empty");
  }
  r.fair_cov = fair_covariance(yhat, y, mask);
  r.fair_cov_scaled = fair_covariance(yhat, y, mask, true, cstar);
  return r;
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols{"R2",    "PR_g",    "PR_c",          "NC_g", "NC_c",
                                             "MRD",   "FairCov", "FairCovScaled", "n_g",  "n_c"};
  return cols;
}

namespace {

std::string cell(const Measure& m) { return m.defined() ? format_double(*m) : "NA"; }

}  // namespace

std::vector<std::string> metrics_csv_cells(const MetricsReport& r) {
  return {cell(r.r2),   cell(r.pred_ratio_g),    cell(r.pred_ratio_c), cell(r.net_comp_g),
          cell(r.net_comp_c), cell(r.mean_resid_diff), cell(r.fair_cov),     cell(r.fair_cov_scaled),
          std::to_string(r.n_g), std::to_string(r.n_c)};
}

void to_json(nlohmann::ordered_json& j, const Measure& m) {
  if (m.defined()) {
    j = *m;
  } else {
    j = nullptr;
  }
}

void to_json(nlohmann::ordered_json& j, const MetricsReport& r) {
  const std::vector<std::pair<const char*, const Measure*>> fields{
      {"R2", &r.r2},           {"PR_g", &r.pred_ratio_g}, {"PR_c", &r.pred_ratio_c},
      {"NC_g", &r.net_comp_g}, {"NC_c", &r.net_comp_c},   {"MRD", &r.mean_resid_diff},
      {"FairCov", &r.fair_cov}, {"FairCovScaled", &r.fair_cov_scaled}};
  j = nlohmann::ordered_json::object();
  nlohmann::ordered_json notes = nlohmann::ordered_json::object();
  for (const auto& [name, m] : fields) {
    j[name] = *m;
    if (!m->reason.empty()) notes[name] = m->reason;
  }
  j["n_g"] = r.n_g;
  j["n_c"] = r.n_c;
  if (!notes.empty()) j["notes"] = std::move(notes);
}

}  // namespace fairreg
