#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fairreg/csv.hpp"
#include "fairreg/synthgen.hpp"

namespace fairreg {

namespace {

const char kDefaultCoefficients[] =
#include "default_coefficients.inc"
    ;

const std::vector<std::string> kDemographicTerms{"intercept", "female", "age"};

std::string hcc_term(int code) { return "HCC" + std::to_string(code); }
std::string ccs_term(int k) { return "CCS" + std::to_string(k); }

std::vector<std::string> two_part_terms() {
  std::vector<std::string> terms = kDemographicTerms;
  for (int code : analysis_hcc_codes()) terms.push_back(hcc_term(code));
  for (int k = 1; k <= kCcsCount; ++k) terms.push_back(ccs_term(k));
  return terms;
}

std::vector<std::string> ccs_terms() {
  std::vector<std::string> terms = kDemographicTerms;
  for (int code : ccs_driver_hccs()) terms.push_back(hcc_term(code));
  return terms;
}

double logistic(double v) { return 1.0 / (1.0 + std::exp(-v)); }

/// Bernoulli probability from a logit, refusing saturated links.
double link_probability(double v, const std::string& what) {
  const double p = logistic(v);
  if (!(p > 0.0 && p < 1.0)) {
    fail(ErrorKind::config, "coefficients '" + what + "' give probability " + format_double(p) +
                                " (logit " + format_double(v) + ")");
  }
  return p;
}

}  // namespace

const std::vector<int>& analysis_hcc_codes() {
  static const std::vector<int> codes{1,   2,   6,   8,   9,   10,  11,  12,  17,  18,  19,  21,  22,
                                      23,  27,  28,  29,  33,  34,  35,  39,  40,  46,  47,  48,  54,
                                      55,  57,  58,  72,  75,  77,  78,  79,  80,  84,  85,  86,  87,
                                      88,  96,  99,  100, 103, 107, 108, 111, 112, 114, 122, 134, 135,
                                      136, 137, 161, 167, 169, 170, 173, 176, 186, 188};
  return codes;
}

const std::vector<int>& ccs_driver_hccs() {
  static const std::vector<int> codes{54, 55, 57, 58, 22, 79};
  return codes;
}

AnalysisCoefficients AnalysisCoefficients::parse(std::string_view text) {
  std::map<std::string, double> values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string name, value, extra;
    if (!(fields >> name)) continue;
    if (!(fields >> value) || (fields >> extra)) {
      fail(ErrorKind::config, "coefficient line " + std::to_string(line_no) + " ('" + name +
                                  "') must be 'name value'");
    }
    double v = 0.0;
    if (!parse_number(value, v) || !std::isfinite(v)) {
      fail(ErrorKind::config, "coefficient '" + name + "' has non-numeric value '" + value + "'");
    }
    if (!values.emplace(name, v).second) fail(ErrorKind::config, "duplicate coefficient '" + name + "'");
  }

  std::set<std::string> used;
  const auto take = [&](const std::string& key) {
    const auto it = values.find(key);
    if (it == values.end()) fail(ErrorKind::config, "missing coefficient '" + key + "'");
    used.insert(key);
    return it->second;
  };

  if (take("version") != 1.0) fail(ErrorKind::config, "coefficient table 'version' must be 1");
  AnalysisCoefficients c;
  c.female_p = take("female_p");
  c.age_mean = take("age_mean");
  c.age_sd = take("age_sd");
  c.age_lo = take("age_lo");
  c.age_hi = take("age_hi");
  c.noise_sd = take("noise_sd");
  for (int code : analysis_hcc_codes()) {
    for (const auto& t : kDemographicTerms) c.hcc[code][t] = take("hcc." + hcc_term(code) + "." + t);
  }
  for (int k = 1; k <= kCcsCount; ++k) {
    for (const auto& t : ccs_terms()) c.ccs[k][t] = take("ccs." + ccs_term(k) + "." + t);
  }
  for (const auto& t : two_part_terms()) {
    c.omega[t] = take("omega." + t);
    c.phi[t] = take("phi." + t);
  }
  for (const auto& [name, v] : values) {
    if (!used.count(name)) fail(ErrorKind::config, "unknown coefficient '" + name + "'");
  }
  return c;
}

AnalysisCoefficients AnalysisCoefficients::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open coefficient file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const Error& e) {
    throw e.with_context(path.string());
  }
}

AnalysisCoefficients AnalysisCoefficients::defaults() {
  static const AnalysisCoefficients parsed = parse(kDefaultCoefficients);
  return parsed;
}

std::string AnalysisCoefficients::to_text() const {
  std::string out = "version 1\n";
  const auto put = [&](const std::string& name, double v) { out += name + " " + format_double(v) + "\n"; };
  put("female_p", female_p);
  put("age_mean", age_mean);
  put("age_sd", age_sd);
  put("age_lo", age_lo);
  put("age_hi", age_hi);
  put("noise_sd", noise_sd);
  for (const auto& [code, terms] : hcc) {
    for (const auto& [t, v] : terms) put("hcc." + hcc_term(code) + "." + t, v);
  }
  for (const auto& [k, terms] : ccs) {
    for (const auto& [t, v] : terms) put("ccs." + ccs_term(k) + "." + t, v);
  }
  for (const auto& [t, v] : omega) put("omega." + t, v);
  for (const auto& [t, v] : phi) put("phi." + t, v);
  return out;
}

void AnalysisSynthConfig::validate() const {
  if (n < 1) fail(ErrorKind::config, "n must be >= 1");
  if (!(coef.female_p > 0.0 && coef.female_p < 1.0)) fail(ErrorKind::config, "female_p must be in (0,1)");
  if (!(coef.age_sd > 0.0)) fail(ErrorKind::config, "age_sd must be > 0");
  if (!(coef.age_lo < coef.age_hi)) fail(ErrorKind::config, "age_lo must be below age_hi");
  if (!(coef.noise_sd > 0.0)) fail(ErrorKind::config, "noise_sd must be > 0");
}

AnalysisData generate_analysis_data(const AnalysisSynthConfig& cfg) {
  cfg.validate();
  const AnalysisCoefficients& coef = cfg.coef;
  const auto n = static_cast<std::size_t>(cfg.n);
  const auto& codes = analysis_hcc_codes();
  const auto& drivers = ccs_driver_hccs();

  std::vector<double> female(n), age(n);
  {
    const CounterRng female_rng(cfg.seed, "female");
    const CounterRng age_rng(cfg.seed, "age");
    for (std::size_t i = 0; i < n; ++i) {
      female[i] = bernoulli_from_uniform(female_rng.uniform(i), coef.female_p) ? 1.0 : 0.0;
      age[i] = truncated_normal(coef.age_mean, coef.age_sd, coef.age_lo, coef.age_hi, age_rng.uniform(i));
    }
  }

  // hcc(i, j) for codes[j].
  Matrix hcc(static_cast<Index>(n), static_cast<Index>(codes.size()));
  std::map<int, Index> hcc_col;
  for (std::size_t j = 0; j < codes.size(); ++j) {
    const int code = codes[j];
    hcc_col[code] = static_cast<Index>(j);
    const auto& b = coef.hcc.at(code);
    const std::string what = "hcc." + hcc_term(code);
    const CounterRng rng(cfg.seed, hcc_term(code));
    for (std::size_t i = 0; i < n; ++i) {
      const double v = b.at("intercept") + b.at("female") * female[i] + b.at("age") * age[i];
      hcc(static_cast<Index>(i), static_cast<Index>(j)) =
          bernoulli_from_uniform(rng.uniform(i), link_probability(v, what)) ? 1.0 : 0.0;
    }
  }

  Matrix ccs(static_cast<Index>(n), kCcsCount);
  for (int k = 1; k <= kCcsCount; ++k) {
    const auto& b = coef.ccs.at(k);
    const std::string what = "ccs." + ccs_term(k);
    const CounterRng rng(cfg.seed, ccs_term(k));
    for (std::size_t i = 0; i < n; ++i) {
      double v = b.at("intercept") + b.at("female") * female[i] + b.at("age") * age[i];
      for (int code : drivers) v += b.at(hcc_term(code)) * hcc(static_cast<Index>(i), hcc_col.at(code));
      ccs(static_cast<Index>(i), k - 1) = bernoulli_from_uniform(rng.uniform(i), link_probability(v, what)) ? 1.0 : 0.0;
    }
  }

  const auto linear = [&](const std::map<std::string, double>& b, std::size_t i) {
    const auto r = static_cast<Index>(i);
    double v = b.at("intercept") + b.at("female") * female[i] + b.at("age") * age[i];
    for (std::size_t j = 0; j < codes.size(); ++j) v += b.at(hcc_term(codes[j])) * hcc(r, static_cast<Index>(j));
    for (int k = 1; k <= kCcsCount; ++k) v += b.at(ccs_term(k)) * ccs(r, k - 1);
    return v;
  };

  Mask group(n), any(n);
  std::vector<double> latent(n, 0.0);
  double latent_max = 0.0;
  {
    const CounterRng s_rng(cfg.seed, "S");
    for (std::size_t i = 0; i < n; ++i) {
      group[i] = ccs.row(static_cast<Index>(i)).maxCoeff() > 0.0;
      any[i] = bernoulli_from_uniform(s_rng.uniform(i), link_probability(linear(coef.omega, i), "omega"));
      if (any[i]) {
        latent[i] = std::exp(linear(coef.phi, i));
        if (!std::isfinite(latent[i])) fail(ErrorKind::numeric, "coefficients 'phi' overflow exp()");
        latent_max = std::max(latent_max, latent[i]);
      }
    }
  }
  // Upper truncation bound is the largest noiseless outcome (first pass above).
  if (!(latent_max > 0.0)) fail(ErrorKind::config, "coefficients 'omega' produce no positive spending");

  Vector y(static_cast<Index>(n));
  {
    const CounterRng y_rng(cfg.seed, "Y");
    for (std::size_t i = 0; i < n; ++i) {
      y[static_cast<Index>(i)] = truncated_normal(latent[i], coef.noise_sd, 0.0, latent_max, y_rng.uniform(i));
    }
  }

  const Index offset = cfg.add_intercept ? 1 : 0;
  Matrix x(static_cast<Index>(n), offset + 2 + static_cast<Index>(codes.size()));
  std::vector<std::string> names;
  if (cfg.add_intercept) {
    x.col(0).setOnes();
    names.emplace_back(kInterceptName);
  }
  names.emplace_back("female");
  names.emplace_back("age");
  for (int code : codes) names.push_back(hcc_term(code));
  for (std::size_t i = 0; i < n; ++i) {
    x(static_cast<Index>(i), offset) = female[i];
    x(static_cast<Index>(i), offset + 1) = age[i];
  }
  x.rightCols(static_cast<Index>(codes.size())) = hcc;

  AnalysisData out{Dataset(std::move(y), std::move(x), std::move(names),
                           {Group{std::string(kAnalysisGroup), std::move(group)}}),
                   std::move(any), std::move(latent), {}};
  out.summary = summarize_analysis(out.dataset, out.any_spending);
  return out;
}

AnalysisSummary summarize_analysis(const Dataset& ds, MaskView any_spending) {
  AnalysisSummary s;
  s.n = ds.n();
  const Vector& y = ds.y();
  const auto n = static_cast<double>(ds.n());
  const Group& g = ds.group(kAnalysisGroup);
  double sum_g = 0.0, sum_c = 0.0;
  Index n_g = 0, zeros = 0, observed_zero = 0;
  for (Index i = 0; i < ds.n(); ++i) {
    const auto si = static_cast<std::size_t>(i);
    if (g.mask[si]) {
      sum_g += y[i];
      ++n_g;
    } else {
      sum_c += y[i];
    }
    if (si < any_spending.size() && !any_spending[si]) ++zeros;
    if (y[i] == 0.0) ++observed_zero;
  }
  s.zero_spend_share = static_cast<double>(zeros) / n;
  s.observed_zero_share = static_cast<double>(observed_zero) / n;
  s.group_prevalence = static_cast<double>(n_g) / n;
  s.mean_y = y.mean();
  s.max_y = y.maxCoeff();
  s.min_y = y.minCoeff();
  s.mean_y_group = n_g > 0 ? sum_g / static_cast<double>(n_g) : 0.0;
  s.mean_y_complement = n_g < ds.n() ? sum_c / static_cast<double>(ds.n() - n_g) : 0.0;
  std::vector<double> sorted(y.data(), y.data() + y.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  s.median_y = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

}  // namespace fairreg
