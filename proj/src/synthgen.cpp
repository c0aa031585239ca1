#include "fairreg/synthgen.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>

#include "fairreg/csv.hpp"

namespace fairreg {

namespace {

constexpr double kCovariateBernoulli[6] = {0.5, 0.1, 0.05, 0.8, 0.03, 0.2};  // X4..X9

std::array<double, 9> covariate_row(const SimPopulation& pop, std::size_t i) {
  std::array<double, 9> row{};
  for (std::size_t k = 0; k < 9; ++k) row[k] = pop.x[k][i];
  return row;
}

}  // namespace

double population_y1(const std::array<double, 9>& x, bool a1_flag, bool a2_flag) {
  const double a1 = a1_flag ? 1.0 : 0.0;
  const double a2 = a2_flag ? 1.0 : 0.0;
  const auto& [x1, x2, x3, x4, x5, x6, x7, x8, x9] = x;
  return x1 * x2 * x4 + a1 * x2 * x7 + x3 * x5 * x6 + std::exp2(x8 * x9) + a1 * x1 * x5 + a2 * x3 * x5;
}

double population_y2(const std::array<double, 9>& x, bool a1_flag, bool a2_flag) {
  const double a1 = a1_flag ? 1.0 : 0.0;
  const double a2 = a2_flag ? 1.0 : 0.0;
  return x[0] + x[1] + x[2] * x[3] * x[4] + a1 * x[2] + a1 * a2 * x[0];
}

SimPopulation generate_population(Index size, std::uint64_t seed) {
  if (size < 1) fail(ErrorKind::config, "population size must be >= 1");
  const auto n = static_cast<std::size_t>(size);
  SimPopulation pop;
  pop.size = size;
  pop.seed = seed;
  for (auto& col : pop.x) col.resize(n);
  pop.a1.resize(n);
  pop.a2.resize(n);
  pop.y1.resize(n);
  pop.y2.resize(n);

  std::vector<CounterRng> streams;
  for (int k = 1; k <= 9; ++k) streams.emplace_back(seed, "X" + std::to_string(k));
  const CounterRng a1_rng(seed, "A1");
  const CounterRng a2_rng(seed, "A2");

  for (std::size_t i = 0; i < n; ++i) {
    pop.x[0][i] = normal_from_uniform(streams[0].uniform(i), 70.0, 15.0);
    pop.x[1][i] = poisson_from_uniform(streams[1].uniform(i), 10.0);
    pop.x[2][i] = poisson_from_uniform(streams[2].uniform(i), 35.0);
    for (std::size_t k = 0; k < 6; ++k) {
      pop.x[3 + k][i] = bernoulli_from_uniform(streams[3 + k].uniform(i), kCovariateBernoulli[k]) ? 1.0 : 0.0;
    }
    const double x4 = pop.x[3][i];
    const double x9 = pop.x[8][i];
    pop.a1[i] = bernoulli_from_uniform(a1_rng.uniform(i), x4 * x9 / 2.0 + 0.01);
    pop.a2[i] = bernoulli_from_uniform(a2_rng.uniform(i), x4 * x4 / 3.0 + 0.05);
    const auto row = covariate_row(pop, i);
    pop.y1[i] = population_y1(row, pop.a1[i], pop.a2[i]);
    pop.y2[i] = population_y2(row, pop.a1[i], pop.a2[i]);
  }
  return pop;
}

std::string population_csv(const SimPopulation& pop) {
  std::string out = "id,X1,X2,X3,X4,X5,X6,X7,X8,X9,A1,A2,Y1,Y2\n";
  for (std::size_t i = 0; i < static_cast<std::size_t>(pop.size); ++i) {
    out += std::to_string(i + 1);
    for (const auto& col : pop.x) {
      out += ',';
      out += format_double(col[i]);
    }
    out += pop.a1[i] ? ",1" : ",0";
    out += pop.a2[i] ? ",1" : ",0";
    out += ',';
    out += format_double(pop.y1[i]);
    out += ',';
    out += format_double(pop.y2[i]);
    out += '\n';
  }
  return out;
}

ScenarioSpec ScenarioSpec::get(int id) {
  switch (id) {
    case 1: return {1, 1, {1, 2, 3, 5, 6, 7, 8, 9}};
    case 2: return {2, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9}};
    case 3: return {3, 2, {1, 4, 6, 7, 8, 9}};
    default: fail(ErrorKind::config, "scenario must be 1, 2 or 3, got " + std::to_string(id));
  }
}

Dataset scenario_design(const SimPopulation& pop, const ScenarioSpec& spec, bool add_intercept,
                        std::optional<std::span<const Index>> rows) {
  if (spec.outcome != 1 && spec.outcome != 2) fail(ErrorKind::config, "scenario outcome must be 1 or 2");
  std::vector<Index> all;
  if (!rows) {
    all.resize(static_cast<std::size_t>(pop.size));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Index>(i);
  }
  const std::span<const Index> idx = rows ? *rows : std::span<const Index>(all);
  const Index n = static_cast<Index>(idx.size());
  const Index offset = add_intercept ? 1 : 0;
  const Index p = offset + static_cast<Index>(spec.regressors.size());

  Matrix x(n, p);
  Vector y(n);
  Group a1{"A1", Mask(idx.size())};
  Group a2{"A2", Mask(idx.size())};
  std::vector<std::string> ids(idx.size());
  std::vector<std::string> names;
  if (add_intercept) names.emplace_back(kInterceptName);
  for (int k : spec.regressors) {
    if (k < 1 || k > 9) fail(ErrorKind::config, "scenario regressor index out of range");
    names.push_back("X" + std::to_string(k));
  }
  const auto& outcome = spec.outcome == 1 ? pop.y1 : pop.y2;
  for (Index r = 0; r < n; ++r) {
    const Index i = idx[static_cast<std::size_t>(r)];
    if (i < 0 || i >= pop.size) fail(ErrorKind::config, "row index outside the population");
    const auto si = static_cast<std::size_t>(i);
    if (add_intercept) x(r, 0) = 1.0;
    for (std::size_t c = 0; c < spec.regressors.size(); ++c) {
      x(r, offset + static_cast<Index>(c)) = pop.x[static_cast<std::size_t>(spec.regressors[c] - 1)][si];
    }
    y[r] = outcome[si];
    a1.mask[static_cast<std::size_t>(r)] = pop.a1[si];
    a2.mask[static_cast<std::size_t>(r)] = pop.a2[si];
    ids[static_cast<std::size_t>(r)] = std::to_string(i + 1);
  }
  return Dataset(std::move(y), std::move(x), std::move(names), {std::move(a1), std::move(a2)}, std::move(ids));
}

double truncated_normal(double mean, double sd, double lo, double hi, double u) {
  if (!(sd > 0.0)) fail(ErrorKind::config, "truncated normal sd must be > 0");
  if (!(lo < hi)) fail(ErrorKind::config, "truncated normal needs lo < hi");
  double a = (lo - mean) / sd;
  double b = (hi - mean) / sd;
  // Work in the lower tail, where CDF values keep full relative precision.
  const bool flip = a > 0.0;
  if (flip) {
    const double t = a;
    a = -b;
    b = -t;
  }
  const boost::math::normal_distribution<double> std_normal;
  const double fa = std::isinf(a) ? (a < 0 ? 0.0 : 1.0) : boost::math::cdf(std_normal, a);
  const double fb = std::isinf(b) ? (b < 0 ? 0.0 : 1.0) : boost::math::cdf(std_normal, b);
  const double mass = fb - fa;
  if (!(mass >= 1e-300)) fail(ErrorKind::numeric, "truncation interval holds no probability mass");
  double p = fa + u * mass;
  if (p <= 0.0) p = std::nextafter(0.0, 1.0);
  if (p >= 1.0) p = std::nextafter(1.0, 0.0);
  double z = boost::math::quantile(std_normal, p);
  if (z < a) z = a;
  if (z > b) z = b;
  if (flip) z = -z;
  double v = mean + sd * z;
  if (v < lo) v = lo;
  if (v > hi) v = hi;
  return v;
}

}  // namespace fairreg
