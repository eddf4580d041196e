#include "lagdyn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace lagdyn {

GradcheckReport gradcheck(const Objective& objective, const std::vector<net::TensorRef>& tensors,
                          const GradcheckOptions& options) {
  for (const auto& t : tensors) {
    std::fill(t.grad, t.grad + t.size(), 0.0);
  }
  objective(true);

  // (tensor, index) probes: round-robin over tensors, random index within.
  std::vector<std::pair<std::size_t, Index>> probes;
  std::size_t total = 0;
  for (const auto& t : tensors) {
    total += static_cast<std::size_t>(t.size());
  }
  if (options.samples == 0 || options.samples >= total) {
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      for (Index i = 0; i < tensors[k].size(); ++i) {
        probes.emplace_back(k, i);
      }
    }
  } else {
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> nonempty;
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      if (tensors[k].size() > 0) {
        nonempty.push_back(k);
      }
    }
    for (std::size_t s = 0; s < options.samples; ++s) {
      const std::size_t k = nonempty[s % nonempty.size()];
      std::uniform_int_distribution<Index> pick(0, tensors[k].size() - 1);
      probes.emplace_back(k, pick(rng));
    }
  }

  // Evaluates f at value + offset; the offset actually applied is returned
  // through `applied` so that rounding of value + offset does not bias it.
  auto at = [&](const net::TensorRef& t, Index i, double saved, double offset, double& applied) {
    t.value[i] = saved + offset;
    applied = t.value[i] - saved;
    const double f = objective(false);
    t.value[i] = saved;
    return f;
  };

  const double h = options.step;
  const double eps = std::numeric_limits<double>::epsilon();
  const double center = objective(false);
  GradcheckReport report;
  for (const auto& [k, i] : probes) {
    const auto& t = tensors[k];
    const double analytic = t.grad[i];
    const double saved = t.value[i];
    double hp = 0.0, hm = 0.0;
    const double plus = at(t, i, saved, h, hp);
    const double minus = at(t, i, saved, -h, hm);
    const double numeric = (plus - minus) / (hp - hm);

    if (options.skip_kinks) {
      double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
      const double plus_half = at(t, i, saved, 0.5 * h, a);
      const double minus_half = at(t, i, saved, -0.5 * h, b);
      const double plus_two = at(t, i, saved, 2.0 * h, c);
      const double minus_two = at(t, i, saved, -2.0 * h, d);
      // S(s) = (f(x+s) - 2f(x) + f(x-s)) / s equals s f'' + O(s^3) on smooth f.
      const double s_half = (plus_half - 2.0 * center + minus_half) / (0.5 * h);
      const double s_one = (plus - 2.0 * center + minus) / h;
      const double s_two = (plus_two - 2.0 * center + minus_two) / (2.0 * h);
      const double scale = std::max({std::abs(numeric), options.floor});
      const double noise = 64.0 * eps * std::max({std::abs(center), std::abs(plus), std::abs(minus)}) / h;
      const double allowance = 1e-6 * scale + noise;
      if (std::abs(s_one - 2.0 * s_half) > allowance || std::abs(s_two - 2.0 * s_one) > allowance) {
        ++report.skipped;
        continue;
      }
    }

    const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
    const double err = std::abs(analytic - numeric) / denom;
    ++report.coordinates;
    if (!(err <= report.max_relative_error)) {
      report.max_relative_error = err;
      report.worst_tensor = t.name;
      report.worst_index = i;
      report.worst_analytic = analytic;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace lagdyn
