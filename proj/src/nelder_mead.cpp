#include "strokelab/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "parallel.hpp"
#include "strokelab/error.hpp"

namespace strokelab::fitting {

namespace {

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

struct Vertex {
  std::vector<double> x;
  double f = 0.0;
};

class Search {
 public:
  Search(const std::function<double(std::span<const double>)>& objective, const Bounds& bounds,
         const NelderMeadOptions& options)
      : objective_(objective), bounds_(bounds), options_(options) {}

  bool exhausted() const { return result_.evaluations >= options_.max_evaluations; }
  std::size_t remaining() const { return options_.max_evaluations - result_.evaluations; }

  void project(std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = reflect_into(x[i], bounds_.lower[i], bounds_.upper[i]);
  }

  // Evaluates points in order; stops early (returning fewer values) when
  // the budget runs out.
  std::vector<double> evaluate(std::vector<std::vector<double>>& points) {
    const std::size_t n = std::min(points.size(), remaining());
    for (std::size_t i = 0; i < n; ++i) project(points[i]);
    std::vector<double> values(n);
    detail::parallel_for(n, [&](std::size_t i) { values[i] = objective_(points[i]); });
    for (std::size_t i = 0; i < n; ++i) record(points[i], values[i]);
    return values;
  }

  std::optional<double> evaluate_one(std::vector<double>& x) {
    std::vector<std::vector<double>> pts{x};
    auto v = evaluate(pts);
    if (v.empty()) return std::nullopt;
    x = pts[0];
    return v[0];
  }

  NelderMeadResult& result() { return result_; }

 private:
  void record(const std::vector<double>& x, double f) {
    ++result_.evaluations;
    if (std::isnan(f)) f = std::numeric_limits<double>::infinity();
    if (result_.best_trace.empty() || f < result_.value) {
      result_.value = f;
      result_.x = x;
    }
    result_.best_trace.push_back(result_.value);
  }

  const std::function<double(std::span<const double>)>& objective_;
  const Bounds& bounds_;
  const NelderMeadOptions& options_;
  NelderMeadResult result_;
};

}  // namespace

double reflect_into(double x, double lo, double hi) {
  if (!(hi > lo)) return lo;
  for (int i = 0; i < 64 && (x < lo || x > hi); ++i) {
    x = x < lo ? lo + (lo - x) : hi - (x - hi);
  }
  return std::clamp(x, lo, hi);
}

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& objective,
                             std::vector<double> x0, const Bounds& bounds, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  if (n == 0) throw Error(Errc::InvalidArgument, "no free parameters");
  if (bounds.lower.size() != n || bounds.upper.size() != n || options.initial_step.size() != n) {
    throw Error(Errc::InvalidArgument, "bounds and steps must match the parameter count");
  }
  if (options.max_evaluations < 1) throw Error(Errc::InvalidArgument, "evaluation budget must be >= 1");
  for (double s : options.initial_step) {
    if (!(s != 0.0) || !std::isfinite(s)) throw Error(Errc::InvalidArgument, "initial steps must be non-zero");
  }

  Search search(objective, bounds, options);
  search.project(x0);
  std::vector<double> step = options.initial_step;

  auto build = [&](const std::vector<double>& center, std::optional<double> center_value) {
    std::vector<std::vector<double>> points;
    if (!center_value) points.push_back(center);
    for (std::size_t i = 0; i < n; ++i) {
      auto p = center;
      p[i] += step[i];
      search.project(p);
      if (p[i] == center[i]) {  // pinned against a bound, go the other way
        p[i] = center[i] - step[i];
        search.project(p);
      }
      points.push_back(std::move(p));
    }
    auto values = search.evaluate(points);
    std::vector<Vertex> simplex;
    if (center_value) simplex.push_back({center, *center_value});
    for (std::size_t i = 0; i < values.size(); ++i) simplex.push_back({points[i], values[i]});
    return simplex;
  };

  std::vector<Vertex> simplex = build(x0, std::nullopt);
  auto& result = search.result();

  while (true) {
    if (simplex.size() < n + 1) break;  // budget ran out while building
    std::sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
    const double best = simplex.front().f;
    const double worst = simplex.back().f;
    if (worst - best <= options.ftol * std::abs(best) + options.fatol) {
      result.converged = true;
      break;
    }
    double diameter = 0.0;
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        diameter = std::max(diameter, std::abs(simplex[v].x[i] - simplex[0].x[i]) / std::abs(options.initial_step[i]));
      }
    }
    if (diameter < options.xtol) {
      if (result.restarts >= options.max_restarts) {
        result.converged = true;
        break;
      }
      ++result.restarts;
      for (auto& s : step) s *= 0.5;
      simplex = build(simplex.front().x, simplex.front().f);
      continue;
    }
    if (search.exhausted()) break;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
    }
    auto along = [&](const std::vector<double>& from, double t) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = centroid[i] + t * (from[i] - centroid[i]);
      return p;
    };

    Vertex& worst_v = simplex.back();
    auto xr = along(worst_v.x, -kReflect);
    auto fr = search.evaluate_one(xr);
    if (!fr) break;

    if (*fr < best) {
      auto xe = along(xr, kExpand);
      auto fe = search.evaluate_one(xe);
      if (!fe) {
        worst_v = {xr, *fr};
        break;
      }
      worst_v = *fe < *fr ? Vertex{xe, *fe} : Vertex{xr, *fr};
      continue;
    }
    if (*fr < simplex[n - 1].f) {
      worst_v = {xr, *fr};
      continue;
    }
    const bool outside = *fr < worst_v.f;
    auto xc = along(outside ? xr : worst_v.x, kContract);
    auto fc = search.evaluate_one(xc);
    if (!fc) break;
    if (*fc < std::min(*fr, worst_v.f)) {
      worst_v = {xc, *fc};
      continue;
    }
    if (outside) worst_v = {xr, *fr};

    std::vector<std::vector<double>> shrunk;
    for (std::size_t v = 1; v <= n; ++v) {
      std::vector<double> p(n);
      for (std::size_t i = 0; i < n; ++i) p[i] = simplex[0].x[i] + kShrink * (simplex[v].x[i] - simplex[0].x[i]);
      shrunk.push_back(std::move(p));
    }
    auto values = search.evaluate(shrunk);
    for (std::size_t v = 0; v < values.size(); ++v) simplex[v + 1] = {shrunk[v], values[v]};
    if (values.size() < shrunk.size()) break;
  }
  return result;
}

}  // namespace strokelab::fitting
