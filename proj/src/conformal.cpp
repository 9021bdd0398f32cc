#include "conforma/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "conforma/errors.hpp"

namespace conforma {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool nearly_equal(double x, double reference) {
  return std::abs(x - reference) <= kCaseTolerance * std::max(1.0, std::abs(reference));
}

void check_level(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw Error(ErrorCode::kInvalidAlpha, "alpha must lie in (0, 1]");
  }
}

// One closed candidate set S_i (or U_i / L_i for CRR).
struct CandidateSet {
  enum class Shape { kEmpty, kAll, kInterval, kUpTo, kFrom, kOutside };
  Shape shape = Shape::kEmpty;
  double a = 0.0;
  double b = 0.0;
};

using Shape = CandidateSet::Shape;

// S_i = {z : |c_i + b_i z| >= |c_n + b_n z|} with b_i, b_n >= 0.
CandidateSet rrcm_set(double ci, double bi, double cn, double bn) {
  if (nearly_equal(bi, bn)) {
    if (nearly_equal(bn, 0.0)) {
      const bool holds = std::abs(ci) >= std::abs(cn) || nearly_equal(std::abs(ci), std::abs(cn));
      return {holds ? Shape::kAll : Shape::kEmpty};
    }
    if (nearly_equal(ci, cn)) return {Shape::kAll};
    const double p = -(ci + cn) / (bi + bn);
    return {ci < cn ? Shape::kUpTo : Shape::kFrom, p};
  }
  const double p = -(ci + cn) / (bi + bn);
  const double q = (ci - cn) / (bn - bi);
  const double lo = std::min(p, q);
  const double hi = std::max(p, q);
  if (bi < bn) return {Shape::kInterval, lo, hi};
  // Complement of the open interval (lo, hi); empty when lo == hi.
  if (lo == hi) return {Shape::kAll};
  return {Shape::kOutside, lo, hi};
}

// U_i = {z : c_i + b_i z >= c_n + b_n z}.
CandidateSet upper_set(double ci, double bi, double cn, double bn) {
  if (nearly_equal(bi, bn)) {
    const bool holds = ci >= cn || nearly_equal(ci, cn);
    return {holds ? Shape::kAll : Shape::kEmpty};
  }
  const double q = (ci - cn) / (bn - bi);
  return {bi > bn ? Shape::kFrom : Shape::kUpTo, q};
}

CoverageProfile build_profile(const std::vector<CandidateSet>& sets) {
  CoverageProfile profile;
  profile.total = static_cast<int>(sets.size());

  std::vector<double>& g = profile.endpoints;
  g.reserve(2 * sets.size());
  for (const CandidateSet& s : sets) {
    switch (s.shape) {
      case Shape::kEmpty:
      case Shape::kAll:
        break;
      case Shape::kUpTo:
      case Shape::kFrom:
        g.push_back(s.a);
        break;
      case Shape::kInterval:
      case Shape::kOutside:
        g.push_back(s.a);
        g.push_back(s.b);
        break;
    }
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());

  const std::size_t slots = 2 * g.size() + 1;
  const std::size_t last = slots - 1;
  std::vector<int> diff(slots + 1, 0);
  auto point_slot = [&g](double v) {
    const auto j = static_cast<std::size_t>(std::lower_bound(g.begin(), g.end(), v) - g.begin());
    return 2 * j + 1;
  };
  auto cover = [&diff](std::size_t from, std::size_t to) {
    ++diff[from];
    --diff[to + 1];
  };
  for (const CandidateSet& s : sets) {
    switch (s.shape) {
      case Shape::kEmpty:
        break;
      case Shape::kAll:
        cover(0, last);
        break;
      case Shape::kInterval:
        cover(point_slot(s.a), point_slot(s.b));
        break;
      case Shape::kUpTo:
        cover(0, point_slot(s.a));
        break;
      case Shape::kFrom:
        cover(point_slot(s.a), last);
        break;
      case Shape::kOutside:
        cover(0, point_slot(s.a));
        cover(point_slot(s.b), last);
        break;
    }
  }
  profile.counts.resize(slots);
  int running = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    running += diff[s];
    profile.counts[s] = running;
  }
  return profile;
}

void check_line(const ResidualLine& line) {
  if (line.c.size() != line.b.size() || line.c.size() < 1) {
    throw Error(ErrorCode::kDimensionMismatch, "residual line: c and b must have equal, nonzero length");
  }
}

Dataset augmented(const Dataset& train, Point xs) {
  if (static_cast<Eigen::Index>(xs.size()) != train.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "test point has dimension " +
                                                   std::to_string(xs.size()) + ", train has " +
                                                   std::to_string(train.dim()));
  }
  const Eigen::Index n = train.size();
  Dataset aug;
  aug.inputs.resize(n + 1, train.dim());
  aug.inputs.topRows(n) = train.inputs;
  for (Eigen::Index k = 0; k < train.dim(); ++k) aug.inputs(n, k) = xs[k];
  aug.targets.resize(n + 1);
  aug.targets.head(n) = train.targets;
  aug.targets(n) = 0.0;
  return aug;
}

// r_i >= r_n up to roundoff in values of magnitude `scale`.
bool at_least(double ri, double rn, double scale) { return ri >= rn - kTieTolerance * scale; }

}  // namespace

const char* to_string(ResidualKind kind) {
  return kind == ResidualKind::kInSample ? "in_sample" : "loo";
}

const char* to_string(Ncm ncm) { return ncm == Ncm::kRrcm ? "rrcm" : "crr"; }

// ---------------------------------------------------------------------------
// ConfidenceRegion

ConfidenceRegion ConfidenceRegion::real_line() {
  ConfidenceRegion r;
  r.components_.push_back({-kInf, kInf});
  return r;
}

ConfidenceRegion ConfidenceRegion::from_components(std::vector<Component> pieces) {
  std::sort(pieces.begin(), pieces.end(),
            [](const Component& x, const Component& y) { return x.lo < y.lo; });
  ConfidenceRegion r;
  for (const Component& piece : pieces) {
    if (!(piece.lo <= piece.hi)) {
      throw Error(ErrorCode::kInvalidArgument, "region component with lo > hi");
    }
    if (!r.components_.empty() && piece.lo <= r.components_.back().hi) {
      r.components_.back().hi = std::max(r.components_.back().hi, piece.hi);
    } else {
      r.components_.push_back(piece);
    }
  }
  return r;
}

bool ConfidenceRegion::is_real_line() const {
  return components_.size() == 1 && components_[0].lo == -kInf && components_[0].hi == kInf;
}

std::size_t ConfidenceRegion::singleton_count() const {
  return static_cast<std::size_t>(std::count_if(components_.begin(), components_.end(),
                                                [](const Component& c) { return c.is_singleton(); }));
}

std::vector<double> ConfidenceRegion::endpoints() const {
  std::vector<double> out;
  for (const Component& c : components_) {
    if (std::isfinite(c.lo)) out.push_back(c.lo);
    if (std::isfinite(c.hi) && c.hi != c.lo) out.push_back(c.hi);
  }
  return out;
}

bool region_contains(const ConfidenceRegion& region, double z) {
  const auto& comps = region.components();
  auto it = std::upper_bound(comps.begin(), comps.end(), z,
                             [](double v, const Component& c) { return v < c.lo; });
  if (it == comps.begin()) return false;
  --it;
  return z <= it->hi;
}

double region_hull_width(const ConfidenceRegion& region) {
  if (region.empty()) {
    throw Error(ErrorCode::kEmptyRegion, "hull width of an empty region");
  }
  return region.components().back().hi - region.components().front().lo;
}

ConfidenceRegion intersect(const ConfidenceRegion& a, const ConfidenceRegion& b) {
  std::vector<Component> out;
  const auto& x = a.components();
  const auto& y = b.components();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < x.size() && j < y.size()) {
    const double lo = std::max(x[i].lo, y[j].lo);
    const double hi = std::min(x[i].hi, y[j].hi);
    if (lo <= hi) out.push_back({lo, hi});
    if (x[i].hi < y[j].hi) {
      ++i;
    } else {
      ++j;
    }
  }
  return ConfidenceRegion::from_components(std::move(out));
}

std::string format_component(const Component& component) {
  char buf[96];
  if (component.lo == -kInf && component.hi == kInf) return "(-inf, inf)";
  if (component.lo == -kInf) {
    std::snprintf(buf, sizeof buf, "(-inf, %.6f]", component.hi);
  } else if (component.hi == kInf) {
    std::snprintf(buf, sizeof buf, "[%.6f, inf)", component.lo);
  } else if (component.is_singleton()) {
    std::snprintf(buf, sizeof buf, "{%.6f}", component.lo);
  } else {
    std::snprintf(buf, sizeof buf, "[%.6f, %.6f]", component.lo, component.hi);
  }
  return buf;
}

// ---------------------------------------------------------------------------
// Sweep

int required_count(int total, double level) {
  const double raw = static_cast<double>(total) * level;
  return std::max(0, static_cast<int>(std::ceil(raw - 1e-9)));
}

ConfidenceRegion CoverageProfile::threshold(double level) const {
  const int need = required_count(total, level);
  const std::size_t j_count = endpoints.size();
  const std::size_t slots = counts.size();
  auto slot_lo = [&](std::size_t s) {
    if (s % 2 == 1) return endpoints[(s - 1) / 2];
    return s == 0 ? -kInf : endpoints[s / 2 - 1];
  };
  auto slot_hi = [&](std::size_t s) {
    if (s % 2 == 1) return endpoints[(s - 1) / 2];
    return s / 2 == j_count ? kInf : endpoints[s / 2];
  };
  std::vector<Component> out;
  std::size_t s = 0;
  while (s < slots) {
    if (counts[s] < need) {
      ++s;
      continue;
    }
    std::size_t e = s;
    while (e + 1 < slots && counts[e + 1] >= need) ++e;
    out.push_back({slot_lo(s), slot_hi(e)});
    s = e + 1;
  }
  return ConfidenceRegion::from_components(std::move(out));
}

CoverageProfile rrcm_profile(const ResidualLine& line) {
  check_line(line);
  const Eigen::Index n = line.test_row();
  // Absolute residuals are compared, so each row may be negated to make b >= 0.
  double cn = line.c(n);
  double bn = line.b(n);
  if (bn < 0.0) {
    cn = -cn;
    bn = -bn;
  }
  std::vector<CandidateSet> sets;
  sets.reserve(static_cast<std::size_t>(line.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    double ci = line.c(i);
    double bi = line.b(i);
    if (bi < 0.0) {
      ci = -ci;
      bi = -bi;
    }
    sets.push_back(rrcm_set(ci, bi, cn, bn));
  }
  sets.push_back({Shape::kAll});  // the test row conforms with itself
  return build_profile(sets);
}

CoverageProfile crr_profile(const ResidualLine& line, CrrSide side) {
  check_line(line);
  const Eigen::Index n = line.test_row();
  const double sign = side == CrrSide::kUpper ? 1.0 : -1.0;
  const double cn = sign * line.c(n);
  const double bn = sign * line.b(n);
  std::vector<CandidateSet> sets;
  sets.reserve(static_cast<std::size_t>(line.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    sets.push_back(upper_set(sign * line.c(i), sign * line.b(i), cn, bn));
  }
  sets.push_back({Shape::kAll});
  return build_profile(sets);
}

ConfidenceRegion rrcm_region(const ResidualLine& line, double alpha) {
  check_level(alpha);
  return rrcm_profile(line).threshold(alpha);
}

ConfidenceRegion crr_side_region(const ResidualLine& line, CrrSide side, double level) {
  check_level(level);
  return crr_profile(line, side).threshold(level);
}

ConfidenceRegion crr_region(const ResidualLine& line, double alpha) {
  check_level(alpha);
  return intersect(crr_profile(line, CrrSide::kUpper).threshold(alpha / 2.0),
                   crr_profile(line, CrrSide::kLower).threshold(alpha / 2.0));
}

ConfidenceRegion conformal_region(const ResidualLine& line, Ncm ncm, double alpha) {
  return ncm == Ncm::kRrcm ? rrcm_region(line, alpha) : crr_region(line, alpha);
}

PValue conformal_p_value(const ResidualLine& line, double z, PValueNcm ncm) {
  check_line(line);
  const Eigen::Index n = line.test_row();
  const double cn = line.c(n);
  const double bn = line.b(n);
  PValue p;
  p.total = static_cast<int>(line.size());
  for (Eigen::Index i = 0; i <= n; ++i) {
    const double ci = line.c(i);
    const double bi = line.b(i);
    const double scale = std::abs(ci) + std::abs(bi * z) + std::abs(cn) + std::abs(bn * z);
    const double ri = ci + bi * z;
    const double rn = cn + bn * z;
    bool counts = false;
    switch (ncm) {
      case PValueNcm::kRrcm: counts = at_least(std::abs(ri), std::abs(rn), scale); break;
      case PValueNcm::kCrrUpper: counts = at_least(ri, rn, scale); break;
      case PValueNcm::kCrrLower: counts = at_least(-ri, -rn, scale); break;
    }
    if (counts) ++p.count;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Residual lines

ResidualLine residual_line(const Dataset& train, Point xs, double lambda,
                           const KernelParams& params, ResidualKind kind) {
  train.validate();
  if (train.size() < 1) {
    throw Error(ErrorCode::kInvalidArgument, "residual_line: empty training sample");
  }
  const FittedKRR fit = krr_fit(augmented(train, xs), lambda, params);
  const Eigen::Index n = train.size();
  ResidualLine line;
  line.kind = kind;
  line.lambda = lambda;
  // In-sample residuals are λβ, so dividing by λ leaves β(z) = Q (y, z).
  line.c = fit.beta();
  line.b = fit.factor().solve(Vector::Unit(n + 1, n));
  if (kind == ResidualKind::kLoo) {
    const Vector scale = lambda * fit.q_diag();
    line.c = line.c.cwiseQuotient(scale);
    line.b = line.b.cwiseQuotient(scale);
  }
  return line;
}

LinePair residual_lines(const FittedKRR& model, Point xs) {
  const Eigen::Index n = model.data().size();
  const double lambda = model.lambda();
  const Vector k = kernel_column(model.params(), model.data().inputs, xs);
  const double prior = eval_kernel(model.params(), xs, xs);
  const Vector v = model.factor().solve(k);  // Q k
  const double mean = k.dot(model.beta());
  // Bordering pivot m_n = λ + K(x,x) - k'Qk, which lies in [λ, λ + K(x,x)].
  const double m = lambda + std::clamp(prior - k.dot(v), 0.0, prior);

  LinePair out;
  ResidualLine& in = out.in_sample;
  in.kind = ResidualKind::kInSample;
  in.lambda = lambda;
  in.b.resize(n + 1);
  in.c.resize(n + 1);
  in.b.head(n) = -v / m;
  in.b(n) = 1.0 / m;
  in.c.head(n) = model.beta() + v * (mean / m);
  in.c(n) = -mean / m;

  Vector q_aug(n + 1);
  q_aug.head(n) = model.q_diag() + v.cwiseAbs2() / m;
  q_aug(n) = 1.0 / m;
  ResidualLine& loo = out.loo;
  loo.kind = ResidualKind::kLoo;
  loo.lambda = lambda;
  loo.c = in.c.cwiseQuotient(lambda * q_aug);
  loo.b = in.b.cwiseQuotient(lambda * q_aug);
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

std::vector<double> default_oracle_grid(const Dataset& train, Point xs, double lambda,
                                        const KernelParams& params) {
  const FittedKRR fit = krr_fit(train, lambda, params);
  const double center = krr_predict(fit, xs);
  const Eigen::Index n = train.size();
  double sd = 0.0;
  if (n > 1) {
    const double mean = train.targets.mean();
    sd = std::sqrt((train.targets.array() - mean).square().sum() / static_cast<double>(n - 1));
  }
  const double half = 5.0 * (sd + 1.0);
  constexpr int kPoints = 2001;
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    grid[i] = center - half + 2.0 * half * static_cast<double>(i) / (kPoints - 1);
  }
  return grid;
}

std::vector<std::vector<bool>> brute_force_membership(const Dataset& train, Point xs,
                                                      double lambda, const KernelParams& params,
                                                      ResidualKind kind, Ncm ncm,
                                                      std::span<const double> alphas,
                                                      std::span<const double> grid) {
  if (grid.size() < 2 || !std::is_sorted(grid.begin(), grid.end())) {
    throw Error(ErrorCode::kInvalidArgument, "oracle grid must be sorted with at least 2 points");
  }
  for (const double a : alphas) check_level(a);
  train.validate();
  Dataset aug = augmented(train, xs);
  const Eigen::Index n = train.size();
  const int total = static_cast<int>(n + 1);

  std::vector<std::vector<bool>> kept(alphas.size(), std::vector<bool>(grid.size(), false));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    aug.targets(n) = grid[g];
    const FittedKRR fit = krr_fit(aug, lambda, params);
    const Vector r = kind == ResidualKind::kInSample ? residuals_in_sample(fit) : residuals_loo(fit);
    const double rn = r(n);
    int abs_count = 0;
    int upper_count = 0;
    int lower_count = 0;
    for (Eigen::Index i = 0; i <= n; ++i) {
      const double scale = std::max(std::abs(r(i)), std::abs(rn));
      if (at_least(std::abs(r(i)), std::abs(rn), scale)) ++abs_count;
      if (at_least(r(i), rn, scale)) ++upper_count;
      if (at_least(-r(i), -rn, scale)) ++lower_count;
    }
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      if (ncm == Ncm::kRrcm) {
        kept[a][g] = abs_count >= required_count(total, alphas[a]);
      } else {
        const int need = required_count(total, alphas[a] / 2.0);
        kept[a][g] = upper_count >= need && lower_count >= need;
      }
    }
  }
  return kept;
}

ConfidenceRegion region_from_grid(std::span<const double> grid, const std::vector<bool>& kept) {
  std::vector<Component> out;
  std::size_t g = 0;
  while (g < grid.size()) {
    if (!kept[g]) {
      ++g;
      continue;
    }
    std::size_t e = g;
    while (e + 1 < grid.size() && kept[e + 1]) ++e;
    out.push_back({grid[g], grid[e]});
    g = e + 1;
  }
  return ConfidenceRegion::from_components(std::move(out));
}

ConfidenceRegion brute_force_region(const Dataset& train, Point xs, double lambda,
                                    const KernelParams& params, ResidualKind kind, Ncm ncm,
                                    double alpha, std::span<const double> grid) {
  const double alphas[] = {alpha};
  const auto kept = brute_force_membership(train, xs, lambda, params, kind, ncm, alphas, grid);
  return region_from_grid(grid, kept[0]);
}

bool regions_agree_on_grid(const ConfidenceRegion& fast, const ConfidenceRegion& oracle,
                           std::span<const double> grid, double margin) {
  const std::vector<double> ends = fast.endpoints();
  for (const double z : grid) {
    const auto it = std::lower_bound(ends.begin(), ends.end(), z - margin);
    if (it != ends.end() && *it <= z + margin) continue;
    if (region_contains(fast, z) != region_contains(oracle, z)) return false;
  }
  return true;
}

}  // namespace conforma
