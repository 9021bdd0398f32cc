#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "conforma/krr.hpp"

namespace conforma {

enum class ResidualKind { kInSample, kLoo };
enum class Ncm { kRrcm, kCrr };
/// Scoring used by a single p-value: |r| for RRCM, r or -r for the two CRR sides.
enum class PValueNcm { kRrcm, kCrrUpper, kCrrLower };
enum class CrrSide { kUpper, kLower };

const char* to_string(ResidualKind kind);
const char* to_string(Ncm ncm);

/// Relative tolerance under which two slopes (or two intercepts) of residual
/// lines are treated as equal during case dispatch.
inline constexpr double kCaseTolerance = 1e-12;
/// Relative tolerance for the `>=` comparisons inside a p-value.
inline constexpr double kTieTolerance = 1e-12;

/// Residuals of the augmented sample (X, xs) with targets (y, z), as affine
/// functions of the candidate target z:
///
///     r_i(z) = lambda * (c_i + b_i z),   i = 0..n,
///
/// where row n (the last) belongs to the test point. No sign normalization is
/// applied; RRCM normalizes internally and CRR needs the signed values.
struct ResidualLine {
  Vector c;
  Vector b;
  ResidualKind kind = ResidualKind::kInSample;
  double lambda = 1.0;

  /// Number of rows, n + 1.
  Eigen::Index size() const { return c.size(); }
  Eigen::Index test_row() const { return c.size() - 1; }
  double residual(Eigen::Index i, double z) const { return lambda * (c(i) + b(i) * z); }
};

/// A closed component [lo, hi]; lo may be -inf, hi may be +inf. lo == hi is a
/// singleton.
struct Component {
  double lo = 0.0;
  double hi = 0.0;

  bool is_singleton() const { return lo == hi; }
  bool operator==(const Component&) const = default;
};

/// Finite union of closed, sorted, pairwise disjoint, non-adjacent components.
class ConfidenceRegion {
 public:
  ConfidenceRegion() = default;

  static ConfidenceRegion real_line();
  /// Sorts the pieces and merges any that overlap or touch.
  static ConfidenceRegion from_components(std::vector<Component> pieces);

  const std::vector<Component>& components() const { return components_; }
  bool empty() const { return components_.empty(); }
  bool is_real_line() const;
  std::size_t singleton_count() const;
  /// Finite endpoints in increasing order.
  std::vector<double> endpoints() const;

  bool operator==(const ConfidenceRegion&) const = default;

 private:
  std::vector<Component> components_;
};

bool region_contains(const ConfidenceRegion& region, double z);
/// sup - inf of the region; +inf when it is unbounded. Throws kEmptyRegion.
double region_hull_width(const ConfidenceRegion& region);
ConfidenceRegion intersect(const ConfidenceRegion& a, const ConfidenceRegion& b);
/// `[lo, hi]` per component, `-inf`/`inf` for rays, `{x}` for singletons,
/// `empty` for the empty set. Six decimals.
std::string format_component(const Component& component);

/// Coverage counts N of the candidate sets over the partition of the real
/// line induced by their endpoints g_0 < ... < g_{J-1}. Slots alternate
/// gap, point, gap, ..., gap (2J + 1 of them): slot 2j + 1 is the singleton
/// {g_j}, slot 2j is the open gap left of g_j. A gap count equals the count
/// of its closure because every candidate set is closed.
struct CoverageProfile {
  std::vector<double> endpoints;
  std::vector<int> counts;
  int total = 0;

  /// Union of singletons and closed gaps with count >= total * level.
  ConfidenceRegion threshold(double level) const;
};

/// Smallest count k with k / total >= level, robust to level * total roundoff.
int required_count(int total, double level);

/// Builds (c, b) from the augmented system λI + K over (X, xs): one
/// factorization, c from targets (y, 0), b = Q e_n (the z-slope). For LOO
/// each row is further divided by λ (Q_aug)_ii, which does not depend on z.
ResidualLine residual_line(const Dataset& train, Point xs, double lambda,
                           const KernelParams& params, ResidualKind kind);

struct LinePair {
  ResidualLine in_sample;
  ResidualLine loo;
};

/// Same lines from an existing train fit by a rank-one border of its
/// factorization: O(n²) per test point instead of O(n³).
LinePair residual_lines(const FittedKRR& model, Point xs);

CoverageProfile rrcm_profile(const ResidualLine& line);
CoverageProfile crr_profile(const ResidualLine& line, CrrSide side);

/// {z : p_rrcm(z) >= alpha}, 0 < alpha <= 1.
ConfidenceRegion rrcm_region(const ResidualLine& line, double alpha);
/// Upper and lower one-sided regions at alpha/2, intersected.
ConfidenceRegion crr_region(const ResidualLine& line, double alpha);
ConfidenceRegion crr_side_region(const ResidualLine& line, CrrSide side, double level);
ConfidenceRegion conformal_region(const ResidualLine& line, Ncm ncm, double alpha);

struct PValue {
  int count = 0;
  int total = 0;

  double value() const { return static_cast<double>(count) / total; }
};

/// Rows (test row included) at least as nonconforming as the test row at z.
PValue conformal_p_value(const ResidualLine& line, double z, PValueNcm ncm);

/// 2001 points over [ŷ - 5s, ŷ + 5s], ŷ the KRR prediction at xs, s the
/// sample standard deviation of the train targets plus one.
std::vector<double> default_oracle_grid(const Dataset& train, Point xs, double lambda,
                                        const KernelParams& params);

/// Residuals of the augmented sample recomputed from a fresh fit for every z
/// on the grid, no linear-in-z shortcut. Kept points are joined into closed
/// intervals between grid neighbours.
ConfidenceRegion brute_force_region(const Dataset& train, Point xs, double lambda,
                                    const KernelParams& params, ResidualKind kind, Ncm ncm,
                                    double alpha, std::span<const double> grid);

/// Grid membership of the brute-force region at several levels at once;
/// kept[a][g] refers to alphas[a] and grid[g].
std::vector<std::vector<bool>> brute_force_membership(const Dataset& train, Point xs,
                                                      double lambda, const KernelParams& params,
                                                      ResidualKind kind, Ncm ncm,
                                                      std::span<const double> alphas,
                                                      std::span<const double> grid);

ConfidenceRegion region_from_grid(std::span<const double> grid, const std::vector<bool>& kept);

/// True when both regions agree on every grid point farther than `margin`
/// from a finite endpoint of `fast`.
bool regions_agree_on_grid(const ConfidenceRegion& fast, const ConfidenceRegion& oracle,
                           std::span<const double> grid, double margin = 1e-6);

}  // namespace conforma
