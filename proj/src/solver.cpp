#include "dn/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dn/error.hpp"

namespace dn {

std::string to_string(DiameterClass c) {
  switch (c) {
    case DiameterClass::Passing: return "passing";
    case DiameterClass::Counterpassing: return "counterpassing";
    case DiameterClass::Unclassified: return "unclassified";
  }
  return "unclassified";
}

void SolverConfig::validate() const {
  if (seed_count < 1) fail(ErrorCode::InvalidConfig, "seed_count must be >= 1");
  if (newton_max_iter < 1) fail(ErrorCode::InvalidConfig, "newton_max_iter must be >= 1");
  if (!(tau_res > 0)) fail(ErrorCode::InvalidConfig, "tau_res must be positive");
  if (!(dedup_radius > 0)) fail(ErrorCode::InvalidConfig, "dedup_radius must be positive");
  if (diagonal_exclusion && !(*diagonal_exclusion > 0))
    fail(ErrorCode::InvalidConfig, "diagonal_exclusion must be positive");
  if (!(degeneracy_eta > 0)) fail(ErrorCode::InvalidConfig, "degeneracy_eta must be positive");
}

double SolverConfig::resolve_diagonal_exclusion(const Immersion& imm) const {
  if (diagonal_exclusion) return *diagonal_exclusion;
  return 1e-3 * imm.diameter_estimate();
}

Vec critical_residual(const Immersion& imm, int chart1, const Vec& xi1, int chart2, const Vec& xi2) {
  Jet j1 = imm.jet_at(chart1, xi1);
  Jet j2 = imm.jet_at(chart2, xi2);
  Vec d = j1.point - j2.point;
  int n = imm.intrinsic_dim;
  Vec r(2 * n);
  r.head(n) = j1.jacobian.transpose() * d;
  r.tail(n) = j2.jacobian.transpose() * d;
  return r;
}

void residual_system(const Immersion& imm, int chart1, const Vec& xi1, int chart2, const Vec& xi2,
                     Vec& residual, Mat& jacobian) {
  Jet j1 = imm.jet_at(chart1, xi1);
  Jet j2 = imm.jet_at(chart2, xi2);
  int n = imm.intrinsic_dim;
  int m = imm.ambient_dim;
  Vec d = j1.point - j2.point;
  residual.resize(2 * n);
  residual.head(n) = j1.jacobian.transpose() * d;
  residual.tail(n) = j2.jacobian.transpose() * d;

  Mat dh1 = Mat::Zero(n, n), dh2 = Mat::Zero(n, n);
  for (int i = 0; i < m; ++i) {
    dh1 += d[i] * j1.hessian[i];
    dh2 += d[i] * j2.hessian[i];
  }
  jacobian.resize(2 * n, 2 * n);
  jacobian.topLeftCorner(n, n) = j1.jacobian.transpose() * j1.jacobian + dh1;
  jacobian.topRightCorner(n, n) = -j1.jacobian.transpose() * j2.jacobian;
  jacobian.bottomLeftCorner(n, n) = j2.jacobian.transpose() * j1.jacobian;
  jacobian.bottomRightCorner(n, n) = -j2.jacobian.transpose() * j2.jacobian + dh2;
}

namespace {

double pair_distance(const Immersion& imm, int c1, const Vec& xi1, int c2, const Vec& xi2) {
  return (imm.jet_at(c1, xi1).point - imm.jet_at(c2, xi2).point).norm();
}

bool lex_less(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

constexpr int kMaxHalvings = 30;

// Trust cap on the Newton step, as a fraction of the narrowest chart half-width in
// play. Far from a solution the least-squares step can run a long way along a nearly
// flat direction of the residual, carrying the iterate out of its seed's neighborhood;
// capping the length (a uniform rescale, so it stays a descent direction) keeps
// refinement local and the multi-start coverage intact.
double step_trust_radius(const Immersion& imm, int chart1, int chart2) {
  double half = std::numeric_limits<double>::infinity();
  for (int c : {chart1, chart2}) {
    const Chart& ch = imm.charts[c];
    for (int i = 0; i < ch.lo.size(); ++i) half = std::min(half, 0.5 * (ch.hi[i] - ch.lo[i]));
  }
  return 0.5 * half;
}

// Wraps periodic coordinates and, where the atlas provides it, re-expresses a point
// that wandered far from its chart center in the partner chart. Without this, an
// iterate heading for a solution that the seeded chart only covers at the edge of its
// evaluable region stalls against that boundary.
void settle(const Immersion& imm, int& chart, Vec& xi) {
  xi = imm.wrap(chart, xi);
  const auto& rehome = imm.charts[chart].rehome;
  if (!rehome) return;
  auto [c, u] = rehome(xi);
  if (c == chart) return;
  chart = c;
  xi = imm.wrap(chart, std::move(u));
}

} // namespace

RefineOutcome newton_refine(const Immersion& imm, int chart1, Vec xi1, int chart2, Vec xi2,
                            const SolverConfig& cfg) {
  RefineOutcome out;
  double exclusion = cfg.resolve_diagonal_exclusion(imm);
  settle(imm, chart1, xi1);
  settle(imm, chart2, xi2);
  out.chart1 = chart1;
  out.chart2 = chart2;
  if (!imm.in_eval_domain(chart1, xi1) || !imm.in_eval_domain(chart2, xi2)) {
    out.status = RefineOutcome::Status::Diverged;
    return out;
  }
  if (pair_distance(imm, chart1, xi1, chart2, xi2) <= exclusion) {
    out.status = RefineOutcome::Status::ExcludedDiagonal;
    return out;
  }

  int n = imm.intrinsic_dim;
  Vec r;
  Mat jac;
  residual_system(imm, chart1, xi1, chart2, xi2, r, jac);
  double rn = r.norm();
  for (int iter = 0; iter < cfg.newton_max_iter; ++iter) {
    out.residual_history.push_back(rn);
    if (rn < cfg.tau_res) {
      out.status = RefineOutcome::Status::Converged;
      out.chart1 = chart1;
      out.chart2 = chart2;
      out.xi1 = xi1;
      out.xi2 = xi2;
      out.residual_norm = rn;
      out.iterations = iter;
      return out;
    }
    if (!std::isfinite(rn)) break;
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    // Truncated pseudo-inverse: directions flatter than the degeneracy cutoff carry
    // residual noise, and dividing by their tiny singular values would turn it into
    // O(1) drift along critical families. Dropping them leaves the well-determined
    // transverse correction, which converges onto a family point.
    svd.setThreshold(cfg.degeneracy_eta);
    Vec step = svd.solve(-r);
    if (!step.allFinite()) break;
    double trust = step_trust_radius(imm, chart1, chart2);
    if (step.norm() > trust) step *= trust / step.norm();

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= kMaxHalvings; ++h, t *= 0.5) {
      Vec y1 = imm.wrap(chart1, xi1 + t * step.head(n));
      Vec y2 = imm.wrap(chart2, xi2 + t * step.tail(n));
      if (!imm.in_eval_domain(chart1, y1) || !imm.in_eval_domain(chart2, y2)) continue;
      Vec r_try;
      Mat jac_try;
      residual_system(imm, chart1, y1, chart2, y2, r_try, jac_try);
      double rn_try = r_try.norm();
      if (std::isfinite(rn_try) && rn_try < rn) {
        xi1 = std::move(y1);
        xi2 = std::move(y2);
        r = std::move(r_try);
        jac = std::move(jac_try);
        rn = rn_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    // Re-center the accepted iterate between steps, never inside the line search: the
    // measured residual scales with the chart's tangent frame, so accept/reject must
    // compare values from a single chart. A chart switch changes that scale, hence the
    // recompute.
    {
      int pc1 = chart1, pc2 = chart2;
      settle(imm, chart1, xi1);
      settle(imm, chart2, xi2);
      if (chart1 != pc1 || chart2 != pc2) {
        residual_system(imm, chart1, xi1, chart2, xi2, r, jac);
        rn = r.norm();
      }
    }
    if (rn < cfg.tau_res) {
      out.residual_history.push_back(rn);
      out.status = RefineOutcome::Status::Converged;
      out.chart1 = chart1;
      out.chart2 = chart2;
      out.xi1 = xi1;
      out.xi2 = xi2;
      out.residual_norm = rn;
      out.iterations = iter + 1;
      return out;
    }
  }
  out.status = RefineOutcome::Status::Diverged;
  out.chart1 = chart1;
  out.chart2 = chart2;
  out.residual_norm = rn;
  out.iterations = int(out.residual_history.size());
  return out;
}

void canonicalize_double_normal(const Immersion& imm, DoubleNormal& dn) {
  dn.xi1 = imm.wrap(dn.chart1, dn.xi1);
  dn.xi2 = imm.wrap(dn.chart2, dn.xi2);
  // Tolerant lexicographic order: coordinates agreeing to within the convergence
  // noise are ties, so symmetric endpoints (e.g. on a coordinate axis) orient the
  // same way no matter which side the residue landed on.
  const double tol = 1e-7;
  bool swap = false;
  for (int i = 0; i < dn.p1.size(); ++i) {
    double d = dn.p2[i] - dn.p1[i];
    if (d < -tol) {
      swap = true;
      break;
    }
    if (d > tol) break;
  }
  if (swap) {
    std::swap(dn.chart1, dn.chart2);
    std::swap(dn.xi1, dn.xi2);
    std::swap(dn.p1, dn.p2);
  }
}

double endpoint_set_distance(const DoubleNormal& a, const DoubleNormal& b) {
  double straight = std::max((a.p1 - b.p1).norm(), (a.p2 - b.p2).norm());
  double crossed = std::max((a.p1 - b.p2).norm(), (a.p2 - b.p1).norm());
  return std::min(straight, crossed);
}

Mat morse_hessian(const Immersion& imm, const DoubleNormal& dn) {
  Jet j1 = imm.jet_at(dn.chart1, dn.xi1);
  Jet j2 = imm.jet_at(dn.chart2, dn.xi2);
  int n = imm.intrinsic_dim;
  Vec d = j1.point - j2.point;
  Mat dh1 = Mat::Zero(n, n), dh2 = Mat::Zero(n, n);
  for (int i = 0; i < imm.ambient_dim; ++i) {
    dh1 += d[i] * j1.hessian[i];
    dh2 += d[i] * j2.hessian[i];
  }
  Mat h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = j1.jacobian.transpose() * j1.jacobian + dh1;
  h.topRightCorner(n, n) = -j1.jacobian.transpose() * j2.jacobian;
  h.bottomLeftCorner(n, n) = -j2.jacobian.transpose() * j1.jacobian;
  h.bottomRightCorner(n, n) = j2.jacobian.transpose() * j2.jacobian - dh2;
  return Mat((h + h.transpose()) / 2.0);
}

MorseData morse_data(const Immersion& imm, const DoubleNormal& dn, double eta) {
  Mat h = morse_hessian(imm, dn);
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const Vec& ev = es.eigenvalues();
  double max_abs = ev.cwiseAbs().maxCoeff();
  double min_abs = ev.cwiseAbs().minCoeff();
  MorseData md;
  md.nondegenerate = max_abs > 0 && min_abs >= eta * max_abs;
  md.index = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] < 0) ++md.index;
  return md;
}

DiameterClass classify_passing(const Immersion& imm, const DoubleNormal& dn) {
  if (!imm.co_oriented || imm.codim() != 1) return DiameterClass::Unclassified;
  Vec u = (dn.p1 - dn.p2) / dn.length;
  double s1 = imm.co_orientation(dn.chart1, dn.xi1).dot(u);
  double s2 = imm.co_orientation(dn.chart2, dn.xi2).dot(u);
  if (std::abs(s1) < 1e-10 || std::abs(s2) < 1e-10)
    fail(ErrorCode::InconsistentDoubleNormal,
         "co-orientation nearly orthogonal to the segment at an endpoint");
  return s1 * s2 > 0 ? DiameterClass::Passing : DiameterClass::Counterpassing;
}

namespace {

struct SortKey {
  double length;
  const DoubleNormal* dn;
};

bool key_less(const SortKey& a, const SortKey& b) {
  if (a.length != b.length) return a.length < b.length;
  if (lex_less(a.dn->p1, b.dn->p1)) return true;
  if (lex_less(b.dn->p1, a.dn->p1)) return false;
  return lex_less(a.dn->p2, b.dn->p2);
}

// Tangent directions of the critical family at a degenerate solution: eigenvectors of
// the Morse Hessian whose eigenvalues sit below the degeneracy cutoff.
std::vector<Vec> family_kernel(const Immersion& imm, const DoubleNormal& dn, double eta) {
  Mat h = morse_hessian(imm, dn);
  Eigen::SelfAdjointEigenSolver<Mat> eig(h);
  double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  std::vector<Vec> basis;
  for (int i = 0; i < h.rows(); ++i)
    if (std::abs(eig.eigenvalues()[i]) < eta * top) basis.push_back(eig.eigenvectors().col(i));
  return basis;
}

} // namespace

std::vector<BottCluster> cluster_degenerate_solutions(std::vector<DoubleNormal> degenerate,
                                                      const Immersion& imm,
                                                      const SolverConfig& cfg) {
  std::vector<BottCluster> clusters;
  if (degenerate.empty()) return clusters;

  // Stage 1: bucket by critical value g = 1/2 l^2, 1e-6 relative tolerance.
  std::sort(degenerate.begin(), degenerate.end(),
            [](const DoubleNormal& a, const DoubleNormal& b) { return a.length < b.length; });
  std::vector<std::pair<std::size_t, std::size_t>> value_groups;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= degenerate.size(); ++i) {
    if (i == degenerate.size()) {
      value_groups.emplace_back(start, i);
      break;
    }
    double g_prev = 0.5 * degenerate[i - 1].length * degenerate[i - 1].length;
    double g_cur = 0.5 * degenerate[i].length * degenerate[i].length;
    if (g_cur - g_prev > 1e-6 * std::max(g_cur, 1e-300)) {
      value_groups.emplace_back(start, i);
      start = i;
    }
  }

  // Stage 2: within each value group, chain members closer than the connectivity
  // radius into connected clusters (breadth-first over the proximity graph).
  double radius = std::max(10.0 * cfg.dedup_radius, 0.15 * imm.diameter_estimate());
  for (auto [lo, hi] : value_groups) {
    std::size_t count = hi - lo;
    std::vector<int> label(count, -1);
    int next_label = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (label[i] >= 0) continue;
      label[i] = next_label;
      std::vector<std::size_t> queue = {i};
      while (!queue.empty()) {
        std::size_t cur = queue.back();
        queue.pop_back();
        for (std::size_t j = 0; j < count; ++j) {
          if (label[j] >= 0) continue;
          if (endpoint_set_distance(degenerate[lo + cur], degenerate[lo + j]) < radius) {
            label[j] = next_label;
            queue.push_back(j);
          }
        }
      }
      ++next_label;
    }

    // Stage 3: several clusters at one critical value are either fragments of a single
    // connected family that the multi-start pass sampled with a gap, or genuinely
    // separate families. Decide by continuation: grow every fragment except the most
    // populated one by walking along the family (predictor step along the Hessian
    // kernel, Newton corrector), merging fragments whose walks meet. A walk that
    // closes up without meeting anything confirms a separate family.
    if (next_label > 1) {
      std::vector<DoubleNormal> pts(degenerate.begin() + long(lo), degenerate.begin() + long(hi));
      std::vector<int> plabel = label;
      std::vector<int> parent(next_label);
      std::iota(parent.begin(), parent.end(), 0);
      auto find_root = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
      };
      std::vector<int> sizes(next_label, 0);
      for (int l : label) ++sizes[l];
      int big = int(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
      auto root_count = [&] {
        int k = 0;
        for (int c = 0; c < next_label; ++c)
          if (find_root(c) == c) ++k;
        return k;
      };

      double g_ref = 0.5 * pts.front().length * pts.front().length;
      double step_len = 0.5 * radius;
      int n = imm.intrinsic_dim;
      int budget = 20000;
      std::vector<std::size_t> frontier(pts.size());
      std::iota(frontier.begin(), frontier.end(), std::size_t(0));
      while (budget > 0 && root_count() > 1) {
        std::vector<std::size_t> next_frontier;
        for (std::size_t fi : frontier) {
          if (find_root(plabel[fi]) == find_root(big)) continue;
          const DoubleNormal at = pts[fi]; // copy: pts may reallocate below
          Jet j1 = imm.jet_at(at.chart1, at.xi1);
          Jet j2 = imm.jet_at(at.chart2, at.xi2);
          for (const Vec& v : family_kernel(imm, at, cfg.degeneracy_eta)) {
            double speed = std::hypot((j1.jacobian * v.head(n)).norm(),
                                      (j2.jacobian * v.tail(n)).norm());
            if (speed < 1e-12) continue;
            double h = step_len / speed;
            for (double sgn : {1.0, -1.0}) {
              if (--budget < 0) break;
              RefineOutcome ro = newton_refine(imm, at.chart1, at.xi1 + sgn * h * v.head(n),
                                               at.chart2, at.xi2 + sgn * h * v.tail(n), cfg);
              if (ro.status != RefineOutcome::Status::Converged) continue;
              DoubleNormal q;
              q.chart1 = ro.chart1;
              q.chart2 = ro.chart2;
              q.xi1 = ro.xi1;
              q.xi2 = ro.xi2;
              q.p1 = imm.jet_at(ro.chart1, ro.xi1).point;
              q.p2 = imm.jet_at(ro.chart2, ro.xi2).point;
              q.length = (q.p1 - q.p2).norm();
              q.residual_norm = ro.residual_norm;
              double g_q = 0.5 * q.length * q.length;
              if (std::abs(g_q - g_ref) > 2e-6 * std::max(g_ref, 1e-300)) continue;
              if (morse_data(imm, q, cfg.degeneracy_eta).nondegenerate) continue;
              canonicalize_double_normal(imm, q);
              int my_root = find_root(plabel[fi]);
              double nearest = std::numeric_limits<double>::infinity();
              for (std::size_t j = 0; j < pts.size(); ++j) {
                double d = endpoint_set_distance(q, pts[j]);
                nearest = std::min(nearest, d);
                if (d < radius && find_root(plabel[j]) != my_root)
                  parent[find_root(plabel[j])] = my_root;
              }
              if (nearest >= 0.5 * step_len) {
                pts.push_back(q);
                plabel.push_back(my_root);
                next_frontier.push_back(pts.size() - 1);
              }
            }
            if (budget < 0) break;
          }
          if (budget < 0) break;
        }
        if (next_frontier.empty()) break;
        frontier = std::move(next_frontier);
      }
      for (std::size_t i = 0; i < count; ++i) label[i] = find_root(label[i]);
    }

    for (int c = 0; c < next_label; ++c) {
      BottCluster cl;
      double g_sum = 0, l_sum = 0;
      for (std::size_t i = 0; i < count; ++i) {
        if (label[i] != c) continue;
        const DoubleNormal& dn = degenerate[lo + i];
        if (cl.member_count == 0) cl.representative = dn;
        ++cl.member_count;
        g_sum += 0.5 * dn.length * dn.length;
        l_sum += dn.length;
      }
      if (cl.member_count == 0) continue;
      cl.critical_value = g_sum / cl.member_count;
      cl.mean_length = l_sum / cl.member_count;
      clusters.push_back(std::move(cl));
    }
  }
  std::sort(clusters.begin(), clusters.end(), [](const BottCluster& a, const BottCluster& b) {
    if (a.mean_length != b.mean_length) return a.mean_length < b.mean_length;
    return lex_less(a.representative.p1, b.representative.p1);
  });
  return clusters;
}

BottSummary detect_bott_families(const SolveResult& result) {
  BottSummary s;
  s.cluster_count = int(result.bott_clusters.size());
  for (const BottCluster& c : result.bott_clusters) {
    s.sizes.push_back(c.member_count);
    s.critical_values.push_back(c.critical_value);
  }
  return s;
}

SolveResult find_double_normals(const Immersion& imm, const SolverConfig& cfg) {
  cfg.validate();
  SolveResult result;
  SolveDiagnostics& diag = result.diagnostics;
  double exclusion = cfg.resolve_diagonal_exclusion(imm);

  std::mt19937_64 rng(cfg.rng_seed);
  auto u01 = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  int n = imm.intrinsic_dim;
  std::size_t num_charts = imm.charts.size();

  std::vector<DoubleNormal> converged;
  converged.reserve(cfg.seed_count);
  auto process_seed = [&](int c1, const Vec& xi1, int c2, const Vec& xi2) {
    RefineOutcome ro = newton_refine(imm, c1, xi1, c2, xi2, cfg);
    if (ro.status == RefineOutcome::Status::ExcludedDiagonal) {
      ++diag.excluded_diagonal;
      return;
    }
    if (ro.status == RefineOutcome::Status::Diverged) {
      ++diag.diverged;
      return;
    }
    DoubleNormal dn;
    dn.chart1 = ro.chart1;
    dn.chart2 = ro.chart2;
    dn.xi1 = ro.xi1;
    dn.xi2 = ro.xi2;
    dn.p1 = imm.jet_at(ro.chart1, ro.xi1).point;
    dn.p2 = imm.jet_at(ro.chart2, ro.xi2).point;
    dn.length = (dn.p1 - dn.p2).norm();
    dn.residual_norm = ro.residual_norm;
    if (dn.length <= exclusion) {
      ++diag.excluded_diagonal;
      return;
    }
    canonicalize_double_normal(imm, dn);
    converged.push_back(std::move(dn));
    ++diag.converged;
  };

  // Deterministic stratified pass first: a coarse cell-center grid per chart pair
  // catches critical points whose Newton basins are too small for the random stream
  // to hit reliably. Skipped when the seed budget is smaller than the grid.
  int k = n <= 2 ? 3 : 2;
  int per_chart = 1;
  for (int i = 0; i < n; ++i) per_chart *= k;
  std::vector<std::vector<Vec>> grid(num_charts);
  for (std::size_t c = 0; c < num_charts; ++c) {
    grid[c].reserve(per_chart);
    for (int t = 0; t < per_chart; ++t) {
      Vec xi(n);
      int rem = t;
      for (int i = 0; i < n; ++i) {
        int idx = rem % k;
        rem /= k;
        xi[i] = imm.charts[c].lo[i] +
                (imm.charts[c].hi[i] - imm.charts[c].lo[i]) * (idx + 0.5) / k;
      }
      grid[c].push_back(std::move(xi));
    }
  }
  long grid_budget = 0;
  for (std::size_t c1 = 0; c1 < num_charts; ++c1)
    for (std::size_t c2 = c1; c2 < num_charts; ++c2)
      grid_budget += long(grid[c1].size()) * long(grid[c2].size());
  bool use_grid = grid_budget <= cfg.seed_count;
  diag.seeds_total = cfg.seed_count + (use_grid ? int(grid_budget) : 0);
  if (use_grid)
    for (std::size_t c1 = 0; c1 < num_charts; ++c1)
      for (std::size_t c2 = c1; c2 < num_charts; ++c2)
        for (const Vec& a : grid[c1])
          for (const Vec& b : grid[c2]) process_seed(int(c1), a, int(c2), b);

  // Random pass: a mixture of box-uniform draws and draws shrunk toward the chart
  // center. Cap-style charts compress a large manifold region near the center of the
  // box, so pure box-uniform sampling starves it; the shrunk half restores coverage.
  auto draw_seed = [&](int c) {
    const Chart& ch = imm.charts[c];
    double t = u01() < 0.5 ? 1.0 : u01();
    Vec xi(n);
    for (int i = 0; i < n; ++i) {
      double mid = 0.5 * (ch.lo[i] + ch.hi[i]);
      double half = 0.5 * (ch.hi[i] - ch.lo[i]);
      xi[i] = mid + t * (2.0 * u01() - 1.0) * half;
    }
    return xi;
  };
  for (int s = 0; s < cfg.seed_count; ++s) {
    int c1 = int(rng() % num_charts);
    Vec xi1 = draw_seed(c1);
    int c2 = int(rng() % num_charts);
    Vec xi2 = draw_seed(c2);
    process_seed(c1, xi1, c2, xi2);
  }

  int refined = diag.converged + diag.diverged;
  diag.divergence_warning = refined > 0 && diag.diverged > 0.9 * refined;

  // Deduplicate: sort by (length, endpoints), then greedily accept representatives,
  // comparing only against accepted ones in a 2*delta length window.
  std::vector<SortKey> keys;
  keys.reserve(converged.size());
  for (const DoubleNormal& dn : converged) keys.push_back({dn.length, &dn});
  std::sort(keys.begin(), keys.end(), key_less);

  std::vector<DoubleNormal> unique;
  std::vector<double> unique_lengths;
  for (const SortKey& key : keys) {
    bool dup = false;
    double window = 2.0 * cfg.dedup_radius + 1e-12;
    auto it = std::lower_bound(unique_lengths.begin(), unique_lengths.end(), key.length - window);
    for (std::size_t i = std::size_t(it - unique_lengths.begin()); i < unique.size(); ++i) {
      if (unique[i].length > key.length + window) break;
      if (endpoint_set_distance(unique[i], *key.dn) < cfg.dedup_radius) {
        dup = true;
        break;
      }
    }
    if (dup) {
      ++diag.deduplicated;
    } else {
      unique.push_back(*key.dn);
      unique_lengths.push_back(key.dn->length);
    }
  }

  // Morse analysis and split; classify the isolated (nondegenerate) solutions.
  std::vector<DoubleNormal> degenerate;
  for (DoubleNormal& dn : unique) {
    MorseData md = morse_data(imm, dn, cfg.degeneracy_eta);
    dn.morse_index = md.index;
    dn.nondegenerate = md.nondegenerate;
    if (md.nondegenerate) {
      dn.cls = classify_passing(imm, dn);
      result.diameters.push_back(std::move(dn));
    } else {
      degenerate.push_back(std::move(dn));
    }
  }
  result.bott_clusters = cluster_degenerate_solutions(std::move(degenerate), imm, cfg);
  return result;
}

namespace {

nlohmann::ordered_json vec_to_json(const Vec& v) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::ordered_json double_normal_to_json(const DoubleNormal& dn) {
  nlohmann::ordered_json j;
  j["chart1"] = dn.chart1;
  j["xi1"] = vec_to_json(dn.xi1);
  j["chart2"] = dn.chart2;
  j["xi2"] = vec_to_json(dn.xi2);
  j["p1"] = vec_to_json(dn.p1);
  j["p2"] = vec_to_json(dn.p2);
  j["length"] = dn.length;
  j["residual"] = dn.residual_norm;
  j["index"] = dn.morse_index;
  j["nondegenerate"] = dn.nondegenerate;
  j["class"] = to_string(dn.cls);
  return j;
}

std::string csv_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

} // namespace

nlohmann::ordered_json solver_config_to_json(const SolverConfig& cfg, const Immersion& imm) {
  nlohmann::ordered_json j;
  j["seed_count"] = cfg.seed_count;
  j["rng_seed"] = cfg.rng_seed;
  j["newton_max_iter"] = cfg.newton_max_iter;
  j["tau_res"] = cfg.tau_res;
  j["dedup_radius"] = cfg.dedup_radius;
  j["diagonal_exclusion"] = cfg.resolve_diagonal_exclusion(imm);
  j["degeneracy_eta"] = cfg.degeneracy_eta;
  return j;
}

nlohmann::ordered_json solve_result_to_json(const Immersion& imm, const SolverConfig& cfg,
                                            const SolveResult& result) {
  nlohmann::ordered_json j;
  j["shape"] = imm.name;
  j["config"] = solver_config_to_json(cfg, imm);
  nlohmann::ordered_json diameters = nlohmann::ordered_json::array();
  for (const DoubleNormal& dn : result.diameters) diameters.push_back(double_normal_to_json(dn));
  j["diameters"] = diameters;
  nlohmann::ordered_json clusters = nlohmann::ordered_json::array();
  for (const BottCluster& c : result.bott_clusters) {
    nlohmann::ordered_json cj;
    cj["member_count"] = c.member_count;
    cj["critical_value"] = c.critical_value;
    cj["mean_length"] = c.mean_length;
    cj["representative"] = double_normal_to_json(c.representative);
    clusters.push_back(std::move(cj));
  }
  j["bott_clusters"] = clusters;
  nlohmann::ordered_json diag;
  diag["seeds_total"] = result.diagnostics.seeds_total;
  diag["converged"] = result.diagnostics.converged;
  diag["diverged"] = result.diagnostics.diverged;
  diag["deduplicated"] = result.diagnostics.deduplicated;
  diag["excluded_diagonal"] = result.diagnostics.excluded_diagonal;
  diag["divergence_warning"] = result.diagnostics.divergence_warning;
  j["diagnostics"] = diag;
  return j;
}

std::string solve_result_to_csv(const SolveResult& result) {
  std::string out;
  int n = 0;
  if (!result.diameters.empty()) n = int(result.diameters.front().xi1.size());
  out += "chart1";
  for (int i = 0; i < n; ++i) out += ",xi1_" + std::to_string(i);
  out += ",chart2";
  for (int i = 0; i < n; ++i) out += ",xi2_" + std::to_string(i);
  int m = result.diameters.empty() ? 0 : int(result.diameters.front().p1.size());
  for (int i = 0; i < m; ++i) out += ",p1_" + std::to_string(i);
  for (int i = 0; i < m; ++i) out += ",p2_" + std::to_string(i);
  out += ",length,residual,index,nondegenerate,class\n";
  for (const DoubleNormal& dn : result.diameters) {
    out += std::to_string(dn.chart1);
    for (int i = 0; i < n; ++i) out += "," + csv_double(dn.xi1[i]);
    out += "," + std::to_string(dn.chart2);
    for (int i = 0; i < n; ++i) out += "," + csv_double(dn.xi2[i]);
    for (int i = 0; i < m; ++i) out += "," + csv_double(dn.p1[i]);
    for (int i = 0; i < m; ++i) out += "," + csv_double(dn.p2[i]);
    out += "," + csv_double(dn.length);
    out += "," + csv_double(dn.residual_norm);
    out += "," + std::to_string(dn.morse_index);
    out += dn.nondegenerate ? ",true" : ",false";
    out += "," + to_string(dn.cls) + "\n";
  }
  return out;
}

} // namespace dn
