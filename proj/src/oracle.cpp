#include "dn/oracle.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dn/error.hpp"
#include "dn/solver.hpp"

namespace dn {

namespace {

constexpr double kPolishTol = 1e-9;
constexpr int kPolishSteps = 25;
constexpr double kCollapseRadius = 1e-6;

// Flattened evaluation grid over one chart, row-major with axis 0 slowest.
struct ChartGrid {
  int chart = 0;
  int dim = 0;
  int density = 0;
  std::size_t size = 0;
  std::vector<uint8_t> periodic;
  std::vector<double> coords; // size * dim
  std::vector<double> pts;    // size * m
  std::vector<double> jacs;   // size * m * dim, row-major (i, a)
};

ChartGrid make_grid(const Immersion& imm, int chart, int density) {
  const Chart& ch = imm.charts[chart];
  ChartGrid g;
  g.chart = chart;
  g.dim = imm.intrinsic_dim;
  g.density = density;
  g.periodic = ch.periodic;
  g.size = 1;
  for (int i = 0; i < g.dim; ++i) g.size *= std::size_t(density);
  int m = imm.ambient_dim;
  g.coords.resize(g.size * g.dim);
  g.pts.resize(g.size * m);
  g.jacs.resize(g.size * std::size_t(m) * g.dim);
  Vec xi(g.dim);
  for (std::size_t idx = 0; idx < g.size; ++idx) {
    std::size_t rem = idx;
    for (int i = g.dim - 1; i >= 0; --i) {
      int t = int(rem % density);
      rem /= density;
      double span = ch.hi[i] - ch.lo[i];
      xi[i] = ch.periodic[i] ? ch.lo[i] + t * span / density
                             : ch.lo[i] + t * span / (density - 1);
    }
    Jet j = imm.jet_at(chart, xi);
    for (int i = 0; i < g.dim; ++i) g.coords[idx * g.dim + i] = xi[i];
    for (int i = 0; i < m; ++i) g.pts[idx * m + i] = j.point[i];
    for (int i = 0; i < m; ++i)
      for (int a = 0; a < g.dim; ++a) g.jacs[(idx * m + i) * g.dim + a] = j.jacobian(i, a);
  }
  return g;
}

struct OrderedZero {
  int chart1, chart2;
  Vec xi1, xi2;
  Vec p1, p2;
};

// Plain (undamped) Newton polish of one grid candidate.
bool polish(const Immersion& imm, int c1, Vec xi1, int c2, Vec xi2, double exclusion,
            OrderedZero& out) {
  int n = imm.intrinsic_dim;
  Vec r;
  Mat jac;
  for (int it = 0; it < kPolishSteps; ++it) {
    residual_system(imm, c1, xi1, c2, xi2, r, jac);
    double rn = r.norm();
    if (!std::isfinite(rn)) return false;
    if (rn < kPolishTol) break;
    Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec step = svd.solve(-r);
    if (!step.allFinite()) return false;
    xi1 = imm.wrap(c1, xi1 + step.head(n));
    xi2 = imm.wrap(c2, xi2 + step.tail(n));
    if (!imm.in_eval_domain(c1, xi1) || !imm.in_eval_domain(c2, xi2)) return false;
  }
  if (critical_residual(imm, c1, xi1, c2, xi2).norm() >= kPolishTol) return false;
  out.chart1 = c1;
  out.chart2 = c2;
  out.xi1 = xi1;
  out.xi2 = xi2;
  out.p1 = imm.jet_at(c1, xi1).point;
  out.p2 = imm.jet_at(c2, xi2).point;
  if ((out.p1 - out.p2).norm() <= exclusion) return false;
  return true;
}

// Residual norm squared from precomputed grid data; +inf inside the diagonal exclusion.
inline float field_value(const ChartGrid& g1, std::size_t a, const ChartGrid& g2, std::size_t b,
                         int m, double excl2) {
  const double* f1 = &g1.pts[a * m];
  const double* f2 = &g2.pts[b * m];
  double d[8];
  double dn2 = 0;
  for (int i = 0; i < m; ++i) {
    d[i] = f1[i] - f2[i];
    dn2 += d[i] * d[i];
  }
  if (dn2 < excl2) return std::numeric_limits<float>::infinity();
  const double* J1 = &g1.jacs[a * std::size_t(m) * g1.dim];
  const double* J2 = &g2.jacs[b * std::size_t(m) * g2.dim];
  double sum = 0;
  for (int aa = 0; aa < g1.dim; ++aa) {
    double v = 0;
    for (int i = 0; i < m; ++i) v += J1[i * g1.dim + aa] * d[i];
    sum += v * v;
  }
  for (int bb = 0; bb < g2.dim; ++bb) {
    double v = 0;
    for (int i = 0; i < m; ++i) v += J2[i * g2.dim + bb] * d[i];
    sum += v * v;
  }
  return float(sum);
}

// Candidate grid-local minima of one ordered chart-pair block, intrinsic dim 1:
// the pair field is density x density and is materialized whole.
void scan_block_1d(const Immersion& imm, const ChartGrid& g1, const ChartGrid& g2, double excl2,
                   double tau2, std::vector<std::pair<std::size_t, std::size_t>>& candidates) {
  int N = g1.density;
  int m = imm.ambient_dim;
  std::vector<float> field(std::size_t(N) * N);
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) field[std::size_t(a) * N + b] = field_value(g1, a, g2, b, m, excl2);
  auto at = [&](int a, int b) { return field[std::size_t(a) * N + b]; };
  const float inf = std::numeric_limits<float>::infinity();
  for (int a = 0; a < N; ++a)
    for (int b = 0; b < N; ++b) {
      float v = at(a, b);
      if (!(v < tau2)) continue;
      float up = g1.periodic[0] ? at((a + 1) % N, b) : (a + 1 < N ? at(a + 1, b) : inf);
      float dn = g1.periodic[0] ? at((a + N - 1) % N, b) : (a > 0 ? at(a - 1, b) : inf);
      float rt = g2.periodic[0] ? at(a, (b + 1) % N) : (b + 1 < N ? at(a, b + 1) : inf);
      float lt = g2.periodic[0] ? at(a, (b + N - 1) % N) : (b > 0 ? at(a, b - 1) : inf);
      if (v < up && v < dn && v < rt && v < lt) candidates.emplace_back(a, b);
    }
}

// Intrinsic dim 2: the pair field is density^4 and is scanned through a moving
// window of three density^3 slabs along the first axis of chart 1.
void scan_block_2d(const Immersion& imm, const ChartGrid& g1, const ChartGrid& g2, double excl2,
                   double tau2, std::vector<std::pair<std::size_t, std::size_t>>& candidates) {
  int N = g1.density;
  int m = imm.ambient_dim;
  std::size_t slab_size = std::size_t(N) * N * N;
  auto compute_slab = [&](int a0, std::vector<float>& slab) {
    for (int a1 = 0; a1 < N; ++a1) {
      std::size_t a = std::size_t(a0) * N + a1;
      for (int b0 = 0; b0 < N; ++b0) {
        std::size_t base = (std::size_t(a1) * N + b0) * N;
        std::size_t bbase = std::size_t(b0) * N;
        for (int b1 = 0; b1 < N; ++b1) slab[base + b1] = field_value(g1, a, g2, bbase + b1, m, excl2);
      }
    }
  };

  bool per0 = g1.periodic[0] != 0;
  std::vector<float> prev(slab_size), cur(slab_size), next(slab_size), first(slab_size),
      last(slab_size);
  const float inf = std::numeric_limits<float>::infinity();
  compute_slab(0, first);
  if (per0) compute_slab(N - 1, last);

  cur = first;
  if (per0)
    prev = last;
  else
    prev.assign(slab_size, inf);

  for (int a0 = 0; a0 < N; ++a0) {
    if (a0 + 1 < N) {
      if (a0 + 1 == N - 1 && per0)
        next = last;
      else
        compute_slab(a0 + 1, next);
    } else {
      if (per0)
        next = first;
      else
        next.assign(slab_size, inf);
    }
    auto at = [&](const std::vector<float>& s, int a1, int b0, int b1) {
      return s[(std::size_t(a1) * N + b0) * N + b1];
    };
    for (int a1 = 0; a1 < N; ++a1)
      for (int b0 = 0; b0 < N; ++b0)
        for (int b1 = 0; b1 < N; ++b1) {
          float v = at(cur, a1, b0, b1);
          if (!(v < tau2)) continue;
          if (!(v < at(prev, a1, b0, b1)) || !(v < at(next, a1, b0, b1))) continue;
          float n1 = g1.periodic[1] ? at(cur, (a1 + 1) % N, b0, b1)
                                    : (a1 + 1 < N ? at(cur, a1 + 1, b0, b1) : inf);
          float n2 = g1.periodic[1] ? at(cur, (a1 + N - 1) % N, b0, b1)
                                    : (a1 > 0 ? at(cur, a1 - 1, b0, b1) : inf);
          if (!(v < n1) || !(v < n2)) continue;
          float n3 = g2.periodic[0] ? at(cur, a1, (b0 + 1) % N, b1)
                                    : (b0 + 1 < N ? at(cur, a1, b0 + 1, b1) : inf);
          float n4 = g2.periodic[0] ? at(cur, a1, (b0 + N - 1) % N, b1)
                                    : (b0 > 0 ? at(cur, a1, b0 - 1, b1) : inf);
          if (!(v < n3) || !(v < n4)) continue;
          float n5 = g2.periodic[1] ? at(cur, a1, b0, (b1 + 1) % N)
                                    : (b1 + 1 < N ? at(cur, a1, b0, b1 + 1) : inf);
          float n6 = g2.periodic[1] ? at(cur, a1, b0, (b1 + N - 1) % N)
                                    : (b1 > 0 ? at(cur, a1, b0, b1 - 1) : inf);
          if (!(v < n5) || !(v < n6)) continue;
          candidates.emplace_back(std::size_t(a0) * N + a1, std::size_t(b0) * N + b1);
        }
    std::swap(prev, cur);
    std::swap(cur, next);
  }
}

double ordered_distance(const OrderedZero& a, const OrderedZero& b) {
  return std::max((a.p1 - b.p1).norm(), (a.p2 - b.p2).norm());
}

bool lex_less_vec(const Vec& a, const Vec& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

double set_distance(const std::pair<Vec, Vec>& a, const std::pair<Vec, Vec>& b) {
  double straight = std::max((a.first - b.first).norm(), (a.second - b.second).norm());
  double crossed = std::max((a.first - b.second).norm(), (a.second - b.first).norm());
  return std::min(straight, crossed);
}

} // namespace

OracleResult brute_force_oracle(const Immersion& imm, int grid_density) {
  if (imm.intrinsic_dim > 2)
    fail(ErrorCode::Unsupported, "grid oracle supports intrinsic dimension <= 2");
  if (grid_density < 8) fail(ErrorCode::InvalidArgument, "grid density too small");

  double diam = imm.diameter_estimate();
  double exclusion = 1e-3 * diam;
  double excl2 = exclusion * exclusion;
  double tau = 0.1 * diam;
  double tau2 = tau * tau;

  std::vector<ChartGrid> grids;
  for (std::size_t c = 0; c < imm.charts.size(); ++c)
    grids.push_back(make_grid(imm, int(c), grid_density));

  // Scan blocks with chart1 <= chart2; mirrored blocks contribute swapped zeros.
  std::vector<OrderedZero> zeros;
  for (std::size_t c1 = 0; c1 < grids.size(); ++c1)
    for (std::size_t c2 = c1; c2 < grids.size(); ++c2) {
      std::vector<std::pair<std::size_t, std::size_t>> candidates;
      if (imm.intrinsic_dim == 1)
        scan_block_1d(imm, grids[c1], grids[c2], excl2, tau2, candidates);
      else
        scan_block_2d(imm, grids[c1], grids[c2], excl2, tau2, candidates);
      int n = imm.intrinsic_dim;
      for (auto [a, b] : candidates) {
        Vec xi1(n), xi2(n);
        for (int i = 0; i < n; ++i) {
          xi1[i] = grids[c1].coords[a * n + i];
          xi2[i] = grids[c2].coords[b * n + i];
        }
        OrderedZero z;
        if (!polish(imm, int(c1), xi1, int(c2), xi2, exclusion, z)) continue;
        if (c1 != c2) {
          OrderedZero swapped;
          swapped.chart1 = z.chart2;
          swapped.chart2 = z.chart1;
          swapped.xi1 = z.xi2;
          swapped.xi2 = z.xi1;
          swapped.p1 = z.p2;
          swapped.p2 = z.p1;
          zeros.push_back(std::move(swapped));
        }
        zeros.push_back(std::move(z));
      }
    }

  // Collapse ordered duplicates (same zero reached from many grid cells / charts).
  std::sort(zeros.begin(), zeros.end(), [](const OrderedZero& a, const OrderedZero& b) {
    if (lex_less_vec(a.p1, b.p1)) return true;
    if (lex_less_vec(b.p1, a.p1)) return false;
    return lex_less_vec(a.p2, b.p2);
  });
  std::vector<OrderedZero> ordered_reps;
  for (const OrderedZero& z : zeros) {
    bool dup = false;
    for (const OrderedZero& r : ordered_reps)
      if (ordered_distance(z, r) < kCollapseRadius) {
        dup = true;
        break;
      }
    if (!dup) ordered_reps.push_back(z);
  }

  // Every ordered zero certifies two critical points of F(x, xi1, xi2) =
  // <x, f(xi1)-f(xi2)> on the sphere-product space: the sections x = +-d/|d|.
  // Both the spherical gradient (I - xx^T)d and the parametric gradients J^T x
  // are verified explicitly.
  OracleResult result;
  for (const OrderedZero& z : ordered_reps) {
    Vec d = z.p1 - z.p2;
    double len = d.norm();
    Mat j1 = imm.jet_at(z.chart1, z.xi1).jacobian;
    Mat j2 = imm.jet_at(z.chart2, z.xi2).jacobian;
    for (double sign : {1.0, -1.0}) {
      Vec x = sign * d / len;
      Vec sphere_grad = d - x.dot(d) * x;
      bool ok = sphere_grad.norm() < 1e-8 * len &&
                (j1.transpose() * x).cwiseAbs().maxCoeff() < 1e-6 &&
                (j2.transpose() * x).cwiseAbs().maxCoeff() < 1e-6;
      if (ok) ++result.f_count;
    }
  }

  // Unordered merge and connectivity clustering.
  std::vector<std::pair<Vec, Vec>> unordered;
  for (const OrderedZero& z : ordered_reps) {
    std::pair<Vec, Vec> pr(z.p1, z.p2);
    if (lex_less_vec(pr.second, pr.first)) std::swap(pr.first, pr.second);
    bool dup = false;
    for (const auto& r : unordered)
      if (set_distance(pr, r) < kCollapseRadius) {
        dup = true;
        break;
      }
    if (!dup) unordered.push_back(std::move(pr));
  }

  double chain_radius = 0.05 * diam;
  std::size_t count = unordered.size();
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
        if (set_distance(unordered[cur], unordered[j]) < chain_radius) {
          label[j] = next_label;
          queue.push_back(j);
        }
      }
    }
    ++next_label;
  }
  std::vector<int> cluster_sizes(next_label, 0);
  for (std::size_t i = 0; i < count; ++i) ++cluster_sizes[label[i]];
  for (int c = 0; c < next_label; ++c)
    if (cluster_sizes[c] >= 3) result.degenerate_family = true;
  result.count = next_label;
  std::vector<bool> seen(next_label, false);
  for (std::size_t i = 0; i < count; ++i) {
    if (seen[label[i]]) continue;
    seen[label[i]] = true;
    result.representatives.push_back(unordered[i]);
    result.lengths.push_back((unordered[i].first - unordered[i].second).norm());
  }
  std::sort(result.lengths.begin(), result.lengths.end());
  return result;
}

} // namespace dn
