#include "dn/cell_complex.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "dn/error.hpp"

namespace dn {

int CellComplex::total_cells() const {
  int n = 0;
  for (int c : cell_counts) n += c;
  return n;
}

CellComplex point_complex() {
  CellComplex c;
  c.top_dim = 0;
  c.cell_counts = {1};
  c.labels = {{"pt"}};
  c.name = "point";
  return c;
}

namespace {

// A 0-dimensional complex has no boundary matrices yet still carries integer structure.
bool carries_integers(const CellComplex& c) { return c.top_dim == 0 || c.has_integer_boundaries(); }

} // namespace

CellComplex interval_complex() {
  CellComplex c;
  c.top_dim = 1;
  c.cell_counts = {2, 1};
  c.labels = {{"v0", "v1"}, {"e"}};
  c.boundaries_z2.emplace_back(2, 1);
  c.boundaries_z2[0].set(0, 0, true);
  c.boundaries_z2[0].set(1, 0, true);
  c.boundaries_z.emplace_back(2, 1);
  c.boundaries_z[0].at(0, 0) = -1;
  c.boundaries_z[0].at(1, 0) = 1;
  c.name = "interval";
  return c;
}

CellComplex sphere_complex(int n) {
  if (n < 0) fail(ErrorCode::InvalidArgument, "sphere: dimension must be >= 0");
  CellComplex c;
  c.name = "sphere(" + std::to_string(n) + ")";
  if (n == 0) {
    c.top_dim = 0;
    c.cell_counts = {2};
    c.labels = {{"v0", "v1"}};
    return c;
  }
  c.top_dim = n;
  c.cell_counts.assign(n + 1, 0);
  c.cell_counts[0] = 1;
  c.cell_counts[n] = 1;
  c.labels.resize(n + 1);
  c.labels[0] = {"v"};
  c.labels[n] = {"c" + std::to_string(n)};
  for (int d = 1; d <= n; ++d) {
    c.boundaries_z2.emplace_back(c.cell_counts[d - 1], c.cell_counts[d]);
    c.boundaries_z.emplace_back(c.cell_counts[d - 1], c.cell_counts[d]);
  }
  return c;
}

CellComplex torus_complex(int n) {
  if (n < 0) fail(ErrorCode::InvalidArgument, "torus: dimension must be >= 0");
  CellComplex c = point_complex();
  for (int i = 0; i < n; ++i) c = product_complex(c, sphere_complex(1));
  c.name = "torus(" + std::to_string(n) + ")";
  return c;
}

CellComplex surface_complex(int g) {
  if (g < 0) fail(ErrorCode::InvalidArgument, "surface: genus must be >= 0");
  CellComplex c;
  c.name = "surface(" + std::to_string(g) + ")";
  c.top_dim = 2;
  c.cell_counts = {1, 2 * g, 1};
  c.labels.resize(3);
  c.labels[0] = {"v"};
  for (int i = 1; i <= g; ++i) {
    c.labels[1].push_back("a" + std::to_string(i));
    c.labels[1].push_back("b" + std::to_string(i));
  }
  c.labels[2] = {"f"};
  // Both endpoints of every 1-cell are the vertex, and the 2-cell attaches along a product of
  // commutators, so every boundary vanishes already over the integers.
  c.boundaries_z2.emplace_back(1, 2 * g);
  c.boundaries_z2.emplace_back(2 * g, 1);
  c.boundaries_z.emplace_back(1, 2 * g);
  c.boundaries_z.emplace_back(2 * g, 1);
  return c;
}

CellComplex projective_complex(int n) {
  if (n < 0) fail(ErrorCode::InvalidArgument, "projective: dimension must be >= 0");
  CellComplex c;
  c.name = "projective(" + std::to_string(n) + ")";
  c.top_dim = n;
  c.cell_counts.assign(n + 1, 1);
  c.labels.resize(n + 1);
  for (int d = 0; d <= n; ++d) c.labels[d] = {"e" + std::to_string(d)};
  for (int d = 1; d <= n; ++d) {
    c.boundaries_z2.emplace_back(1, 1);
    c.boundaries_z.emplace_back(1, 1);
    // Attaching the d-cell over the double cover: degree 1 + (-1)^d.
    c.boundaries_z[d - 1].at(0, 0) = (d % 2 == 0) ? 2 : 0;
  }
  return c;
}

void validate_complex(const CellComplex& c) {
  if (c.top_dim < 0) fail(ErrorCode::InvalidComplex, "negative top dimension");
  if (int(c.cell_counts.size()) != c.top_dim + 1)
    fail(ErrorCode::InvalidComplex, "cell_counts size does not match top_dim");
  for (int n : c.cell_counts)
    if (n < 0) fail(ErrorCode::InvalidComplex, "negative cell count");
  if (int(c.boundaries_z2.size()) != c.top_dim)
    fail(ErrorCode::InvalidComplex, "boundaries_z2 size does not match top_dim");
  for (int d = 1; d <= c.top_dim; ++d) {
    const Gf2Matrix& b = c.boundary_z2(d);
    if (b.rows() != c.cell_counts[d - 1] || b.cols() != c.cell_counts[d])
      fail(ErrorCode::InvalidComplex, "boundary matrix shape mismatch at dimension " + std::to_string(d));
  }
  if (c.has_integer_boundaries()) {
    if (int(c.boundaries_z.size()) != c.top_dim)
      fail(ErrorCode::InvalidComplex, "boundaries_z size does not match top_dim");
    for (int d = 1; d <= c.top_dim; ++d) {
      const IntMatrix& b = c.boundary_z(d);
      if (b.rows != c.cell_counts[d - 1] || b.cols != c.cell_counts[d])
        fail(ErrorCode::InvalidComplex, "integer boundary shape mismatch at dimension " + std::to_string(d));
      // The integer matrix must reduce to the GF(2) one.
      for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j)
          if (((b.at(i, j) % 2 + 2) % 2 != 0) != c.boundary_z2(d).get(i, j))
            fail(ErrorCode::InvalidComplex, "integer boundary does not reduce to the GF(2) boundary");
    }
  }
  if (!c.labels.empty()) {
    if (int(c.labels.size()) != c.top_dim + 1) fail(ErrorCode::InvalidComplex, "labels size mismatch");
    for (int d = 0; d <= c.top_dim; ++d)
      if (int(c.labels[d].size()) != c.cell_counts[d])
        fail(ErrorCode::InvalidComplex, "label count mismatch at dimension " + std::to_string(d));
  }
}

bool verify_boundary_squared(const CellComplex& c) {
  validate_complex(c);
  for (int d = 2; d <= c.top_dim; ++d) {
    if (!c.boundary_z2(d - 1).multiply(c.boundary_z2(d)).is_zero()) return false;
  }
  if (c.has_integer_boundaries()) {
    for (int d = 2; d <= c.top_dim; ++d) {
      const IntMatrix& a = c.boundary_z(d - 1);
      const IntMatrix& b = c.boundary_z(d);
      for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < b.cols; ++j) {
          int64_t acc = 0;
          for (int k = 0; k < a.cols; ++k) acc = checked_add(acc, checked_mul(a.at(i, k), b.at(k, j)));
          if (acc != 0) return false;
        }
      }
    }
  }
  return true;
}

std::vector<int> betti_z2(const CellComplex& c) {
  validate_complex(c);
  std::vector<int> ranks(c.top_dim + 2, 0); // ranks[d] = rank of the d-boundary
  for (int d = 1; d <= c.top_dim; ++d) ranks[d] = c.boundary_z2(d).rank();
  std::vector<int> b(c.top_dim + 1);
  for (int d = 0; d <= c.top_dim; ++d) b[d] = c.cell_counts[d] - ranks[d] - ranks[d + 1];
  return b;
}

int betti_z2_total(const CellComplex& c) {
  int total = 0;
  for (int b : betti_z2(c)) total += b;
  return total;
}

std::vector<int> betti_rational(const CellComplex& c) {
  validate_complex(c);
  if (c.top_dim > 0 && !c.has_integer_boundaries())
    fail(ErrorCode::Unsupported, "rational Betti numbers need integer boundaries");
  std::vector<int> ranks(c.top_dim + 2, 0);
  for (int d = 1; d <= c.top_dim; ++d) ranks[d] = rational_rank(c.boundary_z(d));
  std::vector<int> b(c.top_dim + 1);
  for (int d = 0; d <= c.top_dim; ++d) b[d] = c.cell_counts[d] - ranks[d] - ranks[d + 1];
  return b;
}

std::vector<int> torsion_generators(const CellComplex& c) {
  validate_complex(c);
  if (c.top_dim > 0 && !c.has_integer_boundaries())
    fail(ErrorCode::Unsupported, "torsion needs integer boundaries");
  std::vector<int> q(c.top_dim + 1, 0);
  for (int d = 0; d < c.top_dim; ++d) {
    SmithResult s = smith_normal_form(c.boundary_z(d + 1));
    int count = 0;
    for (int64_t f : s.invariant_factors)
      if (f > 1) ++count;
    q[d] = count;
  }
  return q;
}

CellComplex product_complex(const CellComplex& a, const CellComplex& b) {
  validate_complex(a);
  validate_complex(b);
  CellComplex out;
  out.top_dim = a.top_dim + b.top_dim;
  out.cell_counts.assign(out.top_dim + 1, 0);

  // Cells of dimension d are pairs (p-cell of a, (d-p)-cell of b), blocks ordered by p.
  auto block_offset = [&](int d, int p) {
    int off = 0;
    for (int pp = 0; pp < p; ++pp) {
      int qq = d - pp;
      if (pp <= a.top_dim && qq >= 0 && qq <= b.top_dim) off += a.cell_counts[pp] * b.cell_counts[qq];
    }
    return off;
  };
  auto index_of = [&](int d, int p, int i, int j) {
    return block_offset(d, p) + i * b.cell_counts[d - p] + j;
  };

  for (int d = 0; d <= out.top_dim; ++d) {
    int n = 0;
    for (int p = std::max(0, d - b.top_dim); p <= std::min(d, a.top_dim); ++p)
      n += a.cell_counts[p] * b.cell_counts[d - p];
    out.cell_counts[d] = n;
  }

  bool with_labels = !a.labels.empty() && !b.labels.empty();
  if (with_labels) {
    out.labels.assign(out.top_dim + 1, {});
    for (int d = 0; d <= out.top_dim; ++d) {
      out.labels[d].resize(out.cell_counts[d]);
      for (int p = std::max(0, d - b.top_dim); p <= std::min(d, a.top_dim); ++p) {
        int q = d - p;
        for (int i = 0; i < a.cell_counts[p]; ++i)
          for (int j = 0; j < b.cell_counts[q]; ++j)
            out.labels[d][index_of(d, p, i, j)] = a.labels[p][i] + "×" + b.labels[q][j];
      }
    }
  }

  bool with_z = carries_integers(a) && carries_integers(b);

  for (int d = 1; d <= out.top_dim; ++d) {
    Gf2Matrix bz2(out.cell_counts[d - 1], out.cell_counts[d]);
    IntMatrix bz;
    if (with_z) bz = IntMatrix(out.cell_counts[d - 1], out.cell_counts[d]);
    for (int p = std::max(0, d - b.top_dim); p <= std::min(d, a.top_dim); ++p) {
      int q = d - p;
      for (int i = 0; i < a.cell_counts[p]; ++i) {
        for (int j = 0; j < b.cell_counts[q]; ++j) {
          int col = index_of(d, p, i, j);
          if (p >= 1) {
            for (int i2 = 0; i2 < a.cell_counts[p - 1]; ++i2) {
              int row = index_of(d - 1, p - 1, i2, j);
              if (a.boundary_z2(p).get(i2, i)) bz2.toggle(row, col);
              if (with_z) bz.at(row, col) = checked_add(bz.at(row, col), a.boundary_z(p).at(i2, i));
            }
          }
          if (q >= 1) {
            int sign = (p % 2 == 0) ? 1 : -1;
            for (int j2 = 0; j2 < b.cell_counts[q - 1]; ++j2) {
              int row = index_of(d - 1, p, i, j2);
              if (b.boundary_z2(q).get(j2, j)) bz2.toggle(row, col);
              if (with_z)
                bz.at(row, col) = checked_add(bz.at(row, col), checked_mul(sign, b.boundary_z(q).at(j2, j)));
            }
          }
        }
      }
    }
    out.boundaries_z2.push_back(std::move(bz2));
    if (with_z) out.boundaries_z.push_back(std::move(bz));
  }
  if (!a.name.empty() && !b.name.empty()) out.name = "product(" + a.name + "," + b.name + ")";
  return out;
}

namespace {

struct QuotientIndex {
  // Global cell ids of m: (dim, index within dim) flattened in dimension order.
  std::vector<int> cell_dim;   // dim of each global cell
  std::vector<int> cell_local; // index within its dimension
  std::vector<std::vector<int>> global_of; // [d][local] -> global

  explicit QuotientIndex(const CellComplex& m) {
    global_of.resize(m.top_dim + 1);
    for (int d = 0; d <= m.top_dim; ++d) {
      for (int i = 0; i < m.cell_counts[d]; ++i) {
        global_of[d].push_back(int(cell_dim.size()));
        cell_dim.push_back(d);
        cell_local.push_back(i);
      }
    }
  }
};

} // namespace

CellComplex involution_quotient_complex(const CellComplex& m, int N) {
  validate_complex(m);
  if (N < 0) fail(ErrorCode::InvalidArgument, "sphere dimension must be >= 0");
  QuotientIndex qi(m);
  int C = int(qi.cell_dim.size());

  CellComplex out;
  out.top_dim = N + 2 * m.top_dim;
  out.cell_counts.assign(out.top_dim + 1, 0);

  // Flat id (k, gi, gj) -> per-dimension position, enumerated k, gi, gj ascending.
  std::vector<int> pos(std::size_t(N + 1) * C * C, -1);
  auto flat = [&](int k, int gi, int gj) { return (std::size_t(k) * C + gi) * C + gj; };
  std::vector<std::vector<std::string>> labels(out.top_dim + 1);
  bool with_labels = !m.labels.empty();
  for (int k = 0; k <= N; ++k) {
    for (int gi = 0; gi < C; ++gi) {
      for (int gj = 0; gj < C; ++gj) {
        int d = k + qi.cell_dim[gi] + qi.cell_dim[gj];
        pos[flat(k, gi, gj)] = out.cell_counts[d]++;
        if (with_labels)
          labels[d].push_back("s" + std::to_string(k) + "×" +
                              m.labels[qi.cell_dim[gi]][qi.cell_local[gi]] + "×" +
                              m.labels[qi.cell_dim[gj]][qi.cell_local[gj]]);
      }
    }
  }
  if (with_labels) out.labels = std::move(labels);

  for (int d = 1; d <= out.top_dim; ++d) out.boundaries_z2.emplace_back(out.cell_counts[d - 1], out.cell_counts[d]);

  for (int k = 0; k <= N; ++k) {
    for (int gi = 0; gi < C; ++gi) {
      int di = qi.cell_dim[gi];
      for (int gj = 0; gj < C; ++gj) {
        int dj = qi.cell_dim[gj];
        int d = k + di + dj;
        if (d == 0) continue;
        Gf2Matrix& bd = out.boundaries_z2[d - 1];
        int col = pos[flat(k, gi, gj)];
        if (di >= 1) {
          for (int i2 = 0; i2 < m.cell_counts[di - 1]; ++i2)
            if (m.boundary_z2(di).get(i2, qi.cell_local[gi]))
              bd.toggle(pos[flat(k, qi.global_of[di - 1][i2], gj)], col);
        }
        if (dj >= 1) {
          for (int j2 = 0; j2 < m.cell_counts[dj - 1]; ++j2)
            if (m.boundary_z2(dj).get(j2, qi.cell_local[gj]))
              bd.toggle(pos[flat(k, gi, qi.global_of[dj - 1][j2])], col);
        }
        if (k >= 1) {
          bd.toggle(pos[flat(k - 1, gi, gj)], col);
          bd.toggle(pos[flat(k - 1, gj, gi)], col);
        }
      }
    }
  }
  if (!m.name.empty()) out.name = "quotient(" + m.name + "," + std::to_string(N) + ")";
  return out;
}

std::vector<int> sphere_graded_quotient_homology(const CellComplex& m, int N) {
  validate_complex(m);
  if (N < 1) fail(ErrorCode::InvalidArgument, "sphere dimension must be >= 1");
  for (int d = 1; d <= m.top_dim; ++d)
    if (!m.boundary_z2(d).is_zero())
      fail(ErrorCode::Unsupported, "sphere-graded homology needs a complex with zero boundary");
  int B = m.total_cells();
  // With zero input boundary the differential sends grade k to k-1 by e_ij -> e_ij + e_ji.
  Gf2Matrix T(B * B, B * B);
  for (int i = 0; i < B; ++i) {
    for (int j = 0; j < B; ++j) {
      T.toggle(i * B + j, i * B + j);
      T.toggle(j * B + i, i * B + j);
    }
  }
  int r = T.rank();
  std::vector<int> h(N + 1);
  h[0] = B * B - r;
  h[N] = B * B - r;
  for (int k = 1; k < N; ++k) h[k] = B * B - 2 * r;
  return h;
}

namespace {

void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

int parse_int_arg(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  std::size_t start = i;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (start == i) fail(ErrorCode::InvalidArgument, "expected integer in complex name");
  return std::stoi(s.substr(start, i - start));
}

CellComplex parse_complex_rec(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  std::size_t start = i;
  while (i < s.size() && (std::isalpha(static_cast<unsigned char>(s[i])) || s[i] == '_')) ++i;
  std::string word = s.substr(start, i - start);
  skip_ws(s, i);
  auto expect = [&](char c) {
    if (i >= s.size() || s[i] != c)
      fail(ErrorCode::InvalidArgument, "malformed complex name: expected '" + std::string(1, c) + "'");
    ++i;
  };
  if (word == "point") return point_complex();
  if (word == "interval") return interval_complex();
  if (word == "sphere" || word == "torus" || word == "surface" || word == "projective") {
    expect('(');
    int arg = parse_int_arg(s, i);
    skip_ws(s, i);
    expect(')');
    if (word == "sphere") return sphere_complex(arg);
    if (word == "torus") return torus_complex(arg);
    if (word == "surface") return surface_complex(arg);
    return projective_complex(arg);
  }
  if (word == "product") {
    expect('(');
    CellComplex a = parse_complex_rec(s, i);
    skip_ws(s, i);
    expect(',');
    CellComplex b = parse_complex_rec(s, i);
    skip_ws(s, i);
    expect(')');
    return product_complex(a, b);
  }
  fail(ErrorCode::InvalidArgument, "unknown complex name '" + word + "'");
}

} // namespace

CellComplex parse_named_complex(const std::string& text) {
  std::size_t i = 0;
  CellComplex c = parse_complex_rec(text, i);
  skip_ws(text, i);
  if (i != text.size()) fail(ErrorCode::InvalidArgument, "trailing characters in complex name");
  return c;
}

nlohmann::ordered_json complex_to_json(const CellComplex& c) {
  validate_complex(c);
  nlohmann::ordered_json j;
  if (!c.name.empty()) j["name"] = c.name;
  j["top_dim"] = c.top_dim;
  j["cell_counts"] = c.cell_counts;
  nlohmann::ordered_json mats = nlohmann::ordered_json::array();
  for (int d = 1; d <= c.top_dim; ++d) {
    const Gf2Matrix& b = c.boundary_z2(d);
    std::vector<int> flat(std::size_t(b.rows()) * b.cols());
    for (int i = 0; i < b.rows(); ++i)
      for (int k = 0; k < b.cols(); ++k) flat[std::size_t(i) * b.cols() + k] = b.get(i, k) ? 1 : 0;
    mats.push_back(flat);
  }
  j["boundaries_z2"] = mats;
  if (c.has_integer_boundaries()) {
    nlohmann::ordered_json zmats = nlohmann::ordered_json::array();
    for (int d = 1; d <= c.top_dim; ++d) zmats.push_back(c.boundary_z(d).data);
    j["boundaries_z"] = zmats;
  }
  if (!c.labels.empty()) j["labels"] = c.labels;
  return j;
}

CellComplex complex_from_json(const nlohmann::ordered_json& j) {
  CellComplex c;
  try {
    c.top_dim = j.at("top_dim").get<int>();
    c.cell_counts = j.at("cell_counts").get<std::vector<int>>();
    const nlohmann::ordered_json& mats = j.at("boundaries_z2");
    if (c.top_dim < 0 || int(c.cell_counts.size()) != c.top_dim + 1 || int(mats.size()) != c.top_dim)
      fail(ErrorCode::InvalidComplex, "inconsistent sizes in complex JSON");
    for (int d = 1; d <= c.top_dim; ++d) {
      int r = c.cell_counts[d - 1], cc = c.cell_counts[d];
      std::vector<int> flat = mats[d - 1].get<std::vector<int>>();
      if (int(flat.size()) != r * cc) fail(ErrorCode::InvalidComplex, "boundary matrix length mismatch");
      Gf2Matrix b(r, cc);
      for (int i = 0; i < r; ++i)
        for (int k = 0; k < cc; ++k) {
          int v = flat[std::size_t(i) * cc + k];
          if (v != 0 && v != 1) fail(ErrorCode::InvalidComplex, "GF(2) entries must be 0 or 1");
          b.set(i, k, v == 1);
        }
      c.boundaries_z2.push_back(std::move(b));
    }
    if (j.contains("boundaries_z")) {
      const nlohmann::ordered_json& zmats = j.at("boundaries_z");
      if (int(zmats.size()) != c.top_dim) fail(ErrorCode::InvalidComplex, "boundaries_z size mismatch");
      for (int d = 1; d <= c.top_dim; ++d) {
        IntMatrix b(c.cell_counts[d - 1], c.cell_counts[d]);
        std::vector<int64_t> flat = zmats[d - 1].get<std::vector<int64_t>>();
        if (flat.size() != b.data.size()) fail(ErrorCode::InvalidComplex, "integer boundary length mismatch");
        b.data = std::move(flat);
        c.boundaries_z.push_back(std::move(b));
      }
    }
    if (j.contains("labels")) c.labels = j.at("labels").get<std::vector<std::vector<std::string>>>();
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
  } catch (const nlohmann::ordered_json::exception& e) {
    fail(ErrorCode::InvalidComplex, std::string("malformed complex JSON: ") + e.what());
  }
  validate_complex(c);
  return c;
}

} // namespace dn
