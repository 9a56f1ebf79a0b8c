#include "nicon/geometry.hpp"

#include <cmath>
#include <ostream>

#include "nicon/error.hpp"

namespace nicon {

namespace {

constexpr double kHoleLo = 0.4;
constexpr double kHoleHi = 0.6;
constexpr double kCoordTol = 1e-12;

bool strictly_in_hole(double x, double y) {
  return x > kHoleLo + kCoordTol && x < kHoleHi - kCoordTol && y > kHoleLo + kCoordTol &&
         y < kHoleHi - kCoordTol;
}

}  // namespace

std::string to_string(DomainShape shape) {
  return shape == DomainShape::unit_square ? "unit_square" : "square_with_hole";
}

std::string to_string(BcLayout layout) {
  return layout == BcLayout::left_neumann ? "left_neumann" : "all_dirichlet";
}

std::string to_string(ElementKind kind) {
  return kind == ElementKind::triangular ? "triangular" : "rectangular";
}

DomainShape parse_domain_shape(const std::string& s) {
  if (s == "unit_square") return DomainShape::unit_square;
  if (s == "square_with_hole") return DomainShape::square_with_hole;
  throw UsageError("unknown domain shape: " + s);
}

BcLayout parse_bc_layout(const std::string& s) {
  if (s == "left_neumann") return BcLayout::left_neumann;
  if (s == "all_dirichlet") return BcLayout::all_dirichlet;
  throw UsageError("unknown boundary layout: " + s);
}

ElementKind parse_element_kind(const std::string& s) {
  if (s == "triangular") return ElementKind::triangular;
  if (s == "rectangular") return ElementKind::rectangular;
  throw UsageError("unknown element kind: " + s);
}

GridSpec GridSpec::unit(int n) {
  if (n < 3) throw UsageError("grid needs at least 3 nodes per side, got " + std::to_string(n));
  GridSpec g;
  g.n = n;
  g.h = 1.0 / (n - 1);
  return g;
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto b : bits_) c += b;
  return c;
}

std::vector<int> Mask::indices() const {
  std::vector<int> out;
  for (std::size_t p = 0; p < bits_.size(); ++p)
    if (bits_[p]) out.push_back(static_cast<int>(p));
  return out;
}

DomainMask make_grid(int n, DomainShape shape) {
  DomainMask dm;
  dm.grid = GridSpec::unit(n);
  dm.shape = shape;
  dm.inside = Mask(n, true);
  if (shape == DomainShape::square_with_hole) {
    int span = 0;
    for (int i = 0; i < n; ++i) {
      double x = dm.grid.x(i);
      if (x > kHoleLo + kCoordTol && x < kHoleHi - kCoordTol) ++span;
    }
    if (span < 2)
      throw DataError("grid with n = " + std::to_string(n) +
                      " cannot resolve the hole (fewer than 2 pixels across)");
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (strictly_in_hole(dm.grid.x(i), dm.grid.y(j))) dm.inside.set(i, j, false);
  }
  return dm;
}

BoundaryMasks classify_masks(const DomainMask& dm, BcLayout layout) {
  const int n = dm.grid.n;
  const Mask& in = dm.inside;
  BoundaryMasks bm;
  bm.layout = layout;
  bm.interior = Mask(n);
  bm.dirichlet = Mask(n);
  bm.neumann = Mask(n);

  auto inside = [&](int i, int j) { return dm.grid.contains(i, j) && in(i, j); };

  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      if (!in(i, j)) continue;
      bool boundary = false;
      for (int dj = -1; dj <= 1 && !boundary; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (!inside(i + di, j + dj)) {
            boundary = true;
            break;
          }
      if (!boundary) {
        bm.interior.set(i, j, true);
        continue;
      }
      // Left image edge minus its two corners is Neumann under left_neumann.
      bool neumann = layout == BcLayout::left_neumann && i == 0 && j > 0 && j < n - 1;
      if (neumann)
        bm.neumann.set(i, j, true);
      else
        bm.dirichlet.set(i, j, true);
    }
  }

  if (bm.dirichlet.count() == 0)
    throw DataError("boundary layout leaves an empty Dirichlet set; problem is not well posed");

  for (int p : bm.neumann.indices()) {
    int i = p % n, j = p / n;
    NeumannLink link;
    link.node = p;
    // Outward normal of the left edge is -x; the one-sided difference uses the
    // neighbour at i + 1.
    link.normal_x = -1;
    link.normal_y = 0;
    if (!inside(i + 1, j))
      throw DataError("Neumann node at (" + std::to_string(i) + "," + std::to_string(j) +
                      ") has no interior neighbour");
    link.inner = dm.grid.index(i + 1, j);
    bm.neumann_links.push_back(link);
  }
  return bm;
}

int node_index(int i, int j, int n) {
  if (n < 1 || i < 1 || j < 1 || i > n || j > n)
    throw UsageError("node index (" + std::to_string(i) + "," + std::to_string(j) +
                     ") outside 1.." + std::to_string(n));
  return (j - 1) * n + i;
}

std::array<int, 2> node_coords(int k, int n) {
  if (n < 1 || k < 1 || k > n * n)
    throw UsageError("global index " + std::to_string(k) + " outside 1.." + std::to_string(n * n));
  return {(k - 1) % n + 1, (k - 1) / n + 1};
}

Mesh build_mesh(const DomainMask& dm, const BoundaryMasks& masks, ElementKind kind) {
  const GridSpec& g = dm.grid;
  const int n = g.n;
  Mesh mesh;
  mesh.grid = g;
  mesh.kind = kind;
  mesh.nodes.resize(g.size());
  mesh.node_active.assign(g.size(), 0);
  mesh.cell_active.assign(static_cast<std::size_t>(n - 1) * (n - 1), 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mesh.nodes[g.index(i, j)] = {g.x(i), g.y(j)};

  for (int cj = 0; cj < n - 1; ++cj) {
    for (int ci = 0; ci < n - 1; ++ci) {
      int p00 = g.index(ci, cj), p10 = g.index(ci + 1, cj);
      int p11 = g.index(ci + 1, cj + 1), p01 = g.index(ci, cj + 1);
      const Mask& in = dm.inside;
      if (!(in.at(p00) && in.at(p10) && in.at(p11) && in.at(p01))) continue;
      mesh.cell_active[static_cast<std::size_t>(cj) * (n - 1) + ci] = 1;
      if (kind == ElementKind::rectangular) {
        mesh.elements.push_back({p00, p10, p11, p01});
      } else {
        mesh.elements.push_back({p00, p10, p11, -1});
        mesh.elements.push_back({p00, p11, p01, -1});
      }
      for (int p : {p00, p10, p11, p01}) mesh.node_active[p] = 1;
    }
  }
  if (mesh.elements.empty()) throw DataError("mask contains no complete grid cell");

  for (int p : masks.dirichlet.indices())
    if (mesh.node_active[p]) mesh.dirichlet_nodes.push_back(p);

  // Neumann edges: left-boundary segments touching at least one M_N node.
  if (masks.layout == BcLayout::left_neumann) {
    for (int j = 0; j < n - 1; ++j) {
      int a = g.index(0, j), b = g.index(0, j + 1);
      if (!(masks.neumann.at(a) || masks.neumann.at(b))) continue;
      if (!mesh.cell_active[static_cast<std::size_t>(j) * (n - 1)]) continue;
      mesh.neumann_edges.push_back({a, b});
    }
  }
  return mesh;
}

double element_area(const Mesh& mesh, std::size_t e) {
  const auto& el = mesh.elements[e];
  const int nv = mesh.vertices_per_element();
  double area2 = 0.0;
  for (int a = 0; a < nv; ++a) {
    const auto& p = mesh.nodes[el[a]];
    const auto& q = mesh.nodes[el[(a + 1) % nv]];
    area2 += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * area2;
}

void write_mesh_text(std::ostream& os, const Mesh& mesh) {
  os << "# nodes " << mesh.nodes.size() << "\n";
  for (std::size_t p = 0; p < mesh.nodes.size(); ++p)
    if (mesh.node_active[p]) os << p << ' ' << mesh.nodes[p][0] << ' ' << mesh.nodes[p][1] << '\n';
  os << "# elements " << mesh.elements.size() << ' ' << to_string(mesh.kind) << "\n";
  const int nv = mesh.vertices_per_element();
  for (const auto& el : mesh.elements) {
    for (int a = 0; a < nv; ++a) os << el[a] << (a + 1 < nv ? ' ' : '\n');
  }
  os << "# dirichlet " << mesh.dirichlet_nodes.size() << "\n";
  for (int p : mesh.dirichlet_nodes) os << p << '\n';
  os << "# neumann_edges " << mesh.neumann_edges.size() << "\n";
  for (const auto& e : mesh.neumann_edges) os << e[0] << ' ' << e[1] << '\n';
}

}  // namespace nicon
