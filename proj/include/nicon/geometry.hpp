#pragma once

// Uniform grids, domain-to-image rasterization, boundary classification and
// structured FE mesh generation on the pixel lattice.
//
// Internal indexing is 0-based: i is the column (x), j is the row (y) and the
// pixel index is p = j * n + i. Row 0 sits at y = y_min.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace nicon {

using Field = std::vector<double>;

enum class DomainShape { unit_square, square_with_hole };
enum class BcLayout { left_neumann, all_dirichlet };
enum class ElementKind { triangular, rectangular };

std::string to_string(DomainShape shape);
std::string to_string(BcLayout layout);
std::string to_string(ElementKind kind);
DomainShape parse_domain_shape(const std::string& s);
BcLayout parse_bc_layout(const std::string& s);
ElementKind parse_element_kind(const std::string& s);

struct GridSpec {
  int n = 0;
  double h = 0.0;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 1.0;
  double y_max = 1.0;

  // n x n nodes on [0,1]^2, h = 1/(n-1).
  static GridSpec unit(int n);

  double x(int i) const { return x_min + (x_max - x_min) * i / (n - 1); }
  double y(int j) const { return y_min + (y_max - y_min) * j / (n - 1); }
  std::size_t size() const { return static_cast<std::size_t>(n) * n; }
  int index(int i, int j) const { return j * n + i; }
  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < n && j < n; }
};

// Boolean n x n image stored row-major.
class Mask {
 public:
  Mask() = default;
  explicit Mask(int n, bool value = false)
      : n_(n), bits_(static_cast<std::size_t>(n) * n, value ? 1 : 0) {}

  int n() const { return n_; }
  bool operator()(int i, int j) const { return bits_[static_cast<std::size_t>(j) * n_ + i] != 0; }
  bool at(std::size_t p) const { return bits_[p] != 0; }
  void set(int i, int j, bool v) { bits_[static_cast<std::size_t>(j) * n_ + i] = v ? 1 : 0; }
  void set(std::size_t p, bool v) { bits_[p] = v ? 1 : 0; }
  std::size_t count() const;
  std::size_t size() const { return bits_.size(); }
  // Pixel indices of the true entries, ascending.
  std::vector<int> indices() const;
  bool operator==(const Mask& other) const = default;

 private:
  int n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct DomainMask {
  GridSpec grid;
  DomainShape shape = DomainShape::unit_square;
  Mask inside;
};

// A Neumann node together with the neighbour used by its one-sided
// difference and the outward normal direction (dx, dy) of the edge it sits on.
struct NeumannLink {
  int node = 0;
  int inner = 0;
  int normal_x = 0;
  int normal_y = 0;
};

struct BoundaryMasks {
  BcLayout layout = BcLayout::left_neumann;
  Mask interior;   // M_f
  Mask dirichlet;  // M_D
  Mask neumann;    // M_N
  std::vector<NeumannLink> neumann_links;  // one per M_N pixel, ascending node
};

struct Mesh {
  GridSpec grid;
  ElementKind kind = ElementKind::rectangular;
  // Physical coordinates of every pixel; the global node index is the pixel index.
  std::vector<std::array<double, 2>> nodes;
  // 1 if the node belongs to at least one element.
  std::vector<std::uint8_t> node_active;
  // Counterclockwise vertex lists; triangles leave the 4th slot at -1.
  std::vector<std::array<int, 4>> elements;
  // 1 per grid cell (row-major over (n-1)^2 cells) whose four corners are inside.
  std::vector<std::uint8_t> cell_active;
  std::vector<int> dirichlet_nodes;
  std::vector<std::array<int, 2>> neumann_edges;

  int vertices_per_element() const { return kind == ElementKind::triangular ? 3 : 4; }
};

// Rasterizes the domain onto an n x n image. Throws UsageError for n < 3 and
// DataError when the hole of square_with_hole spans fewer than two pixels.
DomainMask make_grid(int n, DomainShape shape);

// Splits the inside pixels into interior / Dirichlet / Neumann sets.
// A pixel is a boundary pixel when it lies on the image border or any of its
// eight neighbours is outside. Corners shared by Dirichlet and Neumann edges go
// to Dirichlet.
BoundaryMasks classify_masks(const DomainMask& mask, BcLayout layout);

// 1-based global node index, k = (j-1) n + i.
int node_index(int i, int j, int n);
// Inverse of node_index: returns {i, j}, both 1-based.
std::array<int, 2> node_coords(int k, int n);

Mesh build_mesh(const DomainMask& mask, const BoundaryMasks& masks, ElementKind kind);

// Signed area of element e (positive for counterclockwise ordering).
double element_area(const Mesh& mesh, std::size_t e);

// Plain-text node and element lists for debugging.
void write_mesh_text(std::ostream& os, const Mesh& mesh);

// Applies f(x, y) at every pixel, writing 0 outside `where`.
template <class F>
Field sample_field(const GridSpec& grid, const Mask& where, F&& f) {
  Field out(grid.size(), 0.0);
  for (int j = 0; j < grid.n; ++j)
    for (int i = 0; i < grid.n; ++i)
      if (where(i, j)) out[grid.index(i, j)] = f(grid.x(i), grid.y(j));
  return out;
}

}  // namespace nicon
