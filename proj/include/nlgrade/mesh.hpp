#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <vector>

#include "nlgrade/error.hpp"

namespace nlgrade {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Uniform grid of square bilinear elements. Elements are numbered row-major
/// (j outer, i inner), nodes likewise on the (nx+1) x (ny+1) lattice, and
/// node n carries DOFs 2n (x) and 2n+1 (y).
struct StructuredMesh {
  int nx = 1;
  int ny = 1;
  double h = 1.0;
  Point2 origin{};
  double thickness = 1.0;

  [[nodiscard]] int num_elements() const { return nx * ny; }
  [[nodiscard]] int num_nodes() const { return (nx + 1) * (ny + 1); }
  [[nodiscard]] int num_dofs() const { return 2 * num_nodes(); }
  [[nodiscard]] double width() const { return nx * h; }
  [[nodiscard]] double height() const { return ny * h; }
  [[nodiscard]] double element_volume() const { return h * h * thickness; }

  [[nodiscard]] int element(int i, int j) const { return j * nx + i; }
  [[nodiscard]] int node(int i, int j) const { return j * (nx + 1) + i; }

  [[nodiscard]] Point2 centroid(int e) const {
    const int i = e % nx;
    const int j = e / nx;
    return {origin.x + (i + 0.5) * h, origin.y + (j + 0.5) * h};
  }

  [[nodiscard]] Point2 node_position(int n) const {
    const int i = n % (nx + 1);
    const int j = n / (nx + 1);
    return {origin.x + i * h, origin.y + j * h};
  }

  /// Counter-clockwise corner nodes: (i,j), (i+1,j), (i+1,j+1), (i,j+1).
  [[nodiscard]] std::array<int, 4> element_nodes(int e) const {
    const int i = e % nx;
    const int j = e / nx;
    return {node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
  }

  [[nodiscard]] std::array<int, 8> element_dofs(int e) const {
    const auto n = element_nodes(e);
    return {2 * n[0], 2 * n[0] + 1, 2 * n[1], 2 * n[1] + 1,
            2 * n[2], 2 * n[2] + 1, 2 * n[3], 2 * n[3] + 1};
  }
};

inline StructuredMesh build_mesh(double width_mm, double height_mm, int nx, int ny,
                                 Point2 origin = {}) {
  require(nx >= 1 && ny >= 1, "mesh: element counts must be >= 1");
  require(width_mm > 0.0 && height_mm > 0.0, "mesh: domain extents must be positive");
  const double hx = width_mm / nx;
  const double hy = height_mm / ny;
  if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "mesh: elements must be square, got edge lengths hx=" << hx << " and hy=" << hy;
    throw ValidationError(msg.str());
  }
  StructuredMesh m;
  m.nx = nx;
  m.ny = ny;
  m.h = hx;
  m.origin = origin;
  return m;
}

inline std::vector<Point2> element_centroids(const StructuredMesh& mesh) {
  std::vector<Point2> out(static_cast<std::size_t>(mesh.num_elements()));
  for (int e = 0; e < mesh.num_elements(); ++e) out[e] = mesh.centroid(e);
  return out;
}

enum class ElementKind : std::uint8_t { design, solid_nondesign };

/// Per-element design/non-design flags plus the compact design-variable map.
class ElementMask {
 public:
  ElementMask() = default;
  explicit ElementMask(int num_elements)
      : kinds_(static_cast<std::size_t>(num_elements), ElementKind::design) {
    reindex();
  }

  void set_solid(int e) {
    kinds_.at(static_cast<std::size_t>(e)) = ElementKind::solid_nondesign;
    reindex();
  }

  /// Marks every element whose centroid lies inside [x0,x1]x[y0,y1].
  void set_solid_box(const StructuredMesh& mesh, double x0, double x1, double y0, double y1) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto c = mesh.centroid(e);
      if (c.x > x0 && c.x < x1 && c.y > y0 && c.y < y1)
        kinds_[static_cast<std::size_t>(e)] = ElementKind::solid_nondesign;
    }
    reindex();
  }

  [[nodiscard]] int size() const { return static_cast<int>(kinds_.size()); }
  [[nodiscard]] bool is_design(int e) const {
    return kinds_[static_cast<std::size_t>(e)] == ElementKind::design;
  }
  [[nodiscard]] ElementKind kind(int e) const { return kinds_[static_cast<std::size_t>(e)]; }
  [[nodiscard]] int num_design() const { return static_cast<int>(design_elements_.size()); }
  [[nodiscard]] int num_nondesign() const { return size() - num_design(); }

  /// Element index of design variable k.
  [[nodiscard]] const std::vector<int>& design_elements() const { return design_elements_; }

  /// Expands design variables into a full element field; non-design entries get `fill`.
  [[nodiscard]] std::vector<double> expand(const std::vector<double>& design_values,
                                           double fill = 1.0) const {
    require(static_cast<int>(design_values.size()) == num_design(),
            "mask: design vector length mismatch");
    std::vector<double> full(kinds_.size(), fill);
    for (std::size_t k = 0; k < design_elements_.size(); ++k)
      full[static_cast<std::size_t>(design_elements_[k])] = design_values[k];
    return full;
  }

  [[nodiscard]] std::vector<double> restrict_to_design(const std::vector<double>& full) const {
    require(full.size() == kinds_.size(), "mask: element field length mismatch");
    std::vector<double> out(design_elements_.size());
    for (std::size_t k = 0; k < design_elements_.size(); ++k)
      out[k] = full[static_cast<std::size_t>(design_elements_[k])];
    return out;
  }

 private:
  void reindex() {
    design_elements_.clear();
    for (std::size_t e = 0; e < kinds_.size(); ++e)
      if (kinds_[e] == ElementKind::design) design_elements_.push_back(static_cast<int>(e));
  }

  std::vector<ElementKind> kinds_;
  std::vector<int> design_elements_;
};

}  // namespace nlgrade
