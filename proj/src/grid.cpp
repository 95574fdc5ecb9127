#include "mixp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "mixp/error.hpp"

namespace mixp {

Grid::Grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes, double delta)
    : dim_(dim), extent_(extent), m_(nodes), h_{0.0, 0.0}, delta_(delta) {
  if (dim != 1 && dim != 2) throw InvalidInput("grid dimension must be 1 or 2");
  if (dim == 1) {
    extent_[1] = 1.0;
    m_[1] = 1;
  }
  for (int a = 0; a < dim; ++a) {
    if (!(extent_[a] > 0.0) || !std::isfinite(extent_[a])) throw InvalidInput("grid extents must be positive");
    if (m_[a] < 1) throw InvalidInput("grid needs at least one interior node per axis");
    h_[a] = extent_[a] / (m_[a] + 1);
  }
  if (!(delta >= 0.0)) throw InvalidInput("boundary strip width must be nonnegative");
  size_ = static_cast<std::size_t>(m_[0]) * (dim == 2 ? m_[1] : 1);
  volume_ = dim == 1 ? h_[0] : h_[0] * h_[1];
}

double Grid::max_h() const { return dim_ == 1 ? h_[0] : std::max(h_[0], h_[1]); }
double Grid::min_extent() const { return dim_ == 1 ? extent_[0] : std::min(extent_[0], extent_[1]); }
double Grid::diameter() const { return dim_ == 1 ? extent_[0] : std::hypot(extent_[0], extent_[1]); }
double Grid::domain_volume() const { return dim_ == 1 ? extent_[0] : extent_[0] * extent_[1]; }

std::array<int, 2> Grid::ij(std::size_t k) const {
  return {static_cast<int>(k % m_[0]), static_cast<int>(k / m_[0])};
}

Point Grid::point(std::size_t k) const {
  const auto [i, j] = ij(k);
  return {(i + 1) * h_[0], dim_ == 2 ? (j + 1) * h_[1] : 0.0};
}

double Grid::dist_to_boundary(const Point& x) const {
  double d = std::min(x[0], extent_[0] - x[0]);
  if (dim_ == 2) d = std::min({d, x[1], extent_[1] - x[1]});
  return d;
}

double Grid::dist_to_boundary(std::size_t k) const { return dist_to_boundary(point(k)); }

std::vector<bool> Grid::strip_mask() const {
  std::vector<bool> mask(size_);
  for (std::size_t k = 0; k < size_; ++k) mask[k] = in_strip(k);
  return mask;
}

std::size_t Grid::cells() const {
  return dim_ == 1 ? static_cast<std::size_t>(m_[0] + 1)
                   : static_cast<std::size_t>(m_[0] + 1) * static_cast<std::size_t>(m_[1] + 1);
}

Point Grid::cell_center(std::size_t c) const {
  const std::size_t cx = c % static_cast<std::size_t>(m_[0] + 1);
  const std::size_t cy = c / static_cast<std::size_t>(m_[0] + 1);
  return {(cx + 0.5) * h_[0], dim_ == 2 ? (cy + 0.5) * h_[1] : 0.0};
}

GridPtr make_grid(int dim, std::array<double, 2> extent, std::array<int, 2> nodes, double delta) {
  for (int a = 0; a < dim; ++a)
    if (nodes[a] < 3) throw InvalidInput("make_grid: need M >= 3 interior nodes per axis");
  auto g = std::make_shared<const Grid>(dim, extent, nodes, delta);
  if (!(delta < 0.5 * g->min_extent())) throw InvalidInput("make_grid: delta must be below half the minimal extent");
  return g;
}

GridFunction::GridFunction(GridPtr grid, double fill) : grid_(std::move(grid)) {
  if (!grid_) throw InvalidInput("grid function needs a grid");
  values_.assign(grid_->size(), fill);
}

GridFunction::GridFunction(GridPtr grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (!grid_) throw InvalidInput("grid function needs a grid");
  if (values_.size() != grid_->size()) throw InvalidInput("grid function: value count does not match grid");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidInput("grid function: non-finite value");
}

void GridFunction::require_same_grid(const GridFunction& o) const {
  if (grid_ != o.grid_ && (!grid_ || !o.grid_ || grid_->size() != o.grid_->size()))
    throw InvalidInput("grid functions live on different grids");
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_same_grid(o);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
  return *this;
}

GridFunction& GridFunction::operator*=(double a) {
  for (double& v : values_) v *= a;
  return *this;
}

GridFunction GridFunction::max(const GridFunction& o) const {
  require_same_grid(o);
  GridFunction out = *this;
  for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = std::max(values_[k], o.values_[k]);
  return out;
}

GridFunction GridFunction::min(const GridFunction& o) const {
  require_same_grid(o);
  GridFunction out = *this;
  for (std::size_t k = 0; k < values_.size(); ++k) out.values_[k] = std::min(values_[k], o.values_[k]);
  return out;
}

GridFunction GridFunction::pos() const {
  return map([](double v) { return std::max(v, 0.0); });
}
GridFunction GridFunction::neg() const {
  return map([](double v) { return std::max(-v, 0.0); });
}
GridFunction GridFunction::neg_part() const {
  return map([](double v) { return std::min(v, 0.0); });
}
GridFunction GridFunction::pow(double e) const {
  return map([e](double v) { return std::pow(std::abs(v), e); });
}

double GridFunction::sup() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::inf() const { return *std::min_element(values_.begin(), values_.end()); }
double GridFunction::sup_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double GridFunction::lp_norm(double q) const {
  double s = 0.0;
  for (double v : values_) s += std::pow(std::abs(v), q);
  return std::pow(s * grid_->node_volume(), 1.0 / q);
}

CellGradients discrete_gradient(const GridFunction& u, double boundary_value) {
  const Grid& g = u.grid();
  CellGradients out;
  out.samples_per_cell = g.samples_per_cell();
  out.sample_weight = g.cell_volume() / out.samples_per_cell;
  out.g.resize(g.cells() * out.samples_per_cell);
  const int mx = g.nodes(0);
  if (g.dim() == 1) {
    auto at = [&](int i) { return (i < 0 || i >= mx) ? boundary_value : u[static_cast<std::size_t>(i)]; };
    for (int c = 0; c <= mx; ++c) out.g[c] = {(at(c) - at(c - 1)) / g.h(0), 0.0};
    return out;
  }
  const int my = g.nodes(1);
  auto at = [&](int i, int j) {
    return (i < 0 || i >= mx || j < 0 || j >= my) ? boundary_value : u[g.index(i, j)];
  };
  const double hx = g.h(0), hy = g.h(1);
  std::size_t s = 0;
  // Cell (cx, cy) spans extended nodes cx..cx+1, cy..cy+1, i.e. interior
  // indices cx-1..cx. Corner order: (0,0), (1,0), (0,1), (1,1).
  for (int cy = 0; cy <= my; ++cy) {
    for (int cx = 0; cx <= mx; ++cx) {
      const int i0 = cx - 1, j0 = cy - 1;
      const double u00 = at(i0, j0), u10 = at(i0 + 1, j0), u01 = at(i0, j0 + 1), u11 = at(i0 + 1, j0 + 1);
      const double dx0 = (u10 - u00) / hx, dx1 = (u11 - u01) / hx;
      const double dy0 = (u01 - u00) / hy, dy1 = (u11 - u10) / hy;
      out.g[s++] = {dx0, dy0};
      out.g[s++] = {dx0, dy1};
      out.g[s++] = {dx1, dy0};
      out.g[s++] = {dx1, dy1};
    }
  }
  return out;
}

void write_csv(std::ostream& os, const GridFunction& u, const std::vector<std::string>& comments) {
  const Grid& g = u.grid();
  for (const auto& c : comments) os << "# " << c << '\n';
  os << (g.dim() == 1 ? "x,u\n" : "x,y,u\n");
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Point x = g.point(k);
    line.str("");
    line << x[0] << ',';
    if (g.dim() == 2) line << x[1] << ',';
    line << u[k] << '\n';
    os << line.str();
  }
  if (!os) throw IoError("failed writing CSV field");
}

GridFunction read_csv(std::istream& is, GridPtr grid) {
  GridFunction u(grid);
  std::vector<bool> seen(grid->size(), false);
  std::string line;
  bool header = false;
  const int cols = grid->dim() + 1;
  const int mx = grid->nodes(0);
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (static_cast<int>(vals.size()) != cols) throw IoError("CSV row has wrong column count: " + line);
    const int i = static_cast<int>(std::lround(vals[0] / grid->h(0))) - 1;
    const int j = grid->dim() == 2 ? static_cast<int>(std::lround(vals[1] / grid->h(1))) - 1 : 0;
    if (i < 0 || i >= mx || j < 0 || j >= grid->nodes(1)) throw IoError("CSV coordinate off grid: " + line);
    const std::size_t k = grid->index(i, j);
    const Point p = grid->point(k);
    if (std::abs(p[0] - vals[0]) > 1e-9 * grid->extent(0) ||
        (grid->dim() == 2 && std::abs(p[1] - vals[1]) > 1e-9 * grid->extent(1)))
      throw IoError("CSV coordinate does not match a node: " + line);
    u[k] = vals.back();
    seen[k] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) throw IoError("CSV field is missing nodes");
  return u;
}

}  // namespace mixp
