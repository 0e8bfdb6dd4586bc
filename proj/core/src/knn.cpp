#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>

#include "dgd/gaussians.hpp"

namespace dgd {

namespace {

// Uniform grid in CSR form: cell_start[c]..cell_start[c+1] index into `order`.
struct PointGrid {
  std::array<double, 3> origin{};
  double cell = 1.0;
  std::array<long, 3> dims{};
  std::vector<std::size_t> cell_start;
  std::vector<std::size_t> order;

  [[nodiscard]] std::array<long, 3> cell_of(const double* p) const {
    std::array<long, 3> c{};
    for (int k = 0; k < 3; ++k) {
      c[k] = std::clamp(static_cast<long>(std::floor((p[k] - origin[k]) / cell)), 0L, dims[k] - 1);
    }
    return c;
  }
  [[nodiscard]] std::size_t flat(long x, long y, long z) const {
    return static_cast<std::size_t>((z * dims[1] + y) * dims[0] + x);
  }
};

PointGrid build_grid(std::span<const double> points) {
  const std::size_t m = points.size() / 3;
  PointGrid grid;
  std::array<double, 3> hi{};
  for (int k = 0; k < 3; ++k) {
    grid.origin[k] = std::numeric_limits<double>::max();
    hi[k] = std::numeric_limits<double>::lowest();
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (int k = 0; k < 3; ++k) {
      grid.origin[k] = std::min(grid.origin[k], points[3 * i + k]);
      hi[k] = std::max(hi[k], points[3 * i + k]);
    }
  }
  double max_extent = 0.0;
  for (int k = 0; k < 3; ++k) max_extent = std::max(max_extent, hi[k] - grid.origin[k]);
  const double cells_per_axis = std::max(1.0, std::cbrt(static_cast<double>(m) / 2.0));
  grid.cell = std::max(max_extent / cells_per_axis, 1e-9);
  std::size_t total = 1;
  for (int k = 0; k < 3; ++k) {
    grid.dims[k] = static_cast<long>(std::floor((hi[k] - grid.origin[k]) / grid.cell)) + 1;
    total *= static_cast<std::size_t>(grid.dims[k]);
  }

  std::vector<std::size_t> cell_index(m);
  grid.cell_start.assign(total + 1, 0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto c = grid.cell_of(&points[3 * i]);
    cell_index[i] = grid.flat(c[0], c[1], c[2]);
    ++grid.cell_start[cell_index[i] + 1];
  }
  for (std::size_t c = 0; c < total; ++c) grid.cell_start[c + 1] += grid.cell_start[c];
  grid.order.resize(m);
  std::vector<std::size_t> cursor(grid.cell_start.begin(), grid.cell_start.end() - 1);
  for (std::size_t i = 0; i < m; ++i) grid.order[cursor[cell_index[i]]++] = i;
  return grid;
}

}  // namespace

std::vector<double> mean_knn_distance(std::span<const double> points, std::size_t k) {
  const std::size_t m = points.size() / 3;
  std::vector<double> result(m, 0.0);
  if (m < 2 || k == 0) return result;
  const std::size_t want = std::min(k, m - 1);
  const PointGrid grid = build_grid(points);
  const long max_ring = std::max({grid.dims[0], grid.dims[1], grid.dims[2]});

  for (std::size_t i = 0; i < m; ++i) {
    const double* p = &points[3 * i];
    const auto home = grid.cell_of(p);
    std::priority_queue<double> best;  // max-heap of squared distances, size <= want
    for (long ring = 0; ring <= max_ring; ++ring) {
      for (long z = home[2] - ring; z <= home[2] + ring; ++z) {
        if (z < 0 || z >= grid.dims[2]) continue;
        for (long y = home[1] - ring; y <= home[1] + ring; ++y) {
          if (y < 0 || y >= grid.dims[1]) continue;
          for (long x = home[0] - ring; x <= home[0] + ring; ++x) {
            if (x < 0 || x >= grid.dims[0]) continue;
            const long shell = std::max({std::abs(x - home[0]), std::abs(y - home[1]), std::abs(z - home[2])});
            if (shell != ring) continue;
            const std::size_t c = grid.flat(x, y, z);
            for (std::size_t s = grid.cell_start[c]; s < grid.cell_start[c + 1]; ++s) {
              const std::size_t j = grid.order[s];
              if (j == i) continue;
              const double dx = points[3 * j] - p[0];
              const double dy = points[3 * j + 1] - p[1];
              const double dz = points[3 * j + 2] - p[2];
              const double d2 = dx * dx + dy * dy + dz * dz;
              if (best.size() < want) {
                best.push(d2);
              } else if (d2 < best.top()) {
                best.pop();
                best.push(d2);
              }
            }
          }
        }
      }
      // Anything in ring+1 or beyond is at least ring * cell away.
      const double reach = static_cast<double>(ring) * grid.cell;
      if (best.size() == want && best.top() <= reach * reach) break;
    }
    double sum = 0.0;
    const std::size_t found = best.size();
    while (!best.empty()) {
      sum += std::sqrt(best.top());
      best.pop();
    }
    result[i] = found > 0 ? sum / static_cast<double>(found) : 0.0;
  }
  return result;
}

}  // namespace dgd
