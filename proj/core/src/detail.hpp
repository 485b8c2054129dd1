#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace defhom::detail {

// Sort and drop points closer than `tol` to their predecessor.
inline std::vector<double> merge_points(std::vector<double> pts, double tol) {
  std::sort(pts.begin(), pts.end());
  std::vector<double> out;
  out.reserve(pts.size());
  for (double p : pts) {
    if (out.empty() || p - out.back() > tol) {
      out.push_back(p);
    }
  }
  return out;
}

// Index k with v[k] <= x < v[k+1], clamped to [0, v.size()-2].
inline std::size_t bracket(const std::vector<double>& v, double x) {
  auto it = std::upper_bound(v.begin(), v.end(), x);
  std::ptrdiff_t k = (it - v.begin()) - 1;
  k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(v.size()) - 2);
  return static_cast<std::size_t>(k);
}

}  // namespace defhom::detail
