#pragma once

// Reference clusterings: full-rescan Lance-Williams agglomeration, minimum
// spanning tree cuts for single linkage, and a quadratic OPTICS ordering.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd pairwise(const Eigen::MatrixXd& pts) {
  const auto n = pts.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) d(i, j) = i == j ? 0.0 : (pts.row(i) - pts.row(j)).norm();
  return d;
}

inline std::vector<int> relabel(const std::vector<int>& labels) {
  std::vector<int> out;
  std::vector<std::pair<int, int>> seen;
  for (int l : labels) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](auto& p) { return p.first == l; });
    if (it == seen.end()) {
      seen.emplace_back(l, static_cast<int>(seen.size()));
      out.push_back(seen.back().second);
    } else {
      out.push_back(it->second);
    }
  }
  return out;
}

// Scans the whole matrix for the closest pair at every step; the first pair
// in row-major order wins ties. `ward` picks the Ward update, else single.
inline std::vector<int> naive_agglomerative(const Eigen::MatrixXd& pts, std::size_t k, bool ward) {
  const auto n = static_cast<std::size_t>(pts.rows());
  Eigen::MatrixXd d = pairwise(pts);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> alive(n, true);
  std::vector<int> owner(n);
  std::iota(owner.begin(), owner.end(), 0);
  for (std::size_t clusters = n; clusters > k; --clusters) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (alive[i] && alive[j] && d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
    for (std::size_t q = 0; q < n; ++q) {
      if (!alive[q] || q == bi || q == bj) continue;
      double v;
      if (ward) {
        const double ni = size[bi], nj = size[bj], nq = size[q];
        v = std::sqrt(std::max(0.0, ((ni + nq) * d(q, bi) * d(q, bi) + (nj + nq) * d(q, bj) * d(q, bj) -
                                     nq * d(bi, bj) * d(bi, bj)) /
                                        (ni + nj + nq)));
      } else {
        v = std::min(d(q, bi), d(q, bj));
      }
      d(q, bi) = d(bi, q) = v;
    }
    size[bi] += size[bj];
    alive[bj] = false;
    for (auto& o : owner)
      if (o == static_cast<int>(bj)) o = static_cast<int>(bi);
  }
  return relabel(owner);
}

// Prim's tree, then drop the k-1 heaviest edges.
inline std::vector<int> mst_cut(const Eigen::MatrixXd& pts, std::size_t k) {
  const auto n = static_cast<std::size_t>(pts.rows());
  Eigen::MatrixXd d = pairwise(pts);
  struct Edge {
    double w;
    std::size_t a, b;
  };
  std::vector<Edge> tree;
  std::vector<bool> in(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  best[0] = 0;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t u = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && (u == n || best[v] < best[u])) u = v;
    in[u] = true;
    if (step > 0) tree.push_back({best[u], from[u], u});
    for (std::size_t v = 0; v < n; ++v)
      if (!in[v] && d(u, v) < best[v]) {
        best[v] = d(u, v);
        from[v] = u;
      }
  }
  std::sort(tree.begin(), tree.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
  tree.resize(tree.size() - (k - 1));
  std::vector<int> comp(n);
  std::iota(comp.begin(), comp.end(), 0);
  bool moved = true;
  while (moved) {
    moved = false;
    for (const auto& e : tree) {
      const int m = std::min(comp[e.a], comp[e.b]);
      if (comp[e.a] != m || comp[e.b] != m) {
        comp[e.a] = comp[e.b] = m;
        moved = true;
      }
    }
  }
  return relabel(comp);
}

struct OpticsReference {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;
};

// At every step, expand the unprocessed point with the smallest finite
// reachability (lowest index on ties), else the lowest unprocessed index.
inline OpticsReference quadratic_optics(const Eigen::MatrixXd& pts, std::size_t min_samples) {
  const auto n = static_cast<std::size_t>(pts.rows());
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd d = pairwise(pts);
  std::vector<double> core(n, inf);
  for (std::size_t i = 0; i < n && min_samples <= n; ++i) {
    std::vector<double> row;
    for (std::size_t j = 0; j < n; ++j) row.push_back(d(i, j));
    std::sort(row.begin(), row.end());
    core[i] = row[min_samples - 1];
  }
  OpticsReference ref;
  ref.reachability.assign(n, inf);
  std::vector<bool> done(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t p = n;
    for (std::size_t q = 0; q < n; ++q)
      if (!done[q] && std::isfinite(ref.reachability[q]) && (p == n || ref.reachability[q] < ref.reachability[p]))
        p = q;
    if (p == n)
      for (std::size_t q = 0; q < n && p == n; ++q)
        if (!done[q]) p = q;
    done[p] = true;
    ref.ordering.push_back(p);
    if (!std::isfinite(core[p])) continue;
    for (std::size_t q = 0; q < n; ++q)
      if (!done[q]) ref.reachability[q] = std::min(ref.reachability[q], std::max(core[p], d(p, q)));
  }
  return ref;
}

}  // namespace oracle
