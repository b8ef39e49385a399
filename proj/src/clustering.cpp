#include "kgmatch/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <set>

#include "kgmatch/error.hpp"

namespace kgmatch {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(ClusterAlgorithm a) {
  switch (a) {
    case ClusterAlgorithm::Ward:
      return "ward";
    case ClusterAlgorithm::Single:
      return "single";
    case ClusterAlgorithm::Optics:
      return "optics";
  }
  return "?";
}

ClusterAlgorithm parse_cluster_algorithm(std::string_view name) {
  if (name == "ward") return ClusterAlgorithm::Ward;
  if (name == "single") return ClusterAlgorithm::Single;
  if (name == "optics") return ClusterAlgorithm::Optics;
  throw ConfigError("unknown clustering algorithm '" + std::string(name) + "'");
}

std::size_t ClusterAssignment::cluster_count() const {
  return std::set<int>(labels.begin(), labels.end()).size();
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> renamed;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) {
    auto [it, _] = renamed.emplace(l, static_cast<int>(renamed.size()));
    out.push_back(it->second);
  }
  return out;
}

double lance_williams(Linkage linkage, double d_ki, double d_kj, double d_ij, std::size_t n_i, std::size_t n_j,
                      std::size_t n_k) {
  if (linkage == Linkage::Single) return std::min(d_ki, d_kj);
  const double ni = static_cast<double>(n_i), nj = static_cast<double>(n_j), nk = static_cast<double>(n_k);
  const double v = ((ni + nk) * d_ki * d_ki + (nj + nk) * d_kj * d_kj - nk * d_ij * d_ij) / (ni + nj + nk);
  return std::sqrt(std::max(v, 0.0));
}

ClusterAssignment agglomerate(const PointMatrix& points, std::size_t k, Linkage linkage, std::vector<Merge>* merges) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k < 1) throw ConfigError("cluster count must be >= 1");
  if (k > n) throw ConfigError("cluster count " + std::to_string(k) + " exceeds point count " + std::to_string(n));

  Eigen::MatrixXd d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = 0;
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
  }
  std::vector<char> active(n, 1);
  std::vector<std::size_t> size(n, 1);
  std::vector<std::vector<std::size_t>> members(n);
  for (std::size_t i = 0; i < n; ++i) members[i] = {i};

  // Row cache: nearest active j > i, ties to the lowest j.
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, kInf);
  auto refresh = [&](std::size_t i) {
    nn[i] = n;
    nnd[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j) {
      if (active[j] && d(i, j) < nnd[i]) {
        nnd[i] = d(i, j);
        nn[i] = j;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t remaining = n; remaining > k; --remaining) {
    std::size_t i = n;
    double best = kInf;
    for (std::size_t r = 0; r < n; ++r) {
      if (active[r] && nn[r] < n && (i == n || nnd[r] < best)) {
        best = nnd[r];
        i = r;
      }
    }
    const std::size_t j = nn[i];
    if (merges) merges->push_back({i, j, best});
    const double d_ij = d(i, j);
    for (std::size_t q = 0; q < n; ++q) {
      if (!active[q] || q == i || q == j) continue;
      d(q, i) = d(i, q) = lance_williams(linkage, d(q, i), d(q, j), d_ij, size[i], size[j], size[q]);
    }
    size[i] += size[j];
    members[i].insert(members[i].end(), members[j].begin(), members[j].end());
    active[j] = 0;

    refresh(i);
    for (std::size_t q = 0; q < j; ++q) {
      if (!active[q] || q == i) continue;
      if (nn[q] == i || nn[q] == j) {
        refresh(q);
      } else if (q < i && (d(q, i) < nnd[q] || (d(q, i) == nnd[q] && i < nn[q]))) {
        nn[q] = i;
        nnd[q] = d(q, i);
      }
    }
  }

  ClusterAssignment out;
  out.algorithm = linkage == Linkage::Ward ? ClusterAlgorithm::Ward : ClusterAlgorithm::Single;
  out.parameter = k;
  out.labels.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    for (std::size_t p : members[i]) out.labels[p] = static_cast<int>(i);
  }
  out.labels = canonical_labels(out.labels);
  return out;
}

ClusterAssignment ward_cluster(const PointMatrix& points, std::size_t k) {
  return agglomerate(points, k, Linkage::Ward);
}

ClusterAssignment single_cluster(const PointMatrix& points, std::size_t k) {
  return agglomerate(points, k, Linkage::Single);
}

OpticsResult optics_ordering(const PointMatrix& points, std::size_t min_samples) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (min_samples < 1) throw ConfigError("min_samples must be >= 1");
  OpticsResult res;
  res.reachability.assign(n, kInf);
  res.core_distance.assign(n, kInf);
  res.predecessor.assign(n, -1);

  Eigen::MatrixXd d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = 0;
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (points.row(i) - points.row(j)).norm();
  }
  // Core distance counts the point itself as its first neighbor.
  if (min_samples <= n) {
    std::vector<double> row(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) row[j] = d(i, j);
      std::nth_element(row.begin(), row.begin() + static_cast<long>(min_samples - 1), row.end());
      res.core_distance[i] = row[min_samples - 1];
    }
  }

  using Seed = std::pair<double, std::size_t>;
  std::priority_queue<Seed, std::vector<Seed>, std::greater<>> seeds;
  std::vector<char> processed(n, 0);
  std::size_t next_unprocessed = 0;
  while (res.ordering.size() < n) {
    std::size_t p = n;
    while (!seeds.empty()) {
      auto [r, q] = seeds.top();
      seeds.pop();
      if (!processed[q] && r == res.reachability[q]) {
        p = q;
        break;
      }
    }
    if (p == n) {
      while (processed[next_unprocessed]) ++next_unprocessed;
      p = next_unprocessed;
    }
    processed[p] = 1;
    res.ordering.push_back(p);
    if (!std::isfinite(res.core_distance[p])) continue;
    for (std::size_t q = 0; q < n; ++q) {
      if (processed[q]) continue;
      const double r = std::max(res.core_distance[p], d(p, q));
      if (r < res.reachability[q]) {
        res.reachability[q] = r;
        res.predecessor[q] = static_cast<long>(p);
        seeds.emplace(r, q);
      }
    }
  }
  return res;
}

namespace {

// Last index of a maximal steep region starting at `start`: it may contain at
// most `min_samples` consecutive non-steep points, and ends at the first point
// moving the opposite way.
std::size_t extend_region(const std::vector<char>& steep, const std::vector<char>& opposite, std::size_t start,
                          std::size_t min_samples) {
  std::size_t non_steep = 0;
  std::size_t end = start;
  for (std::size_t index = start; index < steep.size(); ++index) {
    if (steep[index]) {
      non_steep = 0;
      end = index;
    } else if (!opposite[index]) {
      if (++non_steep > min_samples) break;
    } else {
      return end;
    }
  }
  return end;
}

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

void update_filter_sdas(std::vector<SteepDownArea>& sdas, double mib, double xi_complement,
                        const std::vector<double>& plot) {
  if (std::isinf(mib)) {
    sdas.clear();
    return;
  }
  std::vector<SteepDownArea> kept;
  for (auto sda : sdas) {
    if (mib <= plot[sda.start] * xi_complement) {
      sda.mib = std::max(sda.mib, mib);
      kept.push_back(sda);
    }
  }
  sdas = std::move(kept);
}

// Shrinks [s, e] from the right until the end point's predecessor lies inside.
bool correct_predecessor(const std::vector<double>& plot, const std::vector<long>& pred_plot,
                         const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (plot[s] > plot[e]) return true;
    const long p_e = pred_plot[e];
    for (std::size_t i = s; i < e; ++i)
      if (p_e == static_cast<long>(ordering[i])) return true;
    --e;
  }
  return false;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> extract_xi_clusters(const OpticsResult& optics, double xi,
                                                                     std::size_t min_samples,
                                                                     std::size_t min_cluster_size) {
  const std::size_t n = optics.ordering.size();
  std::vector<double> plot(n + 1, kInf);  // trailing +inf closes a final cluster
  std::vector<long> pred_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    plot[i] = optics.reachability[optics.ordering[i]];
    pred_plot[i] = optics.predecessor[optics.ordering[i]];
  }
  const double xi_complement = 1.0 - xi;
  std::vector<char> steep_up(n), steep_down(n), up(n), down(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];  // NaN for inf/inf and 0/0 compares false
    steep_up[i] = ratio <= xi_complement;
    steep_down[i] = ratio >= 1.0 / xi_complement;
    down[i] = ratio > 1.0;
    up[i] = ratio < 1.0;
  }

  std::vector<SteepDownArea> sdas;
  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep_index = 0; steep_index < n; ++steep_index) {
    if (!(steep_up[steep_index] || steep_down[steep_index])) continue;
    if (steep_index < index) continue;
    for (std::size_t i = index; i <= steep_index; ++i) mib = std::max(mib, plot[i]);

    if (steep_down[steep_index]) {
      update_filter_sdas(sdas, mib, xi_complement, plot);
      const std::size_t d_end = extend_region(steep_down, up, steep_index, min_samples);
      sdas.push_back({steep_index, d_end, 0.0});
      index = d_end + 1;
      mib = plot[index];
      continue;
    }

    update_filter_sdas(sdas, mib, xi_complement, plot);
    const std::size_t u_start = steep_index;
    const std::size_t u_end = extend_region(steep_up, down, u_start, min_samples);
    index = u_end + 1;
    mib = plot[index];

    std::vector<std::pair<std::size_t, std::size_t>> found;
    for (const auto& sda : sdas) {
      std::size_t c_start = sda.start;
      std::size_t c_end = u_end;
      if (plot[c_end + 1] * xi_complement < sda.mib) continue;

      const double d_max = plot[sda.start];
      if (d_max * xi_complement >= plot[c_end + 1]) {
        while (plot[c_start + 1] > plot[c_end + 1] && c_start < sda.end) ++c_start;
      } else if (plot[c_end + 1] * xi_complement >= d_max) {
        while (c_end > u_start && plot[c_end - 1] > d_max) --c_end;
      }
      if (!correct_predecessor(plot, pred_plot, optics.ordering, c_start, c_end)) continue;
      if (c_end - c_start + 1 < min_cluster_size) continue;
      if (c_start > sda.end) continue;
      if (c_end < u_start) continue;
      found.emplace_back(c_start, c_end);
    }
    clusters.insert(clusters.end(), found.rbegin(), found.rend());
  }
  return clusters;
}

ClusterAssignment optics_cluster(const PointMatrix& points, std::size_t min_cluster_size, double xi) {
  if (min_cluster_size < 2) throw ConfigError("OPTICS minimum cluster size must be >= 2");
  const auto n = static_cast<std::size_t>(points.rows());
  OpticsResult optics = optics_ordering(points, min_cluster_size);
  auto clusters = extract_xi_clusters(optics, xi, min_cluster_size, min_cluster_size);

  std::vector<int> by_position(n, -1);
  int label = 0;
  for (const auto& [s, e] : clusters) {
    bool free = true;
    for (std::size_t i = s; i <= e; ++i) free = free && by_position[i] == -1;
    if (!free) continue;
    for (std::size_t i = s; i <= e; ++i) by_position[i] = label;
    ++label;
  }
  std::vector<int> labels(n, -1);
  for (std::size_t i = 0; i < n; ++i) labels[optics.ordering[i]] = by_position[i];
  for (auto& l : labels)
    if (l == -1) l = label++;

  ClusterAssignment out;
  out.algorithm = ClusterAlgorithm::Optics;
  out.parameter = min_cluster_size;
  out.labels = canonical_labels(labels);
  return out;
}

}  // namespace kgmatch
