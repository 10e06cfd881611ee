#include "lesiontrack/labeling.hpp"

#include <algorithm>
#include <array>
#include <string>

namespace lesiontrack {
namespace {

struct Offset {
  int di, dj, dk;
};

// Neighbours that precede a voxel in raster order.
std::vector<Offset> backward_neighbors(Connectivity c) {
  const int max_manhattan = c == Connectivity::Six ? 1 : (c == Connectivity::Eighteen ? 2 : 3);
  std::vector<Offset> out;
  for (int dk = -1; dk <= 0; ++dk) {
    for (int dj = -1; dj <= 1; ++dj) {
      for (int di = -1; di <= 1; ++di) {
        const bool before = dk < 0 || (dk == 0 && dj < 0) || (dk == 0 && dj == 0 && di < 0);
        if (!before) continue;
        if (std::abs(di) + std::abs(dj) + std::abs(dk) > max_manhattan) continue;
        out.push_back({di, dj, dk});
      }
    }
  }
  return out;
}

class DisjointSet {
 public:
  std::int32_t make() {
    parent_.push_back(static_cast<std::int32_t>(parent_.size()));
    return parent_.back();
  }

  std::int32_t root(std::int32_t n) {
    while (parent_[n] != n) {
      parent_[n] = parent_[parent_[n]];
      n = parent_[n];
    }
    return n;
  }

  void unify(std::int32_t a, std::int32_t b) {
    a = root(a);
    b = root(b);
    if (a == b) return;
    if (a < b) {
      parent_[b] = a;
    } else {
      parent_[a] = b;
    }
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::int32_t> parent_;
};

}  // namespace

Connectivity connectivity_from_int(int n) {
  switch (n) {
    case 6: return Connectivity::Six;
    case 18: return Connectivity::Eighteen;
    case 26: return Connectivity::TwentySix;
    default: throw Error(ErrorCode::InvalidInput, "connectivity must be 6, 18 or 26, got " + std::to_string(n));
  }
}

LabeledComponents label_components(const MaskVolume& mask, Connectivity connectivity) {
  const Geometry& g = mask.geometry();
  const std::int64_t nx = g.dims()[0], ny = g.dims()[1], nz = g.dims()[2];
  auto data = mask.data();

  std::array<std::int64_t, 3> lo{nx, ny, nz};
  std::array<std::int64_t, 3> hi{-1, -1, -1};
  {
    std::size_t idx = 0;
    for (std::int64_t k = 0; k < nz; ++k) {
      for (std::int64_t j = 0; j < ny; ++j) {
        for (std::int64_t i = 0; i < nx; ++i, ++idx) {
          const auto v = data[idx];
          if (v == 0) continue;
          if (v != 1) throw Error(ErrorCode::InvalidMask, "label_components expects a binary mask");
          lo[0] = std::min(lo[0], i), hi[0] = std::max(hi[0], i);
          lo[1] = std::min(lo[1], j), hi[1] = std::max(hi[1], j);
          lo[2] = std::min(lo[2], k), hi[2] = std::max(hi[2], k);
        }
      }
    }
  }

  LabeledComponents out;
  out.labels = LabelVolume(g);
  if (hi[0] < 0) return out;

  // First pass: provisional labels (0-based in the disjoint set, stored +1).
  auto labels = out.labels.data();
  const auto neighbors = backward_neighbors(connectivity);
  DisjointSet uf;
  for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t idx = g.linear_index(i, j, k);
        if (data[idx] == 0) continue;
        std::int32_t current = -1;
        for (const auto& o : neighbors) {
          const std::int64_t ni = i + o.di, nj = j + o.dj, nk = k + o.dk;
          if (ni < lo[0] || ni > hi[0] || nj < lo[1] || nj > hi[1] || nk < lo[2]) continue;
          const std::int32_t nl = labels[g.linear_index(ni, nj, nk)];
          if (nl == 0) continue;
          if (current < 0) {
            current = nl - 1;
          } else {
            uf.unify(current, nl - 1);
          }
        }
        if (current < 0) current = uf.make();
        labels[idx] = current + 1;
      }
    }
  }

  // Second pass: resolve roots and renumber in first-encounter order.
  std::vector<std::int32_t> final_label(uf.size(), 0);
  std::vector<std::array<double, 3>> sums;
  for (std::int64_t k = lo[2]; k <= hi[2]; ++k) {
    for (std::int64_t j = lo[1]; j <= hi[1]; ++j) {
      for (std::int64_t i = lo[0]; i <= hi[0]; ++i) {
        const std::size_t idx = g.linear_index(i, j, k);
        if (labels[idx] == 0) continue;
        const std::int32_t r = uf.root(labels[idx] - 1);
        if (final_label[r] == 0) {
          final_label[r] = ++out.count;
          out.voxel_counts.push_back(0);
          sums.push_back({0.0, 0.0, 0.0});
        }
        const std::int32_t l = final_label[r];
        labels[idx] = l;
        out.voxel_counts[l - 1] += 1;
        sums[l - 1][0] += static_cast<double>(i);
        sums[l - 1][1] += static_cast<double>(j);
        sums[l - 1][2] += static_cast<double>(k);
      }
    }
  }

  out.centroids.reserve(out.count);
  for (int l = 0; l < out.count; ++l) {
    const double n = static_cast<double>(out.voxel_counts[l]);
    WorldPoint c;
    for (int a = 0; a < 3; ++a) c[a] = g.origin()[a] + g.spacing()[a] * (sums[l][a] / n);
    out.centroids.push_back(c);
  }
  return out;
}

WorldPoint component_centroid(const LabeledComponents& lc, int label) {
  if (label < 1 || label > lc.count) {
    throw Error(ErrorCode::NotFound, "component " + std::to_string(label) + " does not exist");
  }
  return lc.centroids[label - 1];
}

OverlapTable overlap_matrix(const LabeledComponents& pred, const LabelVolume& gt) {
  if (!pred.labels.geometry().same_shape(gt.geometry())) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth grids differ");
  }
  OverlapTable table;
  if (pred.count == 0) return table;
  auto p = pred.labels.data();
  auto q = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != 0 && q[i] != 0) ++table[{p[i], q[i]}];
  }
  return table;
}

void InstanceStats::merge(const InstanceStats& other) {
  count += other.count;
  for (int a = 0; a < 3; ++a) {
    index_sum[a] += other.index_sum[a];
    lo[a] = std::min(lo[a], other.lo[a]);
    hi[a] = std::max(hi[a], other.hi[a]);
  }
}

WorldPoint InstanceStats::centroid(const Geometry& g) const {
  WorldPoint c;
  for (int a = 0; a < 3; ++a) {
    c[a] = g.origin()[a] + g.spacing()[a] * (index_sum[a] / static_cast<double>(count));
  }
  return c;
}

std::map<std::int32_t, InstanceStats> instance_stats(const LabelVolume& instances) {
  std::map<std::int32_t, InstanceStats> stats;
  const auto& d = instances.dims();
  auto data = instances.data();
  std::size_t idx = 0;
  InstanceStats* last = nullptr;
  std::int32_t last_label = 0;
  for (std::int64_t k = 0; k < d[2]; ++k) {
    for (std::int64_t j = 0; j < d[1]; ++j) {
      for (std::int64_t i = 0; i < d[0]; ++i, ++idx) {
        const std::int32_t l = data[idx];
        if (l == 0) continue;
        if (last == nullptr || l != last_label) {
          last = &stats[l];
          last_label = l;
        }
        InstanceStats& s = *last;
        ++s.count;
        const std::int64_t v[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          s.index_sum[a] += static_cast<double>(v[a]);
          s.lo[a] = std::min(s.lo[a], v[a]);
          s.hi[a] = std::max(s.hi[a], v[a]);
        }
      }
    }
  }
  return stats;
}

}  // namespace lesiontrack
