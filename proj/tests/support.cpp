#include "support.hpp"

#include <atomic>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace testsupport {

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("lesiontrack_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

MaskVolume random_mask(const Geometry& g, double density, RandomStream& rng) {
  MaskVolume m(g);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform() < density ? 1 : 0;
  return m;
}

std::vector<std::int32_t> flood_fill_labels(const MaskVolume& m, int connectivity, int* count) {
  const auto d = m.dims();
  const std::int64_t nx = d[0], ny = d[1], nz = d[2];
  std::vector<std::int32_t> lab(m.size(), 0);
  std::int32_t next = 0;
  std::deque<std::int64_t> queue;
  for (std::int64_t start = 0; start < static_cast<std::int64_t>(m.size()); ++start) {
    if (!m[start] || lab[start]) continue;
    lab[start] = ++next;
    queue.push_back(start);
    while (!queue.empty()) {
      const std::int64_t v = queue.front();
      queue.pop_front();
      const std::int64_t x = v % nx, y = (v / nx) % ny, z = v / (nx * ny);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
            if (manhattan == 0) continue;
            if (connectivity == 6 && manhattan > 1) continue;
            if (connectivity == 18 && manhattan > 2) continue;
            const std::int64_t a = x + dx, b = y + dy, c = z + dz;
            if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
            const std::int64_t w = a + nx * (b + ny * c);
            if (m[w] && !lab[w]) {
              lab[w] = next;
              queue.push_back(w);
            }
          }
    }
  }
  if (count) *count = next;
  return lab;
}

bool same_partition(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) return false;
  std::map<std::int32_t, std::int32_t> fwd, back;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [f, fi] = fwd.emplace(a[i], b[i]);
    auto [r, ri] = back.emplace(b[i], a[i]);
    if (f->second != b[i] || r->second != a[i]) return false;
  }
  return true;
}

double brute_dice(const MaskVolume& a, const MaskVolume& b) {
  std::int64_t inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i] != 0;
    sb += b[i] != 0;
    inter += (a[i] != 0) && (b[i] != 0);
  }
  return 2.0 * static_cast<double>(inter) / static_cast<double>(sa + sb);
}

std::map<std::pair<int, int>, std::int64_t> brute_overlap(const LabelVolume& a, const LabelVolume& b) {
  std::map<std::pair<int, int>, std::int64_t> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && b[i]) ++out[{a[i], b[i]}];
  }
  return out;
}

double enumerate_signed_rank_p(const std::vector<int>& doubled_ranks, double w_observed) {
  const int n = static_cast<int>(doubled_ranks.size());
  const std::uint64_t patterns = std::uint64_t{1} << n;
  const std::int64_t threshold = std::llround(2.0 * w_observed);
  // Walk the Gray code so each step flips one sign.
  std::int64_t w2 = 0;
  std::uint64_t at_or_below = w2 <= threshold ? 1 : 0;
  std::uint64_t prev = 0;
  for (std::uint64_t i = 1; i < patterns; ++i) {
    const std::uint64_t gray = i ^ (i >> 1);
    const std::uint64_t flipped = gray ^ prev;
    const int bit = __builtin_ctzll(flipped);
    w2 += (gray & flipped) ? doubled_ranks[bit] : -doubled_ranks[bit];
    prev = gray;
    if (w2 <= threshold) ++at_or_below;
  }
  return std::min(1.0, 2.0 * static_cast<double>(at_or_below) / static_cast<double>(patterns));
}

SignedRankOracle signed_rank_oracle(const std::vector<double>& differences) {
  std::vector<double> d;
  for (double x : differences) {
    if (x != 0.0) d.push_back(x);
  }
  SignedRankOracle r;
  r.n = static_cast<int>(d.size());
  std::vector<int> doubled(d.size());
  // Rank by counting: rank = (#smaller) + (#equal + 1) / 2, doubled.
  for (std::size_t i = 0; i < d.size(); ++i) {
    int smaller = 0, equal = 0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      if (std::fabs(d[j]) < std::fabs(d[i])) ++smaller;
      if (std::fabs(d[j]) == std::fabs(d[i])) ++equal;
    }
    doubled[i] = 2 * smaller + equal + 1;
    (d[i] > 0 ? r.w_plus : r.w_minus) += doubled[i] / 2.0;
  }
  if (r.n > 0) r.p_exact = enumerate_signed_rank_p(doubled, std::min(r.w_plus, r.w_minus));
  return r;
}

double mixture_cdf(double r, double prob_inlier, double sigma, double tail) {
  if (r <= 0.0) return 0.0;
  const double half_normal = sigma > 0.0 ? std::erf(r / (sigma * std::sqrt(2.0))) : 1.0;
  const double expo = tail > 0.0 ? 1.0 - std::exp(-r / tail) : 1.0;
  return prob_inlier * half_normal + (1.0 - prob_inlier) * expo;
}

}  // namespace testsupport
