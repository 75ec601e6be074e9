#include "ktgnn/stats.hpp"

#include "ktgnn/io.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace ktgnn {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::nan("");
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<FeatureSummary> feature_summaries(const VSGraph& g) {
  std::map<std::pair<int, int>, std::vector<Index>> groups;
  for (Index i = 0; i < g.num_nodes(); ++i)
    groups[{static_cast<int>(g.population(i)), g.labels()[i]}].push_back(i);

  std::vector<FeatureSummary> out;
  for (Index f = 0; f < g.d_obs(); ++f) {
    for (const auto& [key, ids] : groups) {
      std::vector<double> v;
      v.reserve(ids.size());
      for (Index i : ids) v.push_back(g.x_obs()(i, f));
      std::sort(v.begin(), v.end());
      FeatureSummary s;
      s.feature = f;
      s.population = static_cast<Population>(key.first);
      s.label = key.second;
      s.count = static_cast<Index>(v.size());
      s.min = v.front();
      s.max = v.back();
      s.q1 = quantile_sorted(v, 0.25);
      s.median = quantile_sorted(v, 0.5);
      s.q3 = quantile_sorted(v, 0.75);
      double sum = 0.0;
      for (double x : v) sum += x;
      s.mean = sum / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / static_cast<double>(v.size()));
      out.push_back(s);
    }
  }
  return out;
}

Mat pca_2d(const Mat& x) {
  const Index n = x.rows();
  Mat proj = Mat::Zero(n, 2);
  if (n == 0 || x.cols() == 0) return proj;
  const Mat centered = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(std::max<Index>(n - 1, 1));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Index d = x.cols();
  for (Index k = 0; k < std::min<Index>(2, d); ++k) {
    Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
    Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    proj.col(k) = centered * v;
  }
  return proj;
}

void write_summaries_csv(std::ostream& os, const std::vector<FeatureSummary>& rows) {
  os << "feature,population,label,count,min,q1,median,q3,max,mean,std\n";
  for (const auto& r : rows) {
    os << r.feature << ',' << (r.population == Population::Vocal ? "vocal" : "silent") << ',' << r.label << ','
       << r.count;
    for (double v : {r.min, r.q1, r.median, r.q3, r.max, r.mean, r.std}) os << ',' << format_decimal(v);
    os << '\n';
  }
}

void write_projection_csv(std::ostream& os, const VSGraph& g, const Mat& projection) {
  os << "node_id,population,label,pc1,pc2\n";
  for (Index i = 0; i < g.num_nodes(); ++i)
    os << i << ',' << (g.is_vocal(i) ? "vocal" : "silent") << ',' << g.labels()[i] << ','
       << format_decimal(projection(i, 0)) << ',' << format_decimal(projection(i, 1)) << '\n';
}

}  // namespace ktgnn
