#pragma once

#include "ktgnn/graph.hpp"

#include <iosfwd>
#include <vector>

namespace ktgnn {

struct FeatureSummary {
  Index feature = 0;
  Population population = Population::Vocal;
  int label = kNoLabel;
  Index count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0, std = 0;
};

/// Linear-interpolation quantile of sorted data (R type 7).
double quantile_sorted(const std::vector<double>& sorted, double q);

/// One row per (observable feature, population, label) group that has members.
/// std is the population standard deviation.
std::vector<FeatureSummary> feature_summaries(const VSGraph& g);

/// n x 2 projection onto the first two principal components of centered x.
/// Component signs are fixed so the largest-magnitude loading is positive.
Mat pca_2d(const Mat& x);

void write_summaries_csv(std::ostream& os, const std::vector<FeatureSummary>& rows);
void write_projection_csv(std::ostream& os, const VSGraph& g, const Mat& projection);

}  // namespace ktgnn
