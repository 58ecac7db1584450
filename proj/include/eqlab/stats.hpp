#pragma once

#include <cstddef>
#include <vector>

namespace eqlab::stats {

struct MeanErr {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

// Mean and standard error of the mean. Pairwise summation keeps the
// reduction order fixed for reproducibility.
MeanErr mean_stderr(const std::vector<double>& xs);

// Mean/stderr via batch means (for weakly correlated or heavy-tailed data).
MeanErr batch_means(const std::vector<double>& xs, std::size_t nbatches);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

// Ordinary least squares y = slope*x + intercept.
LineFit ols(const std::vector<double>& x, const std::vector<double>& y);

double pairwise_sum(const double* xs, std::size_t n);

}  // namespace eqlab::stats
