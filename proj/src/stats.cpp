#include "eqlab/stats.hpp"

#include <cmath>

#include "eqlab/error.hpp"

namespace eqlab::stats {

double pairwise_sum(const double* xs, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += xs[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(xs, half) + pairwise_sum(xs + half, n - half);
}

MeanErr mean_stderr(const std::vector<double>& xs) {
    MeanErr r;
    r.n = xs.size();
    if (r.n == 0) return r;
    r.mean = pairwise_sum(xs.data(), xs.size()) / static_cast<double>(r.n);
    if (r.n < 2) return r;
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i] - r.mean;
        sq[i] = d * d;
    }
    double var = pairwise_sum(sq.data(), sq.size()) / static_cast<double>(r.n - 1);
    r.stderr_ = std::sqrt(var / static_cast<double>(r.n));
    return r;
}

MeanErr batch_means(const std::vector<double>& xs, std::size_t nbatches) {
    if (nbatches < 2 || xs.size() < nbatches) return mean_stderr(xs);
    std::size_t per = xs.size() / nbatches;
    std::vector<double> means;
    means.reserve(nbatches);
    for (std::size_t b = 0; b < nbatches; ++b) {
        means.push_back(pairwise_sum(xs.data() + b * per, per) / static_cast<double>(per));
    }
    MeanErr r = mean_stderr(means);
    // mean over the truncated sample; stderr from batch spread
    r.n = per * nbatches;
    return r;
}

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw invalid_input("ols: need >= 2 points with matching sizes");
    std::size_t n = x.size();
    double sx = pairwise_sum(x.data(), n), sy = pairwise_sum(y.data(), n);
    double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit f;
    if (sxx == 0.0) throw invalid_input("ols: degenerate x values");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}  // namespace eqlab::stats
