#include "erank/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <stdexcept>

namespace erank {

double norm_quantile(double p) {
    static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
    return boost::math::quantile(std_normal, p);
}

double f_quantile(double p, double d1, double d2) {
    const boost::math::fisher_f_distribution<double> f(d1, d2);
    return boost::math::quantile(f, p);
}

double chisq_sf(double x, double df) {
    const boost::math::chi_squared_distribution<double> chi2(df);
    return boost::math::cdf(boost::math::complement(chi2, x));
}

double mean(std::span<const double> v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return ss / static_cast<double>(n - 1);
}

double sample_quantile(std::span<const double> v, double p) {
    if (v.empty()) throw std::invalid_argument("sample_quantile: empty input");
    std::vector<double> sorted(v.begin(), v.end());
    std::sort(sorted.begin(), sorted.end());
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const std::size_t idx = static_cast<std::size_t>(
        std::ceil(p * static_cast<double>(sorted.size()))) - 1;
    return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace erank
