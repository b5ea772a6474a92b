#include "avantsatie/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avantsatie/errors.hpp"

namespace avantsatie {

Dispersion describe(const std::vector<double>& values)
{
    Dispersion d;
    d.n = values.size();
    if (values.empty())
        return d;
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(d.n);
    d.min = *std::min_element(values.begin(), values.end());
    d.max = *std::max_element(values.begin(), values.end());
    if (d.n > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - d.mean) * (v - d.mean);
        d.sd = std::sqrt(ss / static_cast<double>(d.n - 1));
    }
    return d;
}

RankSumResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.empty() || b.empty())
        throw ContractViolation("rank-sum test needs two non-empty samples");
    const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

    std::vector<std::pair<double, bool>> pooled;
    pooled.reserve(n);
    for (double v : a)
        pooled.emplace_back(v, true);
    for (double v : b)
        pooled.emplace_back(v, false);
    std::sort(pooled.begin(), pooled.end(), [](const auto& x, const auto& y) { return x.first < y.first; });

    double rank_sum_a = 0.0;
    double tie_term = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && pooled[j].first == pooled[i].first)
            ++j;
        const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second)
                rank_sum_a += midrank;
        const double t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }

    const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2), dn = static_cast<double>(n);
    RankSumResult r;
    r.u = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;
    const double mu = dn1 * dn2 / 2.0;
    const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
    if (!(var > 0.0))
        return r;
    const double u_big = std::max(r.u, dn1 * dn2 - r.u);
    r.z = (u_big - mu - 0.5) / std::sqrt(var);
    r.p = std::min(1.0, std::erfc(r.z / std::sqrt(2.0)));
    if (r.u < mu)
        r.z = -r.z;
    return r;
}

} // namespace avantsatie
