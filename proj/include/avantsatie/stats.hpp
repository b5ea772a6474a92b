#pragma once

#include <cstddef>
#include <vector>

namespace avantsatie {

struct Dispersion {
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation (n - 1)
    double min = 0.0;
    double max = 0.0;
    std::size_t n = 0;
};
Dispersion describe(const std::vector<double>& values);

struct RankSumResult {
    double u = 0.0; // U statistic of the first sample
    double z = 0.0;
    double p = 1.0; // two-sided
};

// Mann-Whitney U with midranks for ties, tie-corrected variance, continuity
// correction and a normal-approximation p-value.
RankSumResult mann_whitney(const std::vector<double>& a, const std::vector<double>& b);

} // namespace avantsatie
