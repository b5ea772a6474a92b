#pragma once

// Brute-force optimum over a 2-joint chain's admissible box: a dense grid,
// then repeated finer grids around the best few cells.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "fk_oracle.hpp"

namespace oracle {

struct GridOptimum {
    double value = std::numeric_limits<double>::infinity();
    double a0 = 0.0, a1 = 0.0;
};

inline GridOptimum grid_minimize(const avantsatie::KinematicChain& chain,
                                 const std::function<double(const Pose&)>& cost, int coarse = 181, int seeds = 6,
                                 int levels = 5)
{
    const auto& l0 = chain.joint(0).limit;
    const auto& l1 = chain.joint(1).limit;
    struct Cell {
        double v, a0, a1;
    };
    std::vector<Cell> cells;
    for (int i = 0; i < coarse; ++i) {
        for (int j = 0; j < coarse; ++j) {
            const double a0 = l0.min + (l0.max - l0.min) * i / (coarse - 1);
            const double a1 = l1.min + (l1.max - l1.min) * j / (coarse - 1);
            cells.push_back({cost(forward(chain, {a0, a1})), a0, a1});
        }
    }
    std::partial_sort(cells.begin(), cells.begin() + seeds, cells.end(),
                      [](const Cell& x, const Cell& y) { return x.v < y.v; });

    GridOptimum best;
    for (int s = 0; s < seeds; ++s) {
        Cell c = cells[s];
        double h0 = (l0.max - l0.min) / (coarse - 1), h1 = (l1.max - l1.min) / (coarse - 1);
        for (int level = 0; level < levels; ++level) {
            Cell local = c;
            for (int i = -10; i <= 10; ++i) {
                for (int j = -10; j <= 10; ++j) {
                    const double a0 = std::clamp(c.a0 + h0 * i / 10.0, l0.min, l0.max);
                    const double a1 = std::clamp(c.a1 + h1 * j / 10.0, l1.min, l1.max);
                    const double v = cost(forward(chain, {a0, a1}));
                    if (v < local.v)
                        local = {v, a0, a1};
                }
            }
            c = local;
            h0 /= 5.0;
            h1 /= 5.0;
        }
        if (c.v < best.value)
            best = {c.v, c.a0, c.a1};
    }
    return best;
}

} // namespace oracle
