#include "doctest.h"

#include <cmath>

#include "avantsatie/errors.hpp"
#include "avantsatie/stats.hpp"

using namespace avantsatie;

// Reference values from scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
// method="asymptotic", use_continuity=True).
TEST_CASE("rank-sum test matches the scipy asymptotic reference")
{
    struct Case {
        std::vector<double> a, b;
        double u, p;
    };
    const Case cases[] = {
        {{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}, 0.0, 0.012185780355344813},
        {{3, 1, 4, 1, 5, 9, 2, 6}, {2, 7, 1, 8, 2, 8}, 21.0, 0.7444328442168985},
        {{5, 5, 5, 6, 7, 3, 8, 2, 9, 4, 5, 6}, {1, 2, 2, 3, 3, 4, 1, 0, 2, 3, 5}, 118.5, 0.0012167411504605046},
    };
    for (const Case& c : cases) {
        const RankSumResult r = mann_whitney(c.a, c.b);
        CHECK(r.u == doctest::Approx(c.u));
        CHECK(r.p == doctest::Approx(c.p).epsilon(1e-9));
        const RankSumResult swapped = mann_whitney(c.b, c.a);
        CHECK(swapped.u == doctest::Approx(c.a.size() * c.b.size() - c.u));
        CHECK(swapped.p == doctest::Approx(r.p).epsilon(1e-12));
    }
}

TEST_CASE("rank-sum degenerate inputs")
{
    const RankSumResult same = mann_whitney({2, 2, 2}, {2, 2});
    CHECK(same.p == 1.0);
    CHECK_THROWS_AS(mann_whitney({}, {1.0}), ContractViolation);
}

TEST_CASE("descriptive statistics")
{
    const Dispersion d = describe({2, 4, 4, 4, 5, 5, 7, 9});
    CHECK(d.n == 8);
    CHECK(d.mean == doctest::Approx(5.0));
    CHECK(d.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
    CHECK(d.min == 2);
    CHECK(d.max == 9);
    const Dispersion one = describe({3.5});
    CHECK(one.sd == 0.0);
    CHECK(describe({}).n == 0);
}
