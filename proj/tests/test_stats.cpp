#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "oracles.hpp"
#include "support.hpp"
#include "topicflow/errors.hpp"
#include "topicflow/stats.hpp"

using namespace topicflow;

namespace {

ContingencyTable table(std::vector<std::vector<std::int64_t>> counts)
{
    ContingencyTable t;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        t.row_labels.push_back("r" + std::to_string(i));
    }
    for (std::size_t j = 0; j < counts[0].size(); ++j) {
        t.col_labels.push_back("c" + std::to_string(j));
    }
    t.counts = std::move(counts);
    return t;
}

std::vector<double> distinct_sample(Rng& rng, std::size_t n)
{
    std::vector<double> v;
    while (v.size() < n) {
        const double x = std::round(rng.uniform() * 1e6) / 1e6;
        if (std::find(v.begin(), v.end(), x) == v.end()) {
            v.push_back(x);
        }
    }
    return v;
}

}  // namespace

TEST_CASE("regularized incomplete gamma matches Boost")
{
    for (double a : {0.5, 1.0, 1.5, 2.0, 3.5, 5.0, 10.0, 25.0, 60.0}) {
        for (double x : {1e-6, 0.01, 0.3, 1.0, 2.0, 4.5, 9.0, 20.0, 50.0, 120.0}) {
            CAPTURE(a);
            CAPTURE(x);
            const double q = boost::math::gamma_q(a, x);
            CHECK(std::abs(regularized_gamma_q(a, x) - q) < 1e-12);
            CHECK(std::abs(regularized_gamma_p(a, x) - (1.0 - q)) < 1e-12);
        }
    }
    CHECK(regularized_gamma_q(2.0, 0.0) == 1.0);
}

TEST_CASE("chi-square survival function")
{
    CHECK(chi_square_sf(3.841, 1) == doctest::Approx(0.05).epsilon(0.02));
    CHECK(std::abs(chi_square_sf(3.841, 1) - 0.05) < 1e-3);
    for (int df : {1, 2, 3, 4, 7, 12}) {
        for (double x : {0.5, 1.0, 3.841, 7.0, 15.0}) {
            CHECK(std::abs(chi_square_sf(x, df) - oracle::chi_square_sf_quadrature(x, df)) < 1e-8);
        }
    }
    CHECK(chi_square_sf(0.0, 3) == 1.0);
    // df = 2 has the closed form exp(-x/2).
    CHECK(chi_square_sf(5.0, 2) == doctest::Approx(std::exp(-2.5)).epsilon(1e-12));
}

TEST_CASE("chi_square of a balanced table")
{
    const TestResult r = chi_square(table({{10, 10}, {10, 10}}));
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == 1.0);
    CHECK(r.df == 1);
    CHECK(r.method == "chi_square");
}

TEST_CASE("chi_square statistic near the 5% critical value")
{
    // For [[a, b], [b, a]] the statistic is 2 (a - b)^2 / (a + b).
    // a = 109, b = 91 gives 3.24; a = 110, b = 90 gives 4.0.
    const TestResult lo = chi_square(table({{109, 91}, {91, 109}}));
    const TestResult hi = chi_square(table({{110, 90}, {90, 110}}));
    CHECK(lo.statistic == doctest::Approx(3.24));
    CHECK(hi.statistic == doctest::Approx(4.0));
    CHECK(lo.p_value > 0.05);
    CHECK(hi.p_value < 0.05);
    CHECK(hi.p_value == doctest::Approx(oracle::chi_square_sf_quadrature(4.0, 1)).epsilon(1e-8));
}

TEST_CASE("chi_square matches the textbook statistic and is permutation and scale aware")
{
    Rng rng(59);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t r = 2 + rng.index(3);
        const std::size_t c = 2 + rng.index(3);
        std::vector<std::vector<std::int64_t>> counts(r, std::vector<std::int64_t>(c));
        for (auto& row : counts) {
            for (auto& v : row) {
                v = 1 + static_cast<std::int64_t>(rng.index(40));
            }
        }
        const TestResult base = chi_square(table(counts));
        CHECK(base.statistic >= 0.0);
        CHECK(base.p_value >= 0.0);
        CHECK(base.p_value <= 1.0);
        CHECK(base.df == static_cast<int>((r - 1) * (c - 1)));
        CHECK(base.statistic == doctest::Approx(oracle::chi_square_statistic(counts)).epsilon(1e-12));

        auto permuted = counts;
        std::reverse(permuted.begin(), permuted.end());
        for (auto& row : permuted) {
            std::rotate(row.begin(), row.begin() + 1, row.end());
        }
        CHECK(chi_square(table(permuted)).statistic == doctest::Approx(base.statistic).epsilon(1e-12));

        const std::int64_t m = 2 + static_cast<std::int64_t>(rng.index(5));
        auto scaled = counts;
        for (auto& row : scaled) {
            for (auto& v : row) {
                v *= m;
            }
        }
        CHECK(chi_square(table(scaled)).statistic ==
              doctest::Approx(static_cast<double>(m) * base.statistic).epsilon(1e-10));
    }
}

TEST_CASE("chi_square input errors")
{
    try {
        ContingencyTable t = table({{1, 2}, {0, 0}});
        t.row_labels = {"Democrat", "Republican"};
        chi_square(t);
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("Republican") != std::string::npos);
    }
    CHECK_THROWS_AS(chi_square(table({{1, 0}, {2, 0}})), DataError);
    CHECK_THROWS_AS(chi_square(table({{1, 2}})), DataError);
    CHECK_THROWS_AS(chi_square(table({{1, -2}, {3, 4}})), DataError);
    ContingencyTable ragged = table({{1, 2}, {3, 4}});
    ragged.counts[1].push_back(5);
    CHECK_THROWS_AS(chi_square(ragged), DataError);
}

TEST_CASE("mann_whitney_u on identical samples")
{
    const std::vector<double> a = {1, 2, 3, 4, 5};
    const TestResult r = mann_whitney_u(a, a);
    CHECK(r.statistic == 12.5);
    CHECK(r.p_value >= 0.99);
    CHECK(r.n1 == 5);
    CHECK(r.n2 == 5);

    const std::vector<double> same = {2, 2, 2};
    const std::vector<double> two = {2, 2};
    const TestResult s = mann_whitney_u(same, two);
    CHECK(s.p_value == 1.0);
    CHECK(s.statistic == 3.0);
}

TEST_CASE("mann_whitney_u separated samples")
{
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {4, 5, 6};
    const TestResult r = mann_whitney_u(a, b);
    CHECK(r.statistic == 0.0);
    CHECK(mann_whitney_exact(a, b) == doctest::Approx(0.1));
    CHECK(oracle::mann_whitney_exact({1, 2, 3}, {4, 5, 6}) == doctest::Approx(0.1));

    // Normal approximation with continuity correction: z = (12.5 - 0.5) / sqrt(25 * 11 / 12).
    const std::vector<double> c = {1, 2, 3, 4, 5};
    const std::vector<double> d = {6, 7, 8, 9, 10};
    const double z = 12.0 / std::sqrt(25.0 * 11.0 / 12.0);
    CHECK(mann_whitney_u(c, d).p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
    CHECK(mann_whitney_u(c, d, Alternative::Less).p_value ==
          doctest::Approx(0.5 * std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
    CHECK(mann_whitney_u(c, d, Alternative::Greater).p_value > 0.99);
}

TEST_CASE("mann_whitney_u with ties uses midranks and the tie-corrected variance")
{
    const std::vector<double> a = {1, 2, 2, 3};
    const std::vector<double> b = {2, 3, 3, 4, 5};
    // Pooled ranks: 1 -> 1; 2 -> 3 (x3); 3 -> 6 (x3); 4 -> 8; 5 -> 9.
    const double r1 = 1 + 3 + 3 + 6;
    const double u1 = r1 - 4.0 * 5.0 / 2.0;
    const TestResult r = mann_whitney_u(a, b);
    CHECK(r.statistic == doctest::Approx(u1));
    const double n = 9.0;
    const double tie = (27.0 - 3.0) + (27.0 - 3.0);
    const double sigma = std::sqrt(4.0 * 5.0 / 12.0 * ((n + 1.0) - tie / (n * (n - 1.0))));
    const double mu = 10.0;
    const double z = (std::max(u1, 20.0 - u1) - mu - 0.5) / sigma;
    CHECK(r.p_value == doctest::Approx(std::erfc(z / std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("mann_whitney_u rejects tiny samples")
{
    const std::vector<double> one = {1.0};
    const std::vector<double> two = {2.0};
    CHECK_THROWS_AS(mann_whitney_u(one, two), std::invalid_argument);
    CHECK_THROWS_AS(mann_whitney_u(one, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("mann_whitney_exact examples and limits")
{
    CHECK(mann_whitney_exact(std::vector<double>{1}, std::vector<double>{2}) == 1.0);
    CHECK(mann_whitney_exact(std::vector<double>{1, 2}, std::vector<double>{3, 4}) == doctest::Approx(1.0 / 3.0));
    CHECK(mann_whitney_exact(std::vector<double>{3, 4}, std::vector<double>{1, 2}) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(mann_whitney_exact(std::vector<double>{1, 2}, std::vector<double>{2, 3}), std::invalid_argument);
    std::vector<double> big(7);
    std::vector<double> other(6);
    for (int i = 0; i < 7; ++i) {
        big[static_cast<std::size_t>(i)] = i;
    }
    for (int i = 0; i < 6; ++i) {
        other[static_cast<std::size_t>(i)] = 10 + i;
    }
    CHECK_THROWS_AS(mann_whitney_exact(big, other), std::invalid_argument);
}

TEST_CASE("mann_whitney_exact matches the enumeration oracle")
{
    Rng rng(61);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.index(11);
        const std::size_t n1 = 1 + rng.index(n - 1);
        const auto pooled = distinct_sample(rng, n);
        const std::vector<double> a(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(n1));
        const std::vector<double> b(pooled.begin() + static_cast<std::ptrdiff_t>(n1), pooled.end());
        const double p = mann_whitney_exact(a, b);
        CHECK(std::abs(p - oracle::mann_whitney_exact(a, b)) < 1e-12);
        CHECK(p == doctest::Approx(mann_whitney_exact(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("mann_whitney_u symmetry and monotone invariance")
{
    Rng rng(67);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a;
        std::vector<double> b;
        const std::size_t n1 = 1 + rng.index(15);
        const std::size_t n2 = 2 + rng.index(15);
        for (std::size_t i = 0; i < n1; ++i) {
            a.push_back(std::round(rng.normal() * 4.0));
        }
        for (std::size_t i = 0; i < n2; ++i) {
            b.push_back(std::round(rng.normal() * 4.0 + 1.0));
        }
        const TestResult ab = mann_whitney_u(a, b);
        const TestResult ba = mann_whitney_u(b, a);
        CHECK(ab.statistic + ba.statistic == static_cast<double>(n1 * n2));
        CHECK(ab.p_value == ba.p_value);
        CHECK(ab.p_value >= 0.0);
        CHECK(ab.p_value <= 1.0);
        CHECK(mann_whitney_u(a, b, Alternative::Less).p_value == mann_whitney_u(b, a, Alternative::Greater).p_value);

        auto transform = [](double x) { return std::exp(0.3 * x) + 2.0 * x * x * x; };
        std::vector<double> ta;
        std::vector<double> tb;
        std::transform(a.begin(), a.end(), std::back_inserter(ta), transform);
        std::transform(b.begin(), b.end(), std::back_inserter(tb), transform);
        const TestResult t = mann_whitney_u(ta, tb);
        CHECK(t.statistic == ab.statistic);
        CHECK(t.p_value == ab.p_value);
    }
}

TEST_CASE("normal approximation error against the exact test")
{
    // Exhaustive over every tie-free rank configuration with n1 + n2 <= 12.
    // The continuity-corrected approximation stays within 0.13 and the share
    // of configurations off by more than 0.02 falls as n grows.
    double previous_share = 1.0;
    for (std::size_t n = 9; n <= 12; ++n) {
        double worst = 0.0;
        std::size_t over = 0;
        std::size_t total = 0;
        for (std::size_t n1 = 1; n1 < n; ++n1) {
            std::vector<bool> sel(n, false);
            std::fill(sel.end() - static_cast<std::ptrdiff_t>(n1), sel.end(), true);
            do {
                std::vector<double> a;
                std::vector<double> b;
                for (std::size_t i = 0; i < n; ++i) {
                    (sel[i] ? a : b).push_back(static_cast<double>(i));
                }
                const double d = std::abs(mann_whitney_exact(a, b) - mann_whitney_u(a, b).p_value);
                worst = std::max(worst, d);
                over += d > 0.02 ? 1 : 0;
                ++total;
            } while (std::next_permutation(sel.begin(), sel.end()));
        }
        const double share = static_cast<double>(over) / static_cast<double>(total);
        CAPTURE(n);
        CHECK(worst < 0.13);
        CHECK(share < previous_share);
        previous_share = share;
    }
}

TEST_CASE("long-lived versus short-lived fixture is significant")
{
    // Long-lived mean 5.21 against short-lived mean 4.69.
    Rng rng(71);
    std::vector<double> high;
    std::vector<double> low;
    for (int i = 0; i < 80; ++i) {
        high.push_back(5.21 + 0.6 * rng.normal());
        low.push_back(4.69 + 0.6 * rng.normal());
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s / static_cast<double>(v.size());
    };
    CHECK(mean(high) == doctest::Approx(5.21).epsilon(0.03));
    CHECK(mean(low) == doctest::Approx(4.69).epsilon(0.03));
    CHECK(mann_whitney_u(high, low).p_value < 0.01);
    CHECK(mann_whitney_u(high, low, Alternative::Greater).p_value < 0.005);
}

TEST_CASE("alternative names")
{
    CHECK(parse_alternative("two-sided") == Alternative::TwoSided);
    CHECK(parse_alternative("greater") == Alternative::Greater);
    CHECK(to_string(Alternative::Less) == "less");
    CHECK_THROWS(parse_alternative("both"));
}
