#include "topicflow/stats.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "topicflow/errors.hpp"

namespace topicflow {

namespace {

constexpr int kMaxIterations = 1000;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Series for P(a, x); converges quickly for x < a + 1.
double gamma_p_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < kMaxIterations; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * kEpsilon) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x); used for x >= a + 1.
double gamma_q_fraction(double a, double x)
{
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIterations; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) {
            d = kTiny;
        }
        c = b + an / c;
        if (std::abs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kEpsilon) {
            break;
        }
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x)
{
    if (!(a > 0.0) || !(x >= 0.0)) {
        throw std::invalid_argument("incomplete gamma requires a > 0 and x >= 0");
    }
}

std::vector<double> midranks(std::span<const double> values, double& tie_term)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(n);
    tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) {
            ++j;
        }
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            ranks[order[k]] = rank;
        }
        const auto t = static_cast<double>(j - i);
        tie_term += t * t * t - t;
        i = j;
    }
    return ranks;
}

void check_finite(std::span<const double> values)
{
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("mann_whitney: non-finite sample value");
        }
    }
}

}  // namespace

std::string_view to_string(Alternative alt) noexcept
{
    switch (alt) {
    case Alternative::TwoSided: return "two-sided";
    case Alternative::Less: return "less";
    case Alternative::Greater: return "greater";
    }
    return "?";
}

Alternative parse_alternative(std::string_view text)
{
    if (text == "two-sided" || text == "two_sided") {
        return Alternative::TwoSided;
    }
    if (text == "less") {
        return Alternative::Less;
    }
    if (text == "greater") {
        return Alternative::Greater;
    }
    throw std::invalid_argument("unknown alternative '" + std::string(text) + "'");
}

double regularized_gamma_p(double a, double x)
{
    check_gamma_args(a, x);
    if (x == 0.0) {
        return 0.0;
    }
    if (x < a + 1.0) {
        return gamma_p_series(a, x);
    }
    return 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x)
{
    check_gamma_args(a, x);
    if (x == 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - gamma_p_series(a, x);
    }
    return gamma_q_fraction(a, x);
}

double chi_square_sf(double x, int df)
{
    if (df < 1) {
        throw std::invalid_argument("chi-square df must be >= 1");
    }
    if (x <= 0.0) {
        return 1.0;
    }
    return std::clamp(regularized_gamma_q(df / 2.0, x / 2.0), 0.0, 1.0);
}

double normal_sf(double z)
{
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

TestResult chi_square(const ContingencyTable& table)
{
    const std::size_t r = table.rows();
    const std::size_t c = table.cols();
    if (r < 2 || c < 2) {
        throw DataError("chi_square: table must be at least 2x2, got " + std::to_string(r) + "x" + std::to_string(c));
    }
    for (const auto& row : table.counts) {
        if (row.size() != c) {
            throw DataError("chi_square: ragged contingency table");
        }
    }
    if ((!table.row_labels.empty() && table.row_labels.size() != r) ||
        (!table.col_labels.empty() && table.col_labels.size() != c)) {
        throw DataError("chi_square: labels do not match table shape");
    }
    auto row_name = [&](std::size_t i) { return table.row_labels.empty() ? std::to_string(i) : table.row_labels[i]; };
    auto col_name = [&](std::size_t j) { return table.col_labels.empty() ? std::to_string(j) : table.col_labels[j]; };

    std::vector<double> row_sum(r, 0.0);
    std::vector<double> col_sum(c, 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const std::int64_t v = table.counts[i][j];
            if (v < 0) {
                throw DataError("chi_square: negative count at row " + row_name(i) + ", column " + col_name(j));
            }
            row_sum[i] += static_cast<double>(v);
            col_sum[j] += static_cast<double>(v);
        }
    }
    for (std::size_t i = 0; i < r; ++i) {
        if (row_sum[i] == 0.0) {
            throw DataError("chi_square: row '" + row_name(i) + "' is all zero");
        }
    }
    for (std::size_t j = 0; j < c; ++j) {
        if (col_sum[j] == 0.0) {
            throw DataError("chi_square: column '" + col_name(j) + "' is all zero");
        }
    }
    const double total = std::accumulate(row_sum.begin(), row_sum.end(), 0.0);

    double statistic = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double expected = row_sum[i] * col_sum[j] / total;
            const double diff = static_cast<double>(table.counts[i][j]) - expected;
            statistic += diff * diff / expected;
        }
    }
    TestResult result;
    result.method = "chi_square";
    result.statistic = statistic;
    result.df = static_cast<int>((r - 1) * (c - 1));
    result.p_value = chi_square_sf(statistic, *result.df);
    return result;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b, Alternative alternative)
{
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("mann_whitney_u: both samples must be non-empty");
    }
    check_finite(a);
    check_finite(b);
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    const auto n = static_cast<double>(n1 + n2);
    const double n1d = static_cast<double>(n1);
    const double n2d = static_cast<double>(n2);
    const double mu = n1d * n2d / 2.0;

    TestResult result;
    result.method = "mann_whitney_u";
    result.n1 = n1;
    result.n2 = n2;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const bool all_equal = std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); });
    if (all_equal) {
        result.statistic = mu;
        result.p_value = 1.0;
        return result;
    }
    if (n1 + n2 < 3) {
        throw std::invalid_argument("mann_whitney_u: normal approximation needs n1 + n2 >= 3");
    }

    double tie_term = 0.0;
    const std::vector<double> ranks = midranks(pooled, tie_term);
    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < n1; ++i) {
        rank_sum_a += ranks[i];
    }
    const double u1 = rank_sum_a - n1d * (n1d + 1.0) / 2.0;
    const double u2 = n1d * n2d - u1;
    result.statistic = u1;

    const double variance = n1d * n2d / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    const double sigma = std::sqrt(variance);

    // Upper tail for a statistic u: P(U >= u) with the 0.5 correction.
    auto upper = [&](double u) { return normal_sf((u - mu - 0.5) / sigma); };
    double p = 1.0;
    switch (alternative) {
    case Alternative::TwoSided:
        p = 2.0 * std::min(upper(std::max(u1, u2)), 0.5);
        break;
    case Alternative::Greater:
        p = upper(u1);
        break;
    case Alternative::Less:
        p = upper(u2);
        break;
    }
    result.p_value = std::clamp(p, 0.0, 1.0);
    return result;
}

double mann_whitney_exact(std::span<const double> a, std::span<const double> b)
{
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    if (n1 == 0 || n2 == 0) {
        throw std::invalid_argument("mann_whitney_exact: both samples must be non-empty");
    }
    if (n1 + n2 > 12) {
        throw std::invalid_argument("mann_whitney_exact: limited to n1 + n2 <= 12");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    double tie_term = 0.0;
    const std::vector<double> ranks = midranks(pooled, tie_term);
    if (tie_term != 0.0) {
        throw std::invalid_argument("mann_whitney_exact: ties are not supported");
    }
    long long observed = 0;  // U for a as an integer
    for (std::size_t i = 0; i < n1; ++i) {
        observed += static_cast<long long>(ranks[i]);
    }
    const auto base = static_cast<long long>(n1 * (n1 + 1) / 2);
    observed -= base;

    // Count rank subsets of size n1 by their U value.
    const std::size_t n = n1 + n2;
    std::vector<std::uint64_t> counts(n1 * n2 + 1, 0);
    std::uint64_t total = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(std::popcount(mask)) != n1) {
            continue;
        }
        long long rank_sum = 0;
        for (std::size_t bit = 0; bit < n; ++bit) {
            if (mask & (1u << bit)) {
                rank_sum += static_cast<long long>(bit + 1);
            }
        }
        ++counts[static_cast<std::size_t>(rank_sum - base)];
        ++total;
    }
    std::uint64_t at_most = 0;
    std::uint64_t at_least = 0;
    for (std::size_t u = 0; u < counts.size(); ++u) {
        if (static_cast<long long>(u) <= observed) {
            at_most += counts[u];
        }
        if (static_cast<long long>(u) >= observed) {
            at_least += counts[u];
        }
    }
    const double tail = static_cast<double>(std::min(at_most, at_least)) / static_cast<double>(total);
    return std::min(1.0, 2.0 * tail);
}

}  // namespace topicflow
