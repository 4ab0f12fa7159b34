#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace topicflow {

struct ContingencyTable {
    std::vector<std::vector<std::int64_t>> counts;  // rows x cols
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;

    [[nodiscard]] std::size_t rows() const noexcept { return counts.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return counts.empty() ? 0 : counts.front().size(); }
};

struct TestResult {
    std::string method;  // "chi_square", "mann_whitney_u"
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<int> df;
    std::optional<std::size_t> n1;
    std::optional<std::size_t> n2;
};

enum class Alternative { TwoSided, Less, Greater };

std::string_view to_string(Alternative alt) noexcept;
Alternative parse_alternative(std::string_view text);

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
double chi_square_sf(double x, int df);

/// Standard normal upper tail.
double normal_sf(double z);

/// Pearson statistic without continuity correction. Labels may be empty;
/// otherwise they must match the table shape. A zero row or column, fewer
/// than two rows or columns, or a negative count throws DataError.
TestResult chi_square(const ContingencyTable& table);

/// U is reported for sample `a`. Midranks for ties, tie-corrected variance,
/// 0.5 continuity correction. When every value is identical the result is
/// p = 1 and U = n1*n2/2.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b,
                          Alternative alternative = Alternative::TwoSided);

/// Exact two-sided p by enumerating every rank assignment. Requires
/// n1 + n2 <= 12 and no ties; throws std::invalid_argument otherwise.
double mann_whitney_exact(std::span<const double> a, std::span<const double> b);

}  // namespace topicflow
