#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "oracles.hpp"
#include "support.hpp"
#include "topicflow/cluster.hpp"

using namespace topicflow;

namespace {

Eigen::MatrixXd two_blobs(Rng& rng, double sigma = 0.05, int per_blob = 50)
{
    return test::stack(test::gaussian_blob(rng, Eigen::RowVector2d(0.0, 0.0), sigma, per_blob),
                       test::gaussian_blob(rng, Eigen::RowVector2d(10.0, 10.0), sigma, per_blob));
}

/// True when `a` and `b` induce the same partition with the same outliers.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    std::map<int, int> forward;
    std::map<int, int> backward;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) {
            return false;
        }
        if (a[i] < 0) {
            continue;
        }
        auto [f, fi] = forward.emplace(a[i], b[i]);
        auto [g, gi] = backward.emplace(b[i], a[i]);
        if (f->second != b[i] || g->second != a[i]) {
            return false;
        }
    }
    return true;
}

double objective(const Eigen::MatrixXd& x, const std::vector<int>& labels, const Eigen::MatrixXd& centroids)
{
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        total += (x.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    }
    return total;
}

}  // namespace

TEST_CASE("mutual reachability examples")
{
    Eigen::MatrixXd two(2, 2);
    two << 0.0, 0.0, 3.0, 4.0;
    const Eigen::MatrixXd d2 = mutual_reachability(two, 1);
    CHECK(d2(0, 1) == doctest::Approx(5.0));
    CHECK(d2(0, 0) == 0.0);

    Eigen::MatrixXd tri(3, 2);
    tri << 0.0, 0.0, 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
    const Eigen::MatrixXd d3 = mutual_reachability(tri, 2);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(d3(i, j) == doctest::Approx(i == j ? 0.0 : 1.0));
        }
    }
    CHECK_THROWS_AS(mutual_reachability(tri, 4), std::invalid_argument);
}

TEST_CASE("mutual reachability dominates the raw distance and is symmetric")
{
    Rng rng(21);
    const Eigen::MatrixXd x = test::gaussian_blob(rng, Eigen::RowVector3d(0, 0, 0), 1.0, 30);
    const Eigen::MatrixXd d = pairwise_distances(x);
    const Eigen::MatrixXd mr = mutual_reachability(x, 5);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 30; ++j) {
            CHECK(mr(i, j) >= d(i, j));
            CHECK(mr(i, j) == mr(j, i));
        }
    }
}

TEST_CASE("MST weight matches the single-linkage oracle")
{
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + static_cast<int>(rng.index(46));
        const Eigen::MatrixXd x = test::gaussian_blob(rng, Eigen::RowVector2d(0, 0), 2.0, n);
        const Eigen::MatrixXd mr = mutual_reachability(x, 1 + rng.index(4));
        const auto mst = minimum_spanning_tree(mr);
        REQUIRE(mst.size() == static_cast<std::size_t>(n - 1));
        double weight = 0.0;
        for (const MstEdge& e : mst) {
            weight += e.weight;
        }
        std::vector<double> heights = oracle::single_linkage(mr);
        CHECK(std::abs(weight - std::accumulate(heights.begin(), heights.end(), 0.0)) < 1e-9);

        const auto linkage = single_linkage(mst, static_cast<std::size_t>(n));
        std::vector<double> merged;
        for (const LinkageMerge& m : linkage) {
            merged.push_back(m.distance);
        }
        std::sort(heights.begin(), heights.end());
        REQUIRE(merged.size() == heights.size());
        for (std::size_t i = 0; i < merged.size(); ++i) {
            CHECK(std::abs(merged[i] - heights[i]) < 1e-9);
        }
        CHECK(linkage.back().size == static_cast<std::size_t>(n));
    }
}

TEST_CASE("two separated blobs give exactly two clusters")
{
    Rng rng(1);
    const Eigen::MatrixXd x = two_blobs(rng);
    const ClusterAssignment a = hdbscan(x, HdbscanConfig{5, 5, Metric::Euclidean});
    CHECK(a.n_clusters == 2);
    CHECK(a.n_outliers == 0);
    for (int i = 1; i < 50; ++i) {
        CHECK(a.labels[static_cast<std::size_t>(i)] == a.labels[0]);
        CHECK(a.labels[static_cast<std::size_t>(50 + i)] == a.labels[50]);
    }
    CHECK(a.labels[0] != a.labels[50]);
}

TEST_CASE("a distant point becomes the only outlier")
{
    Rng rng(2);
    Eigen::MatrixXd x(101, 2);
    x << two_blobs(rng), Eigen::RowVector2d(100.0, 100.0);
    const ClusterAssignment a = hdbscan(x, HdbscanConfig{5, 5, Metric::Euclidean});
    CHECK(a.n_clusters == 2);
    CHECK(a.n_outliers == 1);
    CHECK(a.labels[100] == -1);
}

TEST_CASE("hdbscan degenerate inputs")
{
    Eigen::MatrixXd few(3, 2);
    few << 0, 0, 1, 1, 2, 2;
    const ClusterAssignment a = hdbscan(few, HdbscanConfig{5, 5, Metric::Euclidean});
    CHECK(a.n_clusters == 0);
    CHECK(a.n_outliers == 3);
    CHECK(std::all_of(a.labels.begin(), a.labels.end(), [](int l) { return l == -1; }));

    const Eigen::MatrixXd same = Eigen::MatrixXd::Constant(20, 3, 1.5);
    const ClusterAssignment b = hdbscan(same, HdbscanConfig{5, 5, Metric::Euclidean});
    CHECK(b.n_clusters == 1);
    CHECK(b.n_outliers == 0);
}

TEST_CASE("hdbscan labels are ordered by cluster size")
{
    Rng rng(4);
    const Eigen::MatrixXd x = test::stack(test::gaussian_blob(rng, Eigen::RowVector2d(0, 0), 0.1, 20),
                                          test::gaussian_blob(rng, Eigen::RowVector2d(20, 0), 0.1, 45));
    const ClusterAssignment a = hdbscan(x, HdbscanConfig{5, 5, Metric::Euclidean});
    REQUIRE(a.n_clusters == 2);
    CHECK(a.labels[0] == 1);
    CHECK(a.labels[30] == 0);
}

TEST_CASE("relabel_by_size breaks ties on the first member")
{
    const std::vector<int> raw = {7, 3, 3, 7, -5, 9};
    const ClusterAssignment a = relabel_by_size(raw);
    CHECK(a.labels == std::vector<int>{0, 1, 1, 0, -1, 2});
    CHECK(a.n_clusters == 3);
    CHECK(a.n_outliers == 1);
}

TEST_CASE("hdbscan is invariant under rigid motions")
{
    Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd x(0, 2);
        for (int b = 0; b < 3; ++b) {
            const Eigen::RowVector2d c(rng.normal() * 6.0, rng.normal() * 6.0);
            x = test::stack(x, test::gaussian_blob(rng, c, 0.3 + rng.uniform(), 15 + static_cast<int>(rng.index(20))));
        }
        const double angle = rng.uniform() * 6.283185307179586;
        Eigen::Matrix2d rot;
        rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
        const Eigen::RowVector2d shift(rng.normal() * 50.0, rng.normal() * 50.0);
        const Eigen::MatrixXd moved = (x * rot.transpose()).rowwise() + shift;
        const HdbscanConfig config{6, 4, Metric::Euclidean};
        CHECK(same_partition(hdbscan(x, config).labels, hdbscan(moved, config).labels));
    }
}

TEST_CASE("outlier fraction does not decrease with min_cluster_size")
{
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::MatrixXd x = test::stack(test::gaussian_blob(rng, Eigen::RowVector2d(0, 0), 1.0, 40),
                                        test::gaussian_blob(rng, Eigen::RowVector2d(8, 3), 0.6, 25));
        x = test::stack(x, test::gaussian_blob(rng, Eigen::RowVector2d(4, 4), 5.0, 15));
        std::size_t previous = 0;
        for (std::size_t mcs = 2; mcs <= 40; ++mcs) {
            const ClusterAssignment a = hdbscan(x, HdbscanConfig{mcs, 5, Metric::Euclidean});
            CHECK_MESSAGE(a.n_outliers >= previous, "min_cluster_size " << mcs);
            previous = a.n_outliers;
        }
    }
}

TEST_CASE("kmeans basics")
{
    Rng rng(17);
    const Eigen::MatrixXd x = two_blobs(rng, 0.5, 30);
    const ClusterAssignment one = kmeans(x, KMeansConfig{1, 5, 300, 1e-4});
    CHECK(std::all_of(one.labels.begin(), one.labels.end(), [](int l) { return l == 0; }));

    const ClusterAssignment two = kmeans(x, KMeansConfig{2, 5, 300, 1e-4});
    CHECK(two.n_outliers == 0);
    std::vector<int> truth(60, 0);
    std::fill(truth.begin() + 30, truth.end(), 1);
    CHECK(same_partition(two.labels, truth));

    CHECK(kmeans(x, KMeansConfig{3, 42, 300, 1e-4}).labels == kmeans(x, KMeansConfig{3, 42, 300, 1e-4}).labels);
    CHECK_THROWS(kmeans(x, KMeansConfig{61, 1, 300, 1e-4}));
}

TEST_CASE("kmeans objective never increases")
{
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd x = test::gaussian_blob(rng, Eigen::RowVector3d(0, 0, 0), 3.0, 80);
        const KMeansResult r = kmeans_fit(x, KMeansConfig{2 + rng.index(6), rng.next(), 300, 1e-6});
        REQUIRE(!r.objective_history.empty());
        for (std::size_t i = 1; i < r.objective_history.size(); ++i) {
            CHECK(r.objective_history[i] <= r.objective_history[i - 1] + 1e-9);
        }
        CHECK(objective(x, r.assignment.labels, r.centroids) <= r.objective_history.front() + 1e-9);
    }
}

TEST_CASE("kmeans with duplicate points reseeds empty clusters")
{
    Eigen::MatrixXd x(6, 1);
    x << 0, 0, 0, 0, 0, 5;
    const ClusterAssignment a = kmeans(x, KMeansConfig{3, 1, 50, 1e-6});
    CHECK(a.labels.size() == 6);
    CHECK(a.n_outliers == 0);
    for (int l : a.labels) {
        CHECK(l >= 0);
        CHECK(l < static_cast<int>(a.n_clusters));
    }
}
