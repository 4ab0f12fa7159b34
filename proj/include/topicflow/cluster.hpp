#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace topicflow {

/// Per-point labels: -1 marks an outlier, 0..n_clusters-1 are clusters
/// ordered by descending member count (ties: earliest first member).
struct ClusterAssignment {
    std::vector<int> labels;
    std::size_t n_clusters = 0;
    std::size_t n_outliers = 0;
};

/// Renumbers non-negative labels by descending size, ties broken by the index
/// of each cluster's first member. Negative labels become -1.
ClusterAssignment relabel_by_size(std::span<const int> labels);

enum class Metric { Euclidean };

struct HdbscanConfig {
    std::size_t min_cluster_size = 10;
    std::size_t min_samples = 10;
    Metric metric = Metric::Euclidean;
};

struct KMeansConfig {
    std::size_t k = 8;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    double tol = 1e-4;
};

/// Rows of `x` are points.
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x);

/// Distance to the min_samples-th nearest neighbour, counting the point itself.
Eigen::VectorXd core_distances(const Eigen::MatrixXd& distances, std::size_t min_samples);

/// max(core(a), core(b), d(a, b)) with a zero diagonal. Throws
/// std::invalid_argument when there are fewer points than min_samples.
Eigen::MatrixXd mutual_reachability(const Eigen::MatrixXd& x, std::size_t min_samples);

struct MstEdge {
    std::size_t a = 0;
    std::size_t b = 0;
    double weight = 0.0;
};

/// Prim's algorithm over a dense symmetric distance matrix. Ties pick the
/// lowest vertex index. Edges are returned in insertion order.
std::vector<MstEdge> minimum_spanning_tree(const Eigen::MatrixXd& distances);

/// One agglomeration step. Leaves are 0..n-1; merge i creates node n+i.
struct LinkageMerge {
    std::size_t left = 0;
    std::size_t right = 0;
    double distance = 0.0;
    std::size_t size = 0;
};

/// Single-linkage dendrogram from MST edges (stable-sorted by weight).
std::vector<LinkageMerge> single_linkage(std::span<const MstEdge> mst, std::size_t n_points);

/// Edge of the condensed tree. Cluster ids start at n_points (the root);
/// children below n_points are individual points falling out of `parent`.
struct CondensedEdge {
    std::size_t parent = 0;
    std::size_t child = 0;
    double lambda = 0.0;
    std::size_t child_size = 0;
};

std::vector<CondensedEdge> condense_tree(std::span<const LinkageMerge> linkage, std::size_t n_points,
                                         std::size_t min_cluster_size);

/// Mutual reachability, MST, single linkage, condensed tree and
/// excess-of-mass selection (root never selected). Fewer points than
/// min_cluster_size gives all outliers; identical points give one cluster.
ClusterAssignment hdbscan(const Eigen::MatrixXd& x, const HdbscanConfig& config);

struct KMeansResult {
    ClusterAssignment assignment;
    Eigen::MatrixXd centroids;  // rows follow assignment labels
    /// Sum of squared distances after each assignment step.
    std::vector<double> objective_history;
    std::size_t iterations = 0;
};

/// k-means++ seeding and Lloyd iterations. An empty cluster is re-seeded at
/// the point farthest from its current centroid.
KMeansResult kmeans_fit(const Eigen::MatrixXd& x, const KMeansConfig& config);

ClusterAssignment kmeans(const Eigen::MatrixXd& x, const KMeansConfig& config);

}  // namespace topicflow
