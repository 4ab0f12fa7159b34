#include "topicflow/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "topicflow/errors.hpp"
#include "topicflow/rng.hpp"

namespace topicflow {

ClusterAssignment relabel_by_size(std::span<const int> labels)
{
    int max_label = -1;
    for (int l : labels) {
        max_label = std::max(max_label, l);
    }
    const auto n_raw = static_cast<std::size_t>(max_label + 1);
    std::vector<std::size_t> count(n_raw, 0);
    std::vector<std::size_t> first(n_raw, std::numeric_limits<std::size_t>::max());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= 0) {
            const auto l = static_cast<std::size_t>(labels[i]);
            ++count[l];
            first[l] = std::min(first[l], i);
        }
    }
    std::vector<std::size_t> present;
    for (std::size_t l = 0; l < n_raw; ++l) {
        if (count[l] > 0) {
            present.push_back(l);
        }
    }
    std::sort(present.begin(), present.end(), [&](std::size_t a, std::size_t b) {
        if (count[a] != count[b]) {
            return count[a] > count[b];
        }
        return first[a] < first[b];
    });
    std::vector<int> remap(n_raw, -1);
    for (std::size_t rank = 0; rank < present.size(); ++rank) {
        remap[present[rank]] = static_cast<int>(rank);
    }
    ClusterAssignment out;
    out.labels.reserve(labels.size());
    for (int l : labels) {
        const int mapped = l >= 0 ? remap[static_cast<std::size_t>(l)] : -1;
        out.labels.push_back(mapped);
        if (mapped < 0) {
            ++out.n_outliers;
        }
    }
    out.n_clusters = present.size();
    return out;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x)
{
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

Eigen::VectorXd core_distances(const Eigen::MatrixXd& distances, std::size_t min_samples)
{
    const Eigen::Index n = distances.rows();
    if (min_samples < 1 || static_cast<Eigen::Index>(min_samples) > n) {
        throw std::invalid_argument("core distance needs 1 <= min_samples <= n (min_samples=" +
                                    std::to_string(min_samples) + ", n=" + std::to_string(n) + ")");
    }
    Eigen::VectorXd core(n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            row[static_cast<std::size_t>(j)] = distances(i, j);
        }
        // The point itself sits at distance 0 and counts as the first neighbour.
        auto kth = row.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
        std::nth_element(row.begin(), kth, row.end());
        core(i) = *kth;
    }
    return core;
}

Eigen::MatrixXd mutual_reachability(const Eigen::MatrixXd& x, std::size_t min_samples)
{
    const Eigen::MatrixXd d = pairwise_distances(x);
    const Eigen::VectorXd core = core_distances(d, min_samples);
    const Eigen::Index n = d.rows();
    Eigen::MatrixXd mr = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = std::max({core(i), core(j), d(i, j)});
            mr(i, j) = v;
            mr(j, i) = v;
        }
    }
    return mr;
}

std::vector<MstEdge> minimum_spanning_tree(const Eigen::MatrixXd& distances)
{
    const auto n = static_cast<std::size_t>(distances.rows());
    std::vector<MstEdge> edges;
    if (n < 2) {
        return edges;
    }
    edges.reserve(n - 1);
    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<bool> in_tree(n, false);
    std::vector<double> key(n, kInf);
    std::vector<std::size_t> parent(n, 0);
    std::size_t current = 0;
    in_tree[0] = true;
    for (std::size_t added = 1; added < n; ++added) {
        std::size_t best = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (in_tree[v]) {
                continue;
            }
            const double w = distances(static_cast<Eigen::Index>(current), static_cast<Eigen::Index>(v));
            if (w < key[v]) {
                key[v] = w;
                parent[v] = current;
            }
            if (best == n || key[v] < key[best]) {
                best = v;
            }
        }
        in_tree[best] = true;
        edges.push_back(MstEdge{parent[best], best, key[best]});
        current = best;
    }
    return edges;
}

std::vector<LinkageMerge> single_linkage(std::span<const MstEdge> mst, std::size_t n_points)
{
    std::vector<MstEdge> sorted(mst.begin(), mst.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const MstEdge& a, const MstEdge& b) { return a.weight < b.weight; });

    // Union-find over 2n-1 dendrogram nodes.
    std::vector<std::size_t> parent(2 * n_points, 0);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    std::vector<std::size_t> size(2 * n_points, 1);
    auto find = [&](std::size_t x) {
        std::size_t root = x;
        while (parent[root] != root) {
            root = parent[root];
        }
        while (parent[x] != root) {
            const std::size_t next = parent[x];
            parent[x] = root;
            x = next;
        }
        return root;
    };

    std::vector<LinkageMerge> merges;
    merges.reserve(sorted.size());
    std::size_t next_node = n_points;
    for (const MstEdge& e : sorted) {
        const std::size_t ra = find(e.a);
        const std::size_t rb = find(e.b);
        ensure(ra != rb, "single_linkage: MST contains a cycle");
        const std::size_t merged_size = size[ra] + size[rb];
        merges.push_back(LinkageMerge{ra, rb, e.weight, merged_size});
        parent[ra] = next_node;
        parent[rb] = next_node;
        size[next_node] = merged_size;
        ++next_node;
    }
    return merges;
}

std::vector<CondensedEdge> condense_tree(std::span<const LinkageMerge> linkage, std::size_t n_points,
                                         std::size_t min_cluster_size)
{
    std::vector<CondensedEdge> out;
    if (linkage.empty()) {
        return out;
    }
    const std::size_t root = n_points + linkage.size() - 1;

    // Zero distances (duplicated points) would give infinite lambda; they are
    // capped at twice the largest finite lambda in the hierarchy.
    double min_positive = std::numeric_limits<double>::infinity();
    for (const LinkageMerge& m : linkage) {
        if (m.distance > 0.0) {
            min_positive = std::min(min_positive, m.distance);
        }
    }
    const double lambda_cap = std::isfinite(min_positive) ? 2.0 / min_positive : 1.0;
    auto lambda_of = [&](double distance) { return distance > 0.0 ? 1.0 / distance : lambda_cap; };

    auto node_size = [&](std::size_t node) { return node < n_points ? std::size_t{1} : linkage[node - n_points].size; };

    auto collect_leaves = [&](std::size_t node, std::vector<std::size_t>& leaves) {
        std::vector<std::size_t> stack{node};
        while (!stack.empty()) {
            const std::size_t top = stack.back();
            stack.pop_back();
            if (top < n_points) {
                leaves.push_back(top);
            } else {
                const LinkageMerge& m = linkage[top - n_points];
                stack.push_back(m.right);
                stack.push_back(m.left);
            }
        }
    };

    std::vector<std::size_t> relabel(root + 1, 0);
    relabel[root] = n_points;
    std::size_t next_label = n_points + 1;

    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
        const std::size_t node = queue.front();
        queue.pop_front();
        const LinkageMerge& m = linkage[node - n_points];
        const double lambda = lambda_of(m.distance);
        const std::size_t left_size = node_size(m.left);
        const std::size_t right_size = node_size(m.right);
        const std::size_t label = relabel[node];

        auto fall_out = [&](std::size_t child) {
            std::vector<std::size_t> leaves;
            collect_leaves(child, leaves);
            std::sort(leaves.begin(), leaves.end());
            for (std::size_t p : leaves) {
                out.push_back(CondensedEdge{label, p, lambda, 1});
            }
        };
        auto descend = [&](std::size_t child) {
            if (child >= n_points) {
                queue.push_back(child);
            }
        };

        const bool left_big = left_size >= min_cluster_size;
        const bool right_big = right_size >= min_cluster_size;
        if (left_big && right_big) {
            relabel[m.left] = next_label++;
            out.push_back(CondensedEdge{label, relabel[m.left], lambda, left_size});
            relabel[m.right] = next_label++;
            out.push_back(CondensedEdge{label, relabel[m.right], lambda, right_size});
            descend(m.left);
            descend(m.right);
        } else if (!left_big && !right_big) {
            fall_out(m.left);
            fall_out(m.right);
        } else if (!left_big) {
            fall_out(m.left);
            relabel[m.right] = label;
            descend(m.right);
        } else {
            fall_out(m.right);
            relabel[m.left] = label;
            descend(m.left);
        }
    }
    return out;
}

namespace {

/// Excess-of-mass selection over the condensed tree; returns selected
/// cluster ids.
std::vector<std::size_t> select_clusters(std::span<const CondensedEdge> tree, std::size_t n_points)
{
    std::size_t max_cluster = n_points;
    for (const CondensedEdge& e : tree) {
        max_cluster = std::max(max_cluster, e.parent);
        if (e.child >= n_points) {
            max_cluster = std::max(max_cluster, e.child);
        }
    }
    const std::size_t n_clusters = max_cluster - n_points + 1;
    std::vector<double> birth(n_clusters, 0.0);
    for (const CondensedEdge& e : tree) {
        if (e.child >= n_points) {
            birth[e.child - n_points] = e.lambda;
        }
    }
    std::vector<double> stability(n_clusters, 0.0);
    std::vector<std::vector<std::size_t>> children(n_clusters);
    for (const CondensedEdge& e : tree) {
        const std::size_t p = e.parent - n_points;
        stability[p] += (e.lambda - birth[p]) * static_cast<double>(e.child_size);
        if (e.child >= n_points) {
            children[p].push_back(e.child - n_points);
        }
    }

    std::vector<bool> selected(n_clusters, true);
    selected[0] = false;
    auto deselect_subtree = [&](std::size_t c) {
        std::vector<std::size_t> stack(children[c].begin(), children[c].end());
        while (!stack.empty()) {
            const std::size_t top = stack.back();
            stack.pop_back();
            selected[top] = false;
            stack.insert(stack.end(), children[top].begin(), children[top].end());
        }
    };
    // Children always carry larger ids than their parent.
    for (std::size_t c = n_clusters - 1; c >= 1; --c) {
        double subtree = 0.0;
        for (std::size_t child : children[c]) {
            subtree += stability[child];
        }
        if (!children[c].empty() && subtree > stability[c]) {
            selected[c] = false;
            stability[c] = subtree;
        } else {
            deselect_subtree(c);
        }
    }
    std::vector<std::size_t> out;
    for (std::size_t c = 1; c < n_clusters; ++c) {
        if (selected[c]) {
            out.push_back(c + n_points);
        }
    }
    return out;
}

}  // namespace

ClusterAssignment hdbscan(const Eigen::MatrixXd& x, const HdbscanConfig& config)
{
    if (config.min_cluster_size < 2) {
        throw std::invalid_argument("min_cluster_size must be >= 2");
    }
    if (config.min_samples < 1) {
        throw std::invalid_argument("min_samples must be >= 1");
    }
    const auto n = static_cast<std::size_t>(x.rows());
    if (n < config.min_cluster_size) {
        ClusterAssignment all_noise;
        all_noise.labels.assign(n, -1);
        all_noise.n_outliers = n;
        return all_noise;
    }

    const Eigen::MatrixXd mr = mutual_reachability(x, config.min_samples);
    const std::vector<MstEdge> mst = minimum_spanning_tree(mr);
    const bool degenerate =
        std::all_of(mst.begin(), mst.end(), [](const MstEdge& e) { return e.weight == 0.0; }) &&
        pairwise_distances(x).maxCoeff() == 0.0;
    if (degenerate) {
        ClusterAssignment single;
        single.labels.assign(n, 0);
        single.n_clusters = 1;
        return single;
    }

    const std::vector<LinkageMerge> linkage = single_linkage(mst, n);
    const std::vector<CondensedEdge> tree = condense_tree(linkage, n, config.min_cluster_size);
    const std::vector<std::size_t> selected = select_clusters(tree, n);

    // Walk each point up the cluster hierarchy to its nearest selected ancestor.
    std::size_t max_id = n;
    for (const CondensedEdge& e : tree) {
        max_id = std::max({max_id, e.parent, e.child});
    }
    std::vector<std::size_t> parent_of(max_id + 1, std::numeric_limits<std::size_t>::max());
    for (const CondensedEdge& e : tree) {
        parent_of[e.child] = e.parent;
    }
    std::vector<int> selected_index(max_id + 1, -1);
    for (std::size_t i = 0; i < selected.size(); ++i) {
        selected_index[selected[i]] = static_cast<int>(i);
    }
    std::vector<int> raw(n, -1);
    for (std::size_t p = 0; p < n; ++p) {
        std::size_t node = parent_of[p];
        while (node != std::numeric_limits<std::size_t>::max() && node != n) {
            if (selected_index[node] >= 0) {
                raw[p] = selected_index[node];
                break;
            }
            node = parent_of[node];
        }
    }
    return relabel_by_size(raw);
}

namespace {

double squared_distance(const Eigen::MatrixXd& x, Eigen::Index row, const Eigen::MatrixXd& c, Eigen::Index crow)
{
    return (x.row(row) - c.row(crow)).squaredNorm();
}

}  // namespace

KMeansResult kmeans_fit(const Eigen::MatrixXd& x, const KMeansConfig& config)
{
    const Eigen::Index n = x.rows();
    const auto k = static_cast<Eigen::Index>(config.k);
    if (config.k < 1 || k > n) {
        throw std::invalid_argument("k-means needs 1 <= k <= n (k=" + std::to_string(config.k) +
                                    ", n=" + std::to_string(n) + ")");
    }
    Rng rng(config.seed);

    // k-means++ seeding.
    Eigen::MatrixXd centroids(k, x.cols());
    centroids.row(0) = x.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
    std::vector<double> nearest(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        nearest[static_cast<std::size_t>(i)] = squared_distance(x, i, centroids, 0);
    }
    for (Eigen::Index c = 1; c < k; ++c) {
        const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
        Eigen::Index pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double running = 0.0;
            pick = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                running += nearest[static_cast<std::size_t>(i)];
                if (running > target && nearest[static_cast<std::size_t>(i)] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
        }
        centroids.row(c) = x.row(pick);
        for (Eigen::Index i = 0; i < n; ++i) {
            nearest[static_cast<std::size_t>(i)] =
                std::min(nearest[static_cast<std::size_t>(i)], squared_distance(x, i, centroids, c));
        }
    }

    KMeansResult result;
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    auto assign = [&]() {
        double objective = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::Index best = 0;
            double best_d = squared_distance(x, i, centroids, 0);
            for (Eigen::Index c = 1; c < k; ++c) {
                const double d = squared_distance(x, i, centroids, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
            objective += best_d;
        }
        result.objective_history.push_back(objective);
    };

    assign();
    for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
        Eigen::MatrixXd updated = Eigen::MatrixXd::Zero(k, x.cols());
        std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            updated.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                updated.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
            }
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                continue;
            }
            Eigen::Index farthest = 0;
            double farthest_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double d = squared_distance(x, i, updated, labels[static_cast<std::size_t>(i)]);
                if (d > farthest_d) {
                    farthest_d = d;
                    farthest = i;
                }
            }
            updated.row(c) = x.row(farthest);
            labels[static_cast<std::size_t>(farthest)] = static_cast<int>(c);
        }
        const double shift = (updated - centroids).rowwise().norm().maxCoeff();
        centroids = updated;
        ++result.iterations;
        assign();
        if (shift < config.tol) {
            break;
        }
    }

    result.assignment = relabel_by_size(labels);
    // Reorder centroid rows to match the renumbered labels.
    Eigen::MatrixXd ordered(k, x.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        ordered.row(result.assignment.labels[i]) = centroids.row(labels[i]);
    }
    result.centroids = ordered.topRows(static_cast<Eigen::Index>(result.assignment.n_clusters));
    return result;
}

ClusterAssignment kmeans(const Eigen::MatrixXd& x, const KMeansConfig& config)
{
    return kmeans_fit(x, config).assignment;
}

}  // namespace topicflow
