#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stgt {

struct GeoPoint {
    double lat = 0.0; // degrees, [-90, 90]
    double lon = 0.0; // degrees, [-180, 180]
};

/// Haversine distance in kilometers on a sphere of radius 6371.0 km.
/// Throws ValidationError for out-of-range coordinates.
double great_circle_km(const GeoPoint& a, const GeoPoint& b);

/// Proximity graph over substations: A_ij = 1 iff the great-circle distance
/// is strictly below tau (i != j); the diagonal is fixed to 1 so a node can
/// attend to itself. Centrality computations ignore the self-loops.
class GridGraph {
public:
    GridGraph() = default;

    std::size_t size() const { return n_; }
    double tau() const { return tau_; }
    const std::vector<GeoPoint>& coords() const { return coords_; }

    bool adjacent(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }
    const std::vector<std::uint8_t>& adjacency() const { return adj_; }

    /// Neighbor lists without self-loops.
    const std::vector<std::vector<std::size_t>>& neighbors() const { return nbrs_; }
    std::size_t degree(std::size_t i) const { return nbrs_[i].size(); }

    /// Builds the adjacency from an explicit 0/1 matrix (diagonal forced to 1).
    /// Used by tests and the synthetic generator; must be symmetric.
    static GridGraph from_adjacency(std::vector<std::uint8_t> adj, std::size_t n);

private:
    friend GridGraph build_adjacency(const std::vector<GeoPoint>&, double);

    std::size_t n_ = 0;
    double tau_ = 0.0;
    std::vector<GeoPoint> coords_;
    std::vector<std::uint8_t> adj_;
    std::vector<std::vector<std::size_t>> nbrs_;
};

/// Thresholded proximity adjacency. Requires n >= 2 and tau > 0.
GridGraph build_adjacency(const std::vector<GeoPoint>& coords, double tau_km);

/// The five per-node topological descriptors. Self-loops excluded throughout;
/// closeness and betweenness are restricted to connected pairs.
struct TopoFeatures {
    std::vector<double> degree;
    std::vector<double> betweenness;
    std::vector<double> closeness;
    std::vector<double> pagerank;
    std::vector<double> clustering;

    static const std::vector<std::string>& names();
    double value(std::size_t feature, std::size_t node) const;
};

/// PageRank by power iteration on PR(s) = (1-alpha)/N + alpha * sum_{j in N(s)} PR(j)/|N(j)|.
/// Isolated nodes receive the (1-alpha)/N floor; the distribution sums to 1
/// whenever every node has a neighbor. Throws NumericError on non-convergence.
std::vector<double> pagerank(const GridGraph& g, double alpha = 0.85, double tol = 1e-10,
                             int max_iter = 1000);

/// Brandes accumulation over unordered pairs with unit edge weights.
std::vector<double> betweenness(const GridGraph& g);

std::vector<double> closeness(const GridGraph& g);
std::vector<double> clustering_coefficient(const GridGraph& g);

TopoFeatures topo_feature_vector(const GridGraph& g);

/// Edge-list export, one `src,dst` row per undirected edge (src < dst).
void write_edge_list(const GridGraph& g, const std::vector<std::string>& node_ids,
                     const std::filesystem::path& path);

/// Per-node `node,degree,betweenness,closeness,pagerank,clustering` rows.
void write_node_features(const TopoFeatures& f, const std::vector<std::string>& node_ids,
                         const std::filesystem::path& path);

} // namespace stgt
