#include "stgt/graph.hpp"

#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <stack>

#include "stgt/csv.hpp"
#include "stgt/error.hpp"

namespace stgt {

namespace {

constexpr double kEarthRadiusKm = 6371.0;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

void check_point(const GeoPoint& p) {
    if (!(std::abs(p.lat) <= 90.0) || !(std::abs(p.lon) <= 180.0)) {
        std::ostringstream os;
        os << "coordinates out of range: lat=" << p.lat << " lon=" << p.lon;
        throw ValidationError(os.str());
    }
}

} // namespace

double great_circle_km(const GeoPoint& a, const GeoPoint& b) {
    check_point(a);
    check_point(b);
    const double phi1 = deg2rad(a.lat), phi2 = deg2rad(b.lat);
    const double dphi = deg2rad(b.lat - a.lat);
    const double dlmb = deg2rad(b.lon - a.lon);
    const double s1 = std::sin(dphi / 2.0), s2 = std::sin(dlmb / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

GridGraph build_adjacency(const std::vector<GeoPoint>& coords, double tau_km) {
    if (coords.size() < 2) throw ContractError("build_adjacency: need at least 2 nodes");
    if (!(tau_km > 0.0)) throw ContractError("build_adjacency: tau must be positive");
    const std::size_t n = coords.size();
    GridGraph g;
    g.n_ = n;
    g.tau_ = tau_km;
    g.coords_ = coords;
    g.adj_.assign(n * n, 0);
    g.nbrs_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        g.adj_[i * n + i] = 1;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (great_circle_km(coords[i], coords[j]) < tau_km) {
                g.adj_[i * n + j] = 1;
                g.adj_[j * n + i] = 1;
                g.nbrs_[i].push_back(j);
                g.nbrs_[j].push_back(i);
            }
        }
    }
    return g;
}

GridGraph GridGraph::from_adjacency(std::vector<std::uint8_t> adj, std::size_t n) {
    if (adj.size() != n * n) throw ShapeError("from_adjacency: matrix size mismatch");
    GridGraph g;
    g.n_ = n;
    g.adj_ = std::move(adj);
    g.coords_.assign(n, GeoPoint{});
    g.nbrs_.assign(n, {});
    for (std::size_t i = 0; i < n; ++i) {
        g.adj_[i * n + i] = 1;
        for (std::size_t j = 0; j < n; ++j) {
            if (g.adj_[i * n + j] > 1) throw ValidationError("from_adjacency: entries must be 0/1");
            if (i != j && g.adj_[i * n + j] != g.adj_[j * n + i])
                throw ValidationError("from_adjacency: matrix must be symmetric");
            if (i != j && g.adj_[i * n + j]) g.nbrs_[i].push_back(j);
        }
    }
    return g;
}

std::vector<double> pagerank(const GridGraph& g, double alpha, double tol, int max_iter) {
    const std::size_t n = g.size();
    std::vector<double> pr(n, 1.0 / static_cast<double>(n));
    std::vector<double> next(n);
    const double base = (1.0 - alpha) / static_cast<double>(n);
    for (int it = 0; it < max_iter; ++it) {
        for (std::size_t s = 0; s < n; ++s) {
            double acc = 0.0;
            for (std::size_t j : g.neighbors()[s])
                acc += pr[j] / static_cast<double>(g.degree(j));
            next[s] = base + alpha * acc;
        }
        double delta = 0.0;
        for (std::size_t s = 0; s < n; ++s) delta += std::abs(next[s] - pr[s]);
        pr.swap(next);
        if (delta < tol) return pr;
    }
    throw NumericError("pagerank: no convergence after max_iter iterations");
}

std::vector<double> betweenness(const GridGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> cb(n, 0.0);
    std::vector<std::vector<std::size_t>> pred(n);
    std::vector<double> sigma(n), delta(n);
    std::vector<long> dist(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (auto& p : pred) p.clear();
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(dist.begin(), dist.end(), -1L);
        sigma[s] = 1.0;
        dist[s] = 0;
        std::stack<std::size_t> order;
        std::queue<std::size_t> q;
        q.push(s);
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            order.push(v);
            for (std::size_t w : g.neighbors()[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    q.push(w);
                }
                if (dist[w] == dist[v] + 1) {
                    sigma[w] += sigma[v];
                    pred[w].push_back(v);
                }
            }
        }
        std::fill(delta.begin(), delta.end(), 0.0);
        while (!order.empty()) {
            std::size_t w = order.top();
            order.pop();
            for (std::size_t v : pred[w])
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            if (w != s) cb[w] += delta[w];
        }
    }
    // each unordered {i,j} pair was visited from both endpoints
    for (double& x : cb) x /= 2.0;
    return cb;
}

std::vector<double> closeness(const GridGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> cc(n, 0.0);
    std::vector<long> dist(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1L);
        dist[s] = 0;
        std::queue<std::size_t> q;
        q.push(s);
        long total = 0;
        while (!q.empty()) {
            std::size_t v = q.front();
            q.pop();
            for (std::size_t w : g.neighbors()[v]) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    total += dist[w];
                    q.push(w);
                }
            }
        }
        // sum over the node's component only; nothing reachable -> 0
        cc[s] = total > 0 ? 1.0 / static_cast<double>(total) : 0.0;
    }
    return cc;
}

std::vector<double> clustering_coefficient(const GridGraph& g) {
    const std::size_t n = g.size();
    std::vector<double> cc(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        const auto& nb = g.neighbors()[s];
        const std::size_t k = nb.size();
        if (k < 2) continue;
        std::size_t links = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = a + 1; b < k; ++b)
                if (g.adjacent(nb[a], nb[b])) ++links;
        cc[s] = 2.0 * static_cast<double>(links) / (static_cast<double>(k) * (k - 1.0));
    }
    return cc;
}

TopoFeatures topo_feature_vector(const GridGraph& g) {
    TopoFeatures f;
    const std::size_t n = g.size();
    f.degree.resize(n);
    for (std::size_t s = 0; s < n; ++s) f.degree[s] = static_cast<double>(g.degree(s));
    f.betweenness = betweenness(g);
    f.closeness = closeness(g);
    f.pagerank = pagerank(g);
    f.clustering = clustering_coefficient(g);
    return f;
}

const std::vector<std::string>& TopoFeatures::names() {
    static const std::vector<std::string> n = {"degree", "betweenness", "closeness", "pagerank",
                                               "clustering"};
    return n;
}

double TopoFeatures::value(std::size_t feature, std::size_t node) const {
    switch (feature) {
        case 0: return degree[node];
        case 1: return betweenness[node];
        case 2: return closeness[node];
        case 3: return pagerank[node];
        case 4: return clustering[node];
        default: throw ContractError("TopoFeatures: feature index out of range");
    }
}

void write_edge_list(const GridGraph& g, const std::vector<std::string>& node_ids,
                     const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"src", "dst"});
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j : g.neighbors()[i])
            if (i < j) w.row({node_ids[i], node_ids[j]});
    w.close();
}

void write_node_features(const TopoFeatures& f, const std::vector<std::string>& node_ids,
                         const std::filesystem::path& path) {
    csv::Writer w(path);
    w.row({"node", "degree", "betweenness", "closeness", "pagerank", "clustering"});
    for (std::size_t i = 0; i < node_ids.size(); ++i) {
        w.row({node_ids[i], csv::format_double(f.degree[i]), csv::format_double(f.betweenness[i]),
               csv::format_double(f.closeness[i]), csv::format_double(f.pagerank[i]),
               csv::format_double(f.clustering[i])});
    }
    w.close();
}

} // namespace stgt
