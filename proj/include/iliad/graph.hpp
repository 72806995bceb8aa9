#pragma once

// Undirected navigation graph with attribute atoms per node, all-pairs BFS
// distances, shortest-path utilities with a lowest-id tie break, and the
// SDTW path-similarity metric.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

#include "iliad/rng.hpp"

#include "json.hpp"

namespace iliad::nav {

using nlohmann::json;

inline const std::vector<std::string>& room_inventory() {
    static const std::vector<std::string> rooms{"kitchen", "bedroom",  "bathroom", "office",
                                                "library", "garden",   "hallway",  "studio"};
    return rooms;
}

inline const std::vector<std::string>& color_inventory() {
    static const std::vector<std::string> colors{"red",    "blue",   "green", "white",
                                                 "yellow", "purple", "orange", "gray"};
    return colors;
}

struct NavNode {
    int room = 0;   // index into room_inventory()
    int color = 0;  // index into color_inventory()
};

class NavGraph {
public:
    static constexpr int kUnreachable = 1 << 20;

    NavGraph() = default;

    // Connected random graph: spanning tree plus extra edges. Every node gets
    // a distinct (color, room) pair so destination phrases are unambiguous.
    static NavGraph generate(int n_nodes, Rng rng, double extra_edge_factor = 1.0) {
        const int n_rooms = static_cast<int>(room_inventory().size());
        const int n_colors = static_cast<int>(color_inventory().size());
        if (n_nodes < 2 || n_nodes > n_rooms * n_colors)
            throw std::invalid_argument("node count out of range for distinct attribute pairs");

        NavGraph g;
        g.nodes_.resize(n_nodes);
        std::vector<int> pairs(n_rooms * n_colors);
        for (int i = 0; i < static_cast<int>(pairs.size()); ++i) pairs[i] = i;
        for (int i = static_cast<int>(pairs.size()) - 1; i > 0; --i)
            std::swap(pairs[i], pairs[rng.below(i + 1)]);
        for (int v = 0; v < n_nodes; ++v) {
            g.nodes_[v].room = pairs[v] % n_rooms;
            g.nodes_[v].color = pairs[v] / n_rooms;
        }

        g.adj_.assign(n_nodes, {});
        // random spanning tree: attach each new node to a uniformly chosen
        // earlier node
        for (int v = 1; v < n_nodes; ++v) g.add_edge(v, static_cast<int>(rng.below(v)));
        const int extra = static_cast<int>(extra_edge_factor * n_nodes);
        for (int i = 0; i < extra; ++i) {
            const int u = static_cast<int>(rng.below(n_nodes));
            const int v = static_cast<int>(rng.below(n_nodes));
            if (u != v) g.add_edge(u, v);
        }
        for (auto& list : g.adj_) {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
        }
        g.compute_distances();
        return g;
    }

    int size() const { return static_cast<int>(nodes_.size()); }
    const NavNode& node(int v) const { return nodes_[v]; }
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }

    bool has_edge(int u, int v) const {
        return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
    }

    int distance(int u, int v) const { return dist_[u * size() + v]; }

    // First hop of a shortest u -> goal path; ties broken by lowest node id.
    int first_hop(int u, int goal) const {
        if (u == goal) return u;
        int best = -1;
        for (int w : adj_[u])
            if (distance(w, goal) == distance(u, goal) - 1) {
                best = w;
                break;  // neighbors are sorted ascending
            }
        if (best < 0) throw std::runtime_error("goal unreachable");
        return best;
    }

    // Deterministic shortest path (lowest-id tie break at every hop).
    std::vector<int> shortest_path(int u, int goal) const {
        std::vector<int> path{u};
        int cur = u;
        while (cur != goal) {
            cur = first_hop(cur, goal);
            path.push_back(cur);
        }
        return path;
    }

    // Uniformly random shortest path, counting shortest paths through each
    // neighbor to keep the draw exact.
    std::vector<int> random_shortest_path(int u, int goal, Rng& rng) const {
        std::vector<int> path{u};
        int cur = u;
        while (cur != goal) {
            std::vector<int> options;
            for (int w : adj_[cur])
                if (distance(w, goal) == distance(cur, goal) - 1) options.push_back(w);
            cur = options[rng.below(options.size())];
            path.push_back(cur);
        }
        return path;
    }

    json to_json() const {
        json nodes = json::array();
        for (int v = 0; v < size(); ++v)
            nodes.push_back({{"id", v},
                             {"room", room_inventory()[nodes_[v].room]},
                             {"color", color_inventory()[nodes_[v].color]}});
        json edges = json::array();
        for (int u = 0; u < size(); ++u)
            for (int v : adj_[u])
                if (u < v) edges.push_back({u, v});
        return json{{"nodes", nodes}, {"edges", edges}};
    }

private:
    void add_edge(int u, int v) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }

    void compute_distances() {
        const int n = size();
        dist_.assign(static_cast<std::size_t>(n) * n, kUnreachable);
        for (int src = 0; src < n; ++src) {
            int* d = dist_.data() + static_cast<std::size_t>(src) * n;
            d[src] = 0;
            std::deque<int> queue{src};
            while (!queue.empty()) {
                const int u = queue.front();
                queue.pop_front();
                for (int v : adj_[u])
                    if (d[v] == kUnreachable) {
                        d[v] = d[u] + 1;
                        queue.push_back(v);
                    }
            }
        }
    }

    std::vector<NavNode> nodes_;
    std::vector<std::vector<int>> adj_;
    std::vector<int> dist_;
};

// Dynamic time warping between two node paths under the graph hop metric,
// standard monotone alignment recurrence.
inline double dtw_cost(const NavGraph& g, const std::vector<int>& path,
                       const std::vector<int>& ref) {
    if (path.empty() || ref.empty()) throw std::invalid_argument("dtw on empty path");
    const std::size_t n = path.size(), m = ref.size();
    std::vector<double> d(n * m, 0.0);
    auto cost = [&](std::size_t i, std::size_t j) {
        return static_cast<double>(g.distance(path[i], ref[j]));
    };
    d[0] = cost(0, 0);
    for (std::size_t i = 1; i < n; ++i) d[i * m] = cost(i, 0) + d[(i - 1) * m];
    for (std::size_t j = 1; j < m; ++j) d[j] = cost(0, j) + d[j - 1];
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j < m; ++j)
            d[i * m + j] = cost(i, j) + std::min({d[(i - 1) * m + j], d[i * m + j - 1],
                                                  d[(i - 1) * m + j - 1]});
    return d[n * m - 1];
}

// Success-weighted DTW similarity in [0, 1]: the success indicator (final
// node within radius of the reference's final node) scaled by
// exp(-DTW / (radius * |ref|)).
inline double sdtw(const NavGraph& g, const std::vector<int>& path, const std::vector<int>& ref,
                   int radius = 1) {
    if (path.empty() || ref.empty()) throw std::invalid_argument("sdtw on empty path");
    if (g.distance(path.back(), ref.back()) > radius) return 0.0;
    return std::exp(-dtw_cost(g, path, ref) / (static_cast<double>(radius) * ref.size()));
}

}  // namespace iliad::nav
