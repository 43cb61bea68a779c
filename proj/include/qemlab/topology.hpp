#pragma once

// Qubit connectivity graphs: the 27-node heavy-hex coupling map, node
// exclusion, canonical nested sub-lattices, matching-based edge colouring
// (which schedules simultaneously driven two-qubit gates) and simple-path
// search for GHZ chains.
//
// Node indices are stable: excluding a node removes it from the active set
// and drops its incident edges, but never renumbers the survivors.

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace qemlab {

using Edge = std::pair<int, int>;

inline Edge make_edge(int a, int b) {
    if (a == b) throw std::invalid_argument("self-loop");
    return a < b ? Edge{a, b} : Edge{b, a};
}

struct Topology {
    int node_count = 0;
    std::vector<Edge> edges;                             // normalised (a<b), sorted, unique
    std::vector<char> active;                            // size node_count
    std::vector<std::array<double, 2>> coordinates;      // optional, reporting only

    std::vector<int> active_nodes() const {
        std::vector<int> out;
        for (int i = 0; i < node_count; ++i)
            if (active[i]) out.push_back(i);
        return out;
    }

    int active_count() const {
        return static_cast<int>(std::count(active.begin(), active.end(), char(1)));
    }

    bool has_edge(int a, int b) const {
        return std::binary_search(edges.begin(), edges.end(), make_edge(a, b));
    }

    std::vector<int> neighbors(int n) const {
        std::vector<int> out;
        for (const auto& [a, b] : edges) {
            if (a == n) out.push_back(b);
            if (b == n) out.push_back(a);
        }
        return out;
    }

    int degree(int n) const { return static_cast<int>(neighbors(n).size()); }

    int max_degree() const {
        int d = 0;
        for (int n : active_nodes()) d = std::max(d, degree(n));
        return d;
    }

    bool is_connected() const {
        auto nodes = active_nodes();
        if (nodes.empty()) return true;
        std::vector<char> seen(node_count, 0);
        std::vector<int> stack{nodes.front()};
        seen[nodes.front()] = 1;
        while (!stack.empty()) {
            int n = stack.back();
            stack.pop_back();
            for (int m : neighbors(n))
                if (!seen[m]) {
                    seen[m] = 1;
                    stack.push_back(m);
                }
        }
        for (int n : nodes)
            if (!seen[n]) return false;
        return true;
    }

    // BFS 2-colouring; heavy-hex instances must pass.
    bool is_bipartite() const {
        std::vector<int> color(node_count, -1);
        for (int start : active_nodes()) {
            if (color[start] != -1) continue;
            color[start] = 0;
            std::vector<int> stack{start};
            while (!stack.empty()) {
                int n = stack.back();
                stack.pop_back();
                for (int m : neighbors(n)) {
                    if (color[m] == -1) {
                        color[m] = 1 - color[n];
                        stack.push_back(m);
                    } else if (color[m] == color[n]) {
                        return false;
                    }
                }
            }
        }
        return true;
    }

    void validate() const {
        if (static_cast<int>(active.size()) != node_count)
            throw std::invalid_argument("active mask size mismatch");
        Edge prev{-1, -1};
        for (const auto& e : edges) {
            if (e.first < 0 || e.second >= node_count || e.first >= e.second)
                throw std::invalid_argument("bad edge");
            if (!active[e.first] || !active[e.second])
                throw std::invalid_argument("edge touching inactive node");
            if (e == prev) throw std::invalid_argument("duplicate edge");
            prev = e;
        }
        if (!std::is_sorted(edges.begin(), edges.end()))
            throw std::invalid_argument("edges not sorted");
    }
};

struct EdgeColoring {
    std::vector<std::vector<Edge>> classes;

    int class_of(const Edge& e) const {
        for (size_t k = 0; k < classes.size(); ++k)
            if (std::find(classes[k].begin(), classes[k].end(), e) != classes[k].end())
                return static_cast<int>(k);
        return -1;
    }
};

namespace detail {

// Edge list of the 27-qubit heavy-hex coupling map used throughout the
// repository.  Two horizontal rails joined by three rungs, plus four spur
// qubits; max degree 3.  data/heavy_hex_27.json carries the same list.
inline const std::vector<Edge>& heavy_hex_27_edges() {
    static const std::vector<Edge> edges = {
        {0, 1},   {1, 2},   {1, 4},   {2, 3},   {3, 5},   {4, 7},   {5, 8},
        {6, 7},   {7, 10},  {8, 9},   {8, 11},  {10, 12}, {11, 14}, {12, 13},
        {12, 15}, {13, 14}, {14, 16}, {15, 18}, {16, 19}, {17, 18}, {18, 21},
        {19, 20}, {19, 22}, {21, 23}, {22, 25}, {23, 24}, {24, 25}, {25, 26}};
    return edges;
}

inline std::vector<std::array<double, 2>> heavy_hex_27_coords() {
    std::vector<std::array<double, 2>> c(27, {0, 0});
    const int top[] = {0, 1, 4, 7, 10, 12, 15, 18, 21, 23};
    const int bot[] = {3, 5, 8, 11, 14, 16, 19, 22, 25, 26};
    for (int i = 0; i < 10; ++i) c[top[i]] = {double(i), 0.0};
    for (int i = 0; i < 10; ++i) c[bot[i]] = {double(i + 1), 2.0};
    c[6] = {3, -1};
    c[17] = {7, -1};
    c[2] = {1, 1};
    c[13] = {5, 1};
    c[24] = {9, 1};
    c[9] = {4, 3};
    c[20] = {8, 3};
    return c;
}

// Order in which nodes join the canonical nested sub-lattices.  Every prefix
// is connected; the first twelve nodes close the central heavy-hex cell.
inline const std::vector<int>& sublattice_order() {
    static const std::vector<int> order = {1,  2,  3,  5,  8,  11, 14, 13, 12,
                                           10, 7,  4,  0,  6,  9,  15, 18, 17,
                                           21, 23, 24, 25, 26, 22, 19, 16, 20};
    return order;
}

}  // namespace detail

inline Topology heavy_hex_27() {
    Topology t;
    t.node_count = 27;
    t.edges = detail::heavy_hex_27_edges();
    t.active.assign(27, 1);
    t.coordinates = detail::heavy_hex_27_coords();
    t.validate();
    return t;
}

inline Topology exclude_node(const Topology& t, int node) {
    if (node < 0 || node >= t.node_count || !t.active[node])
        throw std::invalid_argument("exclude_node: unknown or already excluded node " +
                                    std::to_string(node));
    Topology out = t;
    out.active[node] = 0;
    out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(),
                                   [&](const Edge& e) { return e.first == node || e.second == node; }),
                    out.edges.end());
    return out;
}

// Induced subgraph on the given nodes (indices preserved).
inline Topology induced_subgraph(const Topology& t, const std::vector<int>& nodes) {
    std::vector<char> keep(t.node_count, 0);
    for (int n : nodes) {
        if (n < 0 || n >= t.node_count || !t.active[n])
            throw std::invalid_argument("induced_subgraph: bad node " + std::to_string(n));
        keep[n] = 1;
    }
    Topology out = t;
    out.active = keep;
    out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(),
                                   [&](const Edge& e) { return !keep[e.first] || !keep[e.second]; }),
                    out.edges.end());
    return out;
}

// First `size` nodes of the canonical nested ordering on the 27-node map.
inline Topology heavy_hex_sublattice(int size) {
    if (size < 1 || size > 27) throw std::invalid_argument("sublattice size out of range");
    const auto& order = detail::sublattice_order();
    std::vector<int> nodes(order.begin(), order.begin() + size);
    return induced_subgraph(heavy_hex_27(), nodes);
}

// Dense renumbering for simulators: returns the compacted topology plus the
// original index of each compact node.
inline std::pair<Topology, std::vector<int>> compact(const Topology& t) {
    std::vector<int> ids = t.active_nodes();
    std::vector<int> to_new(t.node_count, -1);
    for (size_t i = 0; i < ids.size(); ++i) to_new[ids[i]] = static_cast<int>(i);
    Topology out;
    out.node_count = static_cast<int>(ids.size());
    out.active.assign(ids.size(), 1);
    for (const auto& e : t.edges) out.edges.push_back(make_edge(to_new[e.first], to_new[e.second]));
    std::sort(out.edges.begin(), out.edges.end());
    if (!t.coordinates.empty()) {
        out.coordinates.resize(ids.size());
        for (size_t i = 0; i < ids.size(); ++i) out.coordinates[i] = t.coordinates[ids[i]];
    }
    out.validate();
    return {out, ids};
}

namespace detail {

// Proper edge colouring by greedy assignment over lexicographically sorted
// edges.  When the greedy pass would exceed the degree bound on a bipartite
// graph, the conflict is repaired by flipping an alternating two-colour path
// (Koenig construction), keeping heavy-hex instances at three classes.
inline std::vector<int> color_edges_impl(const Topology& t, int& num_classes) {
    const int m = static_cast<int>(t.edges.size());
    std::vector<int> color(m, -1);
    // node -> class -> edge index using that class at the node (-1 if free)
    const int cap = 2 * std::max(3, t.max_degree()) + 2;
    std::vector<std::vector<int>> used(t.node_count, std::vector<int>(cap, -1));
    num_classes = 0;

    auto first_free = [&](int node, int limit) {
        for (int c = 0; c < limit; ++c)
            if (used[node][c] == -1) return c;
        throw std::logic_error("edge colouring: no free class below degree bound");
    };
    auto other_end = [&](int e, int node) {
        return t.edges[e].first == node ? t.edges[e].second : t.edges[e].first;
    };

    const bool bip = t.is_bipartite();
    const int bound = std::max(3, t.max_degree());

    for (int ei = 0; ei < m; ++ei) {
        auto [u, v] = t.edges[ei];
        int c = -1;
        for (int k = 0; k < cap; ++k)
            if (used[u][k] == -1 && used[v][k] == -1) {
                c = k;
                break;
            }
        if (bip && c >= bound) {
            const int a = first_free(u, bound);
            const int b = first_free(v, bound);
            // Collect the a/b alternating path starting from v, then flip it.
            std::vector<int> path;
            int node = v, want = a;
            while (used[node][want] != -1) {
                int e = used[node][want];
                path.push_back(e);
                node = other_end(e, node);
                want = (want == a) ? b : a;
            }
            for (int e : path) {
                used[t.edges[e].first][color[e]] = -1;
                used[t.edges[e].second][color[e]] = -1;
            }
            for (int e : path) {
                color[e] = (color[e] == a) ? b : a;
                used[t.edges[e].first][color[e]] = e;
                used[t.edges[e].second][color[e]] = e;
            }
            c = a;
        }
        color[ei] = c;
        used[u][c] = ei;
        used[v][c] = ei;
        num_classes = std::max(num_classes, c + 1);
    }
    return color;
}

}  // namespace detail

// Deterministic matching partition of the edge set.  Heavy-hex instances
// (degree <= 3, bipartite) colour in exactly three classes.
inline EdgeColoring color_edges(const Topology& t) {
    int num_classes = 0;
    std::vector<int> color = detail::color_edges_impl(t, num_classes);
    EdgeColoring out;
    out.classes.assign(num_classes, {});
    for (size_t i = 0; i < t.edges.size(); ++i) out.classes[color[i]].push_back(t.edges[i]);
    return out;
}

inline void validate_coloring(const Topology& t, const EdgeColoring& c) {
    std::set<Edge> seen;
    for (const auto& cls : c.classes) {
        std::set<int> nodes;
        for (const auto& e : cls) {
            if (!t.has_edge(e.first, e.second)) throw std::invalid_argument("colouring has foreign edge");
            if (!nodes.insert(e.first).second || !nodes.insert(e.second).second)
                throw std::invalid_argument("colour class is not a matching");
            if (!seen.insert(e).second) throw std::invalid_argument("edge coloured twice");
        }
    }
    if (seen.size() != t.edges.size()) throw std::invalid_argument("colouring misses edges");
}

namespace detail {

inline bool chain_dfs(const Topology& t, std::vector<int>& path, std::vector<char>& on_path,
                      int want) {
    if (static_cast<int>(path.size()) == want) return true;
    std::vector<int> nb = t.neighbors(path.back());
    std::sort(nb.begin(), nb.end());
    for (int nxt : nb) {
        if (on_path[nxt]) continue;
        path.push_back(nxt);
        on_path[nxt] = 1;
        if (chain_dfs(t, path, on_path, want)) return true;
        on_path[nxt] = 0;
        path.pop_back();
    }
    return false;
}

}  // namespace detail

// Deterministic simple path of `length` nodes: depth-first search trying
// start nodes and neighbours in ascending index order.
inline std::vector<int> longest_chain(const Topology& t, int length) {
    if (length < 1 || length > t.active_count())
        throw std::invalid_argument("longest_chain: no simple path of length " +
                                    std::to_string(length));
    for (int start : t.active_nodes()) {
        std::vector<int> path{start};
        std::vector<char> on_path(t.node_count, 0);
        on_path[start] = 1;
        if (detail::chain_dfs(t, path, on_path, length)) return path;
    }
    throw std::invalid_argument("longest_chain: no simple path of length " +
                                std::to_string(length));
}

inline nlohmann::json topology_to_json(const Topology& t) {
    nlohmann::json j;
    j["nodes"] = t.active_nodes();
    auto& je = j["edges"] = nlohmann::json::array();
    for (const auto& e : t.edges) je.push_back({e.first, e.second});
    return j;
}

inline Topology topology_from_json(const nlohmann::json& j) {
    Topology t;
    std::vector<int> nodes = j.at("nodes").get<std::vector<int>>();
    t.node_count = nodes.empty() ? 0 : *std::max_element(nodes.begin(), nodes.end()) + 1;
    t.active.assign(t.node_count, 0);
    for (int n : nodes) t.active[n] = 1;
    for (const auto& e : j.at("edges")) t.edges.push_back(make_edge(e.at(0), e.at(1)));
    std::sort(t.edges.begin(), t.edges.end());
    t.validate();
    return t;
}

}  // namespace qemlab
