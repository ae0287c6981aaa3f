#include "pwe/pwe_graph.hpp"

#include <algorithm>
#include <deque>
#include <limits>

namespace pwe {

bool WallGraph::adjacent(int a, int b) const {
    auto it = adjacency.find(a);
    return it != adjacency.end() && it->second.contains(b);
}

std::size_t WallGraph::edgeCount() const {
    std::size_t n = 0;
    for (const auto& [v, nbrs] : adjacency) n += nbrs.size();
    return n / 2;
}

WallGraph buildWallGraph(const Floorplan& fp) {
    WallGraph g;
    std::vector<const Wall*> sdm;
    for (const auto& w : fp.walls) {
        if (w.kind != SurfaceKind::SDM) continue;
        sdm.push_back(&w);
        g.vertices.push_back(w.id);
        g.adjacency[w.id];
    }
    std::sort(g.vertices.begin(), g.vertices.end());
    for (std::size_t a = 0; a < sdm.size(); ++a) {
        const auto ta = sdm[a]->tiles();
        for (std::size_t b = a + 1; b < sdm.size(); ++b) {
            const auto tb = sdm[b]->tiles();
            bool linked = false;
            for (const auto& x : ta) {
                for (const auto& y : tb) {
                    if (tilesLinked(x, y, fp)) {
                        linked = true;
                        break;
                    }
                }
                if (linked) break;
            }
            if (linked) {
                g.adjacency[sdm[a]->id].insert(sdm[b]->id);
                g.adjacency[sdm[b]->id].insert(sdm[a]->id);
            }
        }
    }
    return g;
}

int deviceAdjacentWall(const Floorplan& fp, const DevicePose& dev) {
    int bestId = -1;
    double bestDist = std::numeric_limits<double>::infinity();
    for (const auto& w : fp.walls) {
        if (w.kind != SurfaceKind::SDM) continue;
        for (const auto& t : w.tiles()) {
            if (!deviceSeesTile(dev.position, t, fp)) continue;
            const double d = (t.center - dev.position).norm();
            if (d < bestDist - 1e-12 || (std::abs(d - bestDist) <= 1e-12 && w.id < bestId)) {
                bestDist = d;
                bestId = w.id;
            }
        }
    }
    if (bestId < 0) throw DisconnectedError("disconnected PWE: no SDM wall is visible from the device");
    return bestId;
}

WallPath selectWallPath(const WallGraph& g, const Floorplan& fp, const DevicePose& tx, const DevicePose& rx) {
    const int src = deviceAdjacentWall(fp, tx);
    const int dst = deviceAdjacentWall(fp, rx);
    // Hop distance to the destination, then a greedy walk that always takes
    // the smallest-id neighbour one hop closer.
    std::map<int, int> dist;
    std::deque<int> queue{dst};
    dist[dst] = 0;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int n : g.adjacency.at(v)) {
            if (!dist.contains(n)) {
                dist[n] = dist[v] + 1;
                queue.push_back(n);
            }
        }
    }
    if (!dist.contains(src)) throw DisconnectedError("disconnected PWE: no wall path joins the TX and RX walls");
    WallPath path{src};
    while (path.back() != dst) {
        const int v = path.back();
        for (int n : g.adjacency.at(v)) {  // std::set iterates in ascending id order
            auto it = dist.find(n);
            if (it != dist.end() && it->second == dist[v] - 1) {
                path.push_back(n);
                break;
            }
        }
    }
    return path;
}

std::vector<TileId> firstLayerTiles(const DevicePose& tx, const Wall& wall, const Floorplan& fp) {
    const Vec3 axis = tx.boresight();
    const double half = deg2rad(tx.lobeWidthDeg) / 2.0;
    std::vector<TileId> out;
    for (const auto& t : wall.tiles()) {
        const Vec3 dir = (t.center - tx.position).normalized();
        if (angleBetween(axis, dir) <= half + 1e-12 && deviceSeesTile(tx.position, t, fp)) out.push_back(t.id);
    }
    if (out.empty()) throw std::invalid_argument("TX illuminates no tiles on wall " + std::to_string(wall.id));
    return out;
}

namespace {

// Successive-shortest-path min-cost flow on a small graph. Bellman-Ford keeps
// it correct with the negative residual costs.
class MinCostFlow {
public:
    explicit MinCostFlow(int n) : adj_(n) {}

    void addEdge(int u, int v, int cap, double cost) {
        adj_[u].push_back(static_cast<int>(edges_.size()));
        edges_.push_back({v, cap, cost});
        adj_[v].push_back(static_cast<int>(edges_.size()));
        edges_.push_back({u, 0, -cost});
    }

    int run(int s, int t) {
        int flow = 0;
        const int n = static_cast<int>(adj_.size());
        while (true) {
            std::vector<double> dist(n, std::numeric_limits<double>::infinity());
            std::vector<int> via(n, -1);
            dist[s] = 0.0;
            for (int round = 0; round < n; ++round) {
                bool changed = false;
                for (int u = 0; u < n; ++u) {
                    if (dist[u] == std::numeric_limits<double>::infinity()) continue;
                    for (int e : adj_[u]) {
                        const Edge& ed = edges_[e];
                        if (ed.cap > 0 && dist[u] + ed.cost < dist[ed.to] - 1e-12) {
                            dist[ed.to] = dist[u] + ed.cost;
                            via[ed.to] = e;
                            changed = true;
                        }
                    }
                }
                if (!changed) break;
            }
            if (via[t] < 0) return flow;
            for (int v = t; v != s; v = edges_[via[v] ^ 1].to) {
                edges_[via[v]].cap -= 1;
                edges_[via[v] ^ 1].cap += 1;
            }
            ++flow;
        }
    }

    /// Forward edges out of u that carry flow.
    std::vector<int> saturatedTargets(int u) const {
        std::vector<int> out;
        for (int e : adj_[u])
            if ((e % 2) == 0 && edges_[e ^ 1].cap > 0) out.push_back(edges_[e].to);
        return out;
    }

private:
    struct Edge {
        int to;
        int cap;
        double cost;
    };
    std::vector<std::vector<int>> adj_;
    std::vector<Edge> edges_;
};

}  // namespace

KpConfigResult kpConfig(const Floorplan& fp, const LayerTiles& layers, const DevicePose& tx, const DevicePose& rx,
                        int K) {
    if (K < 1) throw std::invalid_argument("K must be positive");
    if (layers.empty()) throw std::invalid_argument("kpConfig needs at least one layer");

    std::vector<Tile> tiles;
    std::vector<int> layerOf;
    std::vector<std::vector<int>> byLayer(layers.size());
    for (std::size_t k = 0; k < layers.size(); ++k) {
        for (const auto& id : layers[k]) {
            byLayer[k].push_back(static_cast<int>(tiles.size()));
            tiles.push_back(fp.tile(id));
            layerOf.push_back(static_cast<int>(k));
        }
    }
    const int n = static_cast<int>(tiles.size());
    // Nodes: 2i = tile entry, 2i+1 = tile exit, then super-source, source, sink.
    const int superSrc = 2 * n, src = 2 * n + 1, sink = 2 * n + 2;
    MinCostFlow mcf(2 * n + 3);
    mcf.addEdge(superSrc, src, K, 0.0);
    for (int i = 0; i < n; ++i) mcf.addEdge(2 * i, 2 * i + 1, 1, 0.0);
    for (int i : byLayer.front())
        if (deviceSeesTile(tx.position, tiles[i], fp))
            mcf.addEdge(src, 2 * i, 1, (tiles[i].center - tx.position).norm());
    for (std::size_t k = 0; k + 1 < byLayer.size(); ++k)
        for (int i : byLayer[k])
            for (int j : byLayer[k + 1])
                if (tilesLinked(tiles[i], tiles[j], fp))
                    mcf.addEdge(2 * i + 1, 2 * j, 1, (tiles[j].center - tiles[i].center).norm());
    for (int i : byLayer.back())
        if (deviceSeesTile(rx.position, tiles[i], fp))
            mcf.addEdge(2 * i + 1, sink, 1, (rx.position - tiles[i].center).norm());

    const int found = mcf.run(superSrc, sink);
    if (found == 0) throw DisconnectedError("disconnected: no TX-to-RX tile path exists");

    KpConfigResult res;
    res.requested = K;
    for (int first : mcf.saturatedTargets(src)) {
        std::vector<int> idx{first / 2};
        while (true) {
            const auto next = mcf.saturatedTargets(2 * idx.back() + 1);
            if (next.empty() || next.front() == sink) break;
            idx.push_back(next.front() / 2);
        }
        std::vector<TileId> path;
        for (std::size_t p = 0; p < idx.size(); ++p) {
            const Tile& t = tiles[idx[p]];
            const Vec3 prev = p == 0 ? tx.position : tiles[idx[p - 1]].center;
            const Vec3 next = p + 1 == idx.size() ? rx.position : tiles[idx[p + 1]].center;
            res.functions[t.id] = TileFunction::steer((t.center - prev).normalized(), (next - t.center).normalized());
            path.push_back(t.id);
        }
        res.paths.push_back(std::move(path));
    }
    std::sort(res.paths.begin(), res.paths.end());
    return res;
}

KpConfigResult kpConfig(const Floorplan& fp, const DevicePose& tx, const DevicePose& rx, int K) {
    const WallPath path = selectWallPath(buildWallGraph(fp), fp, tx, rx);
    LayerTiles layers;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Wall& w = fp.wall(path[k]);
        if (k == 0) {
            layers.push_back(firstLayerTiles(tx, w, fp));
        } else {
            std::vector<TileId> ids;
            for (const auto& t : w.tiles()) ids.push_back(t.id);
            layers.push_back(std::move(ids));
        }
    }
    return kpConfig(fp, layers, tx, rx, K);
}

}  // namespace pwe
