#include <doctest.h>

#include <deque>
#include <functional>

#include "gen.hpp"
#include "pwe/experiments.hpp"
#include "pwe/pwe_graph.hpp"

using namespace pwe;
using pwe::test::Gen;

namespace {

// Adjacency from an exhaustive tile-pair scan, then BFS hop distance.
int bfsHops(const Floorplan& fp, int from, int to) {
    std::map<int, std::set<int>> adj;
    for (const auto& a : fp.walls)
        for (const auto& b : fp.walls) {
            if (a.id >= b.id || a.kind != SurfaceKind::SDM || b.kind != SurfaceKind::SDM) continue;
            for (const auto& x : a.tiles())
                for (const auto& y : b.tiles())
                    if (tilesLinked(x, y, fp)) {
                        adj[a.id].insert(b.id);
                        adj[b.id].insert(a.id);
                    }
        }
    std::map<int, int> dist{{from, 0}};
    std::deque<int> q{from};
    while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int n : adj[v])
            if (!dist.contains(n)) {
                dist[n] = dist[v] + 1;
                q.push_back(n);
            }
    }
    return dist.contains(to) ? dist[to] : -1;
}

struct PathSet {
    int count = 0;
    double length = 0.0;
};

// Exhaustive search over every set of tile-disjoint TX-to-RX chains.
PathSet bestDisjointPaths(const Floorplan& fp, const LayerTiles& layers, const DevicePose& tx, const DevicePose& rx,
                          int K) {
    std::vector<std::pair<std::vector<TileId>, double>> chains;
    std::vector<TileId> cur;
    std::function<void(std::size_t, double)> grow = [&](std::size_t k, double len) {
        if (k == layers.size()) {
            const Tile last = fp.tile(cur.back());
            if (deviceSeesTile(rx.position, last, fp))
                chains.push_back({cur, len + (rx.position - last.center).norm()});
            return;
        }
        for (const auto& id : layers[k]) {
            const Tile t = fp.tile(id);
            double step;
            if (k == 0) {
                if (!deviceSeesTile(tx.position, t, fp)) continue;
                step = (t.center - tx.position).norm();
            } else {
                const Tile prev = fp.tile(cur.back());
                if (!tilesLinked(prev, t, fp)) continue;
                step = (t.center - prev.center).norm();
            }
            cur.push_back(id);
            grow(k + 1, len + step);
            cur.pop_back();
        }
    };
    grow(0, 0.0);

    PathSet best;
    std::set<TileId> used;
    std::function<void(std::size_t, int, double)> pick = [&](std::size_t from, int count, double len) {
        if (count > best.count || (count == best.count && len < best.length - 1e-9)) best = {count, len};
        if (count == K) return;
        for (std::size_t c = from; c < chains.size(); ++c) {
            bool free = true;
            for (const auto& id : chains[c].first) free = free && !used.contains(id);
            if (!free) continue;
            for (const auto& id : chains[c].first) used.insert(id);
            pick(c + 1, count + 1, len + chains[c].second);
            for (const auto& id : chains[c].first) used.erase(id);
        }
    };
    pick(0, 0, 0.0);
    return best;
}

double pathLength(const Floorplan& fp, const std::vector<TileId>& p, const DevicePose& tx, const DevicePose& rx) {
    double len = (fp.tile(p.front()).center - tx.position).norm() + (rx.position - fp.tile(p.back()).center).norm();
    for (std::size_t i = 1; i < p.size(); ++i) len += (fp.tile(p[i]).center - fp.tile(p[i - 1]).center).norm();
    return len;
}

}  // namespace

TEST_CASE("wall graph of scenario 1 is a three-vertex path") {
    const Scenario sc = buildScenario(1);
    const WallGraph g = buildWallGraph(sc.floorplan);
    CHECK(g.vertices == std::vector<int>{0, 1, 2});
    CHECK(g.edgeCount() == 2);
    CHECK(g.adjacent(0, 1));
    CHECK(g.adjacent(1, 2));
    CHECK_FALSE(g.adjacent(0, 2));
}

TEST_CASE("single wall gives one vertex and no edges") {
    Floorplan fp;
    fp.walls.push_back(buildScenario(1).floorplan.walls[0]);
    const WallGraph g = buildWallGraph(fp);
    CHECK(g.vertices.size() == 1);
    CHECK(g.edgeCount() == 0);
}

TEST_CASE("wall paths have scenario index + 2 walls and match BFS") {
    for (int i = 1; i <= 5; ++i) {
        const Scenario sc = buildScenario(i);
        const WallGraph g = buildWallGraph(sc.floorplan);
        CHECK(g.vertices.size() == static_cast<std::size_t>(i + 2));
        REQUIRE(sc.path.size() == static_cast<std::size_t>(i + 2));
        CHECK(static_cast<int>(sc.path.size()) - 1 == bfsHops(sc.floorplan, sc.path.front(), sc.path.back()));
        CHECK(sc.path.front() == deviceAdjacentWall(sc.floorplan, sc.tx));
        CHECK(sc.path.back() == deviceAdjacentWall(sc.floorplan, sc.rx));
        for (std::size_t k = 1; k < sc.path.size(); ++k) CHECK(g.adjacent(sc.path[k - 1], sc.path[k]));
    }
}

TEST_CASE("selectWallPath: equal-length paths resolve to the smallest id sequence") {
    const Scenario sc = buildScenario(1);
    WallGraph g;
    g.vertices = {0, 2, 3, 5};
    g.adjacency = {{0, {3, 5}}, {3, {0, 2}}, {5, {0, 2}}, {2, {3, 5}}};
    CHECK(selectWallPath(g, sc.floorplan, sc.tx, sc.rx) == WallPath{0, 3, 2});

    WallGraph cut;
    cut.vertices = {0, 1, 2};
    cut.adjacency = {{0, {1}}, {1, {0}}, {2, {}}};
    CHECK_THROWS_AS(selectWallPath(cut, sc.floorplan, sc.tx, sc.rx), DisconnectedError);
}

TEST_CASE("firstLayerTiles") {
    const Scenario sc = buildScenario(1);
    const Wall& w = sc.floorplan.wall(sc.path.front());
    CHECK(firstLayerTiles(sc.tx, w, sc.floorplan).size() == 5);

    DevicePose narrow = sc.tx;
    narrow.lobeWidthDeg = 1e-3;
    const auto one = firstLayerTiles(narrow, w, sc.floorplan);
    REQUIRE(one.size() == 1);
    CHECK(one[0].index == 2);

    DevicePose away = sc.tx;
    away.pointingThetaDeg = 180.0;
    CHECK_THROWS_AS(firstLayerTiles(away, w, sc.floorplan), std::invalid_argument);
}

TEST_CASE("firstLayerTiles equals a direct cone-membership check") {
    const Scenario sc = buildScenario(2);
    const auto [lo, hi] = sc.floorplan.bounds();
    Gen g(31);
    int nonEmpty = 0;
    for (int i = 0; i < 300; ++i) {
        DevicePose d = sc.tx;
        d.position = g.point(lo + Vec3{0.1, 0.1, 0.1}, hi - Vec3{0.1, 0.1, 0.1});
        d.pointingThetaDeg = g.uniform(-180, 180);
        d.pointingPhiDeg = g.uniform(-30, 30);
        d.lobeWidthDeg = g.uniform(5, 120);
        const Wall& w = sc.floorplan.walls[g.integer(0, 3)];
        std::vector<TileId> want;
        for (const auto& t : w.tiles()) {
            const Vec3 v = (t.center - d.position).normalized();
            const double ang = rad2deg(std::acos(std::clamp(v.dot(d.boresight()), -1.0, 1.0)));
            const bool front = (d.position - t.center).dot(t.baseNormal()) > 0;
            if (ang <= d.lobeWidthDeg / 2 && front && losVisible(d.position, t.center, sc.floorplan, {w.id}))
                want.push_back(t.id);
        }
        if (want.empty()) {
            CHECK_THROWS(firstLayerTiles(d, w, sc.floorplan));
        } else {
            CHECK(firstLayerTiles(d, w, sc.floorplan) == want);
            ++nonEmpty;
        }
    }
    CHECK(nonEmpty > 20);
}

TEST_CASE("kpConfig: K = tiles per wall fills every scenario") {
    for (int i = 1; i <= 5; ++i) {
        const Scenario sc = buildScenario(i);
        const KpConfigResult kp = kpConfig(sc.floorplan, sc.tx, sc.rx, 5);
        CHECK(kp.paths.size() == 5);
        CHECK_FALSE(kp.fewerThanRequested());
        CHECK(tileOccupancy(kp.functions, sc.floorplan, sc.path) == 1.0);
        std::set<TileId> seen;
        for (const auto& p : kp.paths) {
            CHECK(p.size() == sc.path.size());
            CHECK(deviceSeesTile(sc.tx.position, sc.floorplan.tile(p.front()), sc.floorplan));
            CHECK(deviceSeesTile(sc.rx.position, sc.floorplan.tile(p.back()), sc.floorplan));
            for (std::size_t k = 0; k < p.size(); ++k) {
                CHECK(seen.insert(p[k]).second);
                if (k) CHECK(tilesLinked(sc.floorplan.tile(p[k - 1]), sc.floorplan.tile(p[k]), sc.floorplan));
                const TileFunction& f = kp.functions.at(p[k]);
                CHECK(f.kind == FunctionKind::Steer);
                CHECK(f.focus);
            }
        }
    }
}

TEST_CASE("kpConfig: K = 1 occupies one path") {
    const Scenario sc = buildScenario(1);
    const KpConfigResult kp = kpConfig(sc.floorplan, sc.tx, sc.rx, 1);
    REQUIRE(kp.paths.size() == 1);
    CHECK(tileOccupancy(kp.functions, sc.floorplan, sc.path) == doctest::Approx(3.0 / 15.0));
    CHECK_THROWS_AS(kpConfig(sc.floorplan, sc.tx, sc.rx, 0), std::invalid_argument);
}

TEST_CASE("kpConfig: steer directions follow the path") {
    const Scenario sc = buildScenario(2);
    const KpConfigResult kp = kpConfig(sc.floorplan, sc.tx, sc.rx, 5);
    for (const auto& p : kp.paths)
        for (std::size_t k = 0; k < p.size(); ++k) {
            const Tile t = sc.floorplan.tile(p[k]);
            const Vec3 prev = k == 0 ? sc.tx.position : sc.floorplan.tile(p[k - 1]).center;
            const Vec3 next = k + 1 == p.size() ? sc.rx.position : sc.floorplan.tile(p[k + 1]).center;
            const TileFunction& f = kp.functions.at(p[k]);
            CHECK(pwe::test::dist(f.d, (t.center - prev).normalized()) < 1e-12);
            CHECK(pwe::test::dist(f.o, (next - t.center).normalized()) < 1e-12);
        }
}

TEST_CASE("kpConfig: small instances match exhaustive disjoint-path search") {
    const Scenario sc = buildScenario(1);
    Gen g(32);
    for (int trial = 0; trial < 30; ++trial) {
        LayerTiles layers;
        for (std::size_t k = 0; k < sc.path.size(); ++k) {
            std::vector<int> idx{0, 1, 2, 3, 4};
            std::shuffle(idx.begin(), idx.end(), g.engine());
            std::vector<TileId> ids{{sc.path[k], idx[0]}, {sc.path[k], idx[1]}};
            std::sort(ids.begin(), ids.end());
            layers.push_back(ids);
        }
        const int K = g.integer(1, 3);
        const PathSet want = bestDisjointPaths(sc.floorplan, layers, sc.tx, sc.rx, K);
        if (want.count == 0) {
            CHECK_THROWS_AS(kpConfig(sc.floorplan, layers, sc.tx, sc.rx, K), DisconnectedError);
            continue;
        }
        const KpConfigResult kp = kpConfig(sc.floorplan, layers, sc.tx, sc.rx, K);
        CHECK(static_cast<int>(kp.paths.size()) == want.count);
        double len = 0.0;
        for (const auto& p : kp.paths) len += pathLength(sc.floorplan, p, sc.tx, sc.rx);
        CHECK(len == doctest::Approx(want.length).epsilon(1e-9));
    }
}
