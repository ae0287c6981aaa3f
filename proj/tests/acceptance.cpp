// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "pwe/experiments.hpp"

using namespace pwe;
namespace fs = std::filesystem;

namespace {

std::string strf(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    return buf;
}

double seconds(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

const std::vector<std::uint64_t> kSeeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

// Shared NNConfig runs, keyed by (scenario, pruning percent).
class RunCache {
public:
    const std::vector<RunOutcome>& nn(int scenario, int pruningPct) {
        auto& slot = nn_[{scenario, pruningPct}];
        if (slot.empty()) {
            const Scenario sc = buildScenario(scenario);
            for (auto seed : kSeeds) {
                RunSpec spec;
                spec.pruning = pruningPct / 100.0;
                spec.seed = seed;
                slot.push_back(runPipeline(sc, spec));
            }
        }
        return slot;
    }

private:
    std::map<std::pair<int, int>, std::vector<RunOutcome>> nn_;
};

std::vector<double> rxOf(const std::vector<RunOutcome>& runs) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.row.rxPowerDbm);
    return v;
}

std::vector<double> occupancyOf(const std::vector<RunOutcome>& runs) {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.row.occupancy);
    return v;
}

bool weightsConserve(const PweNetwork& net) {
    for (const auto& layer : net.layers)
        for (const auto& n : layer) {
            double s = 0.0;
            for (const auto& l : n.out) {
                if (!(l.weight >= 0.0 && l.weight <= 1.0)) return false;
                s += l.weight;
            }
            if (s > 1.0 + 1e-9) return false;
        }
    return true;
}

Verdict energyConservation() {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = buildScenario(3);
    PweNetwork net = buildNetwork(sc.floorplan, sc.path, sc.tx, sc.rx, 1.0, 1);
    TrainingConfig cfg;
    MomentumState st;
    long violations = weightsConserve(net) ? 0 : 1;
    for (int c = 0; c < 10000; ++c) {
        backpropStep(net, cfg, st);
        if (!weightsConserve(net)) ++violations;
    }
    const double t = seconds(t0);
    return {violations == 0 && t < 120.0, strf("violations=%ld cycles=10000 time=%.1fs", violations, t)};
}

double costWith(PweNetwork net, int layer, int index, int axis, double delta, const CostFunction& fn) {
    Tile& t = net.layers[layer][index].tile;
    auto act = activeAngles(t.frame.plane, t.angles);
    act[axis] += delta;
    t.angles = fromActive(t.frame.plane, act[0], act[1]);
    return cost(feedforward(net), net.idealOutput, fn);
}

// Sign pattern of every reflected-onto-outgoing projection of one node with
// its active angle shifted by delta.
std::vector<bool> clipPattern(const TileNode& node, int axis, double delta) {
    Tile t = node.tile;
    auto act = activeAngles(t.frame.plane, t.angles);
    act[axis] += delta;
    t.angles = fromActive(t.frame.plane, act[0], act[1]);
    const Vec3 n = virtualNormal(t);
    std::vector<bool> out;
    for (const auto& in : node.in)
        for (const auto& o : node.out) out.push_back(reflect(in.d, n).dot(o.o) > 0.0);
    return out;
}

Verdict gradientCheck() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double prunings[] = {0.2, 0.4, 0.6, 0.8, 1.0};
    const CostFunction fns[] = {CostFunction::rmse(), CostFunction::halfSse(), CostFunction::exponential(1.0)};
    const double h = 1e-5;
    int bad = 0, checks = 0, kinks = 0;
    double worst = 0.0;
    for (int i = 1; i <= 5; ++i) {
        const Scenario sc = buildScenario(i);
        for (int sample = 0, accepted = 0; accepted < 100; ++sample) {
            PweNetwork net =
                buildNetwork(sc.floorplan, sc.path, sc.tx, sc.rx, prunings[sample % 5], 1000 * i + sample);
            TrainingConfig cfg;
            MomentumState st;
            for (int c = 0; c < sample % 7; ++c) backpropStep(net, cfg, st);
            const int layer = static_cast<int>(u(rng) * net.layers.size());
            const int index = static_cast<int>(u(rng) * net.layers[layer].size());
            const TileNode& node = net.layers[layer][index];
            // The cost is not differentiable where a projection crosses zero;
            // a stencil spanning such a point is replaced by a fresh sample.
            bool straddles = false;
            for (int axis = 0; axis < 2; ++axis)
                straddles = straddles || clipPattern(node, axis, -h) != clipPattern(node, axis, h);
            if (straddles) {
                ++kinks;
                continue;
            }
            ++accepted;
            const CostFunction& fn = fns[sample % 3];
            const auto g = angleGradient(net, layer, index, fn);
            for (int axis = 0; axis < 2; ++axis) {
                const double fd =
                    (costWith(net, layer, index, axis, h, fn) - costWith(net, layer, index, axis, -h, fn)) / (2 * h);
                const double abs = std::abs(g[axis] - fd);
                const double rel = abs / std::max(std::abs(fd), std::abs(g[axis]));
                ++checks;
                if (!(abs < 1e-8 || rel < 1e-4)) {
                    ++bad;
                    worst = std::max(worst, rel);
                }
            }
        }
    }
    return {bad == 0, strf("samples=500 components=%d failures=%d worst_rel=%.2e kink_samples_replaced=%d", checks,
                           bad, worst, kinks)};
}

Verdict reflectionMath() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> ang(-kPi / 2, kPi / 2);
    auto unit = [&] {
        for (;;) {
            const Vec3 v{nd(rng), nd(rng), nd(rng)};
            if (v.norm() > 1e-6) return v.normalized();
        }
    };
    const Plane planes[] = {Plane::XZ_PosY, Plane::XZ_NegY, Plane::YZ_PosX, Plane::YZ_NegX, Plane::XY_NegZ};
    long bad = 0;
    for (int i = 0; i < 100000; ++i) {
        const Vec3 d = unit(), n = unit();
        const Vec3 r = reflect(d, n);
        if (std::abs(r.norm() - 1.0) > 1e-9) ++bad;
        if ((reflect(r, n) - d).norm() > 1e-9) ++bad;
        const Mat3 m = rotationMatrix(planes[i % 5], {ang(rng), ang(rng), ang(rng)});
        const Mat3 mtm = transpose(m) * m;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                if (std::abs(mtm[a][b] - (a == b ? 1.0 : 0.0)) > 1e-9) ++bad;
    }
    const double h = std::sqrt(2.0) / 2.0;
    const bool ex1 = reflect({1, 0, 0}, {-1, 0, 0}) == Vec3{-1, 0, 0};
    const Vec3 r2 = reflect({h, -h, 0}, {0, 1, 0});
    const bool ex2 = r2 == Vec3{h, h, 0};
    return {bad == 0 && ex1 && ex2, strf("cases=100000 violations=%ld examples=%s", bad, ex1 && ex2 ? "exact" : "wrong")};
}

Verdict multiSteerOracle() {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    std::uniform_int_distribution<int> count(1, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec3 base{0, 1, 0};
    auto unit = [&] {
        for (;;) {
            const Vec3 v{nd(rng), nd(rng), nd(rng)};
            if (v.norm() > 1e-6) return v.normalized();
        }
    };
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<DirectedPower> D, O;
        const int nd_ = count(rng), no = count(rng);
        for (int k = 0; k < nd_; ++k) {
            Vec3 v = unit();
            if (v.dot(base) > -0.05) v = (v - base * (v.dot(base) + 0.5)).normalized();
            D.push_back({v, u(rng)});
        }
        const Vec3 n = (base + unit() * 0.3).normalized();
        for (int k = 0; k < no; ++k) O.push_back({u(rng) < 0.5 ? reflect(D[k % nd_].dir, n) : unit(), u(rng)});

        // Brute-force scorer: every pair, full coverage count, first minimum.
        std::pair<int, int> want{0, 0};
        int best = 1 << 30;
        for (int i = 0; i < nd_; ++i)
            for (int j = 0; j < no; ++j) {
                const Vec3 m = (O[j].dir - D[i].dir).normalized();
                int uncovered = 0;
                for (const auto& o : O) {
                    bool hit = false;
                    for (const auto& d : D) {
                        const Vec3 r = d.dir - m * (2.0 * d.dir.dot(m));
                        hit = hit || std::acos(std::clamp(r.dot(o.dir), -1.0, 1.0)) <= deg2rad(5.0);
                    }
                    uncovered += hit ? 0 : 1;
                }
                if (uncovered < best) {
                    best = uncovered;
                    want = {i, j};
                }
            }
        if (multiSteerMap(D, O, 5.0) != want) ++mismatches;
    }
    return {mismatches == 0, strf("geometries=1000 mismatches=%d", mismatches)};
}

int middleNonIdle(const RunOutcome& r, const Scenario& sc) {
    int n = 0;
    for (const auto& [id, f] : r.functions)
        if (f.kind != FunctionKind::Idle && id.wall != sc.path.front() && id.wall != sc.path.back()) ++n;
    return n;
}

Verdict singleMiddleTile(RunCache& cache) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario sc = buildScenario(1);
    const auto& runs = cache.nn(1, 100);
    int good = 0;
    std::string counts;
    for (const auto& r : runs) {
        const int m = middleNonIdle(r, sc);
        counts += (counts.empty() ? "" : ",") + std::to_string(m);
        if (m == 1 && r.row.rxPowerDbm > -60.0) ++good;
    }
    const double t = seconds(t0);
    return {good >= 8 && t < 600.0, strf("seeds_ok=%d/10 middle_non_idle=[%s] median_rx=%.2fdBm time=%.0fs", good,
                                         counts.c_str(), median(rxOf(runs)), t)};
}

Verdict occupancy(RunCache& cache) {
    bool kpFull = true;
    for (int i = 1; i <= 5; ++i) {
        const Scenario sc = buildScenario(i);
        RunSpec spec;
        spec.scheme = Scheme::KpConfig;
        kpFull = kpFull && runPipeline(sc, spec).row.occupancy == 1.0;
    }
    const double occ1 = median(occupancyOf(cache.nn(1, 100)));
    const double occ5 = median(occupancyOf(cache.nn(5, 100)));
    const bool pass = kpFull && std::abs(occ1 - 0.75) <= 0.15 && occ5 <= occ1;
    return {pass, strf("kpconfig_all_full=%s nn100_median_occupancy sc1=%.3f sc5=%.3f", kpFull ? "yes" : "no", occ1,
                       occ5)};
}

Verdict pruningDirection(RunCache& cache) {
    bool pass = true;
    std::string detail;
    for (int i = 1; i <= 5; ++i) {
        const Scenario sc = buildScenario(i);
        const double nn20 = median(rxOf(cache.nn(i, 20)));
        const double nn100 = median(rxOf(cache.nn(i, 100)));
        std::vector<Job> jobs;
        for (double p : {0.2, 0.4, 0.6, 0.8, 1.0})
            for (auto seed : kSeeds) {
                RunSpec s;
                s.scheme = Scheme::KpConfig;
                s.pruning = p;
                s.seed = seed;
                jobs.push_back({i, s});
            }
        RunSpec none;
        none.scheme = Scheme::None;
        jobs.push_back({i, none});
        const MetricsTable t = runJobs(jobs, 0);
        std::vector<double> kp;
        for (int p = 0; p < 5; ++p) {
            std::vector<double> v;
            for (std::size_t s = 0; s < kSeeds.size(); ++s) v.push_back(t[p * kSeeds.size() + s].rxPowerDbm);
            kp.push_back(median(v));
        }
        bool mono = true;
        for (int p = 1; p < 5; ++p) mono = mono && kp[p] >= kp[p - 1];
        const bool floor = t.back().rxPowerDbm <= -150.0;
        const bool ok = nn20 >= nn100 - 1.0 && mono && floor;
        pass = pass && ok;
        detail += strf(" sc%d[nn20=%.2f nn100=%.2f kp=%.1f/%.1f/%.1f/%.1f/%.1f none=%.0f %s]", i, nn20, nn100, kp[0],
                       kp[1], kp[2], kp[3], kp[4], t.back().rxPowerDbm, ok ? "ok" : "bad");
    }
    return {pass, detail.substr(1)};
}

Verdict parameterIndependence() {
    ExperimentGrid grid;
    grid.threads = 0;
    bool pass = true;
    std::string detail;
    for (int i = 1; i <= 5; ++i) {
        const MetricsTable t = sweepLearningParams(i, grid);
        std::map<std::pair<double, double>, std::vector<double>> cells;
        for (const auto& r : t) cells[{r.eta, r.mu}].push_back(r.rxPowerDbm);
        std::vector<double> medians;
        for (const auto& [k, v] : cells) medians.push_back(median(v));
        const double sd = stddev(medians);
        pass = pass && sd < 1.0;
        detail += strf(" sc%d_std=%.3fdB", i, sd);
    }
    return {pass, detail.substr(1)};
}

Verdict rmseTrend(RunCache& cache) {
    std::vector<double> m;
    std::string detail;
    for (int i = 1; i <= 5; ++i) {
        std::vector<double> v;
        for (const auto& r : cache.nn(i, 100)) v.push_back(r.row.finalRMSE);
        m.push_back(median(v));
        detail += strf(" sc%d=%.4f", i, m.back());
    }
    bool pass = true;
    for (std::size_t i = 1; i < m.size(); ++i) pass = pass && m[i] >= m[i - 1];
    // The verdict uses the default (unpruned) networks; 20% is informational.
    std::string low;
    for (int i = 1; i <= 5; ++i) {
        std::vector<double> v;
        for (const auto& r : cache.nn(i, 20)) v.push_back(r.row.finalRMSE);
        low += strf(" sc%d=%.4f", i, median(v));
    }
    return {pass, "median_final_rmse_100%" + detail + " (20%:" + low + ")"};
}

Verdict costFunctions(RunCache& cache) {
    const Scenario sc = buildScenario(1);
    std::vector<double> expRx;
    for (auto seed : kSeeds) {
        RunSpec spec;
        spec.seed = seed;
        spec.training.cost = CostFunction::exponential(1.0);
        expRx.push_back(runPipeline(sc, spec).row.rxPowerDbm);
    }
    const double a = median(rxOf(cache.nn(1, 100))), b = median(expRx);
    return {std::abs(a - b) < 2.0, strf("rmse=%.2fdBm exp1=%.2fdBm diff=%.3fdB", a, b, std::abs(a - b))};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string capture(const std::string& args, int& code) {
    const std::string cmd = std::string(PWECFG_PATH) + " " + args;
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        code = -1;
        return out;
    }
    char buf[4096];
    for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
    const int status = pclose(p);
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return out;
}

Verdict determinism() {
    const fs::path root = fs::temp_directory_path() / "pwe_acceptance_det";
    fs::remove_all(root);
    const std::vector<std::string> commands{
        "run --scenario 2 --pruning 0.2 --seed 5",
        "run --scenario 1 --pruning 0.6 --seed 2 --cycles 2000 --cost exp:1",
        "run --scenario 4 --scheme kpconfig --pruning 0.8 --seed 3",
        "run --scenario 3 --scheme none",
    };
    int differing = 0, files = 0;
    for (std::size_t c = 0; c < commands.size(); ++c) {
        std::string result[2];
        for (int rep = 0; rep < 2; ++rep) {
            int code = 0;
            const fs::path dir = root / std::to_string(c) / std::to_string(rep);
            result[rep] = capture(commands[c] + " --out " + dir.string(), code);
            if (code != 0) ++differing;
        }
        if (result[0] != result[1] || result[0].find("RESULT ") == std::string::npos) ++differing;
        for (const auto& e : fs::directory_iterator(root / std::to_string(c) / "0")) {
            ++files;
            const fs::path twin = root / std::to_string(c) / "1" / e.path().filename();
            if (!fs::exists(twin) || slurp(e.path()) != slurp(twin)) ++differing;
        }
    }
    fs::remove_all(root);
    return {differing == 0 && files > 0, strf("commands=%zu artifacts=%d differing=%d", commands.size(), files, differing)};
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments pick criteria by number; default is all of them.
    std::set<std::size_t> only;
    for (int a = 1; a < argc; ++a) only.insert(std::stoul(argv[a]));
    RunCache cache;
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"energy-conservation", energyConservation},
        {"gradient-check", gradientCheck},
        {"reflection-rotation-math", reflectionMath},
        {"multisteer-oracle", multiSteerOracle},
        {"single-middle-tile", [&] { return singleMiddleTile(cache); }},
        {"tile-occupancy", [&] { return occupancy(cache); }},
        {"pruning-direction", [&] { return pruningDirection(cache); }},
        {"parameter-independence", parameterIndependence},
        {"rmse-trend", [&] { return rmseTrend(cache); }},
        {"cost-functions", [&] { return costFunctions(cache); }},
        {"cli-determinism", determinism},
    };
    int failed = 0;
    std::size_t ran = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        if (!only.empty() && !only.contains(i + 1)) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failed;
        std::cout << (v.pass ? "PASS" : "FAIL") << ' ' << (i + 1) << ' ' << criteria[i].first << ": " << v.detail
                  << strf(" (%.1fs)", seconds(t0)) << std::endl;
    }
    std::cout << "ACCEPTANCE " << (ran - failed) << '/' << ran << " passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
