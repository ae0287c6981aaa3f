#include "pwe/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

namespace pwe {

namespace {

constexpr double kRoomDepth = 15.0;   // y extent
constexpr double kSegment = 5.0;      // x extent of every SDM wall
constexpr double kStripLow = 1.0;     // SDM strips span z in [1, 2]
constexpr double kFinLow = 3.75;      // absorber fins span y in [3.75, 10.5]
constexpr double kFinHigh = 10.5;
constexpr double kCeiling = 3.0;
constexpr int kTilesPerWall = 5;

Wall sdmStrip(int id, double x0, bool top) {
    Wall w;
    w.id = id;
    w.frame.plane = top ? Plane::XZ_NegY : Plane::XZ_PosY;
    w.origin = {x0, top ? kRoomDepth : 0.0, kStripLow};
    w.extentU = {kSegment, 0, 0};
    w.extentV = {0, 0, 1.0};
    w.tilesU = kTilesPerWall;
    w.tilesV = 1;
    return w;
}

Wall absorberFin(int id, double x) {
    Wall w;
    w.id = id;
    w.frame.plane = Plane::YZ_PosX;
    w.origin = {x, kFinLow, 0.0};
    w.extentU = {0, kFinHigh - kFinLow, 0};
    w.extentV = {0, 0, kCeiling};
    w.kind = SurfaceKind::Absorber;
    return w;
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fmtOrEmpty(double v) { return std::isnan(v) ? "" : fmt(v, 9); }

bool ok(const MetricsRow& r) { return r.error.empty(); }

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
}

std::ofstream openCsv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

int tilesPerWall(const Scenario& sc) {
    int k = 1;
    for (int id : sc.path) k = std::max(k, sc.floorplan.wall(id).tileCount());
    return k;
}

}  // namespace

Scenario buildScenario(int i) {
    if (i < 1 || i > 5) throw std::invalid_argument("scenario index must be 1..5");
    const double L = kSegment * (i + 2);
    Floorplan fp;
    fp.ceilingHeight = kCeiling;
    fp.walls.push_back(sdmStrip(0, 0.0, true));
    for (int k = 1; k <= i + 1; ++k) fp.walls.push_back(sdmStrip(k, kSegment * k, k % 2 == 0));
    for (int k = 1; k <= i; ++k) fp.walls.push_back(absorberFin(100 + k, kSegment * k + kSegment / 2));

    DevicePose tx;
    tx.role = DeviceRole::TX;
    tx.position = {2.5, 7.5, 1.5};
    tx.lobeWidthDeg = 40.0;
    tx.txPowerDbm = -30.0;
    DevicePose rx;
    rx.role = DeviceRole::RX;
    rx.position = {L - 2.5, 7.5, 1.5};
    rx.lobeWidthDeg = 40.0;
    rx.pointingThetaDeg = 180.0;
    fp.devices = {tx, rx};
    validateFloorplan(fp);
    return scenarioFromFloorplan(fp, i);
}

Scenario scenarioFromFloorplan(const Floorplan& fp, int index) {
    Scenario sc;
    sc.index = index;
    sc.floorplan = fp;
    sc.tx = fp.device(DeviceRole::TX);
    sc.rx = fp.device(DeviceRole::RX);
    sc.path = selectWallPath(buildWallGraph(fp), fp, sc.tx, sc.rx);
    return sc;
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::NNConfig: return "nnconfig";
        case Scheme::KpConfig: return "kpconfig";
        case Scheme::None: return "none";
    }
    return "none";
}

Scheme parseScheme(const std::string& s) {
    if (s == "nnconfig") return Scheme::NNConfig;
    if (s == "kpconfig") return Scheme::KpConfig;
    if (s == "none") return Scheme::None;
    throw std::invalid_argument("unknown scheme '" + s + "' (nnconfig, kpconfig, none)");
}

RunOutcome runPipeline(const Scenario& sc, const RunSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;
    MetricsRow& row = out.row;
    row.scenario = sc.index;
    row.scheme = spec.scheme;
    row.pruning = spec.pruning;
    row.seed = spec.seed;
    row.finalRMSE = std::nan("");
    if (spec.scheme == Scheme::NNConfig) {
        row.eta = spec.training.eta;
        row.mu = spec.training.mu;
        row.cost = to_string(spec.training.cost);
    }

    const Floorplan& fp = sc.floorplan;
    if (spec.scheme != Scheme::None) {
        const LayerTiles layers = prunedLayers(fp, sc.path, sc.tx, spec.pruning, spec.seed);
        if (spec.scheme == Scheme::NNConfig) {
            TrainingConfig tc = spec.training;
            tc.seed = spec.seed;
            tc.pruningFactor = spec.pruning;
            PweNetwork net = buildNetwork(fp, layers, sc.tx, sc.rx, spec.seed);
            CostReport rep = train(net, tc);
            out.functions = interpretNetwork(net, spec.interp);
            row.finalRMSE = rep.finalRMSE;
            out.network = std::move(net);
            out.report = std::move(rep);
        } else {
            try {
                KpConfigResult kp = kpConfig(fp, layers, sc.tx, sc.rx, tilesPerWall(sc));
                out.functions = kp.functions;
                out.kp = std::move(kp);
            } catch (const DisconnectedError&) {
                // Pruning can cut every chain; that run configures nothing.
                out.kp = KpConfigResult{};
            }
        }
    }
    out.sim = simulate(fp, out.functions, sc.tx, sc.rx, spec.sim);
    row.rxPowerDbm = out.sim.rxPowerDbm;
    row.occupancy = tileOccupancy(out.functions, fp, sc.path);
    row.wallClockMs =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

MetricsTable runJobs(const std::vector<Job>& jobs, int threads,
                     const std::function<void(std::size_t, std::size_t)>& progress) {
    std::map<int, Scenario> scenarios;
    for (const auto& j : jobs)
        if (!scenarios.contains(j.scenario)) scenarios.emplace(j.scenario, buildScenario(j.scenario));

    MetricsTable rows(jobs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::mutex progressMutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            try {
                rows[i] = runPipeline(scenarios.at(job.scenario), job.spec).row;
            } catch (const std::exception& e) {
                MetricsRow r;
                r.scenario = job.scenario;
                r.scheme = job.spec.scheme;
                r.pruning = job.spec.pruning;
                r.seed = job.spec.seed;
                r.finalRMSE = std::nan("");
                r.error = e.what();
                rows[i] = r;
            }
            const std::size_t d = ++done;
            if (progress) {
                std::lock_guard lock(progressMutex);
                progress(d, jobs.size());
            }
        }
    };
    int n = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n = std::min<int>(n, static_cast<int>(std::max<std::size_t>(1, jobs.size())));
    std::vector<std::thread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return rows;
}

namespace {

RunSpec baseSpec(const ExperimentGrid& grid, Scheme scheme, double pruning, std::uint64_t seed) {
    RunSpec s;
    s.scheme = scheme;
    s.pruning = pruning;
    s.seed = seed;
    s.training = grid.training;
    s.sim = grid.sim;
    s.interp = grid.interp;
    return s;
}

}  // namespace

MetricsTable runComparison(const ExperimentGrid& grid) {
    std::vector<Job> jobs;
    for (int sc : grid.scenarios)
        for (double p : grid.pruningFactors)
            for (auto seed : grid.seeds)
                for (Scheme s : {Scheme::KpConfig, Scheme::NNConfig}) jobs.push_back({sc, baseSpec(grid, s, p, seed)});
    return runJobs(jobs, grid.threads);
}

MetricsTable sweepLearningParams(int scenario, const ExperimentGrid& grid) {
    std::vector<Job> jobs;
    for (double eta : grid.etaGrid)
        for (double mu : grid.muGrid)
            for (auto seed : grid.seeds) {
                RunSpec s = baseSpec(grid, Scheme::NNConfig, 0.2, seed);
                s.training.eta = eta;
                s.training.mu = mu;
                jobs.push_back({scenario, s});
            }
    return runJobs(jobs, grid.threads);
}

MetricsTable costFunctionStudy(int scenario, const ExperimentGrid& grid) {
    std::vector<Job> jobs;
    for (const auto& c : grid.costFns)
        for (auto seed : grid.seeds) {
            RunSpec s = baseSpec(grid, Scheme::NNConfig, 1.0, seed);
            s.training.cost = c;
            jobs.push_back({scenario, s});
        }
    return runJobs(jobs, grid.threads);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size()));
}

void writeMetricsCsv(const MetricsTable& t, const std::string& path, bool withTiming) {
    auto out = openCsv(path);
    out << "scenario,scheme,pruning,seed,rxPowerDbm,occupancy,finalRMSE,wallClockMs,eta,mu,cost,error\n";
    for (const auto& r : t) {
        std::string err = r.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << r.scenario << ',' << to_string(r.scheme) << ',' << fmt(r.pruning, 2) << ',' << r.seed << ','
            << (ok(r) ? fmt(r.rxPowerDbm) : "") << ',' << (ok(r) ? fmt(r.occupancy) : "") << ','
            << fmtOrEmpty(r.finalRMSE) << ',' << (withTiming ? fmt(r.wallClockMs, 1) : "") << ','
            << (r.scheme == Scheme::NNConfig ? fmt(r.eta, 3) : "") << ','
            << (r.scheme == Scheme::NNConfig ? fmt(r.mu, 3) : "") << ',' << r.cost << ',' << err << '\n';
    }
}

void writeFig7Csv(const MetricsTable& t, const std::string& path) {
    std::map<int, std::map<std::pair<double, double>, std::vector<double>>> groups;
    for (const auto& r : t)
        if (ok(r) && r.scheme == Scheme::NNConfig) groups[r.scenario][{r.eta, r.mu}].push_back(r.rxPowerDbm);
    auto out = openCsv(path);
    out << "scenario,eta,mu,median_rx_dbm,runs,scenario_std_db\n";
    for (const auto& [sc, cells] : groups) {
        std::vector<double> medians;
        for (const auto& [key, v] : cells) medians.push_back(median(v));
        const double sd = stddev(medians);
        for (const auto& [key, v] : cells)
            out << sc << ',' << fmt(key.first, 3) << ',' << fmt(key.second, 3) << ',' << fmt(median(v)) << ','
                << v.size() << ',' << fmt(sd) << '\n';
    }
}

void writeFig8Csv(const MetricsTable& t, const std::string& path) {
    std::map<std::tuple<int, std::string, double>, std::vector<double>> groups;
    for (const auto& r : t)
        if (ok(r)) groups[{r.scenario, to_string(r.scheme), r.pruning}].push_back(r.rxPowerDbm);
    auto out = openCsv(path);
    out << "scenario,scheme,pruning,median_rx_dbm,runs\n";
    for (const auto& [key, v] : groups)
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << fmt(std::get<2>(key), 2) << ','
            << fmt(median(v)) << ',' << v.size() << '\n';
}

void writeFig9Csv(const MetricsTable& t, const std::string& path) {
    std::map<std::pair<int, double>, std::vector<double>> groups;
    for (const auto& r : t)
        if (ok(r) && r.scheme == Scheme::NNConfig) groups[{r.scenario, r.pruning}].push_back(r.finalRMSE);
    auto out = openCsv(path);
    out << "scenario,pruning,median_final_rmse,runs\n";
    for (const auto& [key, v] : groups)
        out << key.first << ',' << fmt(key.second, 2) << ',' << fmt(median(v), 9) << ',' << v.size() << '\n';
}

void writeFig10Csv(const MetricsTable& t, const std::string& path) {
    std::map<std::pair<int, std::string>, std::vector<double>> groups;
    for (const auto& r : t) {
        if (!ok(r)) continue;
        const bool full = std::abs(r.pruning - 1.0) < 1e-9;
        const bool low = std::abs(r.pruning - 0.2) < 1e-9;
        if (r.scheme == Scheme::KpConfig && full) groups[{r.scenario, "kpconfig-100"}].push_back(r.occupancy);
        if (r.scheme == Scheme::NNConfig && full) groups[{r.scenario, "nnconfig-100"}].push_back(r.occupancy);
        if (r.scheme == Scheme::NNConfig && low) groups[{r.scenario, "nnconfig-20"}].push_back(r.occupancy);
    }
    auto out = openCsv(path);
    out << "scenario,variant,median_occupancy,runs\n";
    for (const auto& [key, v] : groups)
        out << key.first << ',' << key.second << ',' << fmt(median(v)) << ',' << v.size() << '\n';
}

void writeFig11Csv(const MetricsTable& t, const std::string& path) {
    std::map<std::tuple<int, std::string, std::string>, std::vector<double>> groups;
    for (const auto& r : t) {
        if (!ok(r) || r.scheme == Scheme::None) continue;
        groups[{r.scenario, to_string(r.scheme), "rx_dbm"}].push_back(r.rxPowerDbm);
        groups[{r.scenario, to_string(r.scheme), "occupancy"}].push_back(r.occupancy);
    }
    auto out = openCsv(path);
    out << "scenario,scheme,metric,min,q1,median,q3,max,runs\n";
    for (const auto& [key, v] : groups)
        out << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << fmt(quantile(v, 0.0))
            << ',' << fmt(quantile(v, 0.25)) << ',' << fmt(quantile(v, 0.5)) << ',' << fmt(quantile(v, 0.75)) << ','
            << fmt(quantile(v, 1.0)) << ',' << v.size() << '\n';
}

void writeFig12Csv(const MetricsTable& t, const std::string& path) {
    std::map<std::pair<int, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : t) {
        if (!ok(r) || r.scheme != Scheme::NNConfig) continue;
        auto& g = groups[{r.scenario, r.cost}];
        g.first.push_back(r.rxPowerDbm);
        g.second.push_back(r.occupancy);
    }
    auto out = openCsv(path);
    out << "scenario,cost,median_rx_dbm,median_occupancy,runs\n";
    for (const auto& [key, g] : groups)
        out << key.first << ',' << key.second << ',' << fmt(median(g.first)) << ',' << fmt(median(g.second)) << ','
            << g.first.size() << '\n';
}

}  // namespace pwe
