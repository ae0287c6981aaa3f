// pwecfg: run, sweep, interpret, render and validate PWE configurations.

#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pwe/experiments.hpp"
#include "pwe/network_io.hpp"
#include "pwe/render.hpp"

namespace fs = std::filesystem;
using namespace pwe;

namespace {

std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

std::string defaultOutputDir() {
    const char* env = std::getenv("PWE_OUTPUT_DIR");
    return env && *env ? env : "pwe_out";
}

void writeText(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << text;
}

std::string readText(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Scenario loadScenario(int index, const std::string& scenePath) {
    if (!scenePath.empty()) {
        const auto problems = validateSceneText(readText(scenePath));
        if (!problems.empty()) throw SceneError(scenePath + ": " + problems.front());
        return scenarioFromFloorplan(loadFloorplan(scenePath), 0);
    }
    return buildScenario(index);
}

struct RunOptions {
    int scenario = 1;
    std::string scene;
    std::string scheme = "nnconfig";
    double pruning = 1.0;
    std::uint64_t seed = 1;
    double eta = TrainingConfig{}.eta;
    double mu = TrainingConfig{}.mu;
    int cycles = TrainingConfig{}.cycles;
    std::string cost = "rmse";
    int rays = SimulationConfig{}.raysPerLobe;
    double threshold = InterpretationConfig{}.weightThreshold;
    double tolerance = InterpretationConfig{}.angleToleranceDeg;
    std::string out;
};

RunSpec toSpec(const RunOptions& o) {
    RunSpec s;
    s.scheme = parseScheme(o.scheme);
    s.pruning = o.pruning;
    s.seed = o.seed;
    s.training.eta = o.eta;
    s.training.mu = o.mu;
    s.training.cycles = o.cycles;
    s.training.cost = parseCostFunction(o.cost);
    s.sim.raysPerLobe = o.rays;
    s.interp.weightThreshold = o.threshold;
    s.interp.angleToleranceDeg = o.tolerance;
    return s;
}

json specToJson(const Scenario& sc, const RunOptions& o) {
    return {{"scenario", sc.index},   {"scheme", o.scheme},   {"pruning", o.pruning},     {"seed", o.seed},
            {"eta", o.eta},           {"mu", o.mu},           {"cycles", o.cycles},       {"cost", o.cost},
            {"rays", o.rays},         {"threshold", o.threshold}, {"tolerance_deg", o.tolerance},
            {"wall_path", sc.path}};
}

std::string fmtRmse(double v) { return std::isnan(v) ? "nan" : strf("%.6g", v); }

int cmdRun(const RunOptions& o) {
    const Scenario sc = loadScenario(o.scenario, o.scene);
    const RunSpec spec = toSpec(o);
    const RunOutcome res = runPipeline(sc, spec);

    const fs::path dir = o.out.empty() ? defaultOutputDir() : o.out;
    fs::create_directories(dir);
    writeJsonFile(floorplanToJson(sc.floorplan), (dir / "scene.json").string());
    writeJsonFile(specToJson(sc, o), (dir / "run.json").string());
    writeJsonFile(manifestToJson(res.functions), (dir / "manifest.json").string());
    writeJsonFile(simResultToJson(res.sim), (dir / "sim_result.json").string());
    std::string trace = "cycle,rmse\n";
    if (res.network) {
        writeJsonFile(networkToJson(*res.network, res.report ? &*res.report : nullptr), (dir / "network.json").string());
        for (std::size_t c = 0; c < res.report->perCycleRMSE.size(); ++c)
            trace += strf("%zu,%.17g\n", c + 1, res.report->perCycleRMSE[c]);
    }
    writeText(dir / "rmse_trace.csv", trace);
    if (res.kp) {
        json paths = json::array();
        for (const auto& p : res.kp->paths) {
            json pj = json::array();
            for (const auto& id : p) pj.push_back({id.wall, id.index});
            paths.push_back(pj);
        }
        writeJsonFile({{"requested", res.kp->requested}, {"paths", paths}}, (dir / "kp_paths.json").string());
    }
    std::cout << strf("RESULT rx_dbm=%.4f occupancy=%.4f rmse=%s\n", res.row.rxPowerDbm, res.row.occupancy,
                          fmtRmse(res.row.finalRMSE).c_str());
    return 0;
}

struct SweepOptions {
    std::vector<int> figures{7, 8, 9, 10, 11, 12};
    std::vector<int> scenarios{1, 2, 3, 4, 5};
    std::vector<double> pruning{0.2, 0.4, 0.6, 0.8, 1.0};
    int seeds = 10;
    int cycles = TrainingConfig{}.cycles;
    int rays = SimulationConfig{}.raysPerLobe;
    int threads = 0;
    bool noTiming = false;
    bool progress = false;
    std::string out;
};

int cmdSweep(const SweepOptions& o) {
    ExperimentGrid grid;
    grid.scenarios = o.scenarios;
    grid.pruningFactors = o.pruning;
    grid.seeds.clear();
    for (int s = 1; s <= o.seeds; ++s) grid.seeds.push_back(static_cast<std::uint64_t>(s));
    grid.training.cycles = o.cycles;
    grid.sim.raysPerLobe = o.rays;
    grid.threads = o.threads;

    const fs::path dir = o.out.empty() ? defaultOutputDir() : o.out;
    fs::create_directories(dir);
    auto wants = [&](int f) { return std::find(o.figures.begin(), o.figures.end(), f) != o.figures.end(); };
    for (int f : o.figures)
        if (f < 7 || f > 12) throw std::invalid_argument(strf("no data for figure %d (7..12)", f));

    MetricsTable all;
    auto append = [&](const MetricsTable& t) { all.insert(all.end(), t.begin(), t.end()); };
    auto note = [&](const std::string& what) {
        if (o.progress) std::cerr << what << "\n";
    };
    if (wants(8) || wants(9) || wants(10) || wants(11)) {
        note("comparison grid");
        const MetricsTable t = runComparison(grid);
        append(t);
        if (wants(8)) writeFig8Csv(t, (dir / "fig8.csv").string());
        if (wants(9)) writeFig9Csv(t, (dir / "fig9.csv").string());
        if (wants(10)) writeFig10Csv(t, (dir / "fig10.csv").string());
        if (wants(11)) writeFig11Csv(t, (dir / "fig11.csv").string());
    }
    if (wants(7)) {
        MetricsTable t;
        for (int s : grid.scenarios) {
            note(strf("learning-parameter grid, scenario %d", s));
            const MetricsTable part = sweepLearningParams(s, grid);
            t.insert(t.end(), part.begin(), part.end());
        }
        append(t);
        writeFig7Csv(t, (dir / "fig7.csv").string());
    }
    if (wants(12)) {
        MetricsTable t;
        for (int s : grid.scenarios) {
            note(strf("cost-function study, scenario %d", s));
            const MetricsTable part = costFunctionStudy(s, grid);
            t.insert(t.end(), part.begin(), part.end());
        }
        append(t);
        writeFig12Csv(t, (dir / "fig12.csv").string());
    }
    writeMetricsCsv(all, (dir / "metrics.csv").string(), !o.noTiming);
    std::size_t failed = 0;
    for (const auto& r : all) failed += r.error.empty() ? 0 : 1;
    std::cout << strf("SWEEP rows=%zu failed=%zu dir=%s\n", all.size(), failed, dir.string().c_str());
    return 0;
}

struct InterpretOptions {
    std::string run;
    std::string network;
    std::string scene;
    double threshold = InterpretationConfig{}.weightThreshold;
    double tolerance = InterpretationConfig{}.angleToleranceDeg;
    std::string out;
};

int cmdInterpret(const InterpretOptions& o) {
    fs::path netPath = o.network, scenePath = o.scene;
    if (!o.run.empty()) {
        if (netPath.empty()) netPath = fs::path(o.run) / "network.json";
        if (scenePath.empty()) scenePath = fs::path(o.run) / "scene.json";
    }
    if (netPath.empty() || scenePath.empty())
        throw std::invalid_argument("interpret needs --run DIR or both --network and --scene");
    const Floorplan fp = loadFloorplan(scenePath.string());
    const PweNetwork net = networkFromJson(readJsonFile(netPath.string()), fp);
    const FunctionMap fns = interpretNetwork(net, {o.threshold, o.tolerance});
    const json manifest = manifestToJson(fns);
    if (o.out.empty())
        std::cout << manifest.dump(2) << "\n";
    else
        writeJsonFile(manifest, o.out);
    std::map<std::string, int> counts;
    for (const auto& [id, f] : fns) ++counts[f.multiSteer ? "MultiSteer" : to_string(f.kind)];
    std::string summary = "INTERPRET";
    for (const auto& [k, n] : counts) summary += strf(" %s=%d", k.c_str(), n);
    (o.out.empty() ? std::cerr : std::cout) << summary << "\n";
    return 0;
}

struct RenderOptions {
    std::string run;
    std::string out;
    int rays = 64;
    bool noRays = false;
};

int cmdRender(const RenderOptions& o) {
    const fs::path dir = o.run;
    for (const char* f : {"scene.json", "manifest.json"})
        if (!fs::exists(dir / f)) throw std::runtime_error("missing run artifact " + (dir / f).string());
    const Floorplan fp = loadFloorplan((dir / "scene.json").string());
    const FunctionMap fns = manifestFromJson(readJsonFile((dir / "manifest.json").string()));
    std::string svg;
    if (o.noRays) {
        svg = renderSvg(fp, fns);
    } else {
        SimulationConfig cfg;
        cfg.raysPerLobe = o.rays;
        cfg.recordPaths = true;
        const SimResult sim = simulate(fp, fns, fp.device(DeviceRole::TX), fp.device(DeviceRole::RX), cfg);
        svg = renderSvg(fp, fns, &sim);
    }
    const fs::path out = o.out.empty() ? dir / "render.svg" : fs::path(o.out);
    writeText(out, svg);
    std::cout << "RENDER " << out.string() << "\n";
    return 0;
}

int cmdValidate(const std::string& path) {
    const auto problems = validateSceneText(readText(path));
    if (problems.empty()) {
        std::cout << "VALID " << path << "\n";
        return 0;
    }
    for (const auto& p : problems) std::cout << path << ": " << p << "\n";
    std::cout << "INVALID " << path << " problems=" << problems.size() << "\n";
    return 1;
}

int cmdScene(int index, const std::string& out) {
    const Scenario sc = buildScenario(index);
    if (out.empty())
        std::cout << floorplanToJson(sc.floorplan).dump(2) << "\n";
    else
        saveFloorplan(sc.floorplan, out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Configure programmable wireless environments with a tile neural network"};
    app.require_subcommand(1);

    RunOptions ro;
    auto* run = app.add_subcommand("run", "Run one configuration pipeline and write its artifacts");
    auto* scOpt = run->add_option("--scenario", ro.scenario, "Built-in floorplan 1..5")->check(CLI::Range(1, 5));
    auto* sceneOpt = run->add_option("--scene", ro.scene, "Scene JSON file")->check(CLI::ExistingFile);
    scOpt->excludes(sceneOpt);
    run->add_option("--scheme", ro.scheme, "nnconfig, kpconfig or none")
        ->check(CLI::IsMember({"nnconfig", "kpconfig", "none"}));
    run->add_option("--pruning", ro.pruning, "Fraction of tiles per wall kept")->check(CLI::Range(0.0, 1.0));
    run->add_option("--seed", ro.seed);
    run->add_option("--eta", ro.eta, "Learning rate");
    run->add_option("--mu", ro.mu, "Momentum");
    run->add_option("--cycles", ro.cycles, "Training cycles")->check(CLI::NonNegativeNumber);
    run->add_option("--cost", ro.cost, "rmse, halfsse, exp or exp:<tau>");
    run->add_option("--rays", ro.rays, "Rays launched over the TX lobe")->check(CLI::PositiveNumber);
    run->add_option("--threshold", ro.threshold, "Interpretation weight threshold");
    run->add_option("--tolerance", ro.tolerance, "MultiSteer angle tolerance in degrees");
    run->add_option("--out", ro.out, "Output directory (default $PWE_OUTPUT_DIR or ./pwe_out)");

    SweepOptions so;
    auto* sweep = app.add_subcommand("sweep", "Run the experiment grids and write metrics.csv and figure CSVs");
    sweep->add_option("--figures", so.figures, "Figures to produce (7..12)")->delimiter(',');
    sweep->add_option("--scenarios", so.scenarios, "Scenarios")->delimiter(',')->check(CLI::Range(1, 5));
    sweep->add_option("--pruning", so.pruning, "Pruning factors")->delimiter(',');
    sweep->add_option("--seeds", so.seeds, "Seeds 1..N")->check(CLI::PositiveNumber);
    sweep->add_option("--cycles", so.cycles)->check(CLI::NonNegativeNumber);
    sweep->add_option("--rays", so.rays)->check(CLI::PositiveNumber);
    sweep->add_option("--threads", so.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sweep->add_flag("--no-timing", so.noTiming, "Omit wall-clock column for byte-stable output");
    sweep->add_flag("--progress", so.progress, "Report grid stages on stderr");
    sweep->add_option("--out", so.out, "Output directory");

    InterpretOptions io;
    auto* interp = app.add_subcommand("interpret", "Interpret a trained network into tile functions");
    interp->add_option("--run", io.run, "Run directory")->check(CLI::ExistingDirectory);
    interp->add_option("--network", io.network, "network.json")->check(CLI::ExistingFile);
    interp->add_option("--scene", io.scene, "scene.json")->check(CLI::ExistingFile);
    interp->add_option("--threshold", io.threshold);
    interp->add_option("--tolerance", io.tolerance);
    interp->add_option("--out", io.out, "Manifest file (default stdout)");

    RenderOptions rdo;
    auto* render = app.add_subcommand("render", "Top-down SVG of a run");
    render->add_option("--run", rdo.run, "Run directory")->required();
    render->add_option("--out", rdo.out, "SVG file (default <run>/render.svg)");
    render->add_option("--rays", rdo.rays, "Rays traced for the drawing")->check(CLI::PositiveNumber);
    render->add_flag("--no-rays", rdo.noRays, "Draw walls and tiles only");

    std::string validatePath;
    auto* validate = app.add_subcommand("validate", "Check a scene file against the schema");
    validate->add_option("scene", validatePath, "Scene JSON file")->required();

    int sceneIndex = 1;
    std::string sceneOut;
    auto* scene = app.add_subcommand("scene", "Export a built-in scenario as a scene file");
    scene->add_option("--scenario", sceneIndex)->check(CLI::Range(1, 5));
    scene->add_option("--out", sceneOut, "File (default stdout)");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmdRun(ro);
        if (*sweep) return cmdSweep(so);
        if (*interp) return cmdInterpret(io);
        if (*render) return cmdRender(rdo);
        if (*validate) return cmdValidate(validatePath);
        if (*scene) return cmdScene(sceneIndex, sceneOut);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
