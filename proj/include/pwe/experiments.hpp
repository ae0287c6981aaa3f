#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pwe/interpreter.hpp"
#include "pwe/nn_core.hpp"
#include "pwe/pwe_graph.hpp"
#include "pwe/raysim.hpp"

namespace pwe {

struct Scenario {
    int index = 0;
    Floorplan floorplan;
    DevicePose tx;
    DevicePose rx;
    WallPath path;
};

/// Five floorplans with i = 1..5 middle walls; see docs/formats.md for the
/// layout constants.
Scenario buildScenario(int i);

/// Scenario around an arbitrary floorplan with one TX and one RX.
Scenario scenarioFromFloorplan(const Floorplan& fp, int index = 0);

enum class Scheme { NNConfig, KpConfig, None };

std::string to_string(Scheme s);
Scheme parseScheme(const std::string& s);

struct RunSpec {
    Scheme scheme = Scheme::NNConfig;
    double pruning = 1.0;
    std::uint64_t seed = 1;
    TrainingConfig training;
    SimulationConfig sim;
    InterpretationConfig interp;
};

struct MetricsRow {
    int scenario = 0;
    Scheme scheme = Scheme::NNConfig;
    double pruning = 1.0;
    std::uint64_t seed = 1;
    double rxPowerDbm = -150.0;
    double occupancy = 0.0;
    double finalRMSE = 0.0;
    double wallClockMs = 0.0;
    double eta = 0.0;
    double mu = 0.0;
    std::string cost;
    std::string error;  // empty for successful runs
};

using MetricsTable = std::vector<MetricsRow>;

struct RunOutcome {
    MetricsRow row;
    std::optional<PweNetwork> network;
    std::optional<CostReport> report;
    std::optional<KpConfigResult> kp;
    FunctionMap functions;
    SimResult sim;
};

/// One pipeline execution: build, train, interpret and simulate for
/// NNConfig; K-paths for KpConfig; an empty manifest for None.
RunOutcome runPipeline(const Scenario& sc, const RunSpec& spec);

struct ExperimentGrid {
    std::vector<int> scenarios{1, 2, 3, 4, 5};
    std::vector<double> pruningFactors{0.2, 0.4, 0.6, 0.8, 1.0};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> etaGrid{0.25, 0.5, 0.75, 1.0};
    std::vector<double> muGrid{0.0, 0.5, 1.0};
    std::vector<CostFunction> costFns{CostFunction::rmse(), CostFunction::exponential(1.0)};
    TrainingConfig training;
    SimulationConfig sim;
    InterpretationConfig interp;
    int threads = 0;  // 0 = hardware concurrency
};

struct Job {
    int scenario = 1;
    RunSpec spec;
};

/// Runs jobs on a work pool; rows come back in job order. Failures become
/// rows with the error column set.
MetricsTable runJobs(const std::vector<Job>& jobs, int threads,
                     const std::function<void(std::size_t done, std::size_t total)>& progress = {});

MetricsTable runComparison(const ExperimentGrid& grid);
/// Pruning is fixed at 20%.
MetricsTable sweepLearningParams(int scenario, const ExperimentGrid& grid);
MetricsTable costFunctionStudy(int scenario, const ExperimentGrid& grid);

double median(std::vector<double> v);
double stddev(const std::vector<double>& v);

void writeMetricsCsv(const MetricsTable& t, const std::string& path, bool withTiming = true);
void writeFig7Csv(const MetricsTable& t, const std::string& path);
void writeFig8Csv(const MetricsTable& t, const std::string& path);
void writeFig9Csv(const MetricsTable& t, const std::string& path);
void writeFig10Csv(const MetricsTable& t, const std::string& path);
void writeFig11Csv(const MetricsTable& t, const std::string& path);
void writeFig12Csv(const MetricsTable& t, const std::string& path);

}  // namespace pwe
