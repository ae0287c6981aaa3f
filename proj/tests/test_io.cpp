#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "gen.hpp"
#include "pwe/experiments.hpp"
#include "pwe/network_io.hpp"

using namespace pwe;

namespace {

std::string lineOf(const std::string& text, int n) {
    std::istringstream in(text);
    std::string line;
    for (int i = 1; std::getline(in, line); ++i)
        if (i == n) return line;
    return {};
}

// "line N: ..." -> N, or 0 without a prefix.
int lineNumber(const std::string& problem) {
    if (problem.rfind("line ", 0) != 0) return 0;
    return std::stoi(problem.substr(5));
}

bool mentions(const std::vector<std::string>& problems, const std::string& what) {
    for (const auto& p : problems)
        if (p.find(what) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("scene JSON round-trip") {
    for (int i = 1; i <= 5; ++i) {
        const Floorplan fp = buildScenario(i).floorplan;
        const json j = floorplanToJson(fp);
        const Floorplan back = floorplanFromJson(json::parse(j.dump()));
        CHECK(floorplanToJson(back) == j);
        CHECK(back.walls.size() == fp.walls.size());
        CHECK(validateSceneText(j.dump(2)).empty());
    }
}

TEST_CASE("scene files on disk match the built-in scenarios") {
    const auto dir = std::filesystem::temp_directory_path() / "pwe_test_io";
    std::filesystem::create_directories(dir);
    const Floorplan fp = buildScenario(2).floorplan;
    const std::string path = (dir / "s2.json").string();
    saveFloorplan(fp, path);
    CHECK(floorplanToJson(loadFloorplan(path)) == floorplanToJson(fp));
    CHECK_THROWS_AS(loadFloorplan((dir / "missing.json").string()), SceneError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("validateSceneText reports every problem with its line") {
    json j = floorplanToJson(buildScenario(1).floorplan);
    j["ceiling_height"] = -1.0;
    j["walls"][1]["tiles"] = {0, 1};
    j["walls"][2]["id"] = j["walls"][0]["id"];
    j["devices"][0]["lobe_width_deg"] = 200.0;
    const std::string text = j.dump(2);
    const auto problems = validateSceneText(text);
    CHECK(problems.size() >= 4);
    CHECK(mentions(problems, "/ceiling_height"));
    CHECK(mentions(problems, "/walls/1/tiles"));
    CHECK(mentions(problems, "/walls/2/id"));
    CHECK(mentions(problems, "/devices/0/lobe_width_deg"));
    for (const auto& p : problems) {
        const int n = lineNumber(p);
        REQUIRE(n > 0);
        // The reported line holds the offending key, or opens its object.
        const std::string pointer = p.substr(p.find('/'), p.find(':', p.find('/')) - p.find('/'));
        const std::string key = pointer.substr(pointer.rfind('/') + 1);
        const std::string line = lineOf(text, n);
        const bool keyLine = line.find("\"" + key + "\"") != std::string::npos;
        const bool opener = line.find('{') != std::string::npos || line.find('[') != std::string::npos;
        CHECK_MESSAGE((keyLine || opener), p);
    }
}

TEST_CASE("validateSceneText: syntax errors and schema errors") {
    const auto syntax = validateSceneText("{\n  \"walls\": [\n");
    REQUIRE(syntax.size() == 1);
    CHECK(syntax[0].find("line 3") != std::string::npos);

    json j = floorplanToJson(buildScenario(1).floorplan);
    j["walls"][0].erase("tiles");
    j["devices"][1]["role"] = "Relay";
    const auto problems = validateSceneText(j.dump(2));
    CHECK(mentions(problems, "/walls/0/tiles"));
    CHECK(mentions(problems, "/devices/1"));

    json moved = floorplanToJson(buildScenario(1).floorplan);
    moved["devices"][1]["position"] = {100.0, 7.5, 1.5};
    CHECK(mentions(validateSceneText(moved.dump(2)), "outside the floorplan volume"));
    CHECK_THROWS_AS(floorplanFromJson(j), SceneError);
}

TEST_CASE("network dump round-trip") {
    const Scenario sc = buildScenario(1);
    PweNetwork net = buildNetwork(sc.floorplan, sc.path, sc.tx, sc.rx, 1.0, 8);
    TrainingConfig cfg;
    cfg.cycles = 50;
    const CostReport rep = train(net, cfg);
    const json j = networkToJson(net, &rep);
    CHECK(j.contains("layers"));

    PweNetwork back = networkFromJson(json::parse(j.dump()), sc.floorplan);
    REQUIRE(back.layers.size() == net.layers.size());
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        REQUIRE(back.layers[k].size() == net.layers[k].size());
        for (std::size_t i = 0; i < net.layers[k].size(); ++i) {
            const auto& a = net.layers[k][i];
            const auto& b = back.layers[k][i];
            CHECK(a.tile.id == b.tile.id);
            CHECK(b.tile.angles.theta == doctest::Approx(a.tile.angles.theta).epsilon(1e-12));
            CHECK(b.tile.angles.phi == doctest::Approx(a.tile.angles.phi).epsilon(1e-12));
            CHECK(b.tile.angles.varphi == doctest::Approx(a.tile.angles.varphi).epsilon(1e-12));
            CHECK(b.out.size() == a.out.size());
        }
    }
    const auto want = currentOutputs(net);
    const auto got = feedforward(back);
    for (std::size_t l = 0; l < want.size(); ++l) CHECK(got[l] == doctest::Approx(want[l]).epsilon(1e-9));

    json broken = j;
    broken["layers"][0][0]["wall"] = 77;
    CHECK_THROWS_AS(networkFromJson(broken, sc.floorplan), SceneError);
}
