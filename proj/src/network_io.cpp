#include "pwe/network_io.hpp"

namespace pwe {

json networkToJson(const PweNetwork& net, const CostReport* report) {
    json j;
    j["input_vector"] = net.inputVector;
    j["ideal_output"] = net.idealOutput;
    j["layers"] = json::array();
    for (const auto& layer : net.layers) {
        json lj = json::array();
        for (const auto& n : layer) {
            json nj;
            nj["wall"] = n.tile.id.wall;
            nj["index"] = n.tile.id.index;
            nj["plane"] = planeName(n.tile.frame.plane);
            nj["angles_deg"] = {{"theta", rad2deg(n.tile.angles.theta)},
                                {"phi", rad2deg(n.tile.angles.phi)},
                                {"varphi", rad2deg(n.tile.angles.varphi)}};
            nj["significance"] = n.significance;
            nj["incoming"] = json::array();
            for (const auto& l : n.in)
                nj["incoming"].push_back({{"source", l.source}, {"source_link", l.sourceLink}, {"d", vecToJson(l.d)}, {"power", l.power}});
            nj["outgoing"] = json::array();
            for (const auto& l : n.out)
                nj["outgoing"].push_back({{"target", l.target}, {"target_link", l.targetLink}, {"o", vecToJson(l.o)}, {"weight", l.weight}});
            lj.push_back(nj);
        }
        j["layers"].push_back(lj);
    }
    if (report) {
        j["initial_rmse"] = report->initialRMSE;
        j["final_rmse"] = report->finalRMSE;
        j["final_deviations"] = report->finalDeviations;
        j["rmse_trace"] = report->perCycleRMSE;
    }
    return j;
}

PweNetwork networkFromJson(const json& j, const Floorplan& fp) {
    PweNetwork net;
    try {
        net.inputVector = j.at("input_vector").get<std::vector<double>>();
        net.idealOutput = j.at("ideal_output").get<std::vector<double>>();
        for (std::size_t k = 0; k < j.at("layers").size(); ++k) {
            std::vector<TileNode> layer;
            for (const json& nj : j["layers"][k]) {
                TileNode n;
                n.tile = fp.tile({nj.at("wall").get<int>(), nj.at("index").get<int>()});
                n.layer = static_cast<int>(k);
                const json& a = nj.at("angles_deg");
                n.tile.angles = {deg2rad(a.at("theta").get<double>()), deg2rad(a.at("phi").get<double>()),
                                 deg2rad(a.at("varphi").get<double>())};
                n.significance = nj.value("significance", 0.0);
                for (const json& l : nj.at("incoming"))
                    n.in.push_back({l.at("source").get<int>(), l.value("source_link", -1), vecFromJson(l.at("d"), "/d"),
                                    l.at("power").get<double>()});
                for (const json& l : nj.at("outgoing"))
                    n.out.push_back({l.at("target").get<int>(), l.value("target_link", -1),
                                     vecFromJson(l.at("o"), "/o"), l.at("weight").get<double>()});
                layer.push_back(std::move(n));
            }
            net.layers.push_back(std::move(layer));
        }
    } catch (const json::exception& e) {
        throw SceneError(std::string("network: ") + e.what());
    } catch (const std::out_of_range& e) {
        throw SceneError(std::string("network: ") + e.what());
    }
    return net;
}

}  // namespace pwe
