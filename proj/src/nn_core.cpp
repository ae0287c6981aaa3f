#include "pwe/nn_core.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <random>

namespace pwe {

namespace {

// Uniform double in [0, 1) from the raw engine output, so that draws do not
// depend on the standard library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 streamFor(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

constexpr std::uint64_t kPruneStream = 1;
constexpr std::uint64_t kAngleStream = 2;

std::vector<Vec3> inDirs(const TileNode& n) {
    std::vector<Vec3> v;
    v.reserve(n.in.size());
    for (const auto& l : n.in) v.push_back(l.d);
    return v;
}

std::vector<Vec3> outDirs(const TileNode& n) {
    std::vector<Vec3> v;
    v.reserve(n.out.size());
    for (const auto& l : n.out) v.push_back(l.o);
    return v;
}

std::vector<double> inShares(const TileNode& n) {
    const double z = n.totalPower();
    if (z <= 0.0) return {};
    std::vector<double> s;
    s.reserve(n.in.size());
    for (const auto& l : n.in) s.push_back(l.power / z);
    return s;
}

// Euclidean projection onto {w >= 0, sum w <= 1}.
std::vector<double> projectCappedSimplex(std::vector<double> w) {
    std::vector<double> clipped(w.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        clipped[i] = std::max(w[i], 0.0);
        sum += clipped[i];
    }
    if (sum <= 1.0) return clipped;
    std::vector<double> u = w;
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0, lambda = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumulative += u[k];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0.0) lambda = t;
    }
    for (auto& x : w) x = std::max(x - lambda, 0.0);
    return w;
}

// d cost / d output as used by the link-level backward pass: the classic
// output-node derivative -(target - output) for the squared-error family.
std::vector<double> outputSensitivity(std::span<const double> outputs, std::span<const double> ideal,
                                      const CostFunction& fn) {
    std::vector<double> s(outputs.size());
    double sse = 0.0;
    for (std::size_t l = 0; l < outputs.size(); ++l) sse += (ideal[l] - outputs[l]) * (ideal[l] - outputs[l]);
    for (std::size_t l = 0; l < outputs.size(); ++l) {
        const double delta = ideal[l] - outputs[l];
        s[l] = fn.kind == CostFunction::Kind::Exponential ? -2.0 * delta * std::exp(sse / fn.tau) : -delta;
    }
    return s;
}

}  // namespace

double TileNode::totalPower() const {
    double z = 0.0;
    for (const auto& l : in) z += l.power;
    return z;
}

std::size_t PweNetwork::nodeCount() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.size();
    return n;
}

std::string to_string(const CostFunction& c) {
    switch (c.kind) {
        case CostFunction::Kind::RMSE: return "rmse";
        case CostFunction::Kind::HalfSSE: return "halfsse";
        case CostFunction::Kind::Exponential: {
            std::ostringstream os;
            os << "exp:" << c.tau;
            return os.str();
        }
    }
    return "rmse";
}

CostFunction parseCostFunction(const std::string& s) {
    if (s == "rmse") return CostFunction::rmse();
    if (s == "halfsse") return CostFunction::halfSse();
    if (s == "exp") return CostFunction::exponential(1.0);
    if (s.rfind("exp:", 0) == 0) {
        const double tau = std::stod(s.substr(4));
        if (!(tau > 0.0)) throw std::invalid_argument("exponential cost needs tau > 0");
        return CostFunction::exponential(tau);
    }
    throw std::invalid_argument("unknown cost function '" + s + "' (rmse, halfsse, exp, exp:<tau>)");
}

LayerTiles prunedLayers(const Floorplan& fp, const WallPath& path, const DevicePose& tx, double pruningFactor,
                        std::uint64_t seed) {
    if (!(pruningFactor > 0.0 && pruningFactor <= 1.0)) throw std::invalid_argument("pruning factor must lie in (0, 1]");
    if (path.empty()) throw std::invalid_argument("empty wall path");
    auto rng = streamFor(seed, kPruneStream);
    LayerTiles layers;
    for (std::size_t k = 0; k < path.size(); ++k) {
        const Wall& w = fp.wall(path[k]);
        if (k == 0) {
            layers.push_back(firstLayerTiles(tx, w, fp));
            continue;
        }
        const int total = w.tileCount();
        // Tolerance keeps e.g. 0.6 * 5 from rounding up to 4.
        const int keep = std::min(total, static_cast<int>(std::ceil(pruningFactor * total - 1e-9)));
        std::vector<int> idx(total);
        std::iota(idx.begin(), idx.end(), 0);
        for (int i = 0; i < keep; ++i) {
            const int j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(total - i));
            std::swap(idx[i], idx[j]);
        }
        std::vector<int> chosen(idx.begin(), idx.begin() + keep);
        std::sort(chosen.begin(), chosen.end());
        std::vector<TileId> ids;
        for (int j : chosen) ids.push_back({w.id, j});
        if (ids.empty()) throw std::invalid_argument("layer " + std::to_string(k) + " is empty after pruning");
        layers.push_back(std::move(ids));
    }
    return layers;
}

PweNetwork buildNetwork(const Floorplan& fp, const LayerTiles& layers, const DevicePose& tx, const DevicePose& rx,
                        std::uint64_t seed, double inputScale) {
    if (layers.empty()) throw std::invalid_argument("network needs at least one layer");
    PweNetwork net;
    auto rng = streamFor(seed, kAngleStream);
    for (std::size_t k = 0; k < layers.size(); ++k) {
        if (layers[k].empty()) throw std::invalid_argument("layer " + std::to_string(k) + " is empty");
        std::vector<TileNode> layer;
        for (const auto& id : layers[k]) {
            TileNode n;
            n.tile = fp.tile(id);
            n.layer = static_cast<int>(k);
            const double theta = (unit(rng) - 0.5) * kPi;
            const double phi = (unit(rng) - 0.5) * kPi;
            const double varphi = unit(rng) * kPi / 2.0;
            const auto act = activeAngles(n.tile.frame.plane, {theta, phi, varphi});
            n.tile.angles = fromActive(n.tile.frame.plane, act[0], act[1]);
            layer.push_back(std::move(n));
        }
        net.layers.push_back(std::move(layer));
    }

    for (auto& n : net.layers.front()) {
        if (!deviceSeesTile(tx.position, n.tile, fp)) continue;
        n.in.push_back({kExternal, -1, (n.tile.center - tx.position).normalized(), 0.0});
    }
    for (std::size_t k = 0; k + 1 < net.layers.size(); ++k) {
        auto& cur = net.layers[k];
        auto& nxt = net.layers[k + 1];
        for (std::size_t i = 0; i < cur.size(); ++i) {
            for (std::size_t j = 0; j < nxt.size(); ++j) {
                if (!tilesLinked(cur[i].tile, nxt[j].tile, fp)) continue;
                const Vec3 dir = (nxt[j].tile.center - cur[i].tile.center).normalized();
                cur[i].out.push_back({static_cast<int>(j), static_cast<int>(nxt[j].in.size()), dir, 0.0});
                nxt[j].in.push_back({static_cast<int>(i), static_cast<int>(cur[i].out.size() - 1), dir, 0.0});
            }
        }
    }
    for (auto& n : net.layers.back()) {
        if (!deviceSeesTile(rx.position, n.tile, fp)) continue;
        n.out.push_back({kExternal, -1, (rx.position - n.tile.center).normalized(), 0.0});
    }

    const double k0 = static_cast<double>(net.layers.front().size());
    const double kOut = static_cast<double>(net.layers.back().size());
    net.inputVector.assign(net.layers.front().size(), inputScale / k0);
    net.idealOutput.assign(net.layers.back().size(), inputScale / kOut);
    feedforward(net);
    return net;
}

PweNetwork buildNetwork(const Floorplan& fp, const WallPath& path, const DevicePose& tx, const DevicePose& rx,
                        double pruningFactor, std::uint64_t seed) {
    return buildNetwork(fp, prunedLayers(fp, path, tx, pruningFactor, seed), tx, rx, seed);
}

std::vector<double> computeLinkWeights(const TileNode& node) {
    const auto d = inDirs(node);
    const auto o = outDirs(node);
    const auto s = inShares(node);
    return powerFractions(virtualNormal(node.tile), d, s, o);
}

std::vector<double> feedforward(PweNetwork& net) {
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        for (std::size_t j = 0; j < net.layers[k].size(); ++j) {
            TileNode& n = net.layers[k][j];
            for (auto& l : n.in) {
                if (k == 0) {
                    l.power = net.inputVector[j];
                } else {
                    const TileNode& src = net.layers[k - 1][l.source];
                    l.power = src.totalPower() * src.out[l.sourceLink].weight;
                }
            }
            const auto w = computeLinkWeights(n);
            for (std::size_t o = 0; o < n.out.size(); ++o) n.out[o].weight = w[o];
        }
    }
    return currentOutputs(net);
}

std::vector<double> currentOutputs(const PweNetwork& net) {
    std::vector<double> out;
    for (const auto& n : net.layers.back()) {
        double v = 0.0;
        if (!n.out.empty()) v = n.totalPower() * n.out.front().weight;
        out.push_back(v);
    }
    return out;
}

double cost(std::span<const double> outputs, std::span<const double> ideal, const CostFunction& fn) {
    if (outputs.size() != ideal.size()) throw std::invalid_argument("output and ideal lengths differ");
    double sse = 0.0;
    for (std::size_t l = 0; l < outputs.size(); ++l) sse += (ideal[l] - outputs[l]) * (ideal[l] - outputs[l]);
    switch (fn.kind) {
        case CostFunction::Kind::HalfSSE: return 0.5 * sse;
        case CostFunction::Kind::RMSE: return outputs.empty() ? 0.0 : std::sqrt(sse / static_cast<double>(outputs.size()));
        case CostFunction::Kind::Exponential: return fn.tau * std::exp(sse / fn.tau);
    }
    return 0.0;
}

double rmse(std::span<const double> outputs, std::span<const double> ideal) {
    return cost(outputs, ideal, CostFunction::rmse());
}

std::vector<double> costGradient(std::span<const double> outputs, std::span<const double> ideal,
                                 const CostFunction& fn) {
    std::vector<double> g(outputs.size(), 0.0);
    double sse = 0.0;
    for (std::size_t l = 0; l < outputs.size(); ++l) sse += (ideal[l] - outputs[l]) * (ideal[l] - outputs[l]);
    for (std::size_t l = 0; l < outputs.size(); ++l) {
        const double delta = ideal[l] - outputs[l];
        switch (fn.kind) {
            case CostFunction::Kind::HalfSSE: g[l] = -delta; break;
            case CostFunction::Kind::RMSE: {
                const double r = std::sqrt(sse / static_cast<double>(outputs.size()));
                g[l] = r > 0.0 ? -delta / (static_cast<double>(outputs.size()) * r) : 0.0;
                break;
            }
            case CostFunction::Kind::Exponential: g[l] = -2.0 * delta * std::exp(sse / fn.tau); break;
        }
    }
    return g;
}

double backpropStep(PweNetwork& net, const TrainingConfig& cfg, MomentumState& state, const FitOptions& fit) {
    feedforward(net);
    const auto outputs = currentOutputs(net);
    const auto sens = outputSensitivity(outputs, net.idealOutput, cfg.cost);

    const std::size_t L = net.layers.size();
    std::vector<std::vector<double>> dz(L);
    std::vector<std::vector<std::vector<double>>> grad(L);
    for (std::size_t k = L; k-- > 0;) {
        const auto& layer = net.layers[k];
        dz[k].assign(layer.size(), 0.0);
        grad[k].resize(layer.size());
        for (std::size_t j = 0; j < layer.size(); ++j) {
            const TileNode& n = layer[j];
            const double z = n.totalPower();
            grad[k][j].assign(n.out.size(), 0.0);
            double wsum = 0.0;
            for (const auto& l : n.out) wsum += l.weight;
            // A node whose reflection misses every outgoing link would block
            // the backward signal entirely; it passes it on as if it split
            // its power evenly.
            const double flat = n.out.empty() ? 0.0 : 1.0 / static_cast<double>(n.out.size());
            for (std::size_t o = 0; o < n.out.size(); ++o) {
                const double down = n.out[o].target == kExternal ? sens[j] : dz[k + 1][n.out[o].target];
                grad[k][j][o] = down * z;
                dz[k][j] += down * (wsum > 0.0 ? n.out[o].weight : flat);
            }
        }
    }

    if (state.prev.size() != L) {
        state.prev.assign(L, {});
        for (std::size_t k = 0; k < L; ++k) {
            state.prev[k].resize(net.layers[k].size());
            for (std::size_t j = 0; j < net.layers[k].size(); ++j)
                state.prev[k][j].assign(net.layers[k][j].out.size(), 0.0);
        }
    }

    for (std::size_t k = 0; k < L; ++k) {
        for (std::size_t j = 0; j < net.layers[k].size(); ++j) {
            TileNode& n = net.layers[k][j];
            if (n.out.empty() || n.in.empty()) continue;
            std::vector<double> target(n.out.size());
            double change = 0.0;
            for (std::size_t o = 0; o < n.out.size(); ++o)
                target[o] = n.out[o].weight - cfg.eta * grad[k][j][o] - cfg.mu * state.prev[k][j][o];
            target = projectCappedSimplex(std::move(target));
            // Realizable weight vectors sum to exactly one (or are all zero),
            // so a feasible target is rescaled onto that level.
            const double tsum = std::accumulate(target.begin(), target.end(), 0.0);
            if (tsum > 0.0)
                for (double& t : target) t /= tsum;
            for (std::size_t o = 0; o < n.out.size(); ++o) change = std::max(change, std::abs(target[o] - n.out[o].weight));
            state.prev[k][j] = grad[k][j];
            if (change < 1e-12) continue;
            const auto d = inDirs(n);
            const auto s = inShares(n);
            const auto od = outDirs(n);
            n.tile.angles = fitVirtualNormal(n.tile.frame, d, s, od, target, fit, n.tile.angles).angles;
        }
    }
    return rmse(feedforward(net), net.idealOutput);
}

std::array<double, 2> angleGradient(const PweNetwork& net, int layer, int index, const CostFunction& fn) {
    const auto outputs = currentOutputs(net);
    const auto gOut = costGradient(outputs, net.idealOutput, fn);
    const std::size_t L = net.layers.size();

    // G[k][j][o]: d cost / d (power leaving node j of layer k along link o).
    std::vector<std::vector<std::vector<double>>> G(L);
    for (std::size_t k = 0; k < L; ++k) {
        G[k].resize(net.layers[k].size());
        for (std::size_t j = 0; j < net.layers[k].size(); ++j) G[k][j].assign(net.layers[k][j].out.size(), 0.0);
    }
    for (std::size_t j = 0; j < net.layers[L - 1].size(); ++j)
        if (!net.layers[L - 1][j].out.empty()) G[L - 1][j][0] = gOut[j];

    struct Local {
        std::vector<std::vector<double>> P;  // clipped projections [in][out]
        std::vector<double> A;               // per out
        double B = 0.0;
        double z = 0.0;
        Vec3 n;
    };
    auto localTerms = [](const TileNode& node) {
        Local t;
        t.n = virtualNormal(node.tile);
        t.z = node.totalPower();
        t.A.assign(node.out.size(), 0.0);
        const double equal = node.in.empty() ? 0.0 : 1.0 / static_cast<double>(node.in.size());
        for (const auto& il : node.in) {
            // With zero total input the shares fall back to equal weights.
            const double p = t.z > 0.0 ? il.power : equal;
            const Vec3 r = reflect(il.d, t.n);
            std::vector<double> row(node.out.size());
            for (std::size_t o = 0; o < node.out.size(); ++o) {
                row[o] = std::max(r.dot(node.out[o].o), 0.0);
                t.A[o] += p * row[o];
            }
            t.P.push_back(std::move(row));
        }
        for (double a : t.A) t.B += a;
        return t;
    };

    for (std::size_t k = L; k-- > static_cast<std::size_t>(layer) + 1;) {
        for (std::size_t j = 0; j < net.layers[k].size(); ++j) {
            const TileNode& node = net.layers[k][j];
            const Local t = localTerms(node);
            if (t.B <= 0.0 || t.z <= 0.0) continue;
            double gA = 0.0;
            for (std::size_t o = 0; o < node.out.size(); ++o) gA += G[k][j][o] * t.A[o];
            for (std::size_t i = 0; i < node.in.size(); ++i) {
                double gP = 0.0, Q = 0.0;
                for (std::size_t o = 0; o < node.out.size(); ++o) {
                    gP += G[k][j][o] * t.P[i][o];
                    Q += t.P[i][o];
                }
                const double dp = gA / t.B + (t.z / t.B) * gP - (t.z / (t.B * t.B)) * gA * Q;
                const auto& il = node.in[i];
                if (il.source != kExternal) G[k - 1][il.source][il.sourceLink] += dp;
            }
        }
    }

    const TileNode& node = net.layers[layer][index];
    const Local t = localTerms(node);
    if (t.B <= 0.0 || t.z <= 0.0) return {0.0, 0.0};
    const auto dR = rotationMatrixDerivatives(node.tile.frame, node.tile.angles);
    const Vec3 n0 = node.tile.baseNormal();
    double gA = 0.0;
    for (std::size_t o = 0; o < node.out.size(); ++o) gA += G[layer][index][o] * t.A[o];
    std::array<double, 2> result{};
    for (int a = 0; a < 2; ++a) {
        const Vec3 dn = dR[a] * n0;
        double gdA = 0.0, dB = 0.0;
        for (std::size_t i = 0; i < node.in.size(); ++i) {
            const Vec3& d = node.in[i].d;
            const Vec3 dr = (t.n * d.dot(dn) + dn * d.dot(t.n)) * -2.0;
            const double p = node.in[i].power;
            for (std::size_t o = 0; o < node.out.size(); ++o) {
                if (t.P[i][o] <= 0.0) continue;
                const double dP = dr.dot(node.out[o].o);
                gdA += G[layer][index][o] * p * dP;
                dB += p * dP;
            }
        }
        result[a] = (t.z / t.B) * gdA - (t.z / (t.B * t.B)) * gA * dB;
    }
    return result;
}

void updateSignificance(PweNetwork& net) {
    const auto outputs = currentOutputs(net);
    for (std::size_t k = 0; k < net.layers.size(); ++k) {
        for (std::size_t j = 0; j < net.layers[k].size(); ++j) {
            TileNode& n = net.layers[k][j];
            n.significance = k + 1 == net.layers.size() ? net.idealOutput[j] - outputs[j] : n.totalPower();
        }
    }
}

CostReport train(PweNetwork& net, const TrainingConfig& cfg) {
    if (cfg.cycles < 0) throw std::invalid_argument("cycles must be non-negative");
    CostReport report;
    report.initialRMSE = rmse(feedforward(net), net.idealOutput);
    double best = report.initialRMSE;
    PweNetwork bestNet = net;
    MomentumState state;
    report.perCycleRMSE.reserve(cfg.cycles);
    for (int c = 0; c < cfg.cycles; ++c) {
        const double r = backpropStep(net, cfg, state);
        report.perCycleRMSE.push_back(r);
        if (r < best) {
            best = r;
            bestNet = net;
        }
    }
    net = std::move(bestNet);
    const auto outputs = feedforward(net);
    updateSignificance(net);
    report.finalRMSE = best;
    for (std::size_t l = 0; l < outputs.size(); ++l) report.finalDeviations.push_back(net.idealOutput[l] - outputs[l]);
    return report;
}

EnsembleResult buildEnsemble(const Floorplan& fp, const DevicePose& tx, const DevicePose& rx,
                             const EnsembleConfig& ens, const TrainingConfig& cfg) {
    if (ens.m < 1 || static_cast<int>(ens.memberTiles.size()) != ens.m)
        throw std::invalid_argument("ensemble needs m >= 1 member tile subsets");
    for (const auto& member : ens.memberTiles)
        for (const auto& layer : member)
            if (layer.empty()) throw std::invalid_argument("ensemble member has an empty layer");

    EnsembleResult res;
    std::vector<std::future<std::pair<PweNetwork, CostReport>>> jobs;
    for (int i = 0; i < ens.m; ++i) {
        jobs.push_back(std::async(std::launch::async, [&, i] {
            PweNetwork net = buildNetwork(fp, ens.memberTiles[i], tx, rx, cfg.seed + static_cast<std::uint64_t>(i),
                                          1.0 / ens.m);
            CostReport rep = train(net, cfg);
            return std::make_pair(std::move(net), std::move(rep));
        }));
    }
    for (auto& j : jobs) {
        auto [net, rep] = j.get();
        res.members.push_back(std::move(net));
        res.reports.push_back(std::move(rep));
    }
    std::map<TileId, double> bestRmse;
    for (std::size_t i = 0; i < res.members.size(); ++i) {
        for (const auto& layer : res.members[i].layers) {
            for (const auto& n : layer) {
                auto it = bestRmse.find(n.tile.id);
                if (it == bestRmse.end() || res.reports[i].finalRMSE < it->second) {
                    bestRmse[n.tile.id] = res.reports[i].finalRMSE;
                    res.mergedAngles[n.tile.id] = n.tile.angles;
                }
            }
        }
    }
    return res;
}

}  // namespace pwe
