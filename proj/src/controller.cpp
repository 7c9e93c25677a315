#include "morphevo/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace morphevo {

namespace {

double& field(ParamSet& s, int i)
{
    switch (i) {
    case 0: return s.amplitude;
    case 1: return s.phase;
    case 2: return s.offset;
    case 3: return s.touch_weight;
    default: return s.neighbor_weight;
    }
}

double field(const ParamSet& s, int i)
{
    return field(const_cast<ParamSet&>(s), i);
}

} // namespace

bool ControllerParams::within_bounds() const noexcept
{
    for (const auto& s : sets)
        for (int i = 0; i < kParamsPerSet; ++i) {
            const double v = field(s, i);
            if (!(v >= kParamBounds[i].lo && v <= kParamBounds[i].hi))
                return false;
        }
    return true;
}

void step_phase(ControllerState& state, double dt)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("step_phase: dt must be positive");
    for (auto& p : state.phi)
        p += dt * kFrequency;
}

double hinge_output(const ParamSet& p, double phi, SensorInput sensors) noexcept
{
    const double base = p.amplitude * std::sin(phi + p.phase) + p.offset;
    const double sensed = std::sin(phi + p.offset);
    const double own = sensors.touch * p.touch_weight * sensed;
    const double near = sensors.neighbor * p.neighbor_weight * sensed;
    return std::clamp(base + own + near, -1.0, 1.0) * kMaxJointAngle;
}

std::vector<double> params_to_vector(const ControllerParams& p)
{
    std::vector<double> x;
    x.reserve(p.dimension());
    for (const auto& s : p.sets)
        for (int i = 0; i < kParamsPerSet; ++i) {
            const auto [lo, hi] = kParamBounds[i];
            x.push_back((field(s, i) - lo) / (hi - lo));
        }
    return x;
}

ControllerParams vector_to_params(std::span<const double> x, int num_sets)
{
    if (num_sets < 1 || x.size() != static_cast<std::size_t>(kParamsPerSet * num_sets))
        throw std::invalid_argument("vector_to_params: expected " + std::to_string(kParamsPerSet * num_sets) +
                                    " coordinates, got " + std::to_string(x.size()));
    ControllerParams p;
    p.sets.resize(num_sets);
    for (int k = 0; k < num_sets; ++k)
        for (int i = 0; i < kParamsPerSet; ++i) {
            const auto [lo, hi] = kParamBounds[i];
            const double u = x[k * kParamsPerSet + i];
            // Endpoint-exact: u = 0 gives lo and u = 1 gives hi.
            field(p.sets[k], i) = u >= 1.0 ? hi : lo + u * (hi - lo);
        }
    return p;
}

std::map<int, SensorInput> compute_sensor_inputs(const BodyGraph& body, std::span<const int> contacts)
{
    auto touching = [&](int h) { return std::find(contacts.begin(), contacts.end(), h) != contacts.end(); };
    std::map<int, SensorInput> out;
    for (int h : body.hinges) {
        SensorInput in;
        in.touch = touching(h) ? 1 : 0;
        for (int n : hinge_neighbors(body, h))
            if (touching(n)) {
                in.neighbor = 1;
                break;
            }
        out.emplace(h, in);
    }
    return out;
}

nlohmann::json to_json(const ControllerParams& p)
{
    return {{"num_sets", p.num_sets()}, {"x", params_to_vector(p)}};
}

ControllerParams controller_from_json(const nlohmann::json& j)
{
    return vector_to_params(j.at("x").get<std::vector<double>>(), j.at("num_sets").get<int>());
}

} // namespace morphevo
