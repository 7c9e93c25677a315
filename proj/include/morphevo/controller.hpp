#pragma once

#include <map>
#include <numbers>
#include <span>
#include <vector>

#include <json.hpp>

#include "morphevo/morphology.hpp"

namespace morphevo {

constexpr double kFrequency = 4.0;
constexpr double kMaxJointAngle = std::numbers::pi / 2.0;
constexpr int kParamsPerSet = 5;

/// One shared set of sine-controller parameters.
struct ParamSet {
    double amplitude = 0.0;     ///< A in [0, 1]
    double phase = 0.0;         ///< P in [0, 2pi]
    double offset = 0.0;        ///< O in [-1, 1]; also shifts the sensor sine terms
    double touch_weight = 0.0;  ///< W in [-1, 1]
    double neighbor_weight = 0.0; ///< W_N in [-1, 1]

    friend bool operator==(const ParamSet&, const ParamSet&) = default;
};

struct ParamBounds {
    double lo;
    double hi;
};

/// Bounds in flattening order (A, P, O, W, W_N).
inline constexpr ParamBounds kParamBounds[kParamsPerSet] = {
    {0.0, 1.0},
    {0.0, 2.0 * std::numbers::pi},
    {-1.0, 1.0},
    {-1.0, 1.0},
    {-1.0, 1.0},
};

struct ControllerParams {
    std::vector<ParamSet> sets;

    int num_sets() const noexcept { return static_cast<int>(sets.size()); }
    int dimension() const noexcept { return kParamsPerSet * num_sets(); }
    bool within_bounds() const noexcept;

    friend bool operator==(const ControllerParams&, const ControllerParams&) = default;
};

struct SensorInput {
    int touch = 0;    ///< own sensor, 0 or 1
    int neighbor = 0; ///< 1 iff any neighbouring hinge touches
    friend bool operator==(const SensorInput&, const SensorInput&) = default;
};

/// Per-hinge oscillator phases, all starting at zero.
struct ControllerState {
    std::vector<double> phi;

    explicit ControllerState(std::size_t hinges = 0) : phi(hinges, 0.0) {}
};

/// Advances every phase by dt * F.
void step_phase(ControllerState& state, double dt);

/// Target joint angle in radians, clamped to [-pi/2, pi/2].
double hinge_output(const ParamSet& p, double phi, SensorInput sensors) noexcept;

std::vector<double> params_to_vector(const ControllerParams& p);
ControllerParams vector_to_params(std::span<const double> x, int num_sets);

/// Sensor inputs keyed by hinge id for the hinges in `contacts`.
std::map<int, SensorInput> compute_sensor_inputs(const BodyGraph& body, std::span<const int> contacts);

/// `{"num_sets": K, "x": [...]}` with x in unit-cube form.
nlohmann::json to_json(const ControllerParams& p);
ControllerParams controller_from_json(const nlohmann::json& j);

} // namespace morphevo
