#pragma once

#include <limits>
#include <vector>

#include "morphevo/controller.hpp"
#include "morphevo/morphology.hpp"
#include "morphevo/terrain.hpp"

namespace morphevo {

/// Physical constants of the planar world. Defaults give a stable, controllable
/// 5-10 module robot at dt = 1/240 s.
struct WorldConfig {
    double gravity = 9.81;
    double dt = 1.0 / 240.0;
    double control_dt = 1.0 / 60.0;
    double duration = 30.0;
    double friction_coeff = 1.0;
    double module_size = 0.075;
    double module_mass = 0.06;
    double servo_kp = 2.0;
    double servo_kd = 0.1;
    double torque_limit = 1.5;
    double contact_stiffness = 1.0e4;
    double contact_damping = 50.0;
    double spawn_clearance = 0.01;
    /// Servos hold zero for this long before the clock starts; a side-view
    /// body may tip over after being dropped.
    double settle_time = 3.0;
    int solver_iterations = 10;
    bool record_trajectory = false;

    /// Throws std::invalid_argument unless timing and physical constants are consistent.
    void validate() const;
    int substeps_per_control() const;
    int control_steps() const;
};

struct Vec2 {
    double x = 0.0;
    double z = 0.0;
};

/// One rigid link: a maximal group of modules welded together between hinges.
struct RigidBody {
    Vec2 pos; ///< centre of mass
    double angle = 0.0;
    Vec2 vel;
    double omega = 0.0;
    double mass = 0.0;
    double inv_mass = 0.0;
    double inertia = 0.0;
    double inv_inertia = 0.0;
    std::vector<Vec2> corners; ///< contact points, body frame relative to the COM
};

/// Revolute joint with a PD position servo.
struct Joint {
    int parent = 0;
    int child = 0;
    int hinge = 0; ///< module id of the hinge
    Vec2 anchor_parent; ///< body frame
    Vec2 anchor_child;
};

struct World {
    std::vector<RigidBody> bodies;
    std::vector<Joint> joints;
    std::vector<int> module_body; ///< rigid body of every module
    Vec2 core_offset;             ///< core module centre relative to body 0's COM
    int handedness = 1;           ///< sign applied to every joint angle

    Vec2 core_position() const noexcept;
    double kinetic_energy() const noexcept;
};

struct TrajectorySample {
    double t;
    double x;
    double z;
};

struct SimResult {
    double fitness = 0.0; ///< core displacement along +x; -inf when diverged
    std::vector<TrajectorySample> trajectory;
    long contact_steps = 0;
    bool diverged = false;
    double final_kinetic_energy = 0.0;
    double min_clearance = std::numeric_limits<double>::infinity(); ///< lowest corner minus terrain, after 5 s
};

constexpr double kDivergedFitness = -std::numeric_limits<double>::infinity();

World spawn(const BodyGraph& body, const TerrainSpec& terrain, const WorldConfig& cfg);

SimResult simulate(const BodyGraph& body, const ControllerParams& params, const TerrainSpec& terrain,
                   const WorldConfig& cfg);

} // namespace morphevo
