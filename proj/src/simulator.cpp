#include "morphevo/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace morphevo {

namespace {

constexpr double kJointBaumgarte = 0.2;
constexpr double kDivergenceSpeed = 100.0;
constexpr double kDivergenceExtent = 1.0e3;
constexpr double kClearanceAfter = 5.0;
constexpr double kTrajectoryPeriod = 0.1;

Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.z * b.z; }
double cross(Vec2 a, Vec2 b) { return a.x * b.z - a.z * b.x; }
// omega x r for a rotation about the axis normal to the plane.
Vec2 cross(double w, Vec2 r) { return {-w * r.z, w * r.x}; }

Vec2 rotate(Vec2 v, double c, double s) { return {c * v.x - s * v.z, s * v.x + c * v.z}; }

Vec2 velocity_at(const RigidBody& b, Vec2 r) { return b.vel + cross(b.omega, r); }

void apply_impulse(RigidBody& b, Vec2 r, Vec2 p)
{
    b.vel = b.vel + b.inv_mass * p;
    b.omega += b.inv_inertia * cross(r, p);
}

struct Contact {
    int body;
    int corner;
    Vec2 r;
    Vec2 n;
    Vec2 t;
    double normal_mass;
    double tangent_mass;
    double bias;
    double gamma;
    double acc_n;
    double acc_t;
};

struct JointRow {
    Vec2 ra;
    Vec2 rb;
    double k11, k12, k22;
    Vec2 bias;
    double motor_mass;
    double motor_bias;
    double motor_gamma;
};

struct Solver {
    const TerrainSpec& terrain;
    const WorldConfig& cfg;
    World& world;

    std::vector<Contact> contacts;
    std::vector<JointRow> rows;
    // Accumulated impulses kept for warm starting.
    std::vector<std::vector<Vec2>> corner_impulse;
    std::vector<Vec2> joint_impulse;
    std::vector<double> motor_impulse;
    std::vector<double> targets;

    Solver(const TerrainSpec& t, const WorldConfig& c, World& w)
        : terrain(t), cfg(c), world(w), joint_impulse(w.joints.size()), motor_impulse(w.joints.size(), 0.0),
          targets(w.joints.size(), 0.0)
    {
        for (const auto& b : w.bodies)
            corner_impulse.emplace_back(b.corners.size());
    }

    void collect_contacts()
    {
        const double h = cfg.dt;
        const double k = cfg.contact_stiffness;
        const double c = cfg.contact_damping;
        const double erp_rate = k / (h * k + c);
        const double gamma = 1.0 / (h * (h * k + c));

        contacts.clear();
        for (int bi = 0; bi < static_cast<int>(world.bodies.size()); ++bi) {
            const auto& b = world.bodies[bi];
            const double cs = std::cos(b.angle);
            const double sn = std::sin(b.angle);
            auto& cached = corner_impulse[bi];
            for (int ci = 0; ci < static_cast<int>(b.corners.size()); ++ci) {
                const Vec2 r = rotate(b.corners[ci], cs, sn);
                const Vec2 p = b.pos + r;
                const double depth = terrain_height(terrain, p.x) - p.z;
                if (depth <= 0.0) {
                    cached[ci] = {};
                    continue;
                }
                const double slope = terrain_slope(terrain, p.x);
                const double inv_len = 1.0 / std::sqrt(1.0 + slope * slope);
                const Vec2 n{-slope * inv_len, inv_len};
                const Vec2 t{n.z, -n.x};
                const double rn = cross(r, n);
                const double rt = cross(r, t);
                const double kn = b.inv_mass + b.inv_inertia * rn * rn;
                const double kt = b.inv_mass + b.inv_inertia * rt * rt;
                contacts.push_back({bi, ci, r, n, t, 1.0 / (kn + gamma), 1.0 / kt,
                                    -erp_rate * depth * n.z, gamma, cached[ci].x, cached[ci].z});
            }
        }
    }

    void prepare_joints()
    {
        const double h = cfg.dt;
        const double kp = cfg.servo_kp;
        const double kd = cfg.servo_kd;
        rows.resize(world.joints.size());
        for (std::size_t j = 0; j < world.joints.size(); ++j) {
            const auto& jt = world.joints[j];
            const auto& a = world.bodies[jt.parent];
            const auto& b = world.bodies[jt.child];
            auto& row = rows[j];
            row.ra = rotate(jt.anchor_parent, std::cos(a.angle), std::sin(a.angle));
            row.rb = rotate(jt.anchor_child, std::cos(b.angle), std::sin(b.angle));
            const double m = a.inv_mass + b.inv_mass;
            row.k11 = m + a.inv_inertia * row.ra.z * row.ra.z + b.inv_inertia * row.rb.z * row.rb.z;
            row.k12 = -a.inv_inertia * row.ra.x * row.ra.z - b.inv_inertia * row.rb.x * row.rb.z;
            row.k22 = m + a.inv_inertia * row.ra.x * row.ra.x + b.inv_inertia * row.rb.x * row.rb.x;
            const Vec2 err = (b.pos + row.rb) - (a.pos + row.ra);
            row.bias = (kJointBaumgarte / h) * err;

            row.motor_gamma = 1.0 / (h * (h * kp + kd));
            row.motor_mass = 1.0 / (a.inv_inertia + b.inv_inertia + row.motor_gamma);
            const double rel = b.angle - a.angle;
            row.motor_bias = kp / (h * kp + kd) * (rel - targets[j]);
        }
    }

    void warm_start()
    {
        for (std::size_t j = 0; j < world.joints.size(); ++j) {
            const auto& jt = world.joints[j];
            auto& a = world.bodies[jt.parent];
            auto& b = world.bodies[jt.child];
            const Vec2 p = joint_impulse[j];
            apply_impulse(a, rows[j].ra, -1.0 * p);
            apply_impulse(b, rows[j].rb, p);
            a.omega -= a.inv_inertia * motor_impulse[j];
            b.omega += b.inv_inertia * motor_impulse[j];
        }
        for (const auto& c : contacts)
            apply_impulse(world.bodies[c.body], c.r, c.acc_n * c.n + c.acc_t * c.t);
    }

    void solve_joints()
    {
        const double max_motor = cfg.torque_limit * cfg.dt;
        for (std::size_t j = 0; j < world.joints.size(); ++j) {
            const auto& jt = world.joints[j];
            auto& a = world.bodies[jt.parent];
            auto& b = world.bodies[jt.child];
            const auto& row = rows[j];

            {
                const double cdot = b.omega - a.omega;
                double lambda = -row.motor_mass * (cdot + row.motor_bias + row.motor_gamma * motor_impulse[j]);
                const double prev = motor_impulse[j];
                motor_impulse[j] = std::clamp(prev + lambda, -max_motor, max_motor);
                lambda = motor_impulse[j] - prev;
                a.omega -= a.inv_inertia * lambda;
                b.omega += b.inv_inertia * lambda;
            }

            const Vec2 cdot = velocity_at(b, row.rb) - velocity_at(a, row.ra);
            const Vec2 rhs = -1.0 * (cdot + row.bias);
            const double det = row.k11 * row.k22 - row.k12 * row.k12;
            const Vec2 p{(row.k22 * rhs.x - row.k12 * rhs.z) / det, (row.k11 * rhs.z - row.k12 * rhs.x) / det};
            joint_impulse[j] = joint_impulse[j] + p;
            apply_impulse(a, row.ra, -1.0 * p);
            apply_impulse(b, row.rb, p);
        }
    }

    void solve_contacts()
    {
        const double mu = cfg.friction_coeff;
        for (auto& c : contacts) {
            auto& b = world.bodies[c.body];

            const double vt = dot(velocity_at(b, c.r), c.t);
            double lt = -c.tangent_mass * vt;
            const double limit = mu * c.acc_n;
            const double prev_t = c.acc_t;
            c.acc_t = std::clamp(prev_t + lt, -limit, limit);
            lt = c.acc_t - prev_t;
            apply_impulse(b, c.r, lt * c.t);

            const double vn = dot(velocity_at(b, c.r), c.n);
            double ln = -c.normal_mass * (vn + c.bias + c.gamma * c.acc_n);
            const double prev_n = c.acc_n;
            c.acc_n = std::max(prev_n + ln, 0.0);
            ln = c.acc_n - prev_n;
            apply_impulse(b, c.r, ln * c.n);
        }
    }

    void store_impulses()
    {
        for (const auto& c : contacts)
            corner_impulse[c.body][c.corner] = {c.acc_n, c.acc_t};
    }

    void step()
    {
        const double h = cfg.dt;
        for (auto& b : world.bodies)
            b.vel.z -= cfg.gravity * h;

        collect_contacts();
        prepare_joints();
        warm_start();
        for (int it = 0; it < cfg.solver_iterations; ++it) {
            solve_joints();
            solve_contacts();
        }
        store_impulses();

        for (auto& b : world.bodies) {
            b.pos = b.pos + h * b.vel;
            b.angle += h * b.omega;
        }
    }
};

bool diverged(const World& w)
{
    for (const auto& b : w.bodies) {
        const double speed = std::sqrt(dot(b.vel, b.vel));
        if (!(speed <= kDivergenceSpeed) || !std::isfinite(b.omega))
            return true;
        if (!(std::abs(b.pos.x) <= kDivergenceExtent) || !(std::abs(b.pos.z) <= kDivergenceExtent))
            return true;
    }
    return false;
}

// Hinges whose rigid link currently penetrates the terrain.
std::vector<int> touching_hinges(const World& w, const TerrainSpec& terrain)
{
    std::vector<char> body_touch(w.bodies.size(), 0);
    for (std::size_t bi = 0; bi < w.bodies.size(); ++bi) {
        const auto& b = w.bodies[bi];
        const double cs = std::cos(b.angle);
        const double sn = std::sin(b.angle);
        for (const auto& corner : b.corners) {
            const Vec2 p = b.pos + rotate(corner, cs, sn);
            if (terrain_height(terrain, p.x) - p.z > 0.0) {
                body_touch[bi] = 1;
                break;
            }
        }
    }
    std::vector<int> out;
    for (const auto& j : w.joints)
        if (body_touch[j.child])
            out.push_back(j.hinge);
    return out;
}

double lowest_clearance(const World& w, const TerrainSpec& terrain)
{
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& b : w.bodies) {
        const double cs = std::cos(b.angle);
        const double sn = std::sin(b.angle);
        for (const auto& corner : b.corners) {
            const Vec2 p = b.pos + rotate(corner, cs, sn);
            lowest = std::min(lowest, p.z - terrain_height(terrain, p.x));
        }
    }
    return lowest;
}

} // namespace

void WorldConfig::validate() const
{
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0))
            throw std::invalid_argument(std::string("world config: ") + name + " must be positive");
    };
    positive(dt, "dt");
    positive(control_dt, "control_dt");
    positive(duration, "duration");
    positive(module_size, "module_size");
    positive(module_mass, "module_mass");
    positive(contact_stiffness, "contact_stiffness");
    positive(servo_kp, "servo_kp");
    positive(torque_limit, "torque_limit");
    if (friction_coeff < 0.0 || contact_damping < 0.0 || servo_kd < 0.0 || gravity < 0.0)
        throw std::invalid_argument("world config: friction, damping and gravity must be non-negative");
    if (settle_time < 0.0)
        throw std::invalid_argument("world config: settle_time must be non-negative");
    if (solver_iterations < 1)
        throw std::invalid_argument("world config: solver_iterations must be >= 1");
    auto integer_ratio = [](double num, double den) {
        const double r = num / den;
        return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r) && std::round(r) >= 1.0;
    };
    if (!integer_ratio(control_dt, dt))
        throw std::invalid_argument("world config: control_dt must be an integer multiple of dt");
    if (!integer_ratio(duration, control_dt))
        throw std::invalid_argument("world config: duration must be an integer multiple of control_dt");
}

int WorldConfig::substeps_per_control() const
{
    return static_cast<int>(std::lround(control_dt / dt));
}

int WorldConfig::control_steps() const
{
    return static_cast<int>(std::lround(duration / control_dt));
}

Vec2 World::core_position() const noexcept
{
    const auto& b = bodies.front();
    return b.pos + rotate(core_offset, std::cos(b.angle), std::sin(b.angle));
}

double World::kinetic_energy() const noexcept
{
    double e = 0.0;
    for (const auto& b : bodies)
        e += 0.5 * b.mass * dot(b.vel, b.vel) + 0.5 * b.inertia * b.omega * b.omega;
    return e;
}

World spawn(const BodyGraph& body, const TerrainSpec& terrain, const WorldConfig& cfg)
{
    if (body.modules.empty() || body.modules.front().kind != ModuleKind::Core)
        throw std::invalid_argument("spawn: body must start with the core module");

    const double s = cfg.module_size;
    const double half = 0.5 * s;
    const double sign = body.handedness;
    World w;
    w.handedness = body.handedness;

    const auto n = body.modules.size();
    std::vector<Vec2> centre(n);
    w.module_body.resize(n);
    std::vector<std::vector<int>> members(1);
    for (std::size_t m = 0; m < n; ++m) {
        const auto& pm = body.modules[m];
        centre[m] = {pm.cell.x * s, pm.cell.z * s};
        if (m == 0) {
            w.module_body[m] = 0;
        } else if (pm.kind == ModuleKind::Hinge) {
            w.module_body[m] = static_cast<int>(members.size());
            members.emplace_back();
        } else {
            w.module_body[m] = w.module_body[pm.parent];
        }
        members[w.module_body[m]].push_back(static_cast<int>(m));
    }

    // Corner order follows the body's handedness so mirror images stay mirror images.
    const Vec2 corner_offsets[4] = {{-sign * half, -half}, {sign * half, -half}, {sign * half, half}, {-sign * half, half}};
    for (const auto& group : members) {
        RigidBody rb;
        Vec2 sum;
        for (int m : group)
            sum = sum + centre[m];
        const double count = static_cast<double>(group.size());
        rb.pos = {sum.x / count, sum.z / count};
        rb.mass = cfg.module_mass * count;
        for (int m : group) {
            const Vec2 d = centre[m] - rb.pos;
            rb.inertia += cfg.module_mass * (s * s / 6.0 + dot(d, d));
            for (const auto& off : corner_offsets) {
                const Vec2 local = (centre[m] + off) - rb.pos;
                const bool dup = std::any_of(rb.corners.begin(), rb.corners.end(),
                                             [&](Vec2 c) { return c.x == local.x && c.z == local.z; });
                if (!dup)
                    rb.corners.push_back(local);
            }
        }
        rb.inv_mass = 1.0 / rb.mass;
        rb.inv_inertia = 1.0 / rb.inertia;
        w.bodies.push_back(std::move(rb));
    }
    w.core_offset = centre[0] - w.bodies[0].pos;

    for (int h : body.hinges) {
        const auto& pm = body.modules[h];
        const Vec2 face = 0.5 * (centre[pm.parent] + centre[h]);
        Joint j;
        j.parent = w.module_body[pm.parent];
        j.child = w.module_body[h];
        j.hinge = h;
        j.anchor_parent = face - w.bodies[j.parent].pos;
        j.anchor_child = face - w.bodies[j.child].pos;
        w.joints.push_back(j);
    }

    double clearance = std::numeric_limits<double>::infinity();
    for (const auto& b : w.bodies)
        for (const auto& c : b.corners) {
            const Vec2 p = b.pos + c;
            clearance = std::min(clearance, p.z - terrain_height(terrain, p.x));
        }
    const double lift = cfg.spawn_clearance - clearance;
    for (auto& b : w.bodies)
        b.pos.z += lift;
    return w;
}

SimResult simulate(const BodyGraph& body, const ControllerParams& params, const TerrainSpec& terrain,
                   const WorldConfig& cfg)
{
    cfg.validate();
    for (int h : body.hinges)
        if (body.modules[h].controller_set >= params.num_sets())
            throw std::invalid_argument("simulate: hinge references controller set beyond K");

    World world = spawn(body, terrain, cfg);
    Solver solver(terrain, cfg, world);
    ControllerState state(world.joints.size());
    SimResult result;

    const long settle_steps = std::lround(cfg.settle_time / cfg.dt);
    for (long i = 0; i < settle_steps; ++i) {
        solver.step();
        if (diverged(world)) {
            result.diverged = true;
            result.fitness = kDivergedFitness;
            return result;
        }
    }

    const double x0 = world.core_position().x;
    const int substeps = cfg.substeps_per_control();
    const int control_steps = cfg.control_steps();
    const long sample_every = std::max(1L, std::lround(kTrajectoryPeriod / cfg.dt));
    long step_index = 0;

    auto record = [&] {
        if (cfg.record_trajectory && step_index % sample_every == 0) {
            const Vec2 c = world.core_position();
            result.trajectory.push_back({step_index * cfg.dt, c.x, c.z});
        }
    };
    record();

    for (int cs = 0; cs < control_steps; ++cs) {
        const auto contacts = touching_hinges(world, terrain);
        const auto sensors = compute_sensor_inputs(body, contacts);
        result.contact_steps += static_cast<long>(contacts.size());
        for (std::size_t j = 0; j < world.joints.size(); ++j) {
            const int h = world.joints[j].hinge;
            const auto& set = params.sets[body.modules[h].controller_set];
            solver.targets[j] = world.handedness * hinge_output(set, state.phi[j], sensors.at(h));
        }
        if (!world.joints.empty())
            step_phase(state, cfg.control_dt);

        for (int sub = 0; sub < substeps; ++sub) {
            solver.step();
            ++step_index;
            if (diverged(world)) {
                result.diverged = true;
                result.fitness = kDivergedFitness;
                return result;
            }
            record();
        }
        if (cfg.settle_time + (cs + 1) * cfg.control_dt >= kClearanceAfter)
            result.min_clearance = std::min(result.min_clearance, lowest_clearance(world, terrain));
    }

    result.fitness = world.core_position().x - x0;
    result.final_kinetic_energy = world.kinetic_energy();
    return result;
}

} // namespace morphevo
