#pragma once

#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "morphevo/rng.hpp"

namespace morphevo {

enum class ModuleKind { Core, Brick, Hinge };

/// Grid direction on the sagittal (x, z) plane, counter-clockwise order.
enum class Direction : int { PosX = 0, PosZ = 1, NegX = 2, NegZ = 3 };

constexpr int kMaxModules = 30;

struct Cell {
    int x = 0;
    int z = 0;
    friend bool operator==(const Cell&, const Cell&) = default;
};

constexpr Cell step(Cell c, Direction d) noexcept
{
    switch (d) {
    case Direction::PosX: return {c.x + 1, c.z};
    case Direction::PosZ: return {c.x, c.z + 1};
    case Direction::NegX: return {c.x - 1, c.z};
    case Direction::NegZ: return {c.x, c.z - 1};
    }
    return c;
}

constexpr Direction rotate_ccw(Direction d, int quarter_turns) noexcept
{
    return static_cast<Direction>(((static_cast<int>(d) + quarter_turns) % 4 + 4) % 4);
}

/// Number of child slots: Core 4, Brick 3, Hinge 1.
constexpr int slot_count(ModuleKind k) noexcept
{
    switch (k) {
    case ModuleKind::Core: return 4;
    case ModuleKind::Brick: return 3;
    case ModuleKind::Hinge: return 1;
    }
    return 0;
}

/// Direction a child in `slot` points to, given the direction the module was
/// attached along (ignored for the core). Brick slots are front, left, right.
constexpr Direction slot_direction(ModuleKind k, Direction incoming, int slot) noexcept
{
    if (k == ModuleKind::Core)
        return static_cast<Direction>(slot);
    if (k == ModuleKind::Brick && slot == 1)
        return rotate_ccw(incoming, 1);
    if (k == ModuleKind::Brick && slot == 2)
        return rotate_ccw(incoming, 3);
    return incoming;
}

struct ModuleNode {
    ModuleKind kind = ModuleKind::Core;
    std::vector<std::optional<ModuleNode>> children;
    /// Index into the controller sets; only meaningful for hinges, -1 otherwise.
    int controller_set = -1;

    static ModuleNode make(ModuleKind kind, int controller_set = -1);

    friend bool operator==(const ModuleNode&, const ModuleNode&) = default;
};

class MalformedGenotype : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Directly encoded robot body: a module tree rooted at the single core.
class Genotype {
public:
    Genotype();
    explicit Genotype(ModuleNode root);

    const ModuleNode& root() const noexcept { return root_; }
    ModuleNode& root() noexcept { return root_; }

    int module_count() const;
    int hinge_count() const;

    friend bool operator==(const Genotype&, const Genotype&) = default;

private:
    ModuleNode root_;
};

struct PlacedModule {
    ModuleKind kind = ModuleKind::Core;
    Cell cell;
    int parent = -1;
    Direction direction = Direction::PosX;
    int controller_set = -1;
};

/// Developed body. Modules are in depth-first (slot-ordered) preorder; the
/// core is module 0 at cell (0, 0). Hinge ids are module indices.
struct BodyGraph {
    std::vector<PlacedModule> modules;
    std::vector<int> hinges;
    /// +1 as developed, -1 for a mirror image: flips joint axes and the
    /// enumeration order of mirrored geometry.
    int handedness = 1;

    bool is_hinge(int id) const noexcept;
};

Genotype random_genotype(Rng& rng, int min_modules, int max_modules, int num_sets);

BodyGraph develop(const Genotype& g);

std::vector<int> hinge_neighbors(const BodyGraph& body, int hinge_id);

std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, Rng& rng);

/// Crossover at a fixed core slot; the random variant draws the slot uniformly.
std::pair<Genotype, Genotype> crossover_at(const Genotype& a, const Genotype& b, int core_slot);

Genotype mutate(const Genotype& g, Rng& rng, int num_sets);

// Individual mutation operators, exposed for direct use and testing.
void add_modules(Genotype& g, int count, Rng& rng, int num_sets);
void remove_modules(Genotype& g, int count, Rng& rng);
/// Deletes the module at `preorder_index` (> 0) with everything attached below it.
void remove_subtree(Genotype& g, int preorder_index);
void switch_controllers(Genotype& g, Rng& rng, int num_sets);

/// Reflects the body across the x = 0 plane, flipping every joint axis.
BodyGraph mirrored(const BodyGraph& body);

nlohmann::json to_json(const Genotype& g);
Genotype genotype_from_json(const nlohmann::json& j);

const char* to_string(ModuleKind k) noexcept;

} // namespace morphevo
