#include "morphevo/morphology.hpp"

#include <algorithm>

namespace morphevo {

namespace {

bool contains(const std::vector<Cell>& cells, Cell c)
{
    return std::find(cells.begin(), cells.end(), c) != cells.end();
}

// Preorder walk carrying grid placement. Fn(node, cell, incoming, parent, self).
template <typename Node, typename Fn>
void walk(Node& node, Cell cell, Direction incoming, int parent, int& counter, Fn&& fn)
{
    const int self = counter++;
    fn(node, cell, incoming, parent, self);
    for (int s = 0; s < static_cast<int>(node.children.size()); ++s) {
        if (!node.children[s])
            continue;
        const Direction d = slot_direction(node.kind, incoming, s);
        walk(*node.children[s], step(cell, d), d, self, counter, fn);
    }
}

template <typename Node, typename Fn>
void walk(Node& root, Fn&& fn)
{
    int counter = 0;
    walk(root, Cell{}, Direction::PosX, -1, counter, fn);
}

int count_nodes(const ModuleNode& n)
{
    int c = 1;
    for (const auto& ch : n.children)
        if (ch)
            c += count_nodes(*ch);
    return c;
}

void check_structure(const ModuleNode& n, bool is_root)
{
    if (is_root != (n.kind == ModuleKind::Core))
        throw MalformedGenotype("core must appear exactly once, at the root");
    if (static_cast<int>(n.children.size()) != slot_count(n.kind))
        throw MalformedGenotype("child slot count does not match module kind");
    if ((n.kind == ModuleKind::Hinge) != (n.controller_set >= 0))
        throw MalformedGenotype("controller_set must be set exactly on hinges");
    for (const auto& ch : n.children)
        if (ch)
            check_structure(*ch, false);
}

struct FreeSlot {
    ModuleNode* node;
    int slot;
};

std::vector<FreeSlot> free_slots(Genotype& g)
{
    std::vector<Cell> occupied;
    walk(std::as_const(g.root()), [&](const ModuleNode&, Cell c, Direction, int, int) { occupied.push_back(c); });

    std::vector<FreeSlot> out;
    walk(g.root(), [&](ModuleNode& n, Cell c, Direction in, int, int) {
        for (int s = 0; s < static_cast<int>(n.children.size()); ++s) {
            if (n.children[s])
                continue;
            if (!contains(occupied, step(c, slot_direction(n.kind, in, s))))
                out.push_back({&n, s});
        }
    });
    return out;
}

// Holder of the module at the given preorder index, or nullptr.
std::optional<ModuleNode>* find_holder(ModuleNode& root, int target)
{
    std::optional<ModuleNode>* found = nullptr;
    int counter = 1;
    auto rec = [&](auto&& self, ModuleNode& n) -> void {
        for (auto& ch : n.children) {
            if (!ch || found)
                continue;
            if (counter++ == target) {
                found = &ch;
                return;
            }
            self(self, *ch);
        }
    };
    rec(rec, root);
    return found;
}

void prune_last_leaf(std::optional<ModuleNode>& holder)
{
    auto& children = holder->children;
    for (auto it = children.rbegin(); it != children.rend(); ++it) {
        if (*it) {
            prune_last_leaf(*it);
            return;
        }
    }
    holder.reset();
}

// Removes modules of the subtree hanging from `core_slot` that collide with
// the rest of the body, deepest-last leaf first, until placement is valid.
void resolve_collisions(Genotype& g, int core_slot)
{
    auto& root = g.root();
    for (;;) {
        auto& incoming = root.children[core_slot];
        if (!incoming)
            return;

        std::vector<Cell> occupied{Cell{}};
        for (int s = 0; s < slot_count(ModuleKind::Core); ++s) {
            if (s == core_slot || !root.children[s])
                continue;
            const Direction d = slot_direction(ModuleKind::Core, Direction::PosX, s);
            int counter = 0;
            walk(*root.children[s], step(Cell{}, d), d, 0, counter,
                 [&](const ModuleNode&, Cell c, Direction, int, int) { occupied.push_back(c); });
        }

        std::optional<ModuleNode>* colliding = nullptr;
        auto rec = [&](auto&& self, std::optional<ModuleNode>& holder, Cell cell, Direction in) -> void {
            if (colliding)
                return;
            if (contains(occupied, cell)) {
                colliding = &holder;
                return;
            }
            occupied.push_back(cell);
            auto& n = *holder;
            for (int s = 0; s < static_cast<int>(n.children.size()); ++s) {
                if (!n.children[s])
                    continue;
                const Direction d = slot_direction(n.kind, in, s);
                self(self, n.children[s], step(cell, d), d);
            }
        };
        const Direction d0 = slot_direction(ModuleKind::Core, Direction::PosX, core_slot);
        rec(rec, incoming, step(Cell{}, d0), d0);
        if (!colliding)
            return;
        prune_last_leaf(*colliding);
    }
}

} // namespace

ModuleNode ModuleNode::make(ModuleKind kind, int controller_set)
{
    ModuleNode n;
    n.kind = kind;
    n.children.resize(slot_count(kind));
    n.controller_set = kind == ModuleKind::Hinge ? controller_set : -1;
    return n;
}

Genotype::Genotype() : root_(ModuleNode::make(ModuleKind::Core)) {}

Genotype::Genotype(ModuleNode root) : root_(std::move(root))
{
    develop(*this);
}

int Genotype::module_count() const
{
    return count_nodes(root_);
}

int Genotype::hinge_count() const
{
    int c = 0;
    walk(root_, [&](const ModuleNode& n, Cell, Direction, int, int) { c += n.kind == ModuleKind::Hinge; });
    return c;
}

bool BodyGraph::is_hinge(int id) const noexcept
{
    return id >= 0 && id < static_cast<int>(modules.size()) && modules[id].kind == ModuleKind::Hinge;
}

Genotype random_genotype(Rng& rng, int min_modules, int max_modules, int num_sets)
{
    if (min_modules < 1 || max_modules < min_modules)
        throw std::invalid_argument("random_genotype: need 1 <= min_modules <= max_modules");
    if (num_sets < 1)
        throw std::invalid_argument("random_genotype: num_sets must be >= 1");
    const int target = std::min(uniform_int(rng, min_modules, max_modules), kMaxModules);
    Genotype g;
    add_modules(g, target - 1, rng, num_sets);
    return g;
}

BodyGraph develop(const Genotype& g)
{
    check_structure(g.root(), true);
    BodyGraph body;
    walk(g.root(), [&](const ModuleNode& n, Cell c, Direction in, int parent, int self) {
        for (const auto& m : body.modules)
            if (m.cell == c)
                throw MalformedGenotype("grid collision at (" + std::to_string(c.x) + ", " + std::to_string(c.z) + ")");
        body.modules.push_back({n.kind, c, parent, in, n.controller_set});
        if (n.kind == ModuleKind::Hinge)
            body.hinges.push_back(self);
    });
    return body;
}

std::vector<int> hinge_neighbors(const BodyGraph& body, int hinge_id)
{
    if (!body.is_hinge(hinge_id))
        throw std::out_of_range("hinge_neighbors: unknown hinge id " + std::to_string(hinge_id));
    const Cell c = body.modules[hinge_id].cell;
    std::vector<int> out;
    for (int h : body.hinges) {
        if (h == hinge_id)
            continue;
        const Cell o = body.modules[h].cell;
        if (std::abs(o.x - c.x) + std::abs(o.z - c.z) <= 2)
            out.push_back(h);
    }
    return out;
}

std::pair<Genotype, Genotype> crossover_at(const Genotype& a, const Genotype& b, int core_slot)
{
    if (core_slot < 0 || core_slot >= slot_count(ModuleKind::Core))
        throw std::invalid_argument("crossover_at: core slot out of range");
    Genotype ca = a;
    Genotype cb = b;
    std::swap(ca.root().children[core_slot], cb.root().children[core_slot]);
    for (Genotype* child : {&ca, &cb}) {
        resolve_collisions(*child, core_slot);
        // Over the size cap: trim the swapped-in subtree the same way.
        while (child->module_count() > kMaxModules)
            prune_last_leaf(child->root().children[core_slot]);
    }
    return {std::move(ca), std::move(cb)};
}

std::pair<Genotype, Genotype> crossover(const Genotype& a, const Genotype& b, Rng& rng)
{
    return crossover_at(a, b, uniform_int(rng, 0, slot_count(ModuleKind::Core) - 1));
}

void add_modules(Genotype& g, int count, Rng& rng, int num_sets)
{
    for (int i = 0; i < count; ++i) {
        if (g.module_count() >= kMaxModules)
            return;
        auto slots = free_slots(g);
        if (slots.empty())
            return;
        const auto pick = slots[uniform_int(rng, 0, static_cast<int>(slots.size()) - 1)];
        const auto kind = uniform_int(rng, 0, 1) == 0 ? ModuleKind::Brick : ModuleKind::Hinge;
        const int set = kind == ModuleKind::Hinge ? uniform_int(rng, 0, num_sets - 1) : -1;
        pick.node->children[pick.slot] = ModuleNode::make(kind, set);
    }
}

void remove_subtree(Genotype& g, int preorder_index)
{
    if (preorder_index <= 0)
        throw std::invalid_argument("remove_subtree: the core cannot be removed");
    auto* holder = find_holder(g.root(), preorder_index);
    if (!holder)
        throw std::out_of_range("remove_subtree: no module at index " + std::to_string(preorder_index));
    holder->reset();
}

void remove_modules(Genotype& g, int count, Rng& rng)
{
    for (int i = 0; i < count; ++i) {
        const int n = g.module_count();
        if (n <= 1)
            return;
        remove_subtree(g, uniform_int(rng, 1, n - 1));
    }
}

void switch_controllers(Genotype& g, Rng& rng, int num_sets)
{
    walk(g.root(), [&](ModuleNode& n, Cell, Direction, int, int) {
        if (n.kind != ModuleKind::Hinge)
            return;
        if (uniform01(rng) < 0.5)
            n.controller_set = uniform_int(rng, 0, num_sets - 1);
    });
}

Genotype mutate(const Genotype& g, Rng& rng, int num_sets)
{
    if (num_sets < 1)
        throw std::invalid_argument("mutate: num_sets must be >= 1");
    Genotype out = g;
    switch (uniform_int(rng, 0, 2)) {
    case 0: add_modules(out, uniform_int(rng, 1, 3), rng, num_sets); break;
    case 1: remove_modules(out, uniform_int(rng, 1, 3), rng); break;
    default: switch_controllers(out, rng, num_sets); break;
    }
    return out;
}

BodyGraph mirrored(const BodyGraph& body)
{
    BodyGraph out = body;
    for (auto& m : out.modules) {
        m.cell.x = -m.cell.x;
        m.direction = static_cast<Direction>((6 - static_cast<int>(m.direction)) % 4);
    }
    out.handedness = -out.handedness;
    return out;
}

const char* to_string(ModuleKind k) noexcept
{
    switch (k) {
    case ModuleKind::Core: return "core";
    case ModuleKind::Brick: return "brick";
    case ModuleKind::Hinge: return "hinge";
    }
    return "?";
}

namespace {

nlohmann::json node_to_json(const ModuleNode& n)
{
    nlohmann::json j;
    j["kind"] = to_string(n.kind);
    auto children = nlohmann::json::array();
    for (const auto& ch : n.children)
        children.push_back(ch ? node_to_json(*ch) : nlohmann::json(nullptr));
    j["children"] = std::move(children);
    if (n.kind == ModuleKind::Hinge)
        j["controller_set"] = n.controller_set;
    return j;
}

ModuleNode node_from_json(const nlohmann::json& j)
{
    const auto kind_name = j.at("kind").get<std::string>();
    ModuleKind kind;
    if (kind_name == "core")
        kind = ModuleKind::Core;
    else if (kind_name == "brick")
        kind = ModuleKind::Brick;
    else if (kind_name == "hinge")
        kind = ModuleKind::Hinge;
    else
        throw MalformedGenotype("unknown module kind '" + kind_name + "'");

    auto n = ModuleNode::make(kind, kind == ModuleKind::Hinge ? j.at("controller_set").get<int>() : -1);
    const auto& children = j.at("children");
    if (!children.is_array() || children.size() != n.children.size())
        throw MalformedGenotype("children array does not match slot count");
    for (std::size_t s = 0; s < children.size(); ++s)
        if (!children[s].is_null())
            n.children[s] = node_from_json(children[s]);
    return n;
}

} // namespace

nlohmann::json to_json(const Genotype& g)
{
    return node_to_json(g.root());
}

Genotype genotype_from_json(const nlohmann::json& j)
{
    return Genotype(node_from_json(j));
}

} // namespace morphevo
