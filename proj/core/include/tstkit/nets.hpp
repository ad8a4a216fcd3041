#pragma once

#include "tstkit/geometry.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

// Nested maximal separated nets and the cube hierarchy built over them.
// Two construction modes share one query interface: metric cubes from nets
// (the default) and an axis-aligned dyadic grid.

namespace tst {

struct NetHierarchy {
    double rho = 0.5;            // scale ratio in (0,1); level k has scale rho^k
    int k_max = 0;               // deepest level
    double base_scale = 1.0;     // level-k separation = base_scale * rho^k
    std::vector<std::vector<int>> levels;  // point indices per level, nested

    double scale_of(int k) const;
};

// Greedy nested maximal nets, deterministic in input order: level k keeps the
// previous level's points and adds cloud points (in index order) at distance
// >= scale_of(k) from everything kept so far.
NetHierarchy build_nets(const PointCloud& cloud, double rho, int k_max,
                        double base_scale = 0.0);

enum class TreeMode { Net, Dyadic };

struct CubeNode {
    int id = -1;
    int level = 0;
    int parent = -1;
    std::vector<int> children;
    std::vector<int> members;   // cloud point indices, sorted
    Vec center;                 // zeta_Q (net mode: a cloud point; dyadic: cell center)
    int center_index = -1;      // cloud index of the center (net mode; -1 for dyadic)
    double sidelength = 0.0;    // l(Q): 5 rho^k (net) or cell side (dyadic)
    double radius = 0.0;        // radius of B_Q
    double member_diam = 0.0;   // diameter of the member points
};

class CubeTree {
public:
    TreeMode mode = TreeMode::Net;
    double rho = 0.5;
    const PointCloud* cloud = nullptr;
    std::vector<CubeNode> nodes;
    std::vector<std::vector<int>> levels;       // node ids per level
    std::vector<std::vector<int>> point_owner;  // [level][point] -> node id
    double c0_measured = 0.0;  // largest validated containment constant

    const CubeNode& node(int id) const { return nodes[static_cast<size_t>(id)]; }
    int root() const;
    int depth() const { return static_cast<int>(levels.size()) - 1; }

    bool has_parent(int id) const { return node(id).parent >= 0; }
    int parent(int id) const;
    const std::vector<int>& children(int id) const { return node(id).children; }
    // Other children of the parent; roots are siblings of each other.
    std::vector<int> siblings(int id) const;

    Ball containment_ball(int id) const;          // B_Q = B(center, l(Q))
    Ball dilated_ball(int id, double lambda) const;  // lambda B_Q

    bool is_ancestor_or_self(int anc, int id) const;

    // Distance from x to the member set of Q.
    double dist_to_cube(const Vec& x, int id) const;
    double dist_between_cubes(int a, int b) const;

    // Deepest level whose sidelength still meets the floor: max k with
    // sidelength(k) >= floor (level 0 when every level is finer).
    int resolution_level(double floor) const;
    double sidelength_of_level(int k) const;

    nlohmann::json to_json() const;
    static CubeTree from_json(const nlohmann::json& j, const PointCloud& cloud);
};

// Cubes over nested nets: every net point is a level-k cube center,
// membership follows nearest-center assignment chains (ties to the smallest
// index). Verifies and records the realized containment constant.
CubeTree build_cubes(const NetHierarchy& hier, const PointCloud& cloud);

// Axis-aligned dyadic mode: level-k cells of side base_side * 2^-k anchored
// at the origin lattice; only occupied cells materialize.
CubeTree build_dyadic_tree(const PointCloud& cloud, int depth, double base_side = 1.0);

}  // namespace tst
