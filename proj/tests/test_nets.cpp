#include "doctest.h"

#include "tstkit/nets.hpp"

#include <nlohmann/json.hpp>

#include <random>
#include <set>

using namespace tst;

namespace {

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

Vec v1(double x) {
    Vec v(1);
    v << x;
    return v;
}

PointCloud line_cloud(std::initializer_list<double> xs, double delta = 0.05) {
    std::vector<Vec> pts;
    for (double x : xs) pts.push_back(v2(x, 0.0));
    return PointCloud(pts, 2, 1, delta);
}

PointCloud random_cloud(int count, unsigned seed, double delta = 0.02) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Vec> pts;
    for (int i = 0; i < count; ++i) pts.push_back(v2(u(rng), u(rng)));
    return PointCloud(pts, 2, 1, delta);
}

void check_net_invariants(const PointCloud& cloud, const NetHierarchy& h) {
    for (int k = 0; k <= h.k_max; ++k) {
        const auto& lvl = h.levels[size_t(k)];
        double sep = h.scale_of(k);
        for (size_t a = 0; a < lvl.size(); ++a)
            for (size_t b = a + 1; b < lvl.size(); ++b)
                CHECK((cloud[lvl[a]] - cloud[lvl[b]]).norm() >= sep - 1e-12);
        for (int i = 0; i < cloud.size(); ++i) {
            double best = 1e300;
            for (int j : lvl) best = std::min(best, (cloud[i] - cloud[j]).norm());
            CHECK(best < sep + 1e-12);
        }
        if (k > 0) {
            std::set<int> prev(h.levels[size_t(k) - 1].begin(), h.levels[size_t(k) - 1].end());
            for (int j : prev) CHECK(std::count(lvl.begin(), lvl.end(), j) == 1);
        }
    }
}

void check_cube_invariants(const PointCloud& cloud, const CubeTree& tree) {
    // Per-level partition.
    for (size_t k = 0; k < tree.levels.size(); ++k) {
        std::vector<int> covered;
        for (int id : tree.levels[k]) {
            const auto& mem = tree.node(id).members;
            covered.insert(covered.end(), mem.begin(), mem.end());
        }
        std::sort(covered.begin(), covered.end());
        CHECK(int(covered.size()) == cloud.size());
        CHECK(std::adjacent_find(covered.begin(), covered.end()) == covered.end());
    }
    // Nesting: children members partition the parent's members.
    for (const CubeNode& q : tree.nodes) {
        if (q.children.empty()) continue;
        std::vector<int> kids;
        for (int c : q.children) {
            CHECK(tree.node(c).parent == q.id);
            const auto& mem = tree.node(c).members;
            kids.insert(kids.end(), mem.begin(), mem.end());
        }
        std::sort(kids.begin(), kids.end());
        CHECK(kids == q.members);
    }
    // Containment sandwich: members within B(center, l(Q)); points of
    // B(center, c0 l(Q)) all members.
    CHECK(tree.c0_measured > 0.0);
    for (const CubeNode& q : tree.nodes) {
        for (int m : q.members) CHECK((cloud[m] - q.center).norm() <= q.sidelength + 1e-12);
        for (int i = 0; i < cloud.size(); ++i) {
            if ((cloud[i] - q.center).norm() < tree.c0_measured * q.sidelength - 1e-12)
                CHECK(std::binary_search(q.members.begin(), q.members.end(), i));
        }
    }
}

}  // namespace

TEST_CASE("build_nets: single point, hand-run greedy, grid") {
    PointCloud single({v2(0, 0)}, 2, 1, 0.1);
    NetHierarchy h = build_nets(single, 0.5, 3);
    for (int k = 0; k <= 3; ++k) CHECK(h.levels[size_t(k)] == std::vector<int>{0});

    // {0, 0.3, 0.6, 1.0}, scale 0.5: greedy keeps 0 and 0.6.
    PointCloud four = line_cloud({0.0, 0.3, 0.6, 1.0});
    NetHierarchy g = build_nets(four, 0.5, 0, 0.5);
    CHECK(g.levels[0] == std::vector<int>{0, 2});

    // Uniform grid of spacing s at scale s keeps everything.
    std::vector<Vec> grid;
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) grid.push_back(v2(0.25 * i, 0.25 * j));
    PointCloud gc(grid, 2, 1, 0.25);
    NetHierarchy hg = build_nets(gc, 0.5, 0, 0.25);
    CHECK(int(hg.levels[0].size()) == 25);

    CHECK_THROWS(build_nets(four, 1.5, 2));
}

TEST_CASE("net invariants on random clouds") {
    for (unsigned seed : {1u, 2u, 3u}) {
        PointCloud cloud = random_cloud(150, seed);
        NetHierarchy h = build_nets(cloud, 0.5, 6);
        check_net_invariants(cloud, h);
    }
}

TEST_CASE("build_cubes: single point and two points") {
    PointCloud single({v2(0, 0)}, 2, 1, 0.1);
    CubeTree t1 = build_cubes(build_nets(single, 0.5, 3), single);
    for (const CubeNode& q : t1.nodes) CHECK(q.members == std::vector<int>{0});

    PointCloud two = line_cloud({0.0, 1.0}, 0.05);
    NetHierarchy h = build_nets(two, 0.5, 4, 1.2);
    CubeTree t2 = build_cubes(h, two);
    CHECK(t2.levels[0].size() == 1);
    // At scales below 1/2 the points separate into sibling cubes.
    int deepest = t2.depth();
    CHECK(t2.levels[size_t(deepest)].size() == 2);
    int a = t2.levels[size_t(deepest)][0];
    CHECK(t2.node(a).members.size() == 1);
}

TEST_CASE("cube invariants and e:cqincr on random clouds") {
    for (unsigned seed : {11u, 12u, 13u, 14u}) {
        PointCloud cloud = random_cloud(120, seed);
        NetHierarchy h = build_nets(cloud, 0.5, 6);
        CubeTree tree = build_cubes(h, cloud);
        check_cube_invariants(cloud, tree);

        // e:cqincr with C = 2: nested cubes have nested dilated balls.
        for (const CubeNode& q : tree.nodes) {
            if (q.parent < 0) continue;
            const CubeNode& r = tree.node(q.parent);
            double C = 2.0;
            CHECK((q.center - r.center).norm() + C * q.sidelength <= C * r.sidelength + 1e-12);
        }
    }
}

TEST_CASE("determinism: same input gives identical trees") {
    PointCloud cloud = random_cloud(200, 42);
    CubeTree a = build_cubes(build_nets(cloud, 0.5, 5), cloud);
    CubeTree b = build_cubes(build_nets(cloud, 0.5, 5), cloud);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (size_t i = 0; i < a.nodes.size(); ++i) {
        CHECK(a.nodes[i].members == b.nodes[i].members);
        CHECK(a.nodes[i].parent == b.nodes[i].parent);
        CHECK(a.nodes[i].center_index == b.nodes[i].center_index);
    }
    CHECK(a.to_json().dump() == b.to_json().dump());
}

TEST_CASE("cube queries: parent, siblings, children round-trips") {
    PointCloud cloud = random_cloud(80, 9);
    CubeTree tree = build_cubes(build_nets(cloud, 0.5, 5), cloud);
    CHECK_THROWS(tree.parent(tree.root()));
    for (const CubeNode& q : tree.nodes) {
        if (q.parent >= 0) {
            const auto& ch = tree.children(q.parent);
            CHECK(std::count(ch.begin(), ch.end(), q.id) == 1);
            for (int s : tree.siblings(q.id)) {
                CHECK(tree.node(s).parent == q.parent);
                CHECK(s != q.id);
            }
        }
        if (q.children.empty()) CHECK(tree.children(q.id).empty());
    }
    Ball bq = tree.containment_ball(2 % int(tree.nodes.size()));
    Ball b2 = tree.dilated_ball(2 % int(tree.nodes.size()), 3.0);
    CHECK(b2.radius == doctest::Approx(3.0 * bq.radius));
}

TEST_CASE("tree JSON round-trip") {
    PointCloud cloud = random_cloud(60, 77);
    CubeTree tree = build_cubes(build_nets(cloud, 0.5, 4), cloud);
    nlohmann::json j = tree.to_json();
    CubeTree back = CubeTree::from_json(j, cloud);
    CHECK(back.to_json().dump() == j.dump());
}

TEST_CASE("paper-faithful mode: rho=1e-4, c0=1/500 on a 2-level instance") {
    // Two well-separated tight clusters; at rho = 1e-4 the second level
    // resolves the clusters' interiors.
    std::vector<Vec> pts;
    for (int i = 0; i < 6; ++i) pts.push_back(v2(1e-4 * i, 0.0));
    for (int i = 0; i < 6; ++i) pts.push_back(v2(1.0 + 1e-4 * i, 0.0));
    PointCloud cloud(pts, 2, 1, 1e-4);
    NetHierarchy h = build_nets(cloud, 1e-4, 1, 1.2);
    CubeTree tree = build_cubes(h, cloud);
    check_cube_invariants(cloud, tree);
    CHECK(tree.c0_measured >= 1.0 / 500.0);
}

TEST_CASE("dyadic mode: partition, nesting, standard lattice alignment") {
    PointCloud cloud = random_cloud(100, 31);
    CubeTree tree = build_dyadic_tree(cloud, 6, 1.0);
    for (size_t k = 0; k < tree.levels.size(); ++k) {
        std::vector<int> covered;
        for (int id : tree.levels[k]) {
            const auto& mem = tree.node(id).members;
            covered.insert(covered.end(), mem.begin(), mem.end());
        }
        CHECK(int(covered.size()) == cloud.size());
    }
    for (const CubeNode& q : tree.nodes) {
        if (q.level == 0) continue;  // virtual root over the lattice
        // Cell boundaries on the standard lattice of their sidelength.
        for (int a = 0; a < 2; ++a) {
            double lowedge = q.center(a) - q.sidelength / 2.0;
            double r = lowedge / q.sidelength;
            CHECK(std::abs(r - std::round(r)) < 1e-9);
        }
        for (int m : q.members) {
            for (int a = 0; a < 2; ++a)
                CHECK(std::abs(cloud[m](a) - q.center(a)) <= q.sidelength / 2.0 + 1e-12);
        }
    }
}
