#include "tstkit/nets.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>

namespace tst {

double NetHierarchy::scale_of(int k) const { return base_scale * std::pow(rho, k); }

namespace {

// Incremental cell hash over accepted points; cells sized to the current
// separation so a query touches 3^n cells.
class SeparationGrid {
public:
    SeparationGrid(const PointCloud& cloud, double cell) : cloud_(cloud), cell_(cell) {}

    bool anything_within(const Vec& x, double r) const {
        const int n = static_cast<int>(x.size());
        std::vector<long long> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n)),
            cur(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a) {
            lo[static_cast<size_t>(a)] = static_cast<long long>(std::floor((x(a) - r) / cell_));
            hi[static_cast<size_t>(a)] = static_cast<long long>(std::floor((x(a) + r) / cell_));
            cur[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
        }
        while (true) {
            auto it = cells_.find(hash(cur));
            if (it != cells_.end()) {
                for (int i : it->second)
                    if ((x - cloud_[i]).norm() < r) return true;
            }
            int a = 0;
            while (a < n && ++cur[static_cast<size_t>(a)] > hi[static_cast<size_t>(a)]) {
                cur[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
                ++a;
            }
            if (a == n) break;
        }
        return false;
    }

    // Nearest accepted point; ties to the smallest cloud index. Assumes the
    // grid is maximal for covering radius `cover` (search expands until hit).
    int nearest(const Vec& x, double start_radius) const {
        for (double r = start_radius;; r *= 2.0) {
            int best = -1;
            double bd = std::numeric_limits<double>::infinity();
            const int n = static_cast<int>(x.size());
            std::vector<long long> lo(static_cast<size_t>(n)), hi(static_cast<size_t>(n)),
                cur(static_cast<size_t>(n));
            for (int a = 0; a < n; ++a) {
                lo[static_cast<size_t>(a)] = static_cast<long long>(std::floor((x(a) - r) / cell_));
                hi[static_cast<size_t>(a)] = static_cast<long long>(std::floor((x(a) + r) / cell_));
                cur[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
            }
            while (true) {
                auto it = cells_.find(hash(cur));
                if (it != cells_.end()) {
                    for (int i : it->second) {
                        double d = (x - cloud_[i]).norm();
                        if (best < 0 || d < bd - 1e-15 || (d <= bd + 1e-15 && i < best)) {
                            bd = std::min(bd, d);
                            best = i;
                        }
                    }
                }
                int a = 0;
                while (a < n && ++cur[static_cast<size_t>(a)] > hi[static_cast<size_t>(a)]) {
                    cur[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
                    ++a;
                }
                if (a == n) break;
            }
            if (best >= 0 && bd <= r) return best;
            if (r > 1e15 * cell_) return best;
        }
    }

    void insert(int i) {
        const Vec& p = cloud_[i];
        const int n = static_cast<int>(p.size());
        std::vector<long long> c(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a)
            c[static_cast<size_t>(a)] = static_cast<long long>(std::floor(p(a) / cell_));
        cells_[hash(c)].push_back(i);
    }

private:
    const PointCloud& cloud_;
    double cell_;
    std::unordered_map<uint64_t, std::vector<int>> cells_;

    static uint64_t hash(const std::vector<long long>& c) {
        uint64_t h = 1469598103934665603ull;
        for (long long v : c) {
            uint64_t u = static_cast<uint64_t>(v + (1ll << 31));
            h ^= u + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        }
        return h;
    }
};

}  // namespace

NetHierarchy build_nets(const PointCloud& cloud, double rho, int k_max, double base_scale) {
    if (cloud.size() == 0) throw std::invalid_argument("build_nets: empty cloud");
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("build_nets: rho must be in (0,1)");
    if (k_max < 0) throw std::invalid_argument("build_nets: k_max must be >= 0");

    NetHierarchy h;
    h.rho = rho;
    h.k_max = k_max;
    // Default top scale slightly exceeds the diameter so level 0 is a single
    // net point (a unique root cube).
    h.base_scale = base_scale > 0.0 ? base_scale
                                    : std::max(cloud.diameter() * 1.0001, cloud.resolution);
    h.levels.resize(static_cast<size_t>(k_max) + 1);

    std::vector<int> accepted;  // nested across levels
    for (int k = 0; k <= k_max; ++k) {
        const double sep = h.scale_of(k);
        SeparationGrid grid(cloud, std::max(sep, 1e-12));
        for (int j : accepted) grid.insert(j);
        for (int i = 0; i < cloud.size(); ++i) {
            if (grid.anything_within(cloud[i], sep)) continue;
            accepted.push_back(i);
            grid.insert(i);
        }
        h.levels[static_cast<size_t>(k)] = accepted;
        std::sort(h.levels[static_cast<size_t>(k)].begin(), h.levels[static_cast<size_t>(k)].end());
    }
    return h;
}

int CubeTree::root() const {
    if (levels.empty() || levels[0].empty()) throw std::logic_error("CubeTree: no root");
    if (levels[0].size() != 1) throw std::logic_error("CubeTree: multiple roots");
    return levels[0][0];
}

int CubeTree::parent(int id) const {
    int p = node(id).parent;
    if (p < 0) throw std::out_of_range("CubeTree::parent: root cube has no parent");
    return p;
}

std::vector<int> CubeTree::siblings(int id) const {
    std::vector<int> out;
    int p = node(id).parent;
    if (p < 0) {
        for (int r : levels[0])
            if (r != id) out.push_back(r);
        return out;
    }
    for (int c : node(p).children)
        if (c != id) out.push_back(c);
    return out;
}

Ball CubeTree::containment_ball(int id) const {
    const CubeNode& q = node(id);
    return Ball(q.center, q.radius);
}

Ball CubeTree::dilated_ball(int id, double lambda) const {
    const CubeNode& q = node(id);
    return Ball(q.center, lambda * q.radius);
}

bool CubeTree::is_ancestor_or_self(int anc, int id) const {
    int cur = id;
    while (cur >= 0) {
        if (cur == anc) return true;
        cur = node(cur).parent;
    }
    return false;
}

double CubeTree::dist_to_cube(const Vec& x, int id) const {
    double best = std::numeric_limits<double>::infinity();
    for (int m : node(id).members) best = std::min(best, (x - (*cloud)[m]).norm());
    return best;
}

double CubeTree::dist_between_cubes(int a, int b) const {
    const CubeNode& qa = node(a);
    const CubeNode& qb = node(b);
    double lower = (qa.center - qb.center).norm() - qa.member_diam - qb.member_diam;
    double best = std::numeric_limits<double>::infinity();
    for (int m : qa.members) {
        double d = dist_to_cube((*cloud)[m], b);
        best = std::min(best, d);
        if (best <= std::max(lower, 0.0) + 1e-15) break;
    }
    return best;
}

double CubeTree::sidelength_of_level(int k) const {
    if (levels.empty()) throw std::logic_error("CubeTree: empty");
    if (k < 0 || k >= static_cast<int>(levels.size()) || levels[static_cast<size_t>(k)].empty())
        throw std::out_of_range("CubeTree: bad level");
    return node(levels[static_cast<size_t>(k)][0]).sidelength;
}

int CubeTree::resolution_level(double floor) const {
    int best = 0;
    for (int k = 0; k <= depth(); ++k) {
        if (levels[static_cast<size_t>(k)].empty()) break;
        if (sidelength_of_level(k) >= floor) best = k;
    }
    return best;
}

CubeTree build_cubes(const NetHierarchy& hier, const PointCloud& cloud) {
    CubeTree tree;
    tree.mode = TreeMode::Net;
    tree.rho = hier.rho;
    tree.cloud = &cloud;
    const int K = hier.k_max;
    tree.levels.resize(static_cast<size_t>(K) + 1);

    // owner[k][i]: cloud index of the level-k net point whose assignment
    // chain owns cloud point i. Chains go nearest-center from the deepest
    // level upward, ties broken toward the smallest cloud index.
    std::vector<std::vector<int>> owner(static_cast<size_t>(K) + 1,
                                        std::vector<int>(static_cast<size_t>(cloud.size()), -1));

    auto nearest_in_level = [&](int k) {
        double sep = hier.scale_of(k);
        auto grid = std::make_shared<SeparationGrid>(cloud, std::max(sep, 1e-12));
        for (int j : hier.levels[static_cast<size_t>(k)]) grid->insert(j);
        return [grid, sep](const Vec& x) { return grid->nearest(x, std::max(sep, 1e-12)); };
    };

    auto nearest_deep = nearest_in_level(K);
    for (int i = 0; i < cloud.size(); ++i)
        owner[static_cast<size_t>(K)][static_cast<size_t>(i)] = nearest_deep(cloud[i]);
    for (int k = K - 1; k >= 0; --k) {
        auto nearest_k = nearest_in_level(k);
        std::map<int, int> lift;  // level-(k+1) center -> level-k center
        for (int c : hier.levels[static_cast<size_t>(k) + 1]) lift[c] = nearest_k(cloud[c]);
        for (int i = 0; i < cloud.size(); ++i)
            owner[static_cast<size_t>(k)][static_cast<size_t>(i)] =
                lift[owner[static_cast<size_t>(k) + 1][static_cast<size_t>(i)]];
    }

    std::map<std::pair<int, int>, int> node_of;  // (level, center index) -> node id
    for (int k = 0; k <= K; ++k) {
        for (int c : hier.levels[static_cast<size_t>(k)]) {
            CubeNode q;
            q.id = static_cast<int>(tree.nodes.size());
            q.level = k;
            q.center = cloud[c];
            q.center_index = c;
            q.sidelength = 5.0 * hier.scale_of(k);
            q.radius = q.sidelength;
            node_of[{k, c}] = q.id;
            tree.levels[static_cast<size_t>(k)].push_back(q.id);
            tree.nodes.push_back(std::move(q));
        }
    }
    for (int i = 0; i < cloud.size(); ++i)
        for (int k = 0; k <= K; ++k)
            tree.nodes[static_cast<size_t>(
                           node_of[{k, owner[static_cast<size_t>(k)][static_cast<size_t>(i)]}])]
                .members.push_back(i);
    for (int k = 1; k <= K; ++k) {
        for (int c : hier.levels[static_cast<size_t>(k)]) {
            int id = node_of[{k, c}];
            int pid = node_of[{k - 1, owner[static_cast<size_t>(k) - 1][static_cast<size_t>(c)]}];
            tree.nodes[static_cast<size_t>(id)].parent = pid;
            tree.nodes[static_cast<size_t>(pid)].children.push_back(id);
        }
    }
    for (CubeNode& q : tree.nodes) {
        std::sort(q.members.begin(), q.members.end());
        std::vector<Vec> pts;
        pts.reserve(q.members.size());
        for (int m : q.members) pts.push_back(cloud[m]);
        q.member_diam = diameter_of(pts);
    }
    tree.point_owner.assign(static_cast<size_t>(K) + 1,
                            std::vector<int>(static_cast<size_t>(cloud.size()), -1));
    for (const CubeNode& q : tree.nodes)
        for (int m : q.members)
            tree.point_owner[static_cast<size_t>(q.level)][static_cast<size_t>(m)] = q.id;

    // Realized containment constant: largest c0 with
    // B(center, c0 l(Q)) ∩ cloud ⊆ Q across all cubes.
    GridIndex idx(cloud.points, std::max(cloud.resolution, 1e-12));
    double c0 = std::numeric_limits<double>::infinity();
    for (const CubeNode& q : tree.nodes) {
        if (static_cast<int>(q.members.size()) == cloud.size()) continue;
        double nearest_outside = std::numeric_limits<double>::infinity();
        for (double r = std::max(cloud.resolution, q.sidelength / 64.0);
             r <= 4.0 * q.sidelength && !std::isfinite(nearest_outside); r *= 2.0) {
            for (int i : idx.within(q.center, r)) {
                if (std::binary_search(q.members.begin(), q.members.end(), i)) continue;
                nearest_outside = std::min(nearest_outside, ((*tree.cloud)[i] - q.center).norm());
            }
        }
        if (std::isfinite(nearest_outside)) c0 = std::min(c0, nearest_outside / q.sidelength);
    }
    tree.c0_measured = std::isfinite(c0) ? c0 : 1.0;
    return tree;
}

CubeTree build_dyadic_tree(const PointCloud& cloud, int depth, double base_side) {
    if (cloud.size() == 0) throw std::invalid_argument("build_dyadic_tree: empty cloud");
    if (depth < 0) throw std::invalid_argument("build_dyadic_tree: depth must be >= 0");
    const int n = cloud.ambient_dim;

    CubeTree tree;
    tree.mode = TreeMode::Dyadic;
    tree.rho = 0.5;
    tree.cloud = &cloud;
    tree.levels.resize(static_cast<size_t>(depth) + 1);

    Vec lo = cloud[0], hi = cloud[0];
    for (const Vec& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    // Levels >= 1 are cells of the standard lattice of side base_side * 2^(1-k)
    // anchored at the origin. No lattice cell of any scale contains a set
    // straddling the origin, so level 0 is a virtual root over the occupied
    // base cells.
    CubeNode root;
    root.id = 0;
    root.level = 0;
    root.center = 0.5 * (lo + hi);
    root.sidelength = std::max((hi - lo).maxCoeff(), base_side) * 2.0;
    root.radius = 0.5 * (hi - lo).norm() + base_side;
    tree.levels[0].push_back(0);
    tree.nodes.push_back(std::move(root));

    struct Key {
        int level;
        std::vector<long long> coord;
        bool operator<(const Key& o) const {
            if (level != o.level) return level < o.level;
            return coord < o.coord;
        }
    };
    std::map<Key, int> node_of;
    auto cell_of = [&](const Vec& p, int k) {
        double side = base_side * std::pow(2.0, 1 - k);
        Key key;
        key.level = k;
        key.coord.resize(static_cast<size_t>(n));
        for (int a = 0; a < n; ++a)
            key.coord[static_cast<size_t>(a)] = static_cast<long long>(std::floor(p(a) / side));
        return key;
    };

    for (int k = 1; k <= depth; ++k) {
        double side = base_side * std::pow(2.0, 1 - k);
        for (int i = 0; i < cloud.size(); ++i) {
            Key key = cell_of(cloud[i], k);
            auto it = node_of.find(key);
            int id;
            if (it == node_of.end()) {
                CubeNode q;
                q.id = static_cast<int>(tree.nodes.size());
                q.level = k;
                q.sidelength = side;
                q.radius = side * std::sqrt(double(n)) / 2.0;  // circumball of the cell
                Vec c(n);
                for (int a = 0; a < n; ++a)
                    c(a) = (double(key.coord[static_cast<size_t>(a)]) + 0.5) * side;
                q.center = c;
                id = q.id;
                node_of[key] = id;
                tree.levels[static_cast<size_t>(k)].push_back(id);
                tree.nodes.push_back(std::move(q));
                int pid = (k == 1) ? 0 : node_of.at(cell_of(cloud[i], k - 1));
                tree.nodes[static_cast<size_t>(id)].parent = pid;
                tree.nodes[static_cast<size_t>(pid)].children.push_back(id);
            } else {
                id = it->second;
            }
            tree.nodes[static_cast<size_t>(id)].members.push_back(i);
        }
    }
    for (int i = 0; i < cloud.size(); ++i) tree.nodes[0].members.push_back(i);
    for (CubeNode& q : tree.nodes) {
        std::sort(q.members.begin(), q.members.end());
        std::vector<Vec> pts;
        for (int m : q.members) pts.push_back(cloud[m]);
        q.member_diam = diameter_of(pts);
    }
    tree.point_owner.assign(static_cast<size_t>(depth) + 1,
                            std::vector<int>(static_cast<size_t>(cloud.size()), -1));
    for (const CubeNode& q : tree.nodes)
        for (int m : q.members)
            tree.point_owner[static_cast<size_t>(q.level)][static_cast<size_t>(m)] = q.id;
    tree.c0_measured = 0.0;  // not meaningful for the grid mode
    return tree;
}

nlohmann::json CubeTree::to_json() const {
    nlohmann::json j;
    j["mode"] = mode == TreeMode::Net ? "net" : "dyadic";
    j["rho"] = rho;
    j["c0_measured"] = c0_measured;
    j["levels"] = static_cast<int>(levels.size());
    nlohmann::json arr = nlohmann::json::array();
    for (const CubeNode& q : nodes) {
        nlohmann::json e;
        e["id"] = q.id;
        e["level"] = q.level;
        e["parent"] = q.parent;
        e["center_index"] = q.center_index;
        e["center"] = std::vector<double>(q.center.data(), q.center.data() + q.center.size());
        e["sidelength"] = q.sidelength;
        e["radius"] = q.radius;
        e["children"] = q.children;
        e["member_count"] = static_cast<int>(q.members.size());
        e["members"] = q.members;
        arr.push_back(std::move(e));
    }
    j["nodes"] = std::move(arr);
    return j;
}

CubeTree CubeTree::from_json(const nlohmann::json& j, const PointCloud& cloud) {
    CubeTree tree;
    tree.mode = j.at("mode").get<std::string>() == "net" ? TreeMode::Net : TreeMode::Dyadic;
    tree.rho = j.at("rho").get<double>();
    tree.c0_measured = j.at("c0_measured").get<double>();
    tree.cloud = &cloud;
    tree.levels.resize(j.at("levels").get<size_t>());
    std::vector<CubeNode> nodes;
    for (const auto& e : j.at("nodes")) {
        CubeNode q;
        q.id = e.at("id").get<int>();
        q.level = e.at("level").get<int>();
        q.parent = e.at("parent").get<int>();
        q.center_index = e.at("center_index").get<int>();
        std::vector<double> c = e.at("center").get<std::vector<double>>();
        q.center = Eigen::Map<Vec>(c.data(), static_cast<long>(c.size()));
        q.sidelength = e.at("sidelength").get<double>();
        q.radius = e.at("radius").get<double>();
        q.children = e.at("children").get<std::vector<int>>();
        q.members = e.at("members").get<std::vector<int>>();
        std::vector<Vec> pts;
        for (int m : q.members) pts.push_back(cloud[m]);
        q.member_diam = diameter_of(pts);
        nodes.push_back(std::move(q));
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const CubeNode& a, const CubeNode& b) { return a.id < b.id; });
    tree.nodes = std::move(nodes);
    for (const CubeNode& q : tree.nodes)
        tree.levels[static_cast<size_t>(q.level)].push_back(q.id);
    tree.point_owner.assign(tree.levels.size(),
                            std::vector<int>(static_cast<size_t>(cloud.size()), -1));
    for (const CubeNode& q : tree.nodes)
        for (int m : q.members)
            tree.point_owner[static_cast<size_t>(q.level)][static_cast<size_t>(m)] = q.id;
    return tree;
}

}  // namespace tst
