#include "tstkit/corona.hpp"

#include "tstkit/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace tst {

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::Angle: return "angle";
        case StopReason::TauGap: return "tau-gap";
        case StopReason::BetaSum: return "beta-sum";
        case StopReason::Resolution: return "resolution";
    }
    return "?";
}

const AffinePlane& PlaneField::at(int id) const {
    if (id < 0 || id >= static_cast<int>(plane_of.size()) || !plane_of[static_cast<size_t>(id)])
        throw std::out_of_range("PlaneField: missing plane assignment for cube");
    return *plane_of[static_cast<size_t>(id)];
}

PlaneField assign_planes(const PointCloud& cloud, const CubeTree& tree, double M, int threads) {
    PlaneField field;
    field.M = M;
    field.plane_of.resize(tree.nodes.size());
    const int n = static_cast<int>(tree.nodes.size());
    parallel_for(n, threads, [&](int id) {
        const CubeNode& q = tree.node(id);
        Ball B = tree.dilated_ball(id, M);
        std::vector<int> scope = points_in_ball(cloud, B);
        if (static_cast<int>(scope.size()) <= cloud.target_dim) {
            // Not enough points to pin a plane; reuse whatever passes through
            // the members (width zero).
            std::vector<Vec> pts;
            for (int m : q.members) pts.push_back(cloud[m]);
            while (static_cast<int>(pts.size()) <= cloud.target_dim) pts.push_back(q.center);
            field.plane_of[static_cast<size_t>(id)] =
                fit_plane_pca(pts, cloud.target_dim).through(q.center);
            return;
        }
        BetaResult b = beta_inf_scoped(cloud, scope, B, cloud.target_dim);
        // Translate through the cube center, as the stopping time requires.
        field.plane_of[static_cast<size_t>(id)] = b.plane.through(q.center);
    });
    return field;
}

double d_collection(const CubeTree& tree, const std::vector<int>& cubes, const Vec& x) {
    if (cubes.empty()) throw std::invalid_argument("d_collection: empty collection");
    // Cheap lower bounds first, then exact member scans in promising order.
    std::vector<std::pair<double, int>> order;
    order.reserve(cubes.size());
    for (int id : cubes) {
        const CubeNode& q = tree.node(id);
        double lb = std::max(0.0, (x - q.center).norm() - q.member_diam) + q.sidelength;
        order.emplace_back(lb, id);
    }
    std::sort(order.begin(), order.end());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lb, id] : order) {
        if (lb >= best) break;
        best = std::min(best, tree.node(id).sidelength + tree.dist_to_cube(x, id));
    }
    return best;
}

double d_collection_cube(const CubeTree& tree, const std::vector<int>& cubes, int q) {
    if (cubes.empty()) throw std::invalid_argument("d_collection_cube: empty collection");
    const CubeNode& Q = tree.node(q);
    std::vector<std::pair<double, int>> order;
    order.reserve(cubes.size());
    for (int id : cubes) {
        const CubeNode& R = tree.node(id);
        double lb =
            std::max(0.0, (Q.center - R.center).norm() - Q.member_diam - R.member_diam) +
            R.sidelength;
        order.emplace_back(lb, id);
    }
    std::sort(order.begin(), order.end());
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [lb, id] : order) {
        if (lb >= best) break;
        best = std::min(best, tree.node(id).sidelength + tree.dist_between_cubes(q, id));
    }
    return best;
}

bool StoppingRegion::contains(int id) const {
    return std::binary_search(members.begin(), members.end(), id);
}

namespace {

void finish_region(const CubeTree& tree, StoppingRegion& S,
                   const std::function<StopReason(int)>& reason_of) {
    std::sort(S.members.begin(), S.members.end());
    std::set<int> mem(S.members.begin(), S.members.end());
    for (int id : S.members) {
        bool has_child_in = false;
        for (int c : tree.children(id))
            if (mem.count(c)) {
                has_child_in = true;
                break;
            }
        if (!has_child_in) {
            S.minimal.push_back(id);
            S.minimal_reason.push_back(tree.children(id).empty() ? StopReason::Resolution
                                                                 : reason_of(id));
        }
    }
    // z(S): points of the top cube not covered by any minimal cube.
    std::set<int> covered;
    for (int m : S.minimal)
        for (int p : tree.node(m).members) covered.insert(p);
    for (int p : tree.node(S.top).members)
        if (!covered.count(p)) S.residual_points.push_back(p);
}

}  // namespace

StoppingRegion angle_stopping_region(const CubeTree& tree, const PlaneField& planes, int top,
                                     double alpha) {
    StoppingRegion S;
    S.top = top;
    const AffinePlane& P_top = planes.at(top);
    std::vector<int> frontier{top};
    S.members.push_back(top);
    while (!frontier.empty()) {
        std::vector<int> next;
        for (int id : frontier) {
            const auto& kids = tree.children(id);
            if (kids.empty()) continue;
            bool all_ok = true;
            for (int c : kids) {
                if (plane_angle(planes.at(c), P_top) >= alpha) {
                    all_ok = false;
                    break;
                }
            }
            // The sibling condition makes acceptance an all-or-nothing step,
            // which is what keeps the region sibling-closed.
            if (all_ok) {
                for (int c : kids) {
                    S.members.push_back(c);
                    next.push_back(c);
                }
            }
        }
        frontier = std::move(next);
    }
    finish_region(tree, S, [&](int) { return StopReason::Angle; });
    return S;
}

double CoronaParams::effective_tau(double rho) const {
    if (tau > 0.0) return tau;
    return 0.9 * std::min(tau0(rho), 1.0 / 16.0);
}

CoronaForest extend_layers(const CubeTree& tree, const PlaneField& planes, CoronaParams params) {
    CoronaForest F;
    const double rho = tree.rho;
    const double tau = params.effective_tau(rho);
    if (!(tau > 0.0) || tau >= params.tau0(rho))
        throw std::invalid_argument("extend_layers: tau must lie in (0, tau0)");
    params.tau = tau;
    F.params = params;

    // Stop(-1) = D_0.
    F.stop.push_back(tree.levels[0]);

    for (int N = 0; N <= params.N_max; ++N) {
        const std::vector<int> prev_stop = F.stop.back();
        if (prev_stop.empty()) break;

        // Layer(N) = union of angle regions over Stop(N-1).
        std::vector<int> layerN;
        std::vector<StoppingRegion> base_regions;
        for (int q : prev_stop) {
            StoppingRegion S = angle_stopping_region(tree, planes, q, params.alpha);
            layerN.insert(layerN.end(), S.members.begin(), S.members.end());
            base_regions.push_back(std::move(S));
        }
        std::sort(layerN.begin(), layerN.end());
        layerN.erase(std::unique(layerN.begin(), layerN.end()), layerN.end());
        F.layer.push_back(layerN);

        // Stop(N): maximal cubes with a sibling Q' (possibly themselves)
        // satisfying l(Q') < tau d_{Layer(N)}(Q'). Coarse-to-fine scan with
        // ancestors blocking descendants.
        std::vector<double> dlayer(tree.nodes.size(), -1.0);
        auto dL = [&](int id) {
            if (dlayer[static_cast<size_t>(id)] < 0.0)
                dlayer[static_cast<size_t>(id)] = d_collection_cube(tree, layerN, id);
            return dlayer[static_cast<size_t>(id)];
        };
        std::vector<char> blocked(tree.nodes.size(), 0);
        std::vector<int> stopN;
        for (size_t k = 0; k < tree.levels.size(); ++k) {
            for (int id : tree.levels[k]) {
                if (blocked[static_cast<size_t>(id)]) continue;
                bool gap = false;
                // Sibling set: the cube and its siblings.
                std::vector<int> sibs = tree.siblings(id);
                sibs.push_back(id);
                for (int s : sibs) {
                    if (tree.node(s).sidelength < tau * dL(s)) {
                        gap = true;
                        break;
                    }
                }
                if (gap) {
                    stopN.push_back(id);
                    blocked[static_cast<size_t>(id)] = 1;
                }
            }
            // Propagate blocking down one level.
            for (int id : tree.levels[k])
                if (blocked[static_cast<size_t>(id)])
                    for (int c : tree.children(id)) blocked[static_cast<size_t>(c)] = 1;
        }
        std::sort(stopN.begin(), stopN.end());
        F.stop.push_back(stopN);

        // Up(N) = Up(N-1) ∪ {Q : Q ⊇ R for some R in Layer(N) ∪ Stop(N)}.
        // (The alternative "no proper Stop(N) ancestor" characterization
        // needs infinite descent and over-counts on a finite tree.)
        std::set<int> stopset(stopN.begin(), stopN.end());
        std::vector<char> in_up(tree.nodes.size(), 0);
        if (!F.up.empty())
            for (int id : F.up.back()) in_up[static_cast<size_t>(id)] = 1;
        auto mark_up_chain = [&](int id) {
            for (int cur = id; cur >= 0; cur = tree.node(cur).parent) {
                if (in_up[static_cast<size_t>(cur)]) break;
                in_up[static_cast<size_t>(cur)] = 1;
            }
        };
        for (int id : layerN) mark_up_chain(id);
        for (int id : stopN) mark_up_chain(id);
        std::vector<int> upN;
        for (const CubeNode& q : tree.nodes)
            if (in_up[static_cast<size_t>(q.id)]) upN.push_back(q.id);
        F.up.push_back(upN);

        // Emitted regions: S'_Q = {R in Up(N) : R ⊆ Q} for Q in Stop(N-1).
        for (int q : prev_stop) {
            StoppingRegion S;
            S.top = q;
            for (int id : upN)
                if (tree.is_ancestor_or_self(q, id)) S.members.push_back(id);
            if (S.members.empty()) S.members.push_back(q);
            finish_region(tree, S, [&](int id) {
                return stopset.count(id) ? StopReason::TauGap : StopReason::Angle;
            });
            F.regions.push_back(std::move(S));
        }
        if (stopN.empty()) break;
    }
    return F;
}

std::vector<double> cube_beta_numbers(const PointCloud& cloud, const CubeTree& tree, int d,
                                      double M, int threads) {
    std::vector<double> beta_of(tree.nodes.size(), 0.0);
    parallel_for(static_cast<int>(tree.nodes.size()), threads, [&](int id) {
        Ball B = tree.dilated_ball(id, M);
        std::vector<int> scope = points_in_ball(cloud, B);
        if (static_cast<int>(scope.size()) <= d) return;
        beta_of[static_cast<size_t>(id)] = beta_content_scoped(cloud, scope, B, d, 1.0, tree).value;
    });
    return beta_of;
}

BetaForestResult beta_stopping_forest(const PointCloud& cloud, const CubeTree& tree, int d,
                                      double M, double epsilon, int threads,
                                      const std::vector<double>* beta_precomputed) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("beta_stopping_forest: epsilon must be > 0");
    if (M < 1.0) throw std::invalid_argument("beta_stopping_forest: M must be >= 1");
    BetaForestResult out;
    out.forest.params.M = M;
    out.forest.params.epsilon = epsilon;

    if (beta_precomputed) {
        if (beta_precomputed->size() != tree.nodes.size())
            throw std::invalid_argument("beta_stopping_forest: precomputed betas wrong size");
        out.beta_of = *beta_precomputed;
    } else {
        out.beta_of = cube_beta_numbers(cloud, tree, d, M, threads);
    }

    const double eps2 = epsilon * epsilon;
    std::vector<int> pending{tree.root()};
    while (!pending.empty()) {
        int top = pending.back();
        pending.pop_back();
        StoppingRegion S;
        S.top = top;
        S.members.push_back(top);

        if (out.beta_of[static_cast<size_t>(top)] >= epsilon) {
            // Singleton region, stopped by the threshold itself.
            S.minimal.push_back(top);
            S.minimal_reason.push_back(StopReason::BetaSum);
            for (int c : tree.children(top)) pending.push_back(c);
            out.forest.regions.push_back(std::move(S));
            continue;
        }

        // Grow: children R of a member join while every sibling R' keeps the
        // square sum over R' ⊂ T ⊆ Q(S) below epsilon^2. The sum is shared
        // by the whole sibling set, so acceptance is all-or-nothing.
        std::vector<std::pair<int, double>> frontier;  // (cube, sum over T in (child, top])
        double top_term = out.beta_of[static_cast<size_t>(top)];
        frontier.emplace_back(top, top_term * top_term);
        while (!frontier.empty()) {
            auto [id, sum_above] = frontier.back();
            frontier.pop_back();
            const auto& kids = tree.children(id);
            if (kids.empty() || sum_above >= eps2) continue;
            for (int c : kids) {
                S.members.push_back(c);
                double b = out.beta_of[static_cast<size_t>(c)];
                frontier.emplace_back(c, sum_above + b * b);
            }
        }
        finish_region(tree, S, [&](int) { return StopReason::BetaSum; });
        for (int m : S.minimal)
            for (int c : tree.children(m)) pending.push_back(c);
        out.forest.regions.push_back(std::move(S));
    }
    // Deterministic ordering of regions by top id.
    std::sort(out.forest.regions.begin(), out.forest.regions.end(),
              [](const StoppingRegion& a, const StoppingRegion& b) { return a.top < b.top; });
    return out;
}

nlohmann::json CoronaForest::to_json() const {
    nlohmann::json j;
    j["params"] = {{"alpha", params.alpha},
                   {"tau", params.tau},
                   {"M", params.M},
                   {"epsilon", params.epsilon},
                   {"N_max", params.N_max}};
    nlohmann::json regs = nlohmann::json::array();
    for (const StoppingRegion& S : regions) {
        nlohmann::json r;
        r["top"] = S.top;
        r["member_count"] = static_cast<int>(S.members.size());
        r["members"] = S.members;
        nlohmann::json mins = nlohmann::json::array();
        for (size_t i = 0; i < S.minimal.size(); ++i)
            mins.push_back({{"cube", S.minimal[i]}, {"reason", to_string(S.minimal_reason[i])}});
        r["minimal"] = std::move(mins);
        r["residual_count"] = static_cast<int>(S.residual_points.size());
        regs.push_back(std::move(r));
    }
    j["regions"] = std::move(regs);
    nlohmann::json gens = nlohmann::json::array();
    for (size_t N = 0; N < layer.size(); ++N) {
        gens.push_back({{"N", static_cast<int>(N)},
                        {"layer_size", static_cast<int>(layer[N].size())},
                        {"stop_size", static_cast<int>(stop[N + 1].size())},
                        {"up_size", static_cast<int>(up[N].size())}});
    }
    j["generations"] = std::move(gens);
    return j;
}

}  // namespace tst
