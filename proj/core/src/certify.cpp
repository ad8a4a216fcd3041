#include "tstkit/certify.hpp"

#include "tstkit/parallel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tst {

namespace {

bool meets_unit_ball(const PointCloud& cloud, const CubeNode& q) {
    for (int m : q.members)
        if (cloud[m].norm() <= 1.0) return true;
    return false;
}

// Levels eligible for the certificate sums: scales at most one, at least the
// resolution floor, skipping the dyadic virtual root.
std::vector<int> eligible_cubes(const PointCloud& cloud, const CubeTree& tree, double resolution) {
    std::vector<int> out;
    int floor_level = tree.resolution_level(resolution);
    for (const CubeNode& q : tree.nodes) {
        if (q.level > floor_level) continue;
        if (tree.mode == TreeMode::Dyadic && q.level == 0) continue;
        double scale = tree.mode == TreeMode::Dyadic ? q.sidelength : q.sidelength / 5.0;
        if (scale > 1.0) continue;
        if (!meets_unit_ball(cloud, q)) continue;
        out.push_back(q.id);
    }
    return out;
}

double term_weight(const CubeTree& tree, const CubeNode& q, int d) {
    // diam(Q)^d in dyadic mode, r_B^d in net mode.
    double w = tree.mode == TreeMode::Dyadic ? 2.0 * q.radius : q.sidelength / 5.0;
    return std::pow(w, double(d));
}

// Classification-oriented vartheta: cheap candidate planes settle the clear
// cases, the full search only runs near the threshold.
double vartheta_for_threshold(const PointCloud& cloud, const std::vector<int>& scope,
                              const Ball& B, int d, double eps) {
    const double delta = std::max({cloud.resolution, 1e-12, B.radius / 256.0});
    std::vector<Vec> pts;
    pts.reserve(scope.size());
    for (int i : scope) pts.push_back(cloud[i]);
    double quick = std::numeric_limits<double>::infinity();
    if (static_cast<int>(pts.size()) > d) {
        SlabFit slab = fit_plane_linf(pts, d);
        quick = vartheta_at(cloud, scope, B, slab.plane, delta);
        quick = std::min(quick, vartheta_at(cloud, scope, B, fit_plane_pca(pts, d), delta));
    }
    if (quick < 0.75 * eps) return quick;
    return std::min(quick, vartheta_scoped(cloud, scope, B, d).value);
}

}  // namespace

double beta_square_sum(const PointCloud& cloud, const CubeTree& tree, int d, double p, double C0,
                       double resolution, int threads, std::vector<BreakdownRow>* breakdown) {
    if (!(p >= 1.0) || p >= p_limit(d))
        throw std::invalid_argument("beta_square_sum: p out of range [1, p(d))");
    std::vector<int> cubes = eligible_cubes(cloud, tree, resolution);
    std::vector<double> beta(cubes.size(), 0.0);
    parallel_for(static_cast<int>(cubes.size()), threads, [&](int i) {
        const CubeNode& q = tree.node(cubes[static_cast<size_t>(i)]);
        double r = tree.mode == TreeMode::Dyadic ? q.radius : q.sidelength / 5.0;
        Ball B(q.center, C0 * r);
        std::vector<int> scope = points_in_ball(cloud, B);
        if (static_cast<int>(scope.size()) <= d) return;
        beta[static_cast<size_t>(i)] = beta_content_scoped(cloud, scope, B, d, p, tree).value;
    });
    double sum = 0.0;
    for (size_t i = 0; i < cubes.size(); ++i) {
        const CubeNode& q = tree.node(cubes[i]);
        double w = term_weight(tree, q, d);
        double term = beta[i] * beta[i] * w;
        sum += term;
        if (breakdown) breakdown->push_back({q.id, q.level, beta[i], -1.0, term});
    }
    return sum;
}

double theta_sum(const PointCloud& cloud, const CubeTree& tree, int d, double eps, double dilation,
                 double resolution, int threads, std::vector<BreakdownRow>* breakdown) {
    if (!(eps > 0.0)) throw std::invalid_argument("theta_sum: eps must be positive");
    std::vector<int> cubes = eligible_cubes(cloud, tree, resolution);
    std::vector<double> theta(cubes.size(), 0.0);
    if (eps <= 2.0) {
        // vartheta is bounded by ~2; beyond that nothing can qualify.
        parallel_for(static_cast<int>(cubes.size()), threads, [&](int i) {
            const CubeNode& q = tree.node(cubes[static_cast<size_t>(i)]);
            double r = tree.mode == TreeMode::Dyadic ? q.radius : q.sidelength / 5.0;
            Ball B(q.center, dilation * r);
            std::vector<int> scope = points_in_ball(cloud, B);
            if (scope.empty()) return;
            theta[static_cast<size_t>(i)] = vartheta_for_threshold(cloud, scope, B, d, eps);
        });
    }
    double sum = 0.0;
    for (size_t i = 0; i < cubes.size(); ++i) {
        const CubeNode& q = tree.node(cubes[i]);
        if (eps > 2.0 || theta[i] < eps) {
            if (breakdown) breakdown->push_back({q.id, q.level, -1.0, theta[i], 0.0});
            continue;
        }
        double w = term_weight(tree, q, d);
        sum += w;
        if (breakdown) breakdown->push_back({q.id, q.level, -1.0, theta[i], w});
    }
    return sum;
}

double hausdorff_measure_estimate(const CubeTree& tree, int d, double resolution) {
    const PointCloud& cloud = *tree.cloud;
    int lvl = tree.resolution_level(resolution);
    double floorv = std::max(resolution, cloud.resolution);
    double sum = 0.0;
    for (int id : tree.levels[static_cast<size_t>(lvl)]) {
        const CubeNode& q = tree.node(id);
        if (q.members.empty() || !meets_unit_ball(cloud, q)) continue;
        double eff = std::min(std::max(q.member_diam, floorv), 2.0 * q.sidelength);
        sum += std::pow(eff, double(d));
    }
    return sum;
}

double lower_regularity_check(const PointCloud& cloud, const CubeTree& tree, int d, double r_max,
                              int max_centers) {
    std::vector<int> all(static_cast<size_t>(cloud.size()));
    for (int i = 0; i < cloud.size(); ++i) all[static_cast<size_t>(i)] = i;
    std::vector<int> centers = thin_scope(cloud, all, 2.0 * r_max / std::max(1, max_centers / 2));
    if (static_cast<int>(centers.size()) > max_centers) centers.resize(static_cast<size_t>(max_centers));
    double c = std::numeric_limits<double>::infinity();
    const double delta = cloud.resolution;
    for (int i : centers) {
        if (cloud[i].norm() > 1.0) continue;
        for (double r = 2.0 * delta; r <= r_max; r *= 2.0) {
            Ball B(cloud[i], r);
            std::vector<int> scope = points_in_ball(cloud, B);
            double v = content(scope, d, tree, delta).value / std::pow(r, double(d));
            c = std::min(c, v);
        }
    }
    return std::isfinite(c) ? c : 0.0;
}

CertificateReport certify(const PointCloud& cloud, const CertifyParams& params) {
    if (!(params.d > 0 && params.d < cloud.ambient_dim))
        throw std::invalid_argument("certify: requires 0 < d < n");
    if (!(params.p >= 1.0) || params.p >= p_limit(params.d))
        throw std::invalid_argument("certify: p out of range [1, p(d))");
    if (!(params.epsilon > 0.0)) throw std::invalid_argument("certify: epsilon must be positive");

    CertificateReport rep;
    rep.params = params;
    rep.resolution_used = params.resolution > 0.0 ? params.resolution : cloud.resolution;
    const double res = rep.resolution_used;
    const int d = params.d;

    // Net tree down to the resolution floor.
    double base = std::max(cloud.diameter() * 1.0001, cloud.resolution);
    int k_net = 0;
    while (5.0 * base * std::pow(params.rho, k_net + 1) >= res && k_net < 40) ++k_net;
    NetHierarchy hier = build_nets(cloud, params.rho, k_net);
    CubeTree net_tree = build_cubes(hier, cloud);

    rep.regularity_c = lower_regularity_check(cloud, net_tree, d);
    rep.regularity_ok = rep.regularity_c >= params.regularity_threshold;
    if (!rep.regularity_ok)
        rep.warnings.push_back(
            "lower content regularity below threshold; certificate hypotheses weak");

    auto run_mode = [&](const CubeTree& tree, double theta_dilation) {
        ModeSums ms;
        std::vector<BreakdownRow> beta_rows, theta_rows;
        ms.beta_square = beta_square_sum(cloud, tree, d, params.p, params.C0, res, params.threads,
                                         &beta_rows);
        ms.theta = theta_sum(cloud, tree, d, params.epsilon, theta_dilation, res, params.threads,
                             &theta_rows);
        ms.hausdorff = hausdorff_measure_estimate(tree, d, res);
        // Merge rows by cube id: beta rows carry contributions, theta rows
        // carry flatness values.
        for (size_t i = 0; i < beta_rows.size() && i < theta_rows.size(); ++i) {
            BreakdownRow r = beta_rows[i];
            r.vartheta = theta_rows[i].vartheta;
            r.contribution = beta_rows[i].contribution;
            ms.breakdown.push_back(r);
        }
        return ms;
    };

    if (params.mode != CertMode::Net) {
        int depth = 1;
        while (2.0 * std::pow(0.5, depth) >= res && depth < 40) ++depth;
        CubeTree dy = build_dyadic_tree(cloud, depth, 1.0);
        rep.dyadic = run_mode(dy, 3.0);
    }
    if (params.mode != CertMode::Dyadic) {
        rep.net = run_mode(net_tree, params.effective_A());
    }

    const ModeSums& primary = rep.dyadic ? *rep.dyadic : *rep.net;
    rep.theorem1_lhs = 1.0 + primary.beta_square;
    rep.theorem1_rhs = primary.hausdorff + primary.theta;
    rep.theorem1_ratio = rep.theorem1_rhs > 0.0
                             ? rep.theorem1_lhs / rep.theorem1_rhs
                             : std::numeric_limits<double>::infinity();
    rep.theorem3_lhs = primary.hausdorff + primary.theta;
    rep.theorem3_rhs = 1.0 + primary.beta_square;
    rep.theorem3_ratio = rep.theorem3_lhs / rep.theorem3_rhs;

    if (rep.dyadic && rep.net) {
        rep.cross_mode_beta_ratio = (1.0 + rep.dyadic->beta_square) / (1.0 + rep.net->beta_square);
        rep.cross_mode_theta_ratio = (1.0 + rep.dyadic->theta) / (1.0 + rep.net->theta);
    }

    // Constructive stopping-forest summary on the net tree.
    BetaForestResult forest = beta_stopping_forest(cloud, net_tree, d, params.M,
                                                   params.forest_epsilon, params.threads);
    rep.forest_regions = static_cast<int>(forest.forest.regions.size());
    for (const StoppingRegion& S : forest.forest.regions)
        for (StopReason r : S.minimal_reason) {
            if (r == StopReason::BetaSum) ++rep.forest_beta_stopped;
            if (r == StopReason::Resolution) ++rep.forest_resolution_stopped;
        }
    return rep;
}

namespace {

nlohmann::json mode_to_json(const ModeSums& ms) {
    nlohmann::json j;
    j["sums"] = {{"beta_square", ms.beta_square},
                 {"theta", ms.theta},
                 {"hausdorff", ms.hausdorff},
                 {"one", 1.0}};
    nlohmann::json rows = nlohmann::json::array();
    for (const BreakdownRow& r : ms.breakdown) {
        rows.push_back({{"cube_id", r.cube_id},
                        {"level", r.level},
                        {"beta", r.beta},
                        {"vartheta", r.vartheta},
                        {"contribution", r.contribution}});
    }
    j["breakdown"] = std::move(rows);
    return j;
}

}  // namespace

nlohmann::json CertificateReport::to_json() const {
    nlohmann::json j;
    j["params"] = {{"d", params.d},
                   {"p", params.p},
                   {"C0", params.C0},
                   {"A", params.effective_A()},
                   {"epsilon", params.epsilon},
                   {"M", params.M},
                   {"forest_epsilon", params.forest_epsilon},
                   {"rho", params.rho},
                   {"resolution", resolution_used},
                   {"mode", params.mode == CertMode::Both
                                ? "both"
                                : (params.mode == CertMode::Dyadic ? "dyadic" : "net")}};
    const ModeSums& primary = dyadic ? *dyadic : *net;
    nlohmann::json pj = mode_to_json(primary);
    j["sums"] = pj["sums"];
    j["breakdown"] = pj["breakdown"];
    j["theorem1"] = {{"lhs", theorem1_lhs}, {"rhs", theorem1_rhs}, {"ratio", theorem1_ratio}};
    j["theorem3"] = {{"lhs", theorem3_lhs}, {"rhs", theorem3_rhs}, {"ratio", theorem3_ratio}};
    j["regularity_c"] = regularity_c;
    j["regularity_ok"] = regularity_ok;
    if (dyadic && net) {
        j["net_mode"] = mode_to_json(*net);
        j["cross_mode"] = {{"beta_ratio", cross_mode_beta_ratio},
                           {"theta_ratio", cross_mode_theta_ratio}};
    }
    j["forest"] = {{"regions", forest_regions},
                   {"beta_stopped", forest_beta_stopped},
                   {"resolution_stopped", forest_resolution_stopped}};
    j["warnings"] = warnings;
    return j;
}

}  // namespace tst
