#pragma once

#include "tstkit/beta.hpp"
#include "tstkit/geometry.hpp"
#include "tstkit/nets.hpp"

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

// Stopping-time decompositions over a cube tree: angle-based regions with
// the Layer/Stop/Up generation machinery, and the beta-square-sum forest.

namespace tst {

enum class StopReason { Angle, TauGap, BetaSum, Resolution };
std::string to_string(StopReason r);

// Per-cube plane field: the sup-norm-optimal plane of the dilated ball M B_Q,
// translated to pass through the cube center.
struct PlaneField {
    double M = 4.0;
    std::vector<std::optional<AffinePlane>> plane_of;  // indexed by node id

    const AffinePlane& at(int id) const;
};

PlaneField assign_planes(const PointCloud& cloud, const CubeTree& tree, double M = 4.0,
                         int threads = 1);

// d_C(x) = inf{ l(Q) + dist(x,Q) : Q in C } and its cube form
// d_C(Q) = inf{ l(R) + dist(Q,R) : R in C }.
double d_collection(const CubeTree& tree, const std::vector<int>& cubes, const Vec& x);
double d_collection_cube(const CubeTree& tree, const std::vector<int>& cubes, int q);

struct StoppingRegion {
    int top = -1;
    std::vector<int> members;  // node ids, sorted
    std::vector<int> minimal;  // minimal cubes m(S)
    std::vector<StopReason> minimal_reason;
    std::vector<int> residual_points;  // z(S): cloud points of top not in any minimal cube

    bool contains(int id) const;
};

// Maximal coherent sibling-closed region rooted at Q whose members' sibling
// planes stay within angle alpha of the top plane.
StoppingRegion angle_stopping_region(const CubeTree& tree, const PlaneField& planes, int top,
                                     double alpha);

struct CoronaParams {
    double alpha = 0.05;
    double tau = 0.0;  // 0: use 0.9 * min(tau0, 1/16)
    double M = 4.0;
    double epsilon = 0.1;  // beta-forest threshold
    int N_max = 32;

    double tau0(double rho) const { return 1.0 / (4.0 * (2.0 + 1.0 / rho)); }
    double effective_tau(double rho) const;
};

struct CoronaForest {
    CoronaParams params;
    std::vector<StoppingRegion> regions;
    // Generation structure (angle corona only): cube ids per generation.
    std::vector<std::vector<int>> layer;
    std::vector<std::vector<int>> stop;  // stop[N+1] holds Stop(N); stop[0] = Stop(-1) = D_0
    std::vector<std::vector<int>> up;

    nlohmann::json to_json() const;
};

// Layer/Stop/Up extension: Stop(-1) = D_0; Layer(N) = union of angle regions
// over Stop(N-1); Stop(N) = maximal cubes with a sibling violating the
// tau-gap; Up(N) = cubes not strictly inside any Stop(N) cube. Emitted
// regions are S'_Q = {R in Up(N) : R ⊆ Q} for Q in Stop(N-1).
CoronaForest extend_layers(const CubeTree& tree, const PlaneField& planes, CoronaParams params);

// Beta-square-sum forest: regions grow while every sibling R' keeps
// sum_{R' ⊂ T ⊆ Q(S)} beta^{d,1}(M B_T)^2 below epsilon^2; restart at the
// children of minimal cubes. Cubes with beta(M B_Q) >= epsilon give
// singleton regions.
struct BetaForestResult {
    CoronaForest forest;
    std::vector<double> beta_of;  // beta^{d,1}(M B_Q) per node id
};
// Pass `beta_precomputed` (one value per node id) to reuse beta numbers
// across runs at different thresholds.
BetaForestResult beta_stopping_forest(const PointCloud& cloud, const CubeTree& tree, int d,
                                      double M, double epsilon, int threads = 1,
                                      const std::vector<double>* beta_precomputed = nullptr);

// beta^{d,1}(M B_Q) for every cube.
std::vector<double> cube_beta_numbers(const PointCloud& cloud, const CubeTree& tree, int d,
                                      double M, int threads = 1);

}  // namespace tst
