#pragma once

#include "tstkit/corona.hpp"
#include "tstkit/geometry.hpp"
#include "tstkit/nets.hpp"

#include <nlohmann/json_fwd.hpp>
#include <array>
#include <string>
#include <vector>

// The iterative Reifenberg construction: from coherent nets with plane
// fields, compose the smoothing maps sigma_k over a triangulated window of
// the base plane, with diagnostics for the estimates checkable at desk
// scale.

namespace tst {

struct NetLevel {
    double radius = 0.0;              // r_k
    std::vector<Vec> centers;         // x_{j,k}, r_k-separated
    std::vector<AffinePlane> planes;  // P_{j,k}, each through its center
};

struct CoherentNetSystem {
    std::vector<NetLevel> levels;  // k = 0..k_max
    AffinePlane base_plane;        // P_0
    double scale = 1.0;            // r_0
    double ratio = 0.5;            // r_{k+1} = ratio * r_k; 0.1 is the paper value
    double eps = 0.0;              // coherence budget the system was validated against

    struct Violation {
        int level;
        int index;
        std::string what;
        double magnitude;
    };
    std::vector<Violation> violations;  // empty when coherent

    int deepest() const { return static_cast<int>(levels.size()) - 1; }
    double r(int k) const { return levels[static_cast<size_t>(k)].radius; }
    bool coherent() const { return violations.empty(); }
};

// Extract nets from cube centers level by level (tree level s(k) is the
// finest with sidelength >= r_k), attach the cube planes, and validate
// separation, descent into V^2_{k-1}, and the angle-coherence budget.
// Descent violations are fatal for the iteration and recorded; angle
// violations are recorded with locations.
CoherentNetSystem derive_net_system(const PointCloud& cloud, const CubeTree& tree,
                                    const PlaneField& planes, double eps, double ratio = 0.5,
                                    int k_max = -1);

// Re-validate a system (clears and refills `violations`).
void validate_net_system(CoherentNetSystem& sys);

struct EpsilonNumbers {
    double eps_k = 0.0;        // sup over the 10^4 r_l windows
    double eps_prime = 0.0;    // sup over the 100 r_l windows at net centers
    int pairs_engaged = 0;     // pairs qualifying for eps_k
    int pairs_engaged_prime = 0;
    double eps_k_small_window = 0.0;  // 100 r_l variant, reported alongside
};

// Plane-compatibility numbers at x for stage k: pairs within two levels
// whose dilated balls both contain x.
EpsilonNumbers epsilon_numbers(const CoherentNetSystem& sys, int k, const Vec& x);

// Stage-wide bound max_j eps_k(x_{j,k}), reused by validation and the
// displacement diagnostics.
double stage_epsilon(const CoherentNetSystem& sys, int k);

struct SurfaceMesh {
    int dim = 2;                               // intrinsic dimension of the sheet
    std::vector<Vec> vertices;                 // stable IDs: index = vertex id
    std::vector<std::array<int, 3>> faces;     // triangles (d = 2)
    std::vector<std::array<int, 2>> segments;  // polyline (d = 1)

    void write_obj(const std::string& path) const;
};

struct SigmaState {
    int stage = -1;  // last applied sigma_k
    SurfaceMesh mesh;
    std::vector<Vec> initial;                       // vertex positions on P_0
    std::vector<std::vector<double>> displacement;  // [stage][vertex]
    std::vector<double> stage_max_displacement;     // max over vertices per stage
};

// Triangulated window of P_0: grid of the given half-width and spacing
// centered at the base point.
SigmaState initial_state(const CoherentNetSystem& sys, double half_width, double spacing);

// One smoothing stage: every vertex y moves to
// psi_k(y) y + sum_j theta_{j,k}(y) pi_{j,k}(y) with the partition built from
// quintic radial bumps (1 inside 9B, 0 outside 10B) over the level-k net and
// a maximal r_k/2-net of the off-surface vertices. Identity outside V_k^10.
void sigma_step(SigmaState& state, const CoherentNetSystem& sys, int k);

struct FlatnessProfile {
    struct Entry {
        Vec center;
        double radius;
        double vartheta;
    };
    std::vector<Entry> entries;
    double max_vartheta = 0.0;
};

// When `within` is given, only balls B(c, r) ⊆ within are profiled — the
// caller's statement of where the sample is trustworthy (balls overhanging
// the sampled extent see the artificial boundary and report vartheta ~ 1).
FlatnessProfile flatness_profile(const PointCloud& S, int d, const std::vector<double>& scales,
                                 int max_centers_per_scale = 24, const Ball* within = nullptr);

// Mesh variant: the plane-side sup measures distance to the triangulated
// surface itself, so a flat mesh profiles flat regardless of vertex spacing.
FlatnessProfile flatness_profile(const SurfaceMesh& mesh, const std::vector<double>& scales,
                                 int max_centers_per_scale = 16, const Ball* within = nullptr);

struct GraphCheck {
    bool is_graph = false;
    double lipschitz = 0.0;
};

// Fits a plane over S ∩ B(x,r) and tests single-valued projection at the
// sampling resolution; returns the measured Lipschitz constant.
GraphCheck local_graph_check(const PointCloud& S, const Vec& x, double r, int d);

// Projection coverage on flat patches: with beta_inf(B,P) < 1/100, the
// projection of S ∩ B onto P must cover a delta-net of the half ball
// B(pi_P(x_B), r_B/2) ∩ P within a small multiple of delta.
bool projection_coverage(const PointCloud& S, const Ball& B, const AffinePlane& P, double delta,
                         double slack = 3.0);

struct DavidToroDiagnostics {
    std::vector<double> stage_max_disp;      // max |sigma_k(y) - y| per stage
    std::vector<double> stage_eps;           // stage epsilon bound per stage
    std::vector<double> stage_disp_over_er;  // max disp / (eps_k r_k), the measured C
    double final_net_dist = 0.0;             // max dist of deepest centers to the mesh
    double final_net_dist_over_er = 0.0;
    double flatness_max = 0.0;
    double holder_tau = 0.0;      // smallest exponent making the 1/4,10 bounds hold
    bool holder_ok = false;       // bounds hold at that exponent
    double bilipschitz_lo = 1.0;  // sampled min/max of |g(x)-g(y)| / |x-y|
    double bilipschitz_hi = 1.0;
    double eps_prime_square_sum = 0.0;  // sup over sampled z of sum_k eps'_k(f_k(z))^2
    bool partition_ok = true;
    int identity_violations = 0;  // vertices outside V_k^10 that moved

    nlohmann::json to_json() const;
};

struct DavidToroRun {
    SigmaState state;
    DavidToroDiagnostics diagnostics;
};

DavidToroRun run_david_toro(const CoherentNetSystem& sys, double half_width, double spacing,
                            unsigned pair_seed = 0);

// Point-to-mesh distance (exact against triangles/segments).
double dist_to_mesh(const Vec& x, const SurfaceMesh& mesh);

}  // namespace tst
