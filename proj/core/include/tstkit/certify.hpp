#pragma once

#include "tstkit/beta.hpp"
#include "tstkit/corona.hpp"
#include "tstkit/geometry.hpp"
#include "tstkit/nets.hpp"

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

// Multiscale sums and the two-sided certificates: the beta-square sum
// against the measure-plus-flatness-defect side, in dyadic and net modes.

namespace tst {

enum class CertMode { Dyadic, Net, Both };

struct CertifyParams {
    int d = 1;
    double p = 1.0;
    double C0 = 3.0;       // ball dilation in the beta sum
    double A = 0.0;        // net-mode dilation for the flatness defect; 0 -> 16 C0
    double epsilon = 0.1;  // flatness threshold
    double M = 4.0;        // forest dilation
    double forest_epsilon = 0.1;
    double resolution = 0.0;  // 0 -> cloud resolution
    CertMode mode = CertMode::Both;
    double rho = 0.5;
    int threads = 1;
    double regularity_threshold = 0.05;

    double effective_A() const { return A > 0.0 ? A : 16.0 * C0; }
};

struct BreakdownRow {
    int cube_id;
    int level;
    double beta;
    double vartheta;  // negative when not evaluated
    double contribution;
};

struct ModeSums {
    double beta_square = 0.0;
    double theta = 0.0;
    double hausdorff = 0.0;
    std::vector<BreakdownRow> breakdown;
};

struct CertificateReport {
    CertifyParams params;
    double resolution_used = 0.0;
    std::optional<ModeSums> dyadic;
    std::optional<ModeSums> net;
    double regularity_c = 0.0;
    bool regularity_ok = true;
    // Theorem-direction ratios from the primary mode (dyadic when present).
    double theorem1_lhs = 0.0, theorem1_rhs = 0.0, theorem1_ratio = 0.0;
    double theorem3_lhs = 0.0, theorem3_rhs = 0.0, theorem3_ratio = 0.0;
    double cross_mode_beta_ratio = 0.0;   // dyadic / net when both present
    double cross_mode_theta_ratio = 0.0;  // (1+theta) ratio to absorb zeros
    // Constructive summary behind the rectifiability direction.
    int forest_regions = 0;
    int forest_beta_stopped = 0;
    int forest_resolution_stopped = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

// Beta-square sum over tree cubes meeting B(0,1) at sidelength >= the
// resolution floor: sum of beta^{d,p}(C0 B_Q)^2 diam(Q)^d (dyadic) or over
// net balls of beta^{d,p}(C0 B)^2 r_B^d (net mode).
double beta_square_sum(const PointCloud& cloud, const CubeTree& tree, int d, double p, double C0,
                       double resolution, int threads = 1,
                       std::vector<BreakdownRow>* breakdown = nullptr);

// Flatness-defect sum: diam(Q)^d over cubes meeting B(0,1) with
// vartheta(3Q) >= eps (dyadic) or r_B^d over net balls with
// vartheta(A B) >= eps.
double theta_sum(const PointCloud& cloud, const CubeTree& tree, int d, double eps, double dilation,
                 double resolution, int threads = 1,
                 std::vector<BreakdownRow>* breakdown = nullptr);

// Occupied-cube covering stand-in for the measure of E ∩ B(0,1) at the
// resolution level.
double hausdorff_measure_estimate(const CubeTree& tree, int d, double resolution);

// min over sampled centers and radii in [2 delta, r_max] of
// content(E ∩ B(x,r)) / r^d.
double lower_regularity_check(const PointCloud& cloud, const CubeTree& tree, int d,
                              double r_max = 0.5, int max_centers = 24);

CertificateReport certify(const PointCloud& cloud, const CertifyParams& params);

}  // namespace tst
