#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

// Planes, balls, cylinders, point clouds and the distance/angle primitives
// shared by every other component. All types are immutable after
// construction and all operations are pure.

namespace tst {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Ball {
    Vec center;
    double radius = 0.0;

    Ball() = default;
    Ball(Vec c, double r) : center(std::move(c)), radius(r) {
        if (!(radius > 0.0)) throw std::invalid_argument("Ball: radius must be positive");
    }

    double diameter() const { return 2.0 * radius; }
    bool contains(const Vec& x) const { return (x - center).norm() <= radius; }
    Ball scaled(double lambda) const { return Ball(center, lambda * radius); }
};

// Affine d-plane in R^n stored as a base point plus an orthonormal frame
// (columns of `frame`). The orthogonal complement is derived on demand.
class AffinePlane {
public:
    AffinePlane() = default;
    AffinePlane(Vec base, Mat frame);

    int ambient_dim() const { return static_cast<int>(base_.size()); }
    int dim() const { return static_cast<int>(frame_.cols()); }

    const Vec& base() const { return base_; }
    const Mat& frame() const { return frame_; }

    // Orthogonal projection of x onto the plane.
    Vec project(const Vec& x) const;
    // Component of x - base orthogonal to the plane.
    Vec perp_component(const Vec& x) const;
    double distance(const Vec& x) const { return perp_component(x).norm(); }

    // Same direction subspace, passing through p.
    AffinePlane through(const Vec& p) const { return AffinePlane(p, frame_); }

    // Orthonormal basis of the orthogonal complement (n x (n-d)).
    Mat complement_frame() const;

private:
    Vec base_;
    Mat frame_;
};

struct Cylinder {
    Vec center;
    AffinePlane plane;
    double radius = 0.0;

    Cylinder() = default;
    Cylinder(Vec c, AffinePlane p, double r);

    // D(x,P,r) = {z+w : z in P∩B(x,r), w in P^perp∩B(0,r)}
    bool contains(const Vec& x) const;
};

struct PointCloud {
    std::vector<Vec> points;
    int ambient_dim = 0;
    int target_dim = 0;
    double resolution = 0.0;  // sampling scale delta

    PointCloud() = default;
    PointCloud(std::vector<Vec> pts, int n, int d, double delta);

    int size() const { return static_cast<int>(points.size()); }
    const Vec& operator[](int i) const { return points[static_cast<size_t>(i)]; }

    // Largest nearest-neighbor gap; the default resolution when none is given.
    static double default_resolution(const std::vector<Vec>& pts);

    Vec centroid() const;
    double diameter() const;
    Ball bounding_ball() const;  // centered at centroid, radius = max distance
};

double dist_to_plane(const Vec& x, const AffinePlane& P);

// Normalized Hausdorff distance between unit-ball slices of the two
// direction subspaces (the sine of the largest principal angle). Base points
// are ignored; planes are compared after translation to a common point.
double plane_angle(const AffinePlane& P1, const AffinePlane& P2);

// d_{x,r}(P1,P2) for affine planes: (2/diam B) * max of the two one-sided
// sup distances over the slices P_i ∩ B(x,r). Zero when a plane misses the
// ball entirely on both sides.
double plane_ball_dist(const AffinePlane& P1, const AffinePlane& P2,
                       const Vec& x, double r);

// d_B(E,F) between two sampled sets restricted to B.
double set_dist_dB(const std::vector<Vec>& E, const std::vector<Vec>& F, const Ball& B);

// d_B(E,L) where the plane side is sampled at spacing `delta` inside B.
double set_dist_dB(const std::vector<Vec>& E, const AffinePlane& L, const Ball& B,
                   double delta);

// Points of the slice L ∩ B on a grid of the given spacing.
std::vector<Vec> sample_plane_in_ball(const AffinePlane& L, const Ball& B, double spacing);

// Affine-independence quality of d+1 points: min over i of
// dist(x_i, affine span of the rest) / diam X. Zero when degenerate.
double eta(const std::vector<Vec>& X);

double diameter_of(const std::vector<Vec>& pts);

// Minimum enclosing ball (exact, Welzl). Works in any dimension, intended
// for the small ambient dimensions used here.
Ball minimum_enclosing_ball(const std::vector<Vec>& pts);

// Uniform grid over point positions for neighbor and nearest queries.
class GridIndex {
public:
    GridIndex() = default;
    GridIndex(const std::vector<Vec>& pts, double cell);

    // Indices of points within `radius` of x.
    std::vector<int> within(const Vec& x, double radius) const;
    // Distance from x to the nearest indexed point (infinity when empty).
    double nearest_dist(const Vec& x) const;
    int nearest(const Vec& x) const;

private:
    const std::vector<Vec>* pts_ = nullptr;
    double cell_ = 1.0;
    Eigen::VectorXd origin_;
    std::vector<std::pair<uint64_t, int>> cells_;  // sorted (cell hash, point)
    std::vector<long long> cellmin_, cellmax_;     // occupied coordinate bounds

    uint64_t hash_of(const Vec& x) const;
    uint64_t hash_coords(const std::vector<long long>& c) const;
    void collect_cell(uint64_t h, std::vector<int>& out) const;
};

double dist_point_to_set(const Vec& x, const std::vector<Vec>& S);

}  // namespace tst
