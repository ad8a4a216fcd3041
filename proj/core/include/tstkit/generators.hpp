#pragma once

#include "tstkit/geometry.hpp"

#include <string>

// Synthetic instance families. Every generator is deterministic in
// (spec, seed) and documents its analytic ground truth where one exists.

namespace tst {

// Recognized specs (parameters after a colon, comma separated):
//   plane[:n,d,count]           flat d-plane sample in R^n, default 2,1,1001
//   line[:count]                alias for plane with n=2, d=1
//   circle[:radius,count]       circle in R^2 (d = 1); H^1 = 2 pi r
//   lipschitz-graph[:L,modes,count]  graph of a random L-Lipschitz sum of
//                               sines over [-1.5,1.5]^d (d = 1 in R^2)
//   tent[:h,count]              graph of h - 2h|x-1/2| on [0,1]; apex height h
//   plane-with-hole[:a,count]   plane sample minus the ball of radius a at 0
//   dihedral[:theta,count]      two half-lines meeting at angle 2*theta
//   koch[:angle,depth]          Koch-type curve; flattens as angle -> 0
//   perturbed-plane[:eps,n,count]  plane with eps * r0 * smooth-noise heights
//                               (d = n-1 sheet in R^n)
PointCloud generate(const std::string& spec, unsigned seed);

}  // namespace tst
