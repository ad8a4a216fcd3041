#pragma once

#include "tstkit/geometry.hpp"
#include "tstkit/nets.hpp"

#include <vector>

// Hausdorff-content estimation at sample resolution and Choquet integration
// against it. Covers are antichains of tree cubes of sidelength >= the
// resolution floor; a cube covering part of the scope is charged
// max(diam of that part, floor)^d, capped at 2 l(Q).

namespace tst {

struct ContentEstimate {
    double value = 0.0;
    std::vector<int> lower_witness;  // antichain node ids realizing the value
};

struct ChoquetIntegrand {
    std::vector<double> values;  // nonnegative, aligned with the scope
    double p = 1.0;              // exponent >= 1
};

// Reusable evaluator bound to one (scope, tree, floor) triple: the occupied
// sub-tree is built once, then integrals for any value assignment reuse it.
class ChoquetEngine {
public:
    ChoquetEngine(std::vector<int> scope, int d, const CubeTree& tree, double floor);

    const std::vector<int>& scope() const { return scope_; }

    // Content of {x in scope : values[x] > t} for every threshold at once,
    // assembled into the integral  int_0^inf content({f > t}) t^(p-1) dt.
    double integral(const std::vector<double>& values, double p) const;

    // Content of the full scope with a witness antichain.
    ContentEstimate content() const;

private:
    struct ONode {
        int tree_id = -1;
        std::vector<int> local_pts;  // indices into scope_
        std::vector<int> children;   // indices into onodes_
        bool at_floor = false;
        double cap = 0.0;  // 2 l(Q)
    };

    std::vector<int> scope_;
    int d_ = 1;
    const CubeTree* tree_ = nullptr;
    double floor_ = 0.0;
    std::vector<ONode> onodes_;       // topological order, children after parents
    std::vector<int> eval_order_;     // bottom-up order
    int root_onode_ = -1;

    friend struct ChoquetEngineTestAccess;
};

ContentEstimate content(const std::vector<int>& scope, int d, const CubeTree& tree, double floor);

double choquet_integral(const ChoquetIntegrand& f, const std::vector<int>& scope, int d,
                        const CubeTree& tree, double floor);

}  // namespace tst
