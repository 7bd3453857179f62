#include "cpa/condition.hpp"

namespace cpa {

bool implies(const Digraph& g, NodeSet A, NodeSet B, int f) {
    if (A.empty() || B.empty()) throw std::invalid_argument("implies: A and B must be nonempty");
    if (A.intersects(B)) throw std::invalid_argument("implies: A and B must be disjoint");
    for (NodeId v : B) {
        if ((g.in_neighbors(v) & A).size() > f) return true;
    }
    return false;
}

NodeSet in_neighbors_of_set(const Digraph& g, NodeSet B) {
    NodeSet acc;
    for (NodeId v : B) acc = acc | g.in_neighbors(v);
    return acc - B;
}

bool implies_generalized(const Digraph& g, NodeSet A, NodeSet B,
                         const std::vector<NodeSet>& domain) {
    if (B.empty()) throw std::invalid_argument("implies_generalized: B must be nonempty");
    if (A.intersects(B)) throw std::invalid_argument("implies_generalized: A and B must be disjoint");
    NodeSet support = in_neighbors_of_set(g, B) & A;
    for (NodeSet member : domain) {
        if (support.subset_of(member)) return false;
    }
    return true;  // vacuously true for an empty domain
}

namespace {

// Shared fixed-point driver. `commits` decides whether the support set the
// current L offers a candidate node is enough.
template <typename CommitRule>
NodeSet closure_impl(const Digraph& g, NodeSet F, CommitRule commits) {
    if (F.contains(g.source())) throw std::invalid_argument("closure: source may not be faulty");
    NodeSet L = NodeSet::single(g.source());
    NodeSet sourceOut = g.out_neighbors(g.source());
    bool grew = true;
    while (grew) {
        grew = false;
        for (NodeId v : g.nodes() - F - L) {
            if (sourceOut.contains(v) || commits(g.in_neighbors(v) & L)) {
                L.insert(v);
                grew = true;
            }
        }
    }
    return L;
}

}  // namespace

NodeSet closure(const Digraph& g, NodeSet F, int f) {
    return closure_impl(g, F, [&](NodeSet support) { return support.size() >= f + 1; });
}

NodeSet closure(const Digraph& g, NodeSet F, const FaultModel& model) {
    if (model.kind == FaultModel::Kind::FLocal) return closure(g, F, model.f);
    return closure_impl(g, F, [&](NodeSet support) { return !is_feasible(g, model, support); });
}

ConditionReport check_condition(const Digraph& g, const FaultModel& model) {
    ConditionReport report;
    for (NodeSet F : enumerate_feasible_fault_sets(g, model, /*exclude_source=*/true)) {
        ++report.fault_sets_examined;
        NodeSet L = closure(g, F, model);
        NodeSet R = g.nodes() - F - L;
        if (!R.empty()) {
            report.holds = false;
            report.witness = Partition{F, L, R};
            return report;
        }
    }
    report.holds = true;
    return report;
}

ConditionReport check_condition_bruteforce(const Digraph& g, const FaultModel& model,
                                           int node_bound) {
    if (g.n() > node_bound)
        throw BoundExceeded("brute-force checker refuses n=" + std::to_string(g.n()) +
                            " (bound " + std::to_string(node_bound) + ")");
    auto satisfied = [&](NodeSet L, NodeSet R) {
        if (g.out_neighbors(g.source()).intersects(R)) return true;
        if (model.kind == FaultModel::Kind::FLocal) return implies(g, L, R, model.f);
        return implies_generalized(g, L, R, model.domain);
    };
    ConditionReport report;
    for (NodeSet F : enumerate_feasible_fault_sets(g, model, /*exclude_source=*/true)) {
        ++report.fault_sets_examined;
        NodeSet rest = g.nodes() - F;
        // L ranges over subsets of V - F containing the source; R is the rest.
        for (NodeSet sub : subsets_in_canonical_order(rest.without(g.source()))) {
            NodeSet L = sub.with(g.source());
            NodeSet R = rest - L;
            if (R.empty()) continue;
            if (!satisfied(L, R)) {
                report.holds = false;
                report.witness = Partition{F, L, R};
                return report;
            }
        }
    }
    report.holds = true;
    return report;
}

MaxFResult max_tolerable_f(const Digraph& g) {
    MaxFResult result;
    for (int f = 0; f <= g.n(); ++f) {
        ConditionReport r = check_condition(g, FaultModel::f_local(f));
        if (!r.holds) {
            result.f = f - 1;
            result.failing_f = f;
            result.failing_witness = r.witness;
            return result;
        }
    }
    // Held at f = n: the threshold rule can never fire there, so every node
    // must be an out-neighbor of the source and every larger f holds too.
    result.f = g.n();
    result.all_f = true;
    return result;
}

}  // namespace cpa
