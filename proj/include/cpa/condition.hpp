#pragma once

#include <optional>

#include "cpa/graph.hpp"

namespace cpa {

/// A split of the node set into faulty (F), already-convinced (L) and
/// remaining (R) nodes. Witnesses returned by the checkers satisfy: the three
/// parts are disjoint and cover V, the source is in L, R is nonempty and F is
/// feasible under the active fault model.
struct Partition {
    NodeSet F;
    NodeSet L;
    NodeSet R;

    bool operator==(const Partition&) const = default;
};

/// Outcome of a topology-condition check. When the condition fails, `witness`
/// is a partition for which propagation provably stalls: no node of R is an
/// out-neighbor of the source and L cannot push any node of R over its
/// commit threshold.
struct ConditionReport {
    bool holds = false;
    std::optional<Partition> witness;
    long fault_sets_examined = 0;
};

/// Thrown by the brute-force checker when the graph exceeds its node bound.
struct BoundExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A => B: some node of B has at least f+1 distinct incoming neighbors in A.
/// A and B must be nonempty and disjoint.
bool implies(const Digraph& g, NodeSet A, NodeSet B, int f);

/// Incoming neighbors of the set B: { i | (i,j) in E, i not in B, j in B }.
NodeSet in_neighbors_of_set(const Digraph& g, NodeSet B);

/// Generalized propagation relation: for every member F* of the domain,
/// N^-(B) /\ A is not contained in F*. B must be nonempty and disjoint from
/// A. Note the corner: with an empty domain the universal quantifier is
/// vacuous, so the relation holds even when N^-(B) /\ A is empty.
bool implies_generalized(const Digraph& g, NodeSet A, NodeSet B, const std::vector<NodeSet>& domain);

/// Least fixed point containing the source under the commit rule with fault
/// set F removed: a node joins if it is an out-neighbor of the source or has
/// at least f+1 members of the current set among its incoming neighbors.
/// The rule is monotone, so iteration order does not matter.
NodeSet closure(const Digraph& g, NodeSet F, int f);

/// Same fixed point under either fault model; the generalized rule admits a
/// node when its in-neighbors inside the current set do not form a feasible
/// fault set.
NodeSet closure(const Digraph& g, NodeSet F, const FaultModel& model);

/// Production checker: the condition holds iff for every feasible fault set F
/// (source excluded), the closure covers all of V - F. On failure the witness
/// uses the canonically-first failing F with L = its closure and R the rest.
ConditionReport check_condition(const Digraph& g, const FaultModel& model);

/// Testing oracle: enumerate every partition (F, L, R) with the source in L,
/// R nonempty and F feasible, and test the two-disjunct condition directly on
/// each. Exponential by design; refuses graphs with n > node_bound.
ConditionReport check_condition_bruteforce(const Digraph& g, const FaultModel& model,
                                           int node_bound = 10);

struct MaxFResult {
    int f = -1;          // -1: not even f = 0 holds (some node unreachable)
    bool all_f = false;  // condition holds for every f (all nodes are out-neighbors of s)
    /// Witness for the first failing f (absent when all_f).
    int failing_f = -1;
    std::optional<Partition> failing_witness;
};

/// Largest f for which the condition holds, by linear scan from 0 (valid by
/// monotonicity in f). Holding at f = n means every node is an out-neighbor
/// of the source and every f works.
MaxFResult max_tolerable_f(const Digraph& g);

}  // namespace cpa
