#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "cpa/graph.hpp"

namespace cpa {

/// Values live in a small totally ordered domain {0,...,k-1}. Two
/// distinguished values sit outside the domain: the null marker (never
/// transmitted as a committed output) and the radio-variant default adopted
/// by source out-neighbors that hear nothing in round 1.
using Value = int32_t;
inline constexpr Value kNullValue = std::numeric_limits<int32_t>::min();
inline constexpr Value kDefaultValue = -1;

inline bool is_null(Value v) { return v == kNullValue; }

/// Tag marker for untagged (plain CPA) traffic.
inline constexpr int kNoTag = -1;

struct Message {
    NodeId sender = 0;
    Value value = 0;
    int tag = kNoTag;  // instance tag, present only in CPA-P traffic

    bool operator==(const Message&) const = default;
};

struct ProtocolKind {
    enum class Alg { Cpa, CpaP, CpaG, RadioBb, AsyncCpa };

    Alg alg = Alg::Cpa;
    int f = 0;                    // Cpa / RadioBb / AsyncCpa
    std::vector<NodeSet> domain;  // CpaG

    static ProtocolKind cpa(int f);
    static ProtocolKind cpa_p();
    static ProtocolKind cpa_g(std::vector<NodeSet> domain);
    static ProtocolKind radio_bb(int f);
    static ProtocolKind async_cpa(int f);

    bool operator==(const ProtocolKind&) const = default;
};

/// Raised when the simulation itself is broken (forged sender, radio
/// equivocation, message from a non-in-neighbor). Distinct from modelled
/// protocol failures, which land in the Verdict instead.
struct IntegrityError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Per-node protocol machine state. Pure-value type; the step functions below
/// are the only things that evolve it.
struct NodeState {
    NodeId id = 0;
    ProtocolKind protocol;
    std::optional<Value> committed;
    std::optional<int> commit_round;
    bool terminated = false;
    /// Set when a commit had to be tie-broken between two qualifying values
    /// (possible only outside the theorems' hypotheses).
    bool anomaly = false;
    /// Distinct senders seen per (value, tag), cumulative across rounds.
    std::map<std::pair<Value, int>, NodeSet> support;
    /// CPA-P only: per-instance estimates v[0..n] and the round each entry
    /// was set (-1 while unset, drives the relay-once-per-instance rule).
    std::vector<Value> vec;
    std::vector<int> vec_set_round;
};

NodeState make_node_state(NodeId id, const ProtocolKind& protocol, const Digraph& g);

// Engine-facing phases of one synchronous round. `relay_phase` runs first and
// produces this round's transmissions from the state as of the end of the
// previous round; `absorb_phase` then merges this round's deliveries and
// evaluates the commit rules at end of round.
std::vector<Message> relay_phase(NodeState& st, int round, const Digraph& g);
void absorb_phase(NodeState& st, int round, const std::vector<Message>& inbox, const Digraph& g);

// One whole round as a pure function (relay then absorb), per protocol. Each
// wrapper checks that the state actually runs the protocol it names.
std::pair<NodeState, std::vector<Message>> cpa_step(const NodeState& st, int round,
                                                    const std::vector<Message>& inbox,
                                                    const Digraph& g);
std::pair<NodeState, std::vector<Message>> cpap_step(const NodeState& st, int round,
                                                     const std::vector<Message>& inbox,
                                                     const Digraph& g);
std::pair<NodeState, std::vector<Message>> cpag_step(const NodeState& st, int round,
                                                     const std::vector<Message>& inbox,
                                                     const Digraph& g);
std::pair<NodeState, std::vector<Message>> radio_bb_step(const NodeState& st, int round,
                                                         const std::vector<Message>& inbox,
                                                         const Digraph& g);

/// Event-driven commit rule: same thresholds as CPA evaluated on cumulative
/// support, one delivered message per call. On commit the node emits its
/// value to all out-neighbors exactly once and terminates. `step` is the
/// delivery-event index recorded as the commit time.
std::pair<NodeState, std::vector<Message>> async_cpa_on_deliver(const NodeState& st,
                                                                const Message& msg,
                                                                const Digraph& g, int step = 0);

}  // namespace cpa
