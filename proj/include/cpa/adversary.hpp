#pragma once

#include <map>
#include <optional>

#include "cpa/protocol.hpp"

namespace cpa {

/// A routed message: `msg.sender` is the transmitting node, `to` the
/// recipient. The engine validates that `to` is one of the sender's
/// out-neighbors before delivering.
struct Envelope {
    NodeId to = 0;
    Message msg;

    bool operator==(const Envelope&) const = default;
};

/// One scripted transmission: a value, optionally tagged for a CPA-P
/// instance. Cells absent from a script mean silence.
struct ScriptCell {
    Value value = 0;
    int tag = kNoTag;

    bool operator==(const ScriptCell&) const = default;
};

/// Behavior of one faulty node. Faulty nodes are not bound by relay-once and
/// may transmit every round; they receive messages normally, so scripts can
/// be adaptive at desk scale via the previous round's inbox.
struct Strategy {
    enum class Kind {
        Crash,           // honest until from_round, silent from then on; Crash(0) never sends
        FixedValue,      // the same value to all out-neighbors, every round
        Equivocate,      // per-round, per-target values (rejected in radio mode)
        FollowProtocol,  // honest timing, but every outgoing value replaced
        Scripted,        // explicit (round, target) -> cell table
        SilentSource,    // radio variant: the faulty source never transmits
        SourceValue,     // radio variant: the faulty source announces a value in round 1
    };

    Kind kind = Kind::Crash;
    int from_round = 0;  // Crash
    Value value = 0;     // FixedValue / FollowProtocol / SourceValue
    std::map<int, std::map<NodeId, Value>> equivocation;  // round -> target -> value
    std::map<std::pair<int, NodeId>, ScriptCell> script;  // (round, target) -> cell

    static Strategy crash(int from_round = 0);
    static Strategy fixed_value(Value v);
    static Strategy equivocate(std::map<int, std::map<NodeId, Value>> by_round);
    static Strategy follow_protocol(Value override_value);
    static Strategy scripted(std::map<std::pair<int, NodeId>, ScriptCell> table);
    static Strategy silent_source();
    static Strategy source_value(Value v);

    bool operator==(const Strategy&) const = default;
};

/// Strategies keyed by faulty node; covers exactly the scenario's fault set.
struct StrategyAssignment {
    std::map<NodeId, Strategy> by_node;

    bool operator==(const StrategyAssignment&) const = default;
};

/// Messages a faulty node transmits in `round`. `prev_inbox` is what it
/// received in the previous round (adaptive scripts); `honest_outbox` is what
/// the node's honest shadow machine would transmit this round, used by Crash
/// (pre-crash rounds) and FollowProtocol. Recipients are always restricted to
/// out-neighbors. Under CPA-P, a plain scripted or fixed value expands into
/// the full instance fan <v,0>..<v,n>, the strongest per-value misbehavior a
/// tagged receiver pays attention to.
std::vector<Envelope> adversary_outbox(const Strategy& strategy, NodeId node, int round,
                                       const std::vector<Message>& prev_inbox, const Digraph& g,
                                       const ProtocolKind& protocol,
                                       const std::vector<Message>& honest_outbox);

/// Thrown when a requested strategy family is larger than the cap; the
/// message reports the would-be size.
struct FamilyTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic enumeration of every strategy assignment over F drawn from:
/// Crash(0..depth_bound), FixedValue and FollowProtocol per domain value, and
/// all Scripted tables with cells in domain + silence over rounds
/// 1..depth_bound and the node's out-neighbors. In radio mode scripted tables
/// collapse to one value-or-silence per round. Random access so searches can
/// walk families of hundreds of thousands of assignments without
/// materializing them. Construction refuses (reporting the size) when the
/// assignment count exceeds `cap`. The empty fault set yields exactly the
/// empty assignment.
class StrategyFamily {
public:
    StrategyFamily(const Digraph& g, NodeSet F, const std::vector<Value>& value_domain,
                   int depth_bound, bool radio, long cap);

    long size() const { return size_; }
    /// Assignment number `index` in canonical order (the last faulty node in
    /// id order varies fastest; index 0 is all-Crash(0)).
    StrategyAssignment at(long index) const;

    std::vector<StrategyAssignment> materialize() const;

private:
    std::vector<NodeId> nodes_;
    std::vector<std::vector<Strategy>> per_node_;
    long size_ = 1;
};

/// Number of assignments the family over F would contain (saturating).
long strategy_family_size(const Digraph& g, NodeSet F, const std::vector<Value>& value_domain,
                          int depth_bound, bool radio);

}  // namespace cpa
