#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cpa/adversary.hpp"
#include "cpa/graph.hpp"
#include "cpa/protocol.hpp"

namespace cpa {

enum class Delivery { PointToPoint, Radio };

/// Message-order policy for asynchronous runs. SeededFair draws the next link
/// from a PRNG but force-delivers any message whose age (in delivery events)
/// reaches the delay bound, so fairness holds for every seed. delay_bound 0
/// means "twice the current in-flight count", which adapts to load and is
/// always finite. Explicit replays a fixed list of (from, to) link picks.
struct Schedule {
    enum class Kind { SeededFair, Explicit };

    Kind kind = Kind::SeededFair;
    uint64_t seed = 0;
    int delay_bound = 0;  // 0 = dynamic bound
    std::vector<std::pair<NodeId, NodeId>> events;

    static Schedule seeded_fair(uint64_t seed, int delay_bound = 0);
    static Schedule explicit_order(std::vector<std::pair<NodeId, NodeId>> events);

    bool operator==(const Schedule&) const = default;
};

/// Everything one run needs: the graph, which protocol the fault-free nodes
/// run, which nodes are Byzantine and how they behave, the source's input,
/// and how messages move. A faulty *source* is modelled separately via
/// source_strategy (radio broadcast only) so that `strategies` always covers
/// exactly `fault_set` and the fault set never contains the source.
struct Scenario {
    Digraph graph;
    ProtocolKind protocol;
    NodeSet fault_set;
    StrategyAssignment strategies;
    Value source_input = 0;
    Delivery delivery = Delivery::PointToPoint;
    std::optional<Strategy> source_strategy;  // SilentSource / SourceValue only
    int max_rounds = 0;  // 0 = n rounds; CPA-P always runs exactly n
    Schedule schedule;   // async runs only

    explicit Scenario(Digraph g) : graph(std::move(g)) {}
};

/// Throws std::invalid_argument explaining the first ill-formed field.
void validate_scenario(const Scenario& scn);

struct TraceEvent {
    enum class Kind { Sent, Delivered, Committed, Terminated };

    int round = 0;  // synchronous round, or delivery-event step when async
    Kind kind = Kind::Sent;
    NodeId from = -1;  // Sent/Delivered
    NodeId to = -1;    // Sent/Delivered
    NodeId node = -1;  // Committed/Terminated
    Value value = kNullValue;
    int tag = kNoTag;

    bool operator==(const TraceEvent&) const = default;
};

struct ExecutionTrace {
    std::vector<TraceEvent> events;
    /// Async only: an explicit schedule ran out of picks while messages were
    /// still in flight. Distinct from the protocol failing to terminate.
    bool schedule_exhausted = false;
    /// Async only: the 10·n² delivery-event safety cap fired.
    bool event_cap_hit = false;

    bool operator==(const ExecutionTrace&) const = default;
};

/// One event per line, fixed field order, no whitespace variation; byte-equal
/// traces are the determinism contract and the golden-file format.
std::string trace_to_text(const ExecutionTrace& trace);

struct Verdict {
    enum class Outcome { Ok, Violated, NotApplicable, Inconclusive };

    Outcome termination = Outcome::Ok;
    int last_commit_round = -1;  // set when termination ok
    NodeSet stuck_nodes;         // fault-free nodes never committed

    Outcome validity = Outcome::Ok;  // NotApplicable when the source is faulty
    NodeId validity_node = -1;       // first fault-free node with a wrong value
    Value validity_value = kNullValue;

    Outcome agreement = Outcome::NotApplicable;  // radio broadcast only
    Value agreement_value = kNullValue;          // the common output when ok
    NodeId agreement_a = -1, agreement_b = -1;   // first disagreeing pair

    bool schedule_exhausted = false;
    bool event_cap_hit = false;

    bool operator==(const Verdict&) const = default;

    bool any_violation() const {
        return termination == Outcome::Violated || validity == Outcome::Violated ||
               agreement == Outcome::Violated;
    }
};

std::string verdict_to_text(const Verdict& v);

/// Lock-step synchronous execution, rounds 1..horizon. Each round: every node
/// produces its outbox (protocol step for fault-free nodes, the assigned
/// strategy for faulty ones), the engine validates and delivers everything,
/// then commit rules run on the round's cumulative state. Stops early once
/// every fault-free node has terminated. Identical scenarios produce
/// byte-identical traces.
std::pair<ExecutionTrace, Verdict> run_sync(const Scenario& scn);

/// run_sync plus the final per-node protocol states (faulty nodes carry the
/// shadow honest state their strategies consulted). For tests that inspect
/// support sets or the per-instance vectors.
struct SyncResult {
    ExecutionTrace trace;
    Verdict verdict;
    std::vector<NodeState> final_states;
};
SyncResult run_sync_full(const Scenario& scn);

/// Event-driven execution for ASYNC_CPA: one message delivery per step,
/// ordered by scn.schedule. Halts when nothing is in flight, the schedule is
/// exhausted, or the event cap (10·n²) fires. Deterministic per
/// (scenario, schedule).
std::pair<ExecutionTrace, Verdict> run_async(const Scenario& scn);

/// Recompute the verdict from a finished trace: termination over fault-free
/// commits, validity against the source input (skipped when the source is
/// faulty), agreement for radio broadcast only.
Verdict evaluate(const ExecutionTrace& trace, const Scenario& scn);

/// Replay integrity checks used by the test-suite: per-link FIFO order,
/// exactly-once delivery of every sent message, and (radio) one identical
/// value per transmitter per round. Throws IntegrityError on the first
/// violation.
void validate_trace(const ExecutionTrace& trace, const Scenario& scn);

struct SearchBudget {
    int max_fault_set_size = 2;
    int depth_bound = 3;
    long max_scenarios = 2'000'000;
    long family_cap = 1'000'000;
    std::vector<Value> value_domain = {0, 1};
};

struct SearchOutcome {
    enum class Result { NoViolation, ViolationFound, Inconclusive };

    Result result = Result::NoViolation;
    std::optional<Scenario> scenario;  // the witness when a violation is found
    Verdict verdict;
    long scenarios_run = 0;
    std::string note;  // why a search came back inconclusive
};

/// Exhaustive violation search: every feasible fault set within the size
/// budget × every strategy assignment in the family × every source input in
/// the value domain (for radio, also silent and lying source behaviours).
/// Returns the canonically-first violating scenario, a completed no-violation
/// result, or Inconclusive when a budget tripped (never a false "no").
SearchOutcome search_violation(const Digraph& g, const FaultModel& model,
                               const ProtocolKind& protocol, const SearchBudget& budget);

/// Scenario files: JSON object with graph inline or by path (resolved against
/// base_dir), protocol, fault set, per-node strategies, source input,
/// delivery mode, optional source strategy / max_rounds / schedule.
Scenario parse_scenario(const std::string& text, const std::string& base_dir);
std::string serialize_scenario(const Scenario& scn);

}  // namespace cpa
