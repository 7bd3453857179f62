#include "cpa/engine.hpp"

#include <algorithm>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cpa/condition.hpp"
#include "json.hpp"

namespace cpa {

Schedule Schedule::seeded_fair(uint64_t seed, int delay_bound) {
    if (delay_bound < 0) throw std::invalid_argument("seeded_fair: delay_bound must be >= 0");
    Schedule s;
    s.kind = Kind::SeededFair;
    s.seed = seed;
    s.delay_bound = delay_bound;
    return s;
}

Schedule Schedule::explicit_order(std::vector<std::pair<NodeId, NodeId>> events) {
    Schedule s;
    s.kind = Kind::Explicit;
    s.events = std::move(events);
    return s;
}

namespace {

bool is_source_only_kind(Strategy::Kind k) {
    return k == Strategy::Kind::SilentSource || k == Strategy::Kind::SourceValue;
}

}  // namespace

void validate_scenario(const Scenario& scn) {
    const Digraph& g = scn.graph;
    if (is_null(scn.source_input))
        throw std::invalid_argument("scenario: source_input must not be the null value");
    if (scn.max_rounds < 0) throw std::invalid_argument("scenario: max_rounds must be >= 0");
    if (scn.fault_set.contains(g.source()))
        throw std::invalid_argument(
            "scenario: the fault set must not contain the source; "
            "a faulty source is modelled by source_strategy");
    for (NodeId v : scn.fault_set)
        if (v < 0 || v >= g.n())
            throw std::invalid_argument("scenario: fault set names node " + std::to_string(v) +
                                        " outside the graph");

    // Strategies cover exactly the fault set.
    for (const auto& [v, strat] : scn.strategies.by_node) {
        if (!scn.fault_set.contains(v))
            throw std::invalid_argument("scenario: strategy given for non-faulty node " +
                                        std::to_string(v));
        if (is_source_only_kind(strat.kind))
            throw std::invalid_argument(
                "scenario: silent_source/source_value are source-only behaviours");
        if (strat.kind == Strategy::Kind::Equivocate && scn.delivery == Delivery::Radio)
            throw std::invalid_argument(
                "scenario: equivocation is impossible under radio delivery");
    }
    for (NodeId v : scn.fault_set)
        if (!scn.strategies.by_node.count(v))
            throw std::invalid_argument("scenario: faulty node " + std::to_string(v) +
                                        " has no strategy");

    const auto alg = scn.protocol.alg;
    if (scn.source_strategy) {
        if (alg != ProtocolKind::Alg::RadioBb)
            throw std::invalid_argument(
                "scenario: a faulty source is supported only for RADIO_BB");
        if (!is_source_only_kind(scn.source_strategy->kind))
            throw std::invalid_argument(
                "scenario: source_strategy must be silent_source or source_value");
    }
    if (alg == ProtocolKind::Alg::RadioBb) {
        if (scn.delivery != Delivery::Radio)
            throw std::invalid_argument("scenario: RADIO_BB requires radio delivery");
    } else if (scn.delivery != Delivery::PointToPoint) {
        throw std::invalid_argument("scenario: radio delivery is exclusive to RADIO_BB");
    }
    if (alg == ProtocolKind::Alg::CpaP && scn.max_rounds != 0 && scn.max_rounds != g.n())
        throw std::invalid_argument("scenario: CPA-P runs exactly n rounds");
    if (alg == ProtocolKind::Alg::CpaG) {
        for (const NodeSet& fs : scn.protocol.domain)
            for (NodeId v : fs)
                if (v < 0 || v >= g.n())
                    throw std::invalid_argument(
                        "scenario: fault domain names a node outside the graph");
    }
    if (alg == ProtocolKind::Alg::AsyncCpa) {
        // The asynchronous engine has no rounds, so only round-free
        // behaviours make sense: silence from the start, or a fixed value.
        for (const auto& [v, strat] : scn.strategies.by_node) {
            bool ok = (strat.kind == Strategy::Kind::Crash && strat.from_round == 0) ||
                      strat.kind == Strategy::Kind::FixedValue;
            if (!ok)
                throw std::invalid_argument(
                    "scenario: async runs support only crash(0) and fixed_value strategies");
        }
        if (scn.schedule.kind == Schedule::Kind::SeededFair && scn.schedule.delay_bound < 0)
            throw std::invalid_argument("scenario: delay_bound must be >= 0");
    }
}

namespace {

int effective_horizon(const Scenario& scn) {
    if (scn.protocol.alg == ProtocolKind::Alg::CpaP) return scn.graph.n();
    return scn.max_rounds == 0 ? scn.graph.n() : scn.max_rounds;
}

bool node_is_faulty(const Scenario& scn, NodeId v) {
    if (scn.fault_set.contains(v)) return true;
    return scn.source_strategy && v == scn.graph.source();
}

struct EventSink {
    ExecutionTrace& trace;

    void sent(int round, const Envelope& e) {
        trace.events.push_back(
            {round, TraceEvent::Kind::Sent, e.msg.sender, e.to, -1, e.msg.value, e.msg.tag});
    }
    void delivered(int round, const Envelope& e) {
        trace.events.push_back(
            {round, TraceEvent::Kind::Delivered, e.msg.sender, e.to, -1, e.msg.value, e.msg.tag});
    }
    void committed(int round, NodeId v, Value value) {
        trace.events.push_back({round, TraceEvent::Kind::Committed, -1, -1, v, value, kNoTag});
    }
    void terminated(int round, NodeId v) {
        trace.events.push_back({round, TraceEvent::Kind::Terminated, -1, -1, v, kNullValue, kNoTag});
    }
};

void check_envelopes_from(const Digraph& g, NodeId from, const std::vector<Envelope>& envs,
                          int round) {
    for (const Envelope& e : envs) {
        if (e.msg.sender != from)
            throw IntegrityError("round " + std::to_string(round) + ": node " +
                                 std::to_string(from) + " forged sender " +
                                 std::to_string(e.msg.sender));
        if (!g.out_neighbors(from).contains(e.to))
            throw IntegrityError("round " + std::to_string(round) + ": node " +
                                 std::to_string(from) + " sent to non-out-neighbor " +
                                 std::to_string(e.to));
    }
}

// Radio constraint: a transmitter is silent, or exactly one identical copy
// reaches every out-neighbor.
void check_radio_round(const Digraph& g, const std::vector<Envelope>& wire, int round) {
    std::map<NodeId, std::vector<const Envelope*>> by_sender;
    for (const Envelope& e : wire) by_sender[e.msg.sender].push_back(&e);
    for (const auto& [from, envs] : by_sender) {
        NodeSet seen;
        for (const Envelope* e : envs) {
            if (e->msg.value != envs.front()->msg.value || e->msg.tag != envs.front()->msg.tag)
                throw IntegrityError("round " + std::to_string(round) + ": node " +
                                     std::to_string(from) +
                                     " violated the radio constraint (unequal copies)");
            if (seen.contains(e->to))
                throw IntegrityError("round " + std::to_string(round) + ": node " +
                                     std::to_string(from) + " sent twice to node " +
                                     std::to_string(e->to) + " in radio mode");
            seen.insert(e->to);
        }
        if (!(seen == g.out_neighbors(from)))
            throw IntegrityError("round " + std::to_string(round) + ": node " +
                                 std::to_string(from) +
                                 " did not cover its whole neighbourhood in radio mode");
    }
}

bool envelope_order(const Envelope& a, const Envelope& b) {
    return std::tie(a.msg.sender, a.to, a.msg.tag, a.msg.value) <
           std::tie(b.msg.sender, b.to, b.msg.tag, b.msg.value);
}

}  // namespace

std::pair<ExecutionTrace, Verdict> run_sync(const Scenario& scn) {
    SyncResult r = run_sync_full(scn);
    return {std::move(r.trace), std::move(r.verdict)};
}

SyncResult run_sync_full(const Scenario& scn) {
    validate_scenario(scn);
    if (scn.protocol.alg == ProtocolKind::Alg::AsyncCpa)
        throw std::invalid_argument("run_sync: ASYNC_CPA runs under run_async");

    const Digraph& g = scn.graph;
    const int n = g.n();
    const NodeId s = g.source();
    const int horizon = effective_horizon(scn);
    const bool source_faulty = scn.source_strategy.has_value();

    std::vector<NodeState> state;
    state.reserve(n);
    for (NodeId v = 0; v < n; ++v) state.push_back(make_node_state(v, scn.protocol, g));
    if (!source_faulty) {
        state[s].committed = scn.source_input;
        state[s].commit_round = 0;
    }

    ExecutionTrace trace;
    EventSink sink{trace};
    if (!source_faulty) sink.committed(0, s, scn.source_input);

    std::vector<bool> was_committed(n, false), was_terminated(n, false);
    if (!source_faulty) was_committed[s] = true;

    std::vector<std::vector<Message>> prev_inbox(n);

    for (int r = 1; r <= horizon; ++r) {
        // Every node's transmissions for this round. Faulty nodes keep a
        // shadow honest state so strategies that reference honest behaviour
        // (crash-later, follow-protocol) have something to consult.
        std::vector<Envelope> wire;
        for (NodeId v = 0; v < n; ++v) {
            std::vector<Message> honest = relay_phase(state[v], r, g);
            std::vector<Envelope> envs;
            if (node_is_faulty(scn, v)) {
                const Strategy& strat = scn.fault_set.contains(v)
                                            ? scn.strategies.by_node.at(v)
                                            : *scn.source_strategy;
                envs = adversary_outbox(strat, v, r, prev_inbox[v], g, scn.protocol, honest);
            } else {
                for (const Message& m : honest)
                    for (NodeId to : g.out_neighbors(v)) envs.push_back(Envelope{to, m});
            }
            check_envelopes_from(g, v, envs, r);
            wire.insert(wire.end(), envs.begin(), envs.end());
        }
        if (scn.delivery == Delivery::Radio) check_radio_round(g, wire, r);

        std::sort(wire.begin(), wire.end(), envelope_order);
        for (const Envelope& e : wire) sink.sent(r, e);
        for (const Envelope& e : wire) sink.delivered(r, e);

        std::vector<std::vector<Message>> inbox(n);
        for (const Envelope& e : wire) inbox[e.to].push_back(e.msg);

        // End-of-round commit evaluation, every node at once.
        for (NodeId v = 0; v < n; ++v) absorb_phase(state[v], r, inbox[v], g);

        for (NodeId v = 0; v < n; ++v) {
            if (node_is_faulty(scn, v)) continue;
            if (state[v].committed && !was_committed[v]) {
                sink.committed(r, v, *state[v].committed);
                was_committed[v] = true;
            }
        }
        for (NodeId v = 0; v < n; ++v) {
            if (node_is_faulty(scn, v)) continue;
            if (state[v].terminated && !was_terminated[v]) {
                sink.terminated(r, v);
                was_terminated[v] = true;
            }
        }
        prev_inbox = std::move(inbox);

        bool all_done = true;
        for (NodeId v = 0; v < n && all_done; ++v)
            if (!node_is_faulty(scn, v) && !state[v].terminated) all_done = false;
        if (all_done) break;
    }

    Verdict verdict = evaluate(trace, scn);
    return {std::move(trace), std::move(verdict), std::move(state)};
}

namespace {

struct LinkQueueEntry {
    Message msg;
    long sent_at = 0;  // deliveries completed when this was enqueued
};

}  // namespace

std::pair<ExecutionTrace, Verdict> run_async(const Scenario& scn) {
    validate_scenario(scn);
    if (scn.protocol.alg != ProtocolKind::Alg::AsyncCpa)
        throw std::invalid_argument("run_async: only ASYNC_CPA runs asynchronously");

    const Digraph& g = scn.graph;
    const int n = g.n();
    const NodeId s = g.source();
    const long cap = 10L * n * n;

    std::vector<NodeState> state;
    state.reserve(n);
    for (NodeId v = 0; v < n; ++v) state.push_back(make_node_state(v, scn.protocol, g));
    state[s].committed = scn.source_input;
    state[s].commit_round = 0;

    ExecutionTrace trace;
    EventSink sink{trace};

    // Link queues in canonical (from, to) order; FIFO within each link.
    std::map<std::pair<NodeId, NodeId>, std::deque<LinkQueueEntry>> queues;
    long in_flight = 0;
    long delivered_count = 0;

    auto broadcast = [&](NodeId from, const Message& m, int step) {
        for (NodeId to : g.out_neighbors(from)) {
            Envelope e{to, m};
            check_envelopes_from(g, from, {e}, step);
            sink.sent(step, e);
            queues[{from, to}].push_back({m, delivered_count});
            ++in_flight;
        }
    };

    // Step 0: the source commits its input and relays once; faulty nodes
    // inject their fixed value (crash(0) nodes stay silent forever).
    sink.committed(0, s, scn.source_input);
    broadcast(s, Message{s, scn.source_input, kNoTag}, 0);
    state[s].terminated = true;
    sink.terminated(0, s);
    for (const auto& [v, strat] : scn.strategies.by_node) {
        if (strat.kind == Strategy::Kind::FixedValue)
            broadcast(v, Message{v, strat.value, kNoTag}, 0);
    }

    std::mt19937_64 rng(scn.schedule.seed);
    size_t explicit_idx = 0;
    int step = 0;

    while (in_flight > 0) {
        if (delivered_count >= cap) {
            trace.event_cap_hit = true;
            break;
        }
        ++step;

        auto link = queues.end();
        if (scn.schedule.kind == Schedule::Kind::Explicit) {
            if (explicit_idx >= scn.schedule.events.size()) {
                trace.schedule_exhausted = true;
                break;
            }
            auto [from, to] = scn.schedule.events[explicit_idx++];
            link = queues.find({from, to});
            if (link == queues.end() || link->second.empty())
                throw std::invalid_argument("explicit schedule: step " +
                                            std::to_string(explicit_idx) + " delivers on link " +
                                            std::to_string(from) + "->" + std::to_string(to) +
                                            " which has nothing in flight");
        } else {
            const long bound = scn.schedule.delay_bound > 0 ? scn.schedule.delay_bound
                                                            : 2 * in_flight;
            // Fairness: force the oldest head-of-line message once its age in
            // delivery events reaches the bound; otherwise draw uniformly.
            auto oldest = queues.end();
            long nonempty = 0;
            for (auto it = queues.begin(); it != queues.end(); ++it) {
                if (it->second.empty()) continue;
                ++nonempty;
                if (oldest == queues.end() || it->second.front().sent_at < oldest->second.front().sent_at)
                    oldest = it;
            }
            if (oldest != queues.end() && delivered_count - oldest->second.front().sent_at >= bound) {
                link = oldest;
            } else {
                long pick = static_cast<long>(rng() % static_cast<uint64_t>(nonempty));
                for (auto it = queues.begin(); it != queues.end(); ++it) {
                    if (it->second.empty()) continue;
                    if (pick-- == 0) {
                        link = it;
                        break;
                    }
                }
            }
        }

        const NodeId to = link->first.second;
        Message msg = link->second.front().msg;
        link->second.pop_front();
        --in_flight;
        ++delivered_count;
        sink.delivered(step, Envelope{to, msg});

        if (node_is_faulty(scn, to)) continue;  // Byzantine nodes ignore input
        if (state[to].terminated) continue;

        auto [next, out] = async_cpa_on_deliver(state[to], msg, g, step);
        bool newly_committed = next.committed && !state[to].committed;
        state[to] = std::move(next);
        if (newly_committed) sink.committed(step, to, *state[to].committed);
        for (const Message& m : out) broadcast(to, m, step);
        if (state[to].terminated) sink.terminated(step, to);
    }

    Verdict verdict = evaluate(trace, scn);
    return {std::move(trace), std::move(verdict)};
}

Verdict evaluate(const ExecutionTrace& trace, const Scenario& scn) {
    const Digraph& g = scn.graph;
    Verdict v;
    v.schedule_exhausted = trace.schedule_exhausted;
    v.event_cap_hit = trace.event_cap_hit;

    NodeSet honest;
    for (NodeId u : g.nodes())
        if (!node_is_faulty(scn, u)) honest.insert(u);

    std::map<NodeId, std::pair<Value, int>> commits;  // node -> (value, round)
    for (const TraceEvent& e : trace.events) {
        if (e.kind != TraceEvent::Kind::Committed) continue;
        if (!honest.contains(e.node)) continue;
        if (!commits.count(e.node)) commits[e.node] = {e.value, e.round};
    }

    NodeSet stuck;
    int last = -1;
    for (NodeId u : honest) {
        auto it = commits.find(u);
        if (it == commits.end())
            stuck.insert(u);
        else
            last = std::max(last, it->second.second);
    }
    if (stuck.empty()) {
        v.termination = Verdict::Outcome::Ok;
        v.last_commit_round = last;
    } else if (trace.schedule_exhausted || trace.event_cap_hit) {
        // The run was cut short by the schedule, not by the protocol; an
        // uncommitted node proves nothing here.
        v.termination = Verdict::Outcome::Inconclusive;
        v.stuck_nodes = stuck;
    } else {
        v.termination = Verdict::Outcome::Violated;
        v.stuck_nodes = stuck;
    }

    if (scn.source_strategy) {
        v.validity = Verdict::Outcome::NotApplicable;
    } else {
        v.validity = Verdict::Outcome::Ok;
        for (const auto& [node, commit] : commits) {
            if (commit.first != scn.source_input) {
                v.validity = Verdict::Outcome::Violated;
                v.validity_node = node;
                v.validity_value = commit.first;
                break;
            }
        }
    }

    if (scn.protocol.alg == ProtocolKind::Alg::RadioBb) {
        v.agreement = Verdict::Outcome::Ok;
        for (const auto& [node, commit] : commits) {
            if (is_null(v.agreement_value)) {
                v.agreement_value = commit.first;
                v.agreement_a = node;
            } else if (commit.first != v.agreement_value) {
                v.agreement = Verdict::Outcome::Violated;
                v.agreement_b = node;
                break;
            }
        }
        if (v.agreement == Verdict::Outcome::Ok) v.agreement_a = -1;
    } else {
        v.agreement = Verdict::Outcome::NotApplicable;
    }
    return v;
}

void validate_trace(const ExecutionTrace& trace, const Scenario& scn) {
    const Digraph& g = scn.graph;
    std::map<std::pair<NodeId, NodeId>, std::deque<std::pair<Value, int>>> pending;
    // Radio: per (sender, round) every copy carries one identical value.
    std::map<std::pair<NodeId, int>, std::pair<Value, int>> radio_payload;

    for (const TraceEvent& e : trace.events) {
        switch (e.kind) {
            case TraceEvent::Kind::Sent: {
                if (!g.out_neighbors(e.from).contains(e.to))
                    throw IntegrityError("trace: send along a non-edge " + std::to_string(e.from) +
                                         "->" + std::to_string(e.to));
                pending[{e.from, e.to}].push_back({e.value, e.tag});
                if (scn.delivery == Delivery::Radio) {
                    auto key = std::make_pair(e.from, e.round);
                    auto it = radio_payload.find(key);
                    if (it == radio_payload.end())
                        radio_payload[key] = {e.value, e.tag};
                    else if (it->second != std::make_pair(e.value, e.tag))
                        throw IntegrityError("trace: radio transmitter " + std::to_string(e.from) +
                                             " sent unequal copies in round " +
                                             std::to_string(e.round));
                }
                break;
            }
            case TraceEvent::Kind::Delivered: {
                auto& q = pending[{e.from, e.to}];
                if (q.empty())
                    throw IntegrityError("trace: delivery without a matching send on " +
                                         std::to_string(e.from) + "->" + std::to_string(e.to));
                if (q.front() != std::make_pair(e.value, e.tag))
                    throw IntegrityError("trace: FIFO order broken on link " +
                                         std::to_string(e.from) + "->" + std::to_string(e.to));
                q.pop_front();
                break;
            }
            default:
                break;
        }
    }
    if (!trace.schedule_exhausted && !trace.event_cap_hit) {
        for (const auto& [link, q] : pending)
            if (!q.empty())
                throw IntegrityError("trace: message sent on " + std::to_string(link.first) +
                                     "->" + std::to_string(link.second) + " was never delivered");
    }
}

std::string trace_to_text(const ExecutionTrace& trace) {
    std::ostringstream out;
    for (const TraceEvent& e : trace.events) {
        out << "{\"round\":" << e.round << ",\"event\":\"";
        switch (e.kind) {
            case TraceEvent::Kind::Sent:
                out << "sent\",\"from\":" << e.from << ",\"to\":" << e.to
                    << ",\"value\":" << e.value;
                if (e.tag != kNoTag) out << ",\"tag\":" << e.tag;
                break;
            case TraceEvent::Kind::Delivered:
                out << "delivered\",\"from\":" << e.from << ",\"to\":" << e.to
                    << ",\"value\":" << e.value;
                if (e.tag != kNoTag) out << ",\"tag\":" << e.tag;
                break;
            case TraceEvent::Kind::Committed:
                out << "committed\",\"node\":" << e.node << ",\"value\":" << e.value;
                break;
            case TraceEvent::Kind::Terminated:
                out << "terminated\",\"node\":" << e.node;
                break;
        }
        out << "}\n";
    }
    if (trace.schedule_exhausted) out << "{\"note\":\"schedule_exhausted\"}\n";
    if (trace.event_cap_hit) out << "{\"note\":\"event_cap_hit\"}\n";
    return out.str();
}

std::string verdict_to_text(const Verdict& v) {
    std::ostringstream out;
    out << "termination: ";
    switch (v.termination) {
        case Verdict::Outcome::Ok:
            out << "ok (last commit round " << v.last_commit_round << ")";
            break;
        case Verdict::Outcome::Violated:
            out << "violated (stuck:";
            for (NodeId u : v.stuck_nodes) out << ' ' << u;
            out << ")";
            break;
        case Verdict::Outcome::Inconclusive:
            out << "inconclusive (stuck so far:";
            for (NodeId u : v.stuck_nodes) out << ' ' << u;
            out << ")";
            break;
        case Verdict::Outcome::NotApplicable:
            out << "n/a";
            break;
    }
    out << "\nvalidity: ";
    switch (v.validity) {
        case Verdict::Outcome::Ok:
            out << "ok";
            break;
        case Verdict::Outcome::Violated:
            out << "violated (node " << v.validity_node << " committed " << v.validity_value
                << ")";
            break;
        case Verdict::Outcome::NotApplicable:
            out << "n/a (source is faulty)";
            break;
        case Verdict::Outcome::Inconclusive:
            out << "inconclusive";
            break;
    }
    out << "\nagreement: ";
    switch (v.agreement) {
        case Verdict::Outcome::Ok:
            if (is_null(v.agreement_value))
                out << "ok (no fault-free commits)";
            else
                out << "ok (common value " << v.agreement_value << ")";
            break;
        case Verdict::Outcome::Violated:
            out << "violated (nodes " << v.agreement_a << " and " << v.agreement_b
                << " disagree)";
            break;
        case Verdict::Outcome::NotApplicable:
            out << "n/a";
            break;
        case Verdict::Outcome::Inconclusive:
            out << "inconclusive";
            break;
    }
    out << '\n';
    if (v.schedule_exhausted) out << "schedule: exhausted before quiescence\n";
    if (v.event_cap_hit) out << "schedule: event cap hit\n";
    return out.str();
}

SearchOutcome search_violation(const Digraph& g, const FaultModel& model,
                               const ProtocolKind& protocol, const SearchBudget& budget) {
    if (protocol.alg == ProtocolKind::Alg::AsyncCpa)
        throw std::invalid_argument(
            "search_violation: asynchronous runs are driven per-schedule, not searched");
    const bool radio = protocol.alg == ProtocolKind::Alg::RadioBb;

    // Source behaviours: honest always; under radio also a silent source and
    // a source announcing each domain value or the default.
    std::vector<std::optional<Strategy>> source_behaviours = {std::nullopt};
    if (radio) {
        source_behaviours.push_back(Strategy::silent_source());
        for (Value val : budget.value_domain)
            source_behaviours.push_back(Strategy::source_value(val));
        source_behaviours.push_back(Strategy::source_value(kDefaultValue));
    }

    SearchOutcome outcome;
    bool skipped_any = false;
    std::string skip_note;

    for (NodeSet F : enumerate_feasible_fault_sets(g, model, /*exclude_source=*/true)) {
        if (F.size() > budget.max_fault_set_size) {
            skipped_any = true;
            if (skip_note.empty())
                skip_note = "fault sets larger than " +
                            std::to_string(budget.max_fault_set_size) + " were not searched";
            continue;
        }
        std::optional<StrategyFamily> family;
        try {
            family.emplace(g, F, budget.value_domain, budget.depth_bound, radio,
                           budget.family_cap);
        } catch (const FamilyTooLarge& e) {
            skipped_any = true;
            if (skip_note.empty()) skip_note = e.what();
            continue;
        }
        for (long i = 0; i < family->size(); ++i) {
            StrategyAssignment assignment = family->at(i);
            for (const auto& src : source_behaviours) {
                for (Value x : budget.value_domain) {
                    if (outcome.scenarios_run >= budget.max_scenarios) {
                        outcome.result = SearchOutcome::Result::Inconclusive;
                        outcome.note = "scenario budget (" + std::to_string(budget.max_scenarios) +
                                       ") exhausted";
                        return outcome;
                    }
                    ++outcome.scenarios_run;
                    Scenario scn(g);
                    scn.protocol = protocol;
                    scn.fault_set = F;
                    scn.strategies = assignment;
                    scn.source_input = x;
                    scn.delivery = radio ? Delivery::Radio : Delivery::PointToPoint;
                    scn.source_strategy = src;
                    auto [trace, verdict] = run_sync(scn);
                    if (verdict.any_violation()) {
                        outcome.result = SearchOutcome::Result::ViolationFound;
                        outcome.scenario = std::move(scn);
                        outcome.verdict = verdict;
                        return outcome;
                    }
                }
            }
        }
    }
    if (skipped_any) {
        outcome.result = SearchOutcome::Result::Inconclusive;
        outcome.note = skip_note;
    } else {
        outcome.result = SearchOutcome::Result::NoViolation;
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Scenario files

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

Value parse_value(const json& j, const std::string& where) {
    if (j.is_string()) {
        if (j.get<std::string>() == "default") return kDefaultValue;
        throw ParseError(where + ": unknown value keyword \"" + j.get<std::string>() + "\"");
    }
    if (!j.is_number_integer()) throw ParseError(where + ": value must be an integer");
    return j.get<Value>();
}

ordered value_to_json(Value v) {
    if (v == kDefaultValue) return ordered("default");
    return ordered(v);
}

Strategy parse_strategy_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind"))
        throw ParseError(where + ": strategy must be an object with a \"kind\"");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "crash") return Strategy::crash(j.value("from_round", 0));
    if (kind == "fixed_value") return Strategy::fixed_value(parse_value(j.at("value"), where));
    if (kind == "follow_protocol")
        return Strategy::follow_protocol(parse_value(j.at("value"), where));
    if (kind == "silent_source") return Strategy::silent_source();
    if (kind == "source_value") return Strategy::source_value(parse_value(j.at("value"), where));
    if (kind == "equivocate") {
        std::map<int, std::map<NodeId, Value>> by_round;
        for (const auto& [round_key, targets] : j.at("rounds").items()) {
            int round = std::stoi(round_key);
            for (const auto& [node_key, val] : targets.items())
                by_round[round][std::stoi(node_key)] = parse_value(val, where);
        }
        return Strategy::equivocate(std::move(by_round));
    }
    if (kind == "scripted") {
        std::map<std::pair<int, NodeId>, ScriptCell> table;
        for (const json& cell : j.at("cells")) {
            int round = cell.at("round").get<int>();
            NodeId to = cell.at("to").get<NodeId>();
            ScriptCell sc;
            sc.value = parse_value(cell.at("value"), where);
            sc.tag = cell.value("tag", kNoTag);
            table[{round, to}] = sc;
        }
        return Strategy::scripted(std::move(table));
    }
    throw ParseError(where + ": unknown strategy kind \"" + kind + "\"");
}

ordered strategy_to_json(const Strategy& s) {
    ordered j;
    switch (s.kind) {
        case Strategy::Kind::Crash:
            j["kind"] = "crash";
            j["from_round"] = s.from_round;
            break;
        case Strategy::Kind::FixedValue:
            j["kind"] = "fixed_value";
            j["value"] = value_to_json(s.value);
            break;
        case Strategy::Kind::FollowProtocol:
            j["kind"] = "follow_protocol";
            j["value"] = value_to_json(s.value);
            break;
        case Strategy::Kind::SilentSource:
            j["kind"] = "silent_source";
            break;
        case Strategy::Kind::SourceValue:
            j["kind"] = "source_value";
            j["value"] = value_to_json(s.value);
            break;
        case Strategy::Kind::Equivocate: {
            j["kind"] = "equivocate";
            ordered rounds = ordered::object();
            for (const auto& [round, targets] : s.equivocation) {
                ordered per = ordered::object();
                for (const auto& [node, val] : targets)
                    per[std::to_string(node)] = value_to_json(val);
                rounds[std::to_string(round)] = std::move(per);
            }
            j["rounds"] = std::move(rounds);
            break;
        }
        case Strategy::Kind::Scripted: {
            j["kind"] = "scripted";
            ordered cells = ordered::array();
            for (const auto& [key, cell] : s.script) {
                ordered c;
                c["round"] = key.first;
                c["to"] = key.second;
                c["value"] = value_to_json(cell.value);
                if (cell.tag != kNoTag) c["tag"] = cell.tag;
                cells.push_back(std::move(c));
            }
            j["cells"] = std::move(cells);
            break;
        }
    }
    return j;
}

ProtocolKind parse_protocol_json(const json& j, int n) {
    if (!j.is_object() || !j.contains("alg"))
        throw ParseError("protocol: expected an object with an \"alg\"");
    const std::string alg = j.at("alg").get<std::string>();
    if (alg == "cpa") return ProtocolKind::cpa(j.at("f").get<int>());
    if (alg == "cpa_p") return ProtocolKind::cpa_p();
    if (alg == "radio_bb") return ProtocolKind::radio_bb(j.at("f").get<int>());
    if (alg == "async_cpa") return ProtocolKind::async_cpa(j.at("f").get<int>());
    if (alg == "cpa_g") {
        std::vector<NodeSet> domain;
        for (const json& set : j.at("domain")) {
            NodeSet fs;
            for (const json& id : set) {
                NodeId v = id.get<NodeId>();
                if (v < 0 || v >= n) throw ParseError("protocol: fault domain node out of range");
                fs.insert(v);
            }
            domain.push_back(fs);
        }
        return ProtocolKind::cpa_g(std::move(domain));
    }
    throw ParseError("protocol: unknown algorithm \"" + alg + "\"");
}

ordered protocol_to_json(const ProtocolKind& p) {
    ordered j;
    switch (p.alg) {
        case ProtocolKind::Alg::Cpa:
            j["alg"] = "cpa";
            j["f"] = p.f;
            break;
        case ProtocolKind::Alg::CpaP:
            j["alg"] = "cpa_p";
            break;
        case ProtocolKind::Alg::CpaG: {
            j["alg"] = "cpa_g";
            ordered domain = ordered::array();
            for (const NodeSet& fs : p.domain) {
                ordered set = ordered::array();
                for (NodeId v : fs) set.push_back(v);
                domain.push_back(std::move(set));
            }
            j["domain"] = std::move(domain);
            break;
        }
        case ProtocolKind::Alg::RadioBb:
            j["alg"] = "radio_bb";
            j["f"] = p.f;
            break;
        case ProtocolKind::Alg::AsyncCpa:
            j["alg"] = "async_cpa";
            j["f"] = p.f;
            break;
    }
    return j;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("scenario: expected a JSON object");

    std::string graph_text;
    if (j.contains("graph")) {
        graph_text = j.at("graph").dump();
    } else if (j.contains("graph_path")) {
        std::filesystem::path p = j.at("graph_path").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        std::ifstream in(p);
        if (!in) throw ParseError("scenario: cannot open graph file " + p.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        graph_text = buf.str();
    } else {
        throw ParseError("scenario: needs \"graph\" inline or a \"graph_path\"");
    }

    Scenario scn(parse_graph(graph_text));
    const int n = scn.graph.n();

    if (!j.contains("protocol")) throw ParseError("scenario: missing \"protocol\"");
    scn.protocol = parse_protocol_json(j.at("protocol"), n);

    if (j.contains("fault_set")) {
        for (const json& id : j.at("fault_set")) {
            NodeId v = id.get<NodeId>();
            if (v < 0 || v >= n) throw ParseError("scenario: fault set node out of range");
            scn.fault_set.insert(v);
        }
    }
    if (j.contains("strategies")) {
        for (const auto& [key, strat] : j.at("strategies").items()) {
            NodeId v = std::stoi(key);
            scn.strategies.by_node[v] = parse_strategy_json(strat, "strategies[" + key + "]");
        }
    }
    if (!j.contains("source_input")) throw ParseError("scenario: missing \"source_input\"");
    scn.source_input = parse_value(j.at("source_input"), "source_input");

    if (j.contains("delivery")) {
        const std::string d = j.at("delivery").get<std::string>();
        if (d == "point_to_point")
            scn.delivery = Delivery::PointToPoint;
        else if (d == "radio")
            scn.delivery = Delivery::Radio;
        else
            throw ParseError("scenario: unknown delivery mode \"" + d + "\"");
    } else if (scn.protocol.alg == ProtocolKind::Alg::RadioBb) {
        scn.delivery = Delivery::Radio;
    }
    if (j.contains("source_strategy"))
        scn.source_strategy = parse_strategy_json(j.at("source_strategy"), "source_strategy");
    if (j.contains("max_rounds")) scn.max_rounds = j.at("max_rounds").get<int>();
    if (j.contains("schedule")) {
        const json& sj = j.at("schedule");
        const std::string kind = sj.value("kind", "seeded_fair");
        if (kind == "seeded_fair") {
            scn.schedule =
                Schedule::seeded_fair(sj.value("seed", uint64_t{0}), sj.value("delay_bound", 0));
        } else if (kind == "explicit") {
            std::vector<std::pair<NodeId, NodeId>> events;
            for (const json& ev : sj.at("events")) {
                if (!ev.is_array() || ev.size() != 2)
                    throw ParseError("scenario: schedule events must be [from, to] pairs");
                events.emplace_back(ev[0].get<NodeId>(), ev[1].get<NodeId>());
            }
            scn.schedule = Schedule::explicit_order(std::move(events));
        } else {
            throw ParseError("scenario: unknown schedule kind \"" + kind + "\"");
        }
    }
    validate_scenario(scn);
    return scn;
}

std::string serialize_scenario(const Scenario& scn) {
    ordered j;
    {
        ordered gj;
        gj["n"] = scn.graph.n();
        gj["source"] = scn.graph.source();
        ordered edges = ordered::array();
        for (const auto& [from, to] : scn.graph.edges())
            edges.push_back(ordered::array({from, to}));
        gj["edges"] = std::move(edges);
        j["graph"] = std::move(gj);
    }
    j["protocol"] = protocol_to_json(scn.protocol);
    ordered fs = ordered::array();
    for (NodeId v : scn.fault_set) fs.push_back(v);
    j["fault_set"] = std::move(fs);
    ordered strategies = ordered::object();
    for (const auto& [v, strat] : scn.strategies.by_node)
        strategies[std::to_string(v)] = strategy_to_json(strat);
    j["strategies"] = std::move(strategies);
    j["source_input"] = value_to_json(scn.source_input);
    j["delivery"] = scn.delivery == Delivery::Radio ? "radio" : "point_to_point";
    if (scn.source_strategy) j["source_strategy"] = strategy_to_json(*scn.source_strategy);
    if (scn.max_rounds != 0) j["max_rounds"] = scn.max_rounds;
    if (scn.protocol.alg == ProtocolKind::Alg::AsyncCpa) {
        ordered sj;
        if (scn.schedule.kind == Schedule::Kind::SeededFair) {
            sj["kind"] = "seeded_fair";
            sj["seed"] = scn.schedule.seed;
            sj["delay_bound"] = scn.schedule.delay_bound;
        } else {
            sj["kind"] = "explicit";
            ordered events = ordered::array();
            for (const auto& [from, to] : scn.schedule.events)
                events.push_back(ordered::array({from, to}));
            sj["events"] = std::move(events);
        }
        j["schedule"] = std::move(sj);
    }
    return j.dump(2) + "\n";
}

}  // namespace cpa
