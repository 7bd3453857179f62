#include "cpa/protocol.hpp"

#include <algorithm>

namespace cpa {

ProtocolKind ProtocolKind::cpa(int f) {
    if (f < 0) throw std::invalid_argument("cpa: f must be non-negative");
    ProtocolKind p;
    p.alg = Alg::Cpa;
    p.f = f;
    return p;
}

ProtocolKind ProtocolKind::cpa_p() {
    ProtocolKind p;
    p.alg = Alg::CpaP;
    return p;
}

ProtocolKind ProtocolKind::cpa_g(std::vector<NodeSet> domain) {
    ProtocolKind p;
    p.alg = Alg::CpaG;
    p.domain = std::move(domain);
    return p;
}

ProtocolKind ProtocolKind::radio_bb(int f) {
    if (f < 0) throw std::invalid_argument("radio_bb: f must be non-negative");
    ProtocolKind p;
    p.alg = Alg::RadioBb;
    p.f = f;
    return p;
}

ProtocolKind ProtocolKind::async_cpa(int f) {
    if (f < 0) throw std::invalid_argument("async_cpa: f must be non-negative");
    ProtocolKind p;
    p.alg = Alg::AsyncCpa;
    p.f = f;
    return p;
}

NodeState make_node_state(NodeId id, const ProtocolKind& protocol, const Digraph& g) {
    NodeState st;
    st.id = id;
    st.protocol = protocol;
    if (protocol.alg == ProtocolKind::Alg::CpaP) {
        st.vec.assign(g.n() + 1, kNullValue);
        st.vec_set_round.assign(g.n() + 1, -1);
    }
    return st;
}

namespace {

void commit(NodeState& st, Value v, int round) {
    if (st.committed) throw IntegrityError("node committed twice");
    st.committed = v;
    st.commit_round = round;
}

void merge_support(NodeState& st, const std::vector<Message>& inbox, const Digraph& g) {
    for (const Message& m : inbox) {
        if (!g.in_neighbors(st.id).contains(m.sender))
            throw IntegrityError("message from non-in-neighbor " + std::to_string(m.sender) +
                                 " delivered to node " + std::to_string(st.id));
        st.support[{m.value, m.tag}].insert(m.sender);
    }
}

const Message* find_source_message(const std::vector<Message>& inbox, NodeId source) {
    for (const Message& m : inbox) {
        if (m.sender == source) return &m;
    }
    return nullptr;
}

// Threshold scan over untagged support, in value order. Commits to the
// smallest qualifying value; a second qualifying value marks the anomaly.
template <typename Qualifies>
void threshold_commit(NodeState& st, int round, Qualifies qualifies) {
    bool committed_here = false;
    for (const auto& [key, senders] : st.support) {
        if (key.second != kNoTag) continue;
        if (!qualifies(senders)) continue;
        if (!committed_here) {
            commit(st, key.first, round);
            committed_here = true;
        } else {
            st.anomaly = true;
            break;
        }
    }
}

bool is_source_out_neighbor(const NodeState& st, const Digraph& g) {
    return g.in_neighbors(st.id).contains(g.source());
}

void absorb_cpa_family(NodeState& st, int round, const std::vector<Message>& inbox,
                       const Digraph& g) {
    if (st.committed) return;  // decided nodes only relay; inbox is irrelevant
    merge_support(st, inbox, g);
    // Step 2 before step 3: a direct message from the source wins the round.
    if (const Message* m = find_source_message(inbox, g.source())) {
        commit(st, m->value, round);
        return;
    }
    if (st.protocol.alg == ProtocolKind::Alg::RadioBb && round == 1 &&
        is_source_out_neighbor(st, g)) {
        // Radio-variant default rule: an out-neighbor of s that hears nothing
        // from s in round 1 proceeds as if s had sent the default value.
        commit(st, kDefaultValue, round);
        return;
    }
    if (st.protocol.alg == ProtocolKind::Alg::CpaG) {
        FaultModel model = FaultModel::generalized(st.protocol.domain);
        threshold_commit(st, round,
                         [&](NodeSet senders) { return !is_feasible(g, model, senders); });
    } else {
        int f = st.protocol.f;
        threshold_commit(st, round, [&](NodeSet senders) { return senders.size() >= f + 1; });
    }
}

void absorb_cpap(NodeState& st, int round, const std::vector<Message>& inbox, const Digraph& g) {
    if (st.id == g.source()) return;
    if (is_source_out_neighbor(st, g)) {
        if (st.committed) return;
        if (const Message* m = find_source_message(inbox, g.source())) commit(st, m->value, round);
        return;
    }
    merge_support(st, inbox, g);
    const int n = g.n();
    for (int t = 0; t <= n; ++t) {
        if (!is_null(st.vec[t])) continue;
        bool set_here = false;
        for (const auto& [key, senders] : st.support) {
            if (key.second != t || senders.size() < t + 1) continue;
            if (!set_here) {
                st.vec[t] = key.first;
                st.vec_set_round[t] = round;
                set_here = true;
            } else {
                st.anomaly = true;
                break;
            }
        }
    }
    if (round == n && !st.committed) {
        // Final rule: the entry at the largest instance that produced a value.
        for (int t = n; t >= 0; --t) {
            if (!is_null(st.vec[t])) {
                commit(st, st.vec[t], round);
                break;
            }
        }
        st.terminated = true;  // no further relays either way
    }
}

}  // namespace

std::vector<Message> relay_phase(NodeState& st, int round, const Digraph& g) {
    std::vector<Message> out;
    switch (st.protocol.alg) {
        case ProtocolKind::Alg::Cpa:
        case ProtocolKind::Alg::CpaG:
        case ProtocolKind::Alg::RadioBb:
            if (st.committed && !st.terminated) {
                out.push_back(Message{st.id, *st.committed, kNoTag});
                st.terminated = true;
            }
            break;
        case ProtocolKind::Alg::CpaP:
            if (st.id == g.source()) {
                if (st.committed && !st.terminated) {
                    out.push_back(Message{st.id, *st.committed, kNoTag});
                    st.terminated = true;
                }
            } else if (is_source_out_neighbor(st, g)) {
                // Committed in round 1, relays the whole instance fan in round 2.
                if (st.committed && !st.terminated) {
                    for (int t = 0; t <= g.n(); ++t)
                        out.push_back(Message{st.id, *st.committed, t});
                    st.terminated = true;
                }
            } else {
                for (int t = 0; t <= g.n(); ++t) {
                    if (st.vec_set_round[t] == round - 1)
                        out.push_back(Message{st.id, st.vec[t], t});
                }
            }
            break;
        case ProtocolKind::Alg::AsyncCpa:
            throw std::invalid_argument("async protocol has no synchronous relay phase");
    }
    return out;
}

void absorb_phase(NodeState& st, int round, const std::vector<Message>& inbox, const Digraph& g) {
    switch (st.protocol.alg) {
        case ProtocolKind::Alg::Cpa:
        case ProtocolKind::Alg::CpaG:
        case ProtocolKind::Alg::RadioBb:
            absorb_cpa_family(st, round, inbox, g);
            break;
        case ProtocolKind::Alg::CpaP:
            absorb_cpap(st, round, inbox, g);
            break;
        case ProtocolKind::Alg::AsyncCpa:
            throw std::invalid_argument("async protocol has no synchronous absorb phase");
    }
}

namespace {

std::pair<NodeState, std::vector<Message>> full_step(const NodeState& st, int round,
                                                     const std::vector<Message>& inbox,
                                                     const Digraph& g, ProtocolKind::Alg expect,
                                                     const char* name) {
    if (st.protocol.alg != expect)
        throw std::invalid_argument(std::string(name) + ": state runs a different protocol");
    if (round < 1) throw std::invalid_argument(std::string(name) + ": rounds start at 1");
    NodeState next = st;
    std::vector<Message> out = relay_phase(next, round, g);
    absorb_phase(next, round, inbox, g);
    return {std::move(next), std::move(out)};
}

}  // namespace

std::pair<NodeState, std::vector<Message>> cpa_step(const NodeState& st, int round,
                                                    const std::vector<Message>& inbox,
                                                    const Digraph& g) {
    return full_step(st, round, inbox, g, ProtocolKind::Alg::Cpa, "cpa_step");
}

std::pair<NodeState, std::vector<Message>> cpap_step(const NodeState& st, int round,
                                                     const std::vector<Message>& inbox,
                                                     const Digraph& g) {
    return full_step(st, round, inbox, g, ProtocolKind::Alg::CpaP, "cpap_step");
}

std::pair<NodeState, std::vector<Message>> cpag_step(const NodeState& st, int round,
                                                     const std::vector<Message>& inbox,
                                                     const Digraph& g) {
    return full_step(st, round, inbox, g, ProtocolKind::Alg::CpaG, "cpag_step");
}

std::pair<NodeState, std::vector<Message>> radio_bb_step(const NodeState& st, int round,
                                                         const std::vector<Message>& inbox,
                                                         const Digraph& g) {
    return full_step(st, round, inbox, g, ProtocolKind::Alg::RadioBb, "radio_bb_step");
}

std::pair<NodeState, std::vector<Message>> async_cpa_on_deliver(const NodeState& st,
                                                                const Message& msg,
                                                                const Digraph& g, int step) {
    if (st.protocol.alg != ProtocolKind::Alg::AsyncCpa)
        throw std::invalid_argument("async_cpa_on_deliver: state runs a different protocol");
    NodeState next = st;
    if (next.committed) return {std::move(next), {}};
    merge_support(next, {msg}, g);
    if (msg.sender == g.source()) {
        commit(next, msg.value, step);
    } else {
        int f = next.protocol.f;
        threshold_commit(next, step, [&](NodeSet senders) { return senders.size() >= f + 1; });
    }
    std::vector<Message> out;
    if (next.committed) {
        out.push_back(Message{next.id, *next.committed, kNoTag});
        next.terminated = true;
    }
    return {std::move(next), std::move(out)};
}

}  // namespace cpa
