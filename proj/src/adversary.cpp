#include "cpa/adversary.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>

namespace cpa {

Strategy Strategy::crash(int from_round) {
    if (from_round < 0) throw std::invalid_argument("crash: from_round must be >= 0");
    Strategy s;
    s.kind = Kind::Crash;
    s.from_round = from_round;
    return s;
}

Strategy Strategy::fixed_value(Value v) {
    Strategy s;
    s.kind = Kind::FixedValue;
    s.value = v;
    return s;
}

Strategy Strategy::equivocate(std::map<int, std::map<NodeId, Value>> by_round) {
    Strategy s;
    s.kind = Kind::Equivocate;
    s.equivocation = std::move(by_round);
    return s;
}

Strategy Strategy::follow_protocol(Value override_value) {
    Strategy s;
    s.kind = Kind::FollowProtocol;
    s.value = override_value;
    return s;
}

Strategy Strategy::scripted(std::map<std::pair<int, NodeId>, ScriptCell> table) {
    Strategy s;
    s.kind = Kind::Scripted;
    s.script = std::move(table);
    return s;
}

Strategy Strategy::silent_source() {
    Strategy s;
    s.kind = Kind::SilentSource;
    return s;
}

Strategy Strategy::source_value(Value v) {
    Strategy s;
    s.kind = Kind::SourceValue;
    s.value = v;
    return s;
}

namespace {

// A faulty node "sending v" to a target means the untagged message under
// CPA-like protocols and the full instance fan under CPA-P.
void emit_value(std::vector<Envelope>& out, NodeId from, NodeId to, Value v, int tag,
                const ProtocolKind& protocol, const Digraph& g) {
    if (protocol.alg == ProtocolKind::Alg::CpaP && tag == kNoTag) {
        for (int t = 0; t <= g.n(); ++t) out.push_back(Envelope{to, Message{from, v, t}});
    } else {
        out.push_back(Envelope{to, Message{from, v, tag}});
    }
}

void emit_to_all(std::vector<Envelope>& out, NodeId from, Value v, const ProtocolKind& protocol,
                 const Digraph& g) {
    for (NodeId to : g.out_neighbors(from)) emit_value(out, from, to, v, kNoTag, protocol, g);
}

}  // namespace

std::vector<Envelope> adversary_outbox(const Strategy& strategy, NodeId node, int round,
                                       const std::vector<Message>& prev_inbox, const Digraph& g,
                                       const ProtocolKind& protocol,
                                       const std::vector<Message>& honest_outbox) {
    (void)prev_inbox;  // available for adaptive strategies; none of the built-ins use it yet
    std::vector<Envelope> out;
    switch (strategy.kind) {
        case Strategy::Kind::Crash:
            if (round < strategy.from_round) {
                for (const Message& m : honest_outbox)
                    for (NodeId to : g.out_neighbors(node)) out.push_back(Envelope{to, m});
            }
            break;
        case Strategy::Kind::FixedValue:
            emit_to_all(out, node, strategy.value, protocol, g);
            break;
        case Strategy::Kind::Equivocate: {
            auto it = strategy.equivocation.find(round);
            if (it != strategy.equivocation.end()) {
                for (const auto& [to, v] : it->second) {
                    if (!g.out_neighbors(node).contains(to))
                        throw IntegrityError("equivocation targets non-out-neighbor " +
                                             std::to_string(to));
                    emit_value(out, node, to, v, kNoTag, protocol, g);
                }
            }
            break;
        }
        case Strategy::Kind::FollowProtocol:
            for (const Message& m : honest_outbox) {
                Message lied = m;
                lied.value = strategy.value;
                for (NodeId to : g.out_neighbors(node)) out.push_back(Envelope{to, lied});
            }
            break;
        case Strategy::Kind::Scripted:
            for (NodeId to : g.out_neighbors(node)) {
                auto it = strategy.script.find({round, to});
                if (it != strategy.script.end())
                    emit_value(out, node, to, it->second.value, it->second.tag, protocol, g);
            }
            break;
        case Strategy::Kind::SilentSource:
            break;
        case Strategy::Kind::SourceValue:
            if (round == 1) emit_to_all(out, node, strategy.value, protocol, g);
            break;
    }
    return out;
}

namespace {

// Per-node candidate list, in canonical order: crashes, fixed values,
// protocol-followers, then every scripted table in lexicographic cell order
// (cell options ordered silence < domain values).
std::vector<Strategy> node_family(const Digraph& g, NodeId node,
                                  const std::vector<Value>& value_domain, int depth_bound,
                                  bool radio) {
    std::vector<Strategy> out;
    for (int r = 0; r <= depth_bound; ++r) out.push_back(Strategy::crash(r));
    for (Value v : value_domain) out.push_back(Strategy::fixed_value(v));
    for (Value v : value_domain) out.push_back(Strategy::follow_protocol(v));

    const std::vector<NodeId> targets = g.out_neighbors(node).to_vector();
    const int cells = targets.empty() ? 0
                      : radio         ? depth_bound
                                      : depth_bound * static_cast<int>(targets.size());
    const int options = static_cast<int>(value_domain.size()) + 1;  // + silence
    std::vector<int> pick(cells, 0);
    while (true) {
        std::map<std::pair<int, NodeId>, ScriptCell> table;
        int c = 0;
        for (int round = 1; round <= depth_bound; ++round) {
            if (radio) {
                if (targets.empty()) break;  // sink: no cells to fill
                // One transmission per round heard by every out-neighbor.
                if (pick[c] > 0)
                    for (NodeId to : targets)
                        table[{round, to}] = ScriptCell{value_domain[pick[c] - 1], kNoTag};
                ++c;
            } else {
                for (NodeId to : targets) {
                    if (pick[c] > 0) table[{round, to}] = ScriptCell{value_domain[pick[c] - 1], kNoTag};
                    ++c;
                }
            }
        }
        out.push_back(Strategy::scripted(std::move(table)));
        int i = cells - 1;
        while (i >= 0 && pick[i] == options - 1) pick[i--] = 0;
        if (i < 0) break;
        ++pick[i];
    }
    return out;
}

long node_family_size(const Digraph& g, NodeId node, const std::vector<Value>& value_domain,
                      int depth_bound, bool radio) {
    const int out_degree = g.out_neighbors(node).size();
    const int cells = out_degree == 0 ? 0 : radio ? depth_bound : depth_bound * out_degree;
    const long options = static_cast<long>(value_domain.size()) + 1;
    long scripted = 1;
    for (int i = 0; i < cells; ++i) {
        if (scripted > (1L << 40)) return scripted;  // saturate, caller caps anyway
        scripted *= options;
    }
    return (depth_bound + 1) + 2 * static_cast<long>(value_domain.size()) + scripted;
}

}  // namespace

long strategy_family_size(const Digraph& g, NodeSet F, const std::vector<Value>& value_domain,
                          int depth_bound, bool radio) {
    long total = 1;
    for (NodeId v : F) {
        long per = node_family_size(g, v, value_domain, depth_bound, radio);
        if (total > (1L << 40) / std::max(per, 1L)) return 1L << 40;  // saturated
        total *= per;
    }
    return total;
}

StrategyFamily::StrategyFamily(const Digraph& g, NodeSet F, const std::vector<Value>& value_domain,
                               int depth_bound, bool radio, long cap) {
    if (depth_bound < 0) throw std::invalid_argument("StrategyFamily: depth_bound must be >= 0");
    size_ = strategy_family_size(g, F, value_domain, depth_bound, radio);
    if (size_ > cap)
        throw FamilyTooLarge("strategy family has " + std::to_string(size_) +
                             " assignments, cap is " + std::to_string(cap));
    nodes_ = F.to_vector();
    per_node_.reserve(nodes_.size());
    for (NodeId v : nodes_) per_node_.push_back(node_family(g, v, value_domain, depth_bound, radio));
}

StrategyAssignment StrategyFamily::at(long index) const {
    if (index < 0 || index >= size_) throw std::out_of_range("StrategyFamily::at");
    StrategyAssignment a;
    // Mixed-radix decode; the last node's strategy varies fastest.
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        long radix = static_cast<long>(per_node_[i].size());
        a.by_node[nodes_[i]] = per_node_[i][index % radix];
        index /= radix;
    }
    return a;
}

std::vector<StrategyAssignment> StrategyFamily::materialize() const {
    std::vector<StrategyAssignment> out;
    out.reserve(size_);
    for (long i = 0; i < size_; ++i) out.push_back(at(i));
    return out;
}

}  // namespace cpa
