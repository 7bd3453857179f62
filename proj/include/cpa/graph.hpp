#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cpa {

using NodeId = int;

/// Thrown when an input file does not conform to the expected format.
/// The message names the offending field or value.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Set of node ids backed by a 64-bit mask. The whole toolkit operates at
/// desk scale, so n <= 64 everywhere.
class NodeSet {
public:
    constexpr NodeSet() = default;

    static NodeSet single(NodeId v) { return NodeSet{}.with(v); }

    static NodeSet of(std::initializer_list<NodeId> ids) {
        NodeSet s;
        for (NodeId v : ids) s.insert(v);
        return s;
    }

    static NodeSet from_vector(const std::vector<NodeId>& ids) {
        NodeSet s;
        for (NodeId v : ids) s.insert(v);
        return s;
    }

    /// {0, 1, ..., n-1}
    static NodeSet full(int n) {
        NodeSet s;
        s.bits_ = (n >= 64) ? ~0ULL : ((1ULL << n) - 1);
        return s;
    }

    bool contains(NodeId v) const { return (bits_ >> v) & 1ULL; }
    void insert(NodeId v) { bits_ |= 1ULL << v; }
    void erase(NodeId v) { bits_ &= ~(1ULL << v); }

    NodeSet with(NodeId v) const {
        NodeSet s = *this;
        s.insert(v);
        return s;
    }
    NodeSet without(NodeId v) const {
        NodeSet s = *this;
        s.erase(v);
        return s;
    }

    int size() const { return __builtin_popcountll(bits_); }
    bool empty() const { return bits_ == 0; }

    bool subset_of(NodeSet o) const { return (bits_ & ~o.bits_) == 0; }
    bool intersects(NodeSet o) const { return (bits_ & o.bits_) != 0; }

    friend NodeSet operator&(NodeSet a, NodeSet b) { return NodeSet{a.bits_ & b.bits_}; }
    friend NodeSet operator|(NodeSet a, NodeSet b) { return NodeSet{a.bits_ | b.bits_}; }
    /// Set difference.
    friend NodeSet operator-(NodeSet a, NodeSet b) { return NodeSet{a.bits_ & ~b.bits_}; }

    bool operator==(const NodeSet&) const = default;

    std::vector<NodeId> to_vector() const {
        std::vector<NodeId> out;
        out.reserve(size());
        for (NodeId v : *this) out.push_back(v);
        return out;
    }

    uint64_t bits() const { return bits_; }

    /// Iterates members in ascending id order.
    class iterator {
    public:
        iterator(uint64_t rest) : rest_(rest) {}
        NodeId operator*() const { return __builtin_ctzll(rest_); }
        iterator& operator++() {
            rest_ &= rest_ - 1;
            return *this;
        }
        bool operator!=(const iterator& o) const { return rest_ != o.rest_; }

    private:
        uint64_t rest_;
    };
    iterator begin() const { return iterator{bits_}; }
    iterator end() const { return iterator{0}; }

private:
    explicit constexpr NodeSet(uint64_t bits) : bits_(bits) {}
    uint64_t bits_ = 0;
};

/// Canonical order on node sets: by cardinality, then lexicographic on the
/// ascending id sequence. Witnesses and enumerations use this order so that
/// outputs are byte-reproducible.
bool canonical_less(NodeSet a, NodeSet b);

/// All subsets of `universe`, in canonical order (so the empty set first).
std::vector<NodeSet> subsets_in_canonical_order(NodeSet universe);

/// Simple directed graph with a designated source node. No self-loops, no
/// duplicate edges, n >= 2. Immutable after construction.
class Digraph {
public:
    using Edge = std::pair<NodeId, NodeId>;

    /// Validates and canonicalizes (sorts edges). Throws std::invalid_argument
    /// on self-loops, duplicate edges, out-of-range endpoints or n < 2.
    Digraph(int n, NodeId source, std::vector<Edge> edges);

    int n() const { return n_; }
    NodeId source() const { return source_; }
    const std::vector<Edge>& edges() const { return edges_; }
    NodeSet nodes() const { return NodeSet::full(n_); }

    /// { j | (j,v) in E }. Never contains v itself.
    NodeSet in_neighbors(NodeId v) const {
        check_node(v);
        return in_[v];
    }
    /// { j | (v,j) in E }.
    NodeSet out_neighbors(NodeId v) const {
        check_node(v);
        return out_[v];
    }

    bool has_edge(NodeId a, NodeId b) const { return out_[a].contains(b); }

    bool operator==(const Digraph& o) const {
        return n_ == o.n_ && source_ == o.source_ && edges_ == o.edges_;
    }

private:
    void check_node(NodeId v) const {
        if (v < 0 || v >= n_) throw std::invalid_argument("node id out of range: " + std::to_string(v));
    }

    int n_;
    NodeId source_;
    std::vector<Edge> edges_;
    std::vector<NodeSet> in_;
    std::vector<NodeSet> out_;
};

/// Fault model: either the f-locally-bounded model or an explicit fault
/// domain (family of maximal corruptible sets).
struct FaultModel {
    enum class Kind { FLocal, Generalized };

    Kind kind = Kind::FLocal;
    int f = 0;                     // FLocal only
    std::vector<NodeSet> domain;   // Generalized only

    static FaultModel f_local(int f) {
        if (f < 0) throw std::invalid_argument("f must be non-negative");
        FaultModel m;
        m.kind = Kind::FLocal;
        m.f = f;
        return m;
    }

    static FaultModel generalized(std::vector<NodeSet> domain) {
        FaultModel m;
        m.kind = Kind::Generalized;
        m.domain = std::move(domain);
        return m;
    }

    bool operator==(const FaultModel&) const = default;
};

/// FLocal(f): true iff every node outside F has at most f incoming neighbors
/// inside F. Generalized: true iff F is contained in some member of the
/// domain. An empty domain admits only the empty fault set.
bool is_feasible(const Digraph& g, const FaultModel& model, NodeSet F);

/// Every feasible fault set over V (or V minus the source), in canonical
/// order. The empty set always comes first. Exponential; intended for small n.
std::vector<NodeSet> enumerate_feasible_fault_sets(const Digraph& g, const FaultModel& model,
                                                   bool exclude_source);

// ---- Generators ----------------------------------------------------------

Digraph make_complete(int n);
/// Directed cycle 0 -> 1 -> ... -> n-1 -> 0.
Digraph make_ring(int n);
/// Source 0 with edges to every other node, nothing else.
Digraph make_star(int n);
/// rows x cols torus; every lattice neighbor relation yields both directed edges.
Digraph make_grid_torus(int rows, int cols);
/// Each ordered pair becomes an edge with probability p. Pure function of
/// (n, p, seed); the same triple always yields the same graph.
Digraph make_random(int n, double p, uint64_t seed);

struct GenParams {
    int n = 0;
    int rows = 0;
    int cols = 0;
    double p = 0.0;
};

/// Dispatch by kind name: complete | ring | star | grid_torus | random_digraph.
Digraph generate(const std::string& kind, const GenParams& params, uint64_t seed);

// ---- File formats --------------------------------------------------------

/// Graph file: {"n":4,"source":0,"edges":[[0,1],...]}. Canonical serialized
/// form has the edges sorted lexicographically.
Digraph parse_graph(std::string_view text);
std::string serialize_graph(const Digraph& g);

/// Fault-domain file: {"sets":[[ids...],...]}.
std::vector<NodeSet> parse_fault_domain(std::string_view text, int n);
std::string serialize_fault_domain(const std::vector<NodeSet>& domain);

}  // namespace cpa
