#include "cpa/graph.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cpa {

bool canonical_less(NodeSet a, NodeSet b) {
    if (a.size() != b.size()) return a.size() < b.size();
    // Same cardinality: lexicographic on ascending id sequences.
    auto ia = a.begin(), ib = b.begin();
    for (; ia != a.end(); ++ia, ++ib) {
        if (*ia != *ib) return *ia < *ib;
    }
    return false;
}

std::vector<NodeSet> subsets_in_canonical_order(NodeSet universe) {
    const std::vector<NodeId> ids = universe.to_vector();
    const int m = static_cast<int>(ids.size());
    std::vector<NodeSet> out;
    out.reserve(1u << m);
    for (int k = 0; k <= m; ++k) {
        // Combinations of size k in lexicographic order over index tuples.
        std::vector<int> idx(k);
        for (int i = 0; i < k; ++i) idx[i] = i;
        while (true) {
            NodeSet s;
            for (int i : idx) s.insert(ids[i]);
            out.push_back(s);
            int i = k - 1;
            while (i >= 0 && idx[i] == m - k + i) --i;
            if (i < 0) break;
            ++idx[i];
            for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        }
    }
    return out;
}

Digraph::Digraph(int n, NodeId source, std::vector<Edge> edges)
    : n_(n), source_(source), edges_(std::move(edges)) {
    if (n_ < 2) throw std::invalid_argument("graph must have n >= 2, got n=" + std::to_string(n_));
    if (n_ > 64) throw std::invalid_argument("graph too large, n <= 64 supported");
    if (source_ < 0 || source_ >= n_)
        throw std::invalid_argument("source out of range: " + std::to_string(source_));
    std::sort(edges_.begin(), edges_.end());
    in_.assign(n_, NodeSet{});
    out_.assign(n_, NodeSet{});
    const Edge* prev = nullptr;
    for (const Edge& e : edges_) {
        auto [a, b] = e;
        if (a < 0 || a >= n_ || b < 0 || b >= n_)
            throw std::invalid_argument("edge endpoint out of range: [" + std::to_string(a) + "," +
                                        std::to_string(b) + "]");
        if (a == b)
            throw std::invalid_argument("self-loop not allowed: [" + std::to_string(a) + "," +
                                        std::to_string(b) + "]");
        if (prev && *prev == e)
            throw std::invalid_argument("duplicate edge: [" + std::to_string(a) + "," +
                                        std::to_string(b) + "]");
        prev = &e;
        out_[a].insert(b);
        in_[b].insert(a);
    }
}

bool is_feasible(const Digraph& g, const FaultModel& model, NodeSet F) {
    if (!F.subset_of(g.nodes()))
        throw std::invalid_argument("fault set contains out-of-range node ids");
    if (model.kind == FaultModel::Kind::FLocal) {
        for (NodeId v : g.nodes() - F) {
            if ((g.in_neighbors(v) & F).size() > model.f) return false;
        }
        return true;
    }
    // Generalized: some member of the domain must contain F. An empty domain
    // therefore admits only the empty set.
    if (F.empty()) return true;
    for (NodeSet member : model.domain) {
        if (F.subset_of(member)) return true;
    }
    return false;
}

std::vector<NodeSet> enumerate_feasible_fault_sets(const Digraph& g, const FaultModel& model,
                                                   bool exclude_source) {
    NodeSet universe = g.nodes();
    if (exclude_source) universe.erase(g.source());
    std::vector<NodeSet> out;
    for (NodeSet F : subsets_in_canonical_order(universe)) {
        if (is_feasible(g, model, F)) out.push_back(F);
    }
    return out;
}

// ---- Generators ----------------------------------------------------------

Digraph make_complete(int n) {
    std::vector<Digraph::Edge> edges;
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = 0; b < n; ++b)
            if (a != b) edges.emplace_back(a, b);
    return Digraph(n, 0, std::move(edges));
}

Digraph make_ring(int n) {
    std::vector<Digraph::Edge> edges;
    for (NodeId a = 0; a < n; ++a) edges.emplace_back(a, (a + 1) % n);
    return Digraph(n, 0, std::move(edges));
}

Digraph make_star(int n) {
    std::vector<Digraph::Edge> edges;
    for (NodeId b = 1; b < n; ++b) edges.emplace_back(0, b);
    return Digraph(n, 0, std::move(edges));
}

Digraph make_grid_torus(int rows, int cols) {
    if (rows < 1 || cols < 1 || rows * cols < 2)
        throw std::invalid_argument("grid_torus needs rows*cols >= 2");
    std::set<Digraph::Edge> edges;
    auto id = [&](int r, int c) { return ((r + rows) % rows) * cols + (c + cols) % cols; };
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            NodeId v = id(r, c);
            for (NodeId w : {id(r + 1, c), id(r - 1, c), id(r, c + 1), id(r, c - 1)}) {
                if (v != w) edges.emplace(v, w);  // wraparound can alias on tiny grids
            }
        }
    }
    return Digraph(rows * cols, 0, std::vector<Digraph::Edge>(edges.begin(), edges.end()));
}

Digraph make_random(int n, double p, uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("edge probability must be in [0,1]");
    std::mt19937_64 rng(seed);
    // Uniform double in [0,1) built from the top 53 bits; avoids the
    // implementation-defined std::bernoulli_distribution.
    auto coin = [&]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53 < p; };
    std::vector<Digraph::Edge> edges;
    for (NodeId a = 0; a < n; ++a)
        for (NodeId b = 0; b < n; ++b)
            if (a != b && coin()) edges.emplace_back(a, b);
    return Digraph(n, 0, std::move(edges));
}

Digraph generate(const std::string& kind, const GenParams& params, uint64_t seed) {
    if (kind == "complete") return make_complete(params.n);
    if (kind == "ring") return make_ring(params.n);
    if (kind == "star") return make_star(params.n);
    if (kind == "grid_torus") return make_grid_torus(params.rows, params.cols);
    if (kind == "random_digraph") return make_random(params.n, params.p, seed);
    throw std::invalid_argument("unknown graph kind: " + kind);
}

// ---- File formats --------------------------------------------------------

namespace {

nlohmann::json parse_json_or_throw(std::string_view text, const char* what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError(std::string(what) + ": not valid JSON");
    return j;
}

int require_int(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j[field].is_number_integer())
        throw ParseError(std::string("missing or non-integer field '") + field + "'");
    return j[field].get<int>();
}

}  // namespace

Digraph parse_graph(std::string_view text) {
    nlohmann::json j = parse_json_or_throw(text, "graph file");
    if (!j.is_object()) throw ParseError("graph file: top-level value must be an object");
    int n = require_int(j, "n");
    int source = require_int(j, "source");
    if (!j.contains("edges") || !j["edges"].is_array())
        throw ParseError("missing or non-array field 'edges'");
    std::vector<Digraph::Edge> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw ParseError("field 'edges': each entry must be a [from,to] integer pair, got " +
                             e.dump());
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    try {
        return Digraph(n, source, std::move(edges));
    } catch (const std::invalid_argument& ex) {
        throw ParseError(std::string("graph file: ") + ex.what());
    }
}

std::string serialize_graph(const Digraph& g) {
    std::ostringstream os;
    os << "{\"n\":" << g.n() << ",\"source\":" << g.source() << ",\"edges\":[";
    bool first = true;
    for (const auto& [a, b] : g.edges()) {
        if (!first) os << ",";
        first = false;
        os << "[" << a << "," << b << "]";
    }
    os << "]}";
    return os.str();
}

std::vector<NodeSet> parse_fault_domain(std::string_view text, int n) {
    nlohmann::json j = parse_json_or_throw(text, "fault-domain file");
    if (!j.is_object() || !j.contains("sets") || !j["sets"].is_array())
        throw ParseError("fault-domain file: expected {\"sets\":[[ids...],...]}");
    std::vector<NodeSet> domain;
    for (const auto& set : j["sets"]) {
        if (!set.is_array()) throw ParseError("field 'sets': each entry must be an id list");
        NodeSet s;
        for (const auto& id : set) {
            if (!id.is_number_integer())
                throw ParseError("field 'sets': node ids must be integers, got " + id.dump());
            int v = id.get<int>();
            if (v < 0 || v >= n)
                throw ParseError("field 'sets': node id out of range: " + std::to_string(v));
            s.insert(v);
        }
        domain.push_back(s);
    }
    return domain;
}

std::string serialize_fault_domain(const std::vector<NodeSet>& domain) {
    std::ostringstream os;
    os << "{\"sets\":[";
    bool first = true;
    for (NodeSet s : domain) {
        if (!first) os << ",";
        first = false;
        os << "[";
        bool f2 = true;
        for (NodeId v : s) {
            if (!f2) os << ",";
            f2 = false;
            os << v;
        }
        os << "]";
    }
    os << "]}";
    return os.str();
}

}  // namespace cpa
