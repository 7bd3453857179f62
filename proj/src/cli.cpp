#include "cpa/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cpa/condition.hpp"
#include "cpa/engine.hpp"
#include "cpa/graph.hpp"

namespace cpa {

namespace {

using ordered = nlohmann::ordered_json;

// --------------------------------------------------------------------------
// Report plumbing

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(uint64_t v) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << v;
    return out.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string set_text(NodeSet s) {
    std::ostringstream out;
    out << '{';
    bool first = true;
    for (NodeId v : s) {
        if (!first) out << ' ';
        out << v;
        first = false;
    }
    out << '}';
    return out.str();
}

ordered set_json(NodeSet s) {
    ordered a = ordered::array();
    for (NodeId v : s) a.push_back(v);
    return a;
}

ordered partition_json(const Partition& p) {
    ordered j;
    j["F"] = set_json(p.F);
    j["L"] = set_json(p.L);
    j["R"] = set_json(p.R);
    return j;
}

std::string partition_text(const Partition& p) {
    return "F=" + set_text(p.F) + " L=" + set_text(p.L) + " R=" + set_text(p.R);
}

ordered verdict_json(const Verdict& v) {
    ordered j;
    {
        ordered t;
        switch (v.termination) {
            case Verdict::Outcome::Ok:
                t["outcome"] = "ok";
                t["last_commit_round"] = v.last_commit_round;
                break;
            case Verdict::Outcome::Violated:
                t["outcome"] = "violated";
                t["stuck"] = set_json(v.stuck_nodes);
                break;
            case Verdict::Outcome::Inconclusive:
                t["outcome"] = "inconclusive";
                t["stuck"] = set_json(v.stuck_nodes);
                break;
            case Verdict::Outcome::NotApplicable:
                t["outcome"] = "n/a";
                break;
        }
        j["termination"] = std::move(t);
    }
    {
        ordered t;
        switch (v.validity) {
            case Verdict::Outcome::Ok:
                t["outcome"] = "ok";
                break;
            case Verdict::Outcome::Violated:
                t["outcome"] = "violated";
                t["node"] = v.validity_node;
                t["value"] = v.validity_value;
                break;
            default:
                t["outcome"] = "n/a";
                break;
        }
        j["validity"] = std::move(t);
    }
    {
        ordered t;
        switch (v.agreement) {
            case Verdict::Outcome::Ok:
                t["outcome"] = "ok";
                if (!is_null(v.agreement_value)) t["value"] = v.agreement_value;
                break;
            case Verdict::Outcome::Violated:
                t["outcome"] = "violated";
                t["nodes"] = ordered::array({v.agreement_a, v.agreement_b});
                break;
            default:
                t["outcome"] = "n/a";
                break;
        }
        j["agreement"] = std::move(t);
    }
    if (v.schedule_exhausted) j["schedule_exhausted"] = true;
    if (v.event_cap_hit) j["event_cap_hit"] = true;
    return j;
}

/// One report per command, built in both shapes and emitted once at the end.
struct Report {
    ordered j = ordered::object();
    std::ostringstream text;

    std::optional<double> timing_ms;
    bool as_json = false;
    std::string report_path;

    /// Returns false when the side-car report file cannot be written.
    bool emit(std::ostream& out, std::ostream& err) {
        if (timing_ms) {
            j["timing_ms"] = *timing_ms;
            text << "timing: " << *timing_ms << " ms\n";
        }
        const std::string payload = as_json ? j.dump(2) + "\n" : text.str();
        out << payload;
        if (!report_path.empty()) {
            std::filesystem::path p = report_path;
            if (p.is_relative()) {
                if (const char* dir = std::getenv("CPA_REPORT_DIR"))
                    p = std::filesystem::path(dir) / p;
            }
            std::ofstream f(p);
            if (!f) {
                err << "cannot write report file: " << p.string() << "\n";
                return false;
            }
            f << payload;
        }
        return true;
    }
};

/// Wall-clock timing is opt-in so that default reports stay byte-identical
/// across runs.
struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

// --------------------------------------------------------------------------
// Shared option bundles

struct CommonFlags {
    bool json = false;
    bool timing = false;
    std::string report_path;

    void attach(CLI::App* cmd) {
        cmd->add_flag("--json", json, "machine-readable report instead of text");
        cmd->add_flag("--timing", timing, "include wall-clock timing in the report");
        cmd->add_option("--report", report_path,
                        "also write the report to this file (relative paths resolve against "
                        "$CPA_REPORT_DIR)");
    }
};

struct ModelFlags {
    int f = -1;
    std::string domain_path;

    void attach(CLI::App* cmd) {
        auto* fo = cmd->add_option("--f", f, "f-locally-bounded model with this f");
        auto* dom = cmd->add_option("--domain", domain_path,
                                    "generalized model: path to a fault-domain file");
        fo->excludes(dom);
    }

    // The fault model is always explicit; neither flag has a default.
    FaultModel resolve(const Digraph& g, std::string* domain_text) const {
        if (f >= 0 && !domain_path.empty())
            throw CLI::ValidationError("--f and --domain are mutually exclusive");
        if (f >= 0) return FaultModel::f_local(f);
        if (!domain_path.empty()) {
            *domain_text = slurp(domain_path);
            return FaultModel::generalized(parse_fault_domain(*domain_text, g.n()));
        }
        throw CLI::RequiredError("one of --f / --domain");
    }

    void describe(Report& r, const FaultModel& model, const std::string& domain_text) const {
        if (model.kind == FaultModel::Kind::FLocal) {
            r.text << "model: f-local f=" << model.f << "\n";
            r.j["model"] = {{"kind", "f_local"}, {"f", model.f}};
        } else {
            r.text << "model: generalized (" << model.domain.size() << " sets, " << domain_path
                   << " fnv1a64 " << hex64(fnv1a64(domain_text)) << ")\n";
            ordered m;
            m["kind"] = "generalized";
            m["domain_path"] = domain_path;
            m["domain_digest"] = hex64(fnv1a64(domain_text));
            m["sets"] = model.domain.size();
            r.j["model"] = std::move(m);
        }
    }
};

void describe_graph_input(Report& r, const std::string& path, const std::string& text) {
    r.text << "graph: " << path << " (fnv1a64 " << hex64(fnv1a64(text)) << ")\n";
    r.j["graph_path"] = path;
    r.j["graph_digest"] = hex64(fnv1a64(text));
}

std::string protocol_text(const ProtocolKind& p) {
    std::ostringstream out;
    switch (p.alg) {
        case ProtocolKind::Alg::Cpa:
            out << "cpa f=" << p.f;
            break;
        case ProtocolKind::Alg::CpaP:
            out << "cpa_p";
            break;
        case ProtocolKind::Alg::CpaG:
            out << "cpa_g (" << p.domain.size() << " sets)";
            break;
        case ProtocolKind::Alg::RadioBb:
            out << "radio_bb f=" << p.f;
            break;
        case ProtocolKind::Alg::AsyncCpa:
            out << "async_cpa f=" << p.f;
            break;
    }
    return out.str();
}

ordered protocol_json_brief(const ProtocolKind& p) {
    ordered j;
    switch (p.alg) {
        case ProtocolKind::Alg::Cpa:
            j["alg"] = "cpa";
            j["f"] = p.f;
            break;
        case ProtocolKind::Alg::CpaP:
            j["alg"] = "cpa_p";
            break;
        case ProtocolKind::Alg::CpaG:
            j["alg"] = "cpa_g";
            j["sets"] = p.domain.size();
            break;
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

std::string echo_command(const std::vector<std::string>& args) {
    std::ostringstream out;
    out << "cpa";
    for (const std::string& a : args) out << ' ' << a;
    return out.str();
}

// --------------------------------------------------------------------------
// Subcommands

int do_check(const std::string& graph_path, const ModelFlags& model_flags, bool oracle,
             Report& r, std::ostream& out, std::ostream& err) {
    Stopwatch watch;
    const std::string graph_text = slurp(graph_path);
    Digraph g = parse_graph(graph_text);
    std::string domain_text;
    FaultModel model = model_flags.resolve(g, &domain_text);

    describe_graph_input(r, graph_path, graph_text);
    model_flags.describe(r, model, domain_text);

    ConditionReport report = check_condition(g, model);
    r.text << "condition: " << (report.holds ? "holds" : "fails") << "\n";
    r.j["holds"] = report.holds;
    if (report.witness) {
        r.text << "witness: " << partition_text(*report.witness) << "\n";
        r.j["witness"] = partition_json(*report.witness);
    }
    r.text << "fault sets examined: " << report.fault_sets_examined << "\n";
    r.j["fault_sets_examined"] = report.fault_sets_examined;

    int code = report.holds ? kExitPass : kExitFail;
    if (oracle) {
        ConditionReport slow;
        try {
            slow = check_condition_bruteforce(g, model);
        } catch (const BoundExceeded& e) {
            err << "oracle: " << e.what() << "\n";
            return kExitInconclusive;
        }
        if (slow.holds == report.holds) {
            r.text << "oracle: agreed (exhaustive partition check)\n";
            r.j["oracle"] = "agreed";
            if (slow.witness) {
                r.text << "oracle witness: " << partition_text(*slow.witness) << "\n";
                r.j["oracle_witness"] = partition_json(*slow.witness);
            }
        } else {
            r.text << "oracle: DISAGREED\n";
            r.j["oracle"] = "disagreed";
            err << "oracle disagreement: production checker says "
                << (report.holds ? "holds" : "fails") << ", exhaustive partition check says "
                << (slow.holds ? "holds" : "fails") << "\n";
            code = kExitFail;
        }
    }
    if (r.timing_ms) r.timing_ms = watch.ms();
    return r.emit(out, err) ? code : kExitUsage;
}

int do_maxf(const std::string& graph_path, Report& r, std::ostream& out, std::ostream& err) {
    Stopwatch watch;
    const std::string graph_text = slurp(graph_path);
    Digraph g = parse_graph(graph_text);
    describe_graph_input(r, graph_path, graph_text);

    MaxFResult res = max_tolerable_f(g);
    if (res.all_f) {
        r.text << "max f: unbounded (every node is an out-neighbor of the source)\n";
        r.j["max_f"] = res.f;
        r.j["all_f"] = true;
    } else if (res.f < 0) {
        r.text << "max f: none (the condition fails already at f=0)\n";
        r.j["max_f"] = -1;
        r.j["all_f"] = false;
    } else {
        r.text << "max f: " << res.f << "\n";
        r.j["max_f"] = res.f;
        r.j["all_f"] = false;
    }
    if (!res.all_f) {
        r.text << "first failing f: " << res.failing_f << "\n";
        r.j["failing_f"] = res.failing_f;
        if (res.failing_witness) {
            r.text << "failing witness: " << partition_text(*res.failing_witness) << "\n";
            r.j["failing_witness"] = partition_json(*res.failing_witness);
        }
    }
    if (r.timing_ms) r.timing_ms = watch.ms();
    return r.emit(out, err) ? kExitPass : kExitUsage;
}

int do_simulate(const std::string& scenario_path, const std::string& trace_path, Report& r,
                std::ostream& out, std::ostream& err) {
    Stopwatch watch;
    const std::string scenario_text = slurp(scenario_path);
    const std::string base_dir = std::filesystem::path(scenario_path).parent_path().string();
    Scenario scn = parse_scenario(scenario_text, base_dir);

    r.text << "scenario: " << scenario_path << " (fnv1a64 " << hex64(fnv1a64(scenario_text))
           << ")\n";
    r.j["scenario_path"] = scenario_path;
    r.j["scenario_digest"] = hex64(fnv1a64(scenario_text));
    r.text << "protocol: " << protocol_text(scn.protocol) << "\n";
    r.j["protocol"] = protocol_json_brief(scn.protocol);

    const bool async = scn.protocol.alg == ProtocolKind::Alg::AsyncCpa;
    if (async && scn.schedule.kind == Schedule::Kind::SeededFair) {
        r.text << "seed: " << scn.schedule.seed << "\n";
        r.j["seed"] = scn.schedule.seed;
    }

    auto [trace, verdict] = async ? run_async(scn) : run_sync(scn);

    r.text << "events: " << trace.events.size() << "\n";
    r.j["events"] = trace.events.size();
    r.text << verdict_to_text(verdict);
    r.j["verdict"] = verdict_json(verdict);

    if (!trace_path.empty()) {
        std::ofstream f(trace_path);
        if (!f) {
            err << "cannot write trace file: " << trace_path << "\n";
            return kExitUsage;
        }
        f << trace_to_text(trace);
        r.text << "trace: written to " << trace_path << "\n";
        r.j["trace_path"] = trace_path;
    }
    if (r.timing_ms) r.timing_ms = watch.ms();
    int code = verdict.any_violation() ? kExitFail
               : verdict.termination == Verdict::Outcome::Inconclusive ? kExitInconclusive
                                                                       : kExitPass;
    return r.emit(out, err) ? code : kExitUsage;
}

int do_search(const std::string& graph_path, const ModelFlags& model_flags,
              const std::string& protocol_name, const SearchBudget& budget,
              const std::string& witness_path, Report& r, std::ostream& out, std::ostream& err) {
    Stopwatch watch;
    const std::string graph_text = slurp(graph_path);
    Digraph g = parse_graph(graph_text);
    std::string domain_text;
    FaultModel model = model_flags.resolve(g, &domain_text);

    ProtocolKind protocol;
    if (protocol_name == "cpa" || protocol_name == "cpa_p" || protocol_name == "radio_bb" ||
        protocol_name == "async_cpa") {
        if (model.kind != FaultModel::Kind::FLocal)
            throw CLI::ValidationError("--protocol " + protocol_name + " needs --f, not --domain");
        if (protocol_name == "cpa") protocol = ProtocolKind::cpa(model.f);
        if (protocol_name == "cpa_p") protocol = ProtocolKind::cpa_p();
        if (protocol_name == "radio_bb") protocol = ProtocolKind::radio_bb(model.f);
        if (protocol_name == "async_cpa") protocol = ProtocolKind::async_cpa(model.f);
    } else if (protocol_name == "cpa_g") {
        if (model.kind != FaultModel::Kind::Generalized)
            throw CLI::ValidationError("--protocol cpa_g needs --domain");
        protocol = ProtocolKind::cpa_g(model.domain);
    } else {
        throw CLI::ValidationError("unknown --protocol \"" + protocol_name + "\"");
    }

    describe_graph_input(r, graph_path, graph_text);
    model_flags.describe(r, model, domain_text);
    r.text << "protocol: " << protocol_text(protocol) << "\n";
    r.j["protocol"] = protocol_json_brief(protocol);
    r.text << "budget: max_fault_set_size=" << budget.max_fault_set_size
           << " depth=" << budget.depth_bound << " scenarios=" << budget.max_scenarios
           << " family_cap=" << budget.family_cap << "\n";
    {
        ordered b;
        b["max_fault_set_size"] = budget.max_fault_set_size;
        b["depth_bound"] = budget.depth_bound;
        b["max_scenarios"] = budget.max_scenarios;
        b["family_cap"] = budget.family_cap;
        r.j["budget"] = std::move(b);
    }

    SearchOutcome outcome = search_violation(g, model, protocol, budget);
    r.j["scenarios_run"] = outcome.scenarios_run;

    int code = kExitPass;
    switch (outcome.result) {
        case SearchOutcome::Result::NoViolation:
            r.text << "result: no violation (complete search, " << outcome.scenarios_run
                   << " scenarios)\n";
            r.j["result"] = "no_violation";
            break;
        case SearchOutcome::Result::ViolationFound: {
            code = kExitFail;
            r.text << "result: violation found after " << outcome.scenarios_run
                   << " scenarios\n";
            r.j["result"] = "violation";
            r.text << verdict_to_text(outcome.verdict);
            r.j["verdict"] = verdict_json(outcome.verdict);
            const std::string scn_text = serialize_scenario(*outcome.scenario);
            r.text << "witness scenario:\n" << scn_text;
            r.j["witness"] = ordered::parse(scn_text);
            if (!witness_path.empty()) {
                std::ofstream f(witness_path);
                if (!f) {
                    err << "cannot write witness file: " << witness_path << "\n";
                    return kExitUsage;
                }
                f << scn_text;
                r.text << "witness: written to " << witness_path << "\n";
                r.j["witness_path"] = witness_path;
            }
            break;
        }
        case SearchOutcome::Result::Inconclusive:
            code = kExitInconclusive;
            r.text << "result: inconclusive (" << outcome.note << ") after "
                   << outcome.scenarios_run << " scenarios\n";
            r.j["result"] = "inconclusive";
            r.j["note"] = outcome.note;
            break;
    }
    if (r.timing_ms) r.timing_ms = watch.ms();
    return r.emit(out, err) ? code : kExitUsage;
}

int do_gen(const std::string& kind, const GenParams& params, uint64_t seed,
           const std::string& out_path, Report& r, std::ostream& out, std::ostream& err) {
    Digraph g = generate(kind, params, seed);
    const std::string text = serialize_graph(g);
    if (out_path.empty()) {
        out << text;
        return kExitPass;
    }
    std::ofstream f(out_path);
    if (!f) {
        err << "cannot write graph file: " << out_path << "\n";
        return kExitUsage;
    }
    f << text;
    r.text << "generated: " << kind << " n=" << g.n() << " seed=" << seed << "\n";
    r.text << "written: " << out_path << " (fnv1a64 " << hex64(fnv1a64(text)) << ")\n";
    r.j["kind"] = kind;
    r.j["n"] = g.n();
    r.j["seed"] = seed;
    r.j["path"] = out_path;
    r.j["digest"] = hex64(fnv1a64(text));
    return r.emit(out, err) ? kExitPass : kExitUsage;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"certified propagation: condition checking, simulation and violation search"};
    app.name("cpa");
    app.require_subcommand(1);

    const std::string command_echo = echo_command(args);

    // check
    auto* check_cmd = app.add_subcommand("check", "decide the broadcast-feasibility condition");
    std::string check_graph;
    check_cmd->add_option("graph", check_graph, "graph file")->required();
    ModelFlags check_model;
    check_model.attach(check_cmd);
    bool check_oracle = false;
    check_cmd->add_flag("--oracle", check_oracle,
                        "cross-check against the exhaustive partition oracle");
    CommonFlags check_common;
    check_common.attach(check_cmd);

    // maxf
    auto* maxf_cmd = app.add_subcommand("maxf", "largest f for which the condition holds");
    std::string maxf_graph;
    maxf_cmd->add_option("graph", maxf_graph, "graph file")->required();
    CommonFlags maxf_common;
    maxf_common.attach(maxf_cmd);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run one scenario and judge the outcome");
    std::string sim_scenario;
    sim_cmd->add_option("scenario", sim_scenario, "scenario file")->required();
    std::string sim_trace;
    sim_cmd->add_option("--trace", sim_trace, "write the event trace to this file");
    CommonFlags sim_common;
    sim_common.attach(sim_cmd);

    // search
    auto* search_cmd =
        app.add_subcommand("search", "exhaustive violation search within a budget");
    std::string search_graph;
    search_cmd->add_option("graph", search_graph, "graph file")->required();
    ModelFlags search_model;
    search_model.attach(search_cmd);
    std::string search_protocol;
    search_cmd->add_option("--protocol", search_protocol, "cpa | cpa_p | cpa_g | radio_bb")
        ->required();
    SearchBudget budget;
    search_cmd->add_option("--budget", budget.max_scenarios, "scenario cap");
    search_cmd->add_option("--max-fault-size", budget.max_fault_set_size,
                           "largest fault set to try");
    search_cmd->add_option("--depth", budget.depth_bound, "scripted-strategy round depth");
    search_cmd->add_option("--family-cap", budget.family_cap,
                           "largest per-fault-set strategy family");
    std::string search_witness;
    search_cmd->add_option("--witness", search_witness,
                           "write the violating scenario to this file");
    CommonFlags search_common;
    search_common.attach(search_cmd);

    // gen
    auto* gen_cmd = app.add_subcommand("gen", "emit a named graph");
    std::string gen_kind;
    gen_cmd->add_option("kind", gen_kind, "complete | ring | star | grid_torus | random_digraph")
        ->required();
    GenParams params;
    gen_cmd->add_option("--n", params.n, "node count");
    gen_cmd->add_option("--rows", params.rows, "grid rows");
    gen_cmd->add_option("--cols", params.cols, "grid columns");
    gen_cmd->add_option("--p", params.p, "random edge probability");
    uint64_t gen_seed = 0;
    gen_cmd->add_option("--seed", gen_seed, "generator seed");
    std::string gen_out;
    gen_cmd->add_option("-o,--out", gen_out, "output graph file");
    CommonFlags gen_common;
    gen_common.attach(gen_cmd);

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitPass : kExitUsage;
    }

    auto make_report = [&](const CommonFlags& flags) {
        Report r;
        r.as_json = flags.json;
        r.report_path = flags.report_path;
        if (flags.timing) r.timing_ms = 0.0;
        r.text << "command: " << command_echo << "\n";
        r.j["command"] = command_echo;
        return r;
    };

    try {
        if (check_cmd->parsed()) {
            Report r = make_report(check_common);
            return do_check(check_graph, check_model, check_oracle, r, out, err);
        }
        if (maxf_cmd->parsed()) {
            Report r = make_report(maxf_common);
            return do_maxf(maxf_graph, r, out, err);
        }
        if (sim_cmd->parsed()) {
            Report r = make_report(sim_common);
            return do_simulate(sim_scenario, sim_trace, r, out, err);
        }
        if (search_cmd->parsed()) {
            Report r = make_report(search_common);
            return do_search(search_graph, search_model, search_protocol, budget, search_witness,
                             r, out, err);
        }
        if (gen_cmd->parsed()) {
            Report r = make_report(gen_common);
            return do_gen(gen_kind, params, gen_seed, gen_out, r, out, err);
        }
    } catch (const CLI::Error& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const ParseError& e) {
        err << e.what() << "\n";
        return kExitUsage;
    } catch (const IntegrityError& e) {
        err << "integrity: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << e.what() << "\n";
        return kExitUsage;
    }
    err << "no subcommand given\n";
    return kExitUsage;
}

}  // namespace cpa
