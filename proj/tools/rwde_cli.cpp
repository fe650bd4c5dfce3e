// rwde: command-line front end for the random-walk-in-Dirichlet-environment library.

#include "rwde/environment.hpp"
#include "rwde/graph.hpp"
#include "rwde/kappa.hpp"
#include "rwde/model.hpp"
#include "rwde/parallel.hpp"
#include "rwde/report.hpp"
#include "rwde/verify.hpp"
#include "rwde/walk.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

using rwde::json;

enum Exit { kOk = 0, kInvalid = 1, kVerifyFailed = 2, kUncertified = 3 };

struct Config {
    std::string alphas;
    std::uint64_t seed = 1;
    std::optional<std::size_t> steps;
    std::optional<std::size_t> replicas;
    std::optional<int> window;
    std::optional<int> max_diameter;
    std::string strategy = "branch-and-bound";
    std::string out;
    std::string format = "json";
    bool require_certified = false;
    unsigned threads = 0;
    std::string method = "both";
    std::string suite;
    std::string sites = "0";
    std::string pairs;
    std::uint64_t node_budget = rwde::SearchOptions{}.node_budget;
};

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw rwde::Error(rwde::ErrorCode::ParseError, "cannot open output file " + path);
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
    void emit(const json& j) { stream() << j.dump(2) << '\n'; }

private:
    std::ofstream file_;
};

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw rwde::Error(rwde::ErrorCode::ParseError, "bad integer '" + item + "'");
        }
    }
    return out;
}

std::vector<std::pair<int, int>> parse_pairs(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':', 1);
        if (colon == std::string::npos) throw rwde::Error(rwde::ErrorCode::ParseError, "pair must be x:y, got " + item);
        const auto xs = parse_int_list(item.substr(0, colon));
        const auto ys = parse_int_list(item.substr(colon + 1));
        if (xs.size() != 1 || ys.size() != 1 || xs[0] >= ys[0])
            throw rwde::Error(rwde::ErrorCode::ParseError, "pair must be x:y with x < y, got " + item);
        out.emplace_back(xs[0], ys[0]);
    }
    return out;
}

rwde::SearchStrategy parse_strategy(const std::string& s) {
    if (s == "branch-and-bound" || s == "bnb") return rwde::SearchStrategy::BranchAndBound;
    if (s == "exhaustive") return rwde::SearchStrategy::Exhaustive;
    throw rwde::Error(rwde::ErrorCode::ParseError, "unknown strategy " + s);
}

rwde::DirichletParams require_alphas(const Config& c) {
    if (c.alphas.empty()) throw rwde::Error(rwde::ErrorCode::ParseError, "--alphas is required");
    return rwde::parse_alphas(c.alphas);
}

rwde::Kappa0Result run_kappa0(const rwde::DirichletParams& p, const Config& c) {
    const int m0 = rwde::derive_params(p).m0;
    const int bound = rwde::diameter_bound(p);
    const int D = c.max_diameter.value_or(std::max(m0, std::min(bound, 40)));
    rwde::SearchOptions o;
    o.strategy = parse_strategy(c.strategy);
    o.node_budget = c.node_budget;
    return rwde::kappa0_search(p, D, o);
}

int cmd_analyze(const Config& c, Output& out) {
    const auto p = require_alphas(c);
    const auto k0 = run_kappa0(p, c);
    json j{{"command", "analyze"}};
    j.update(rwde::analyze_json(p, k0));
    out.emit(j);
    return c.require_certified && !k0.certified ? kUncertified : kOk;
}

int cmd_kappa0(const Config& c, Output& out) {
    const auto p = require_alphas(c);
    const auto k0 = run_kappa0(p, c);
    json j{{"command", "kappa0"}, {"alphas", rwde::format_alphas(p)}, {"strategy", c.strategy}};
    j.update(rwde::to_json(k0));
    j["exit_counts"] = rwde::to_json(k0.witness)["exit_counts"];
    out.emit(j);
    return c.require_certified && !k0.certified ? kUncertified : kOk;
}

int cmd_simulate(const Config& c, Output& out) {
    const auto p = require_alphas(c);
    const std::size_t steps = c.steps.value_or(1000);
    const rwde::RngStream root(c.seed, 0);
    rwde::Trajectory t;
    if (c.window) {
        const int W = *c.window;
        if (W <= p.L() + p.R()) throw rwde::Error(rwde::ErrorCode::WTooSmall, "--window must exceed L + R");
        const auto env = rwde::sample_environment(rwde::build_window(p, -W, W), root.split(0));
        rwde::QuenchedOptions o;
        o.band = std::make_pair(p.L(), p.R());
        t = rwde::simulate_quenched(env, 0, steps, root.split(1), o);
    } else {
        const rwde::LazyEnvironment env(p, root.split(0));
        t = rwde::simulate_on_Z(env, 0, steps, root.split(1));
    }
    if (c.format == "csv") {
        rwde::write_csv(out.stream(), t);
        return kOk;
    }
    rwde::StatsQueries q;
    q.sites = parse_int_list(c.sites);
    q.pairs = parse_pairs(c.pairs);
    const auto s = rwde::trajectory_stats(t, q);
    json H = json::object(), Ht = json::object(), N = json::object(), Hge = json::object();
    auto time_or_null = [](std::int64_t v) { return v == rwde::kNotHit ? json(nullptr) : json(v); };
    for (const auto& [x, st] : s.sites) {
        H[std::to_string(x)] = time_or_null(st.H);
        Ht[std::to_string(x)] = time_or_null(st.H_tilde);
        Hge[std::to_string(x)] = time_or_null(st.H_at_least);
        N[std::to_string(x)] = st.N;
    }
    json trips = json::object(), cross = json::object();
    for (const auto& [xy, st] : s.pairs) {
        const std::string key = std::to_string(xy.first) + ":" + std::to_string(xy.second);
        trips[key] = st.trips;
        cross[key] = st.cross;
    }
    const auto regen = rwde::regeneration_times(t, rwde::default_tail_buffer(p));
    out.emit(json{{"command", "simulate"},
                  {"alphas", rwde::format_alphas(p)},
                  {"seed", c.seed},
                  {"steps", t.steps()},
                  {"stop_reason", std::string(rwde::to_string(t.stop_reason))},
                  {"final_position", t.positions.back()},
                  {"censored", s.censored},
                  {"stats",
                   {{"H", H}, {"Htilde", Ht}, {"H_at_least", Hge}, {"N", N}, {"N_trips", trips}, {"N_cross", cross},
                    {"regenerations", regen}}}});
    return kOk;
}

int cmd_speed(const Config& c, Output& out) {
    const auto p = require_alphas(c);
    const std::size_t steps = c.steps.value_or(100000);
    const std::size_t replicas = c.replicas.value_or(200);
    const unsigned threads = rwde::resolve_threads(c.threads);
    if (c.method != "endpoint" && c.method != "regeneration" && c.method != "both")
        throw rwde::Error(rwde::ErrorCode::ParseError, "--method must be endpoint, regeneration or both");
    json estimates = json::array();
    std::vector<rwde::VelocityEstimate> ests;
    if (c.method != "regeneration")
        ests.push_back(rwde::estimate_velocity(p, steps, replicas, rwde::VelocityMethod::Endpoint, c.seed, threads));
    if (c.method != "endpoint")
        ests.push_back(rwde::estimate_velocity(p, steps, replicas, rwde::VelocityMethod::Regeneration, c.seed, threads));
    for (const auto& e : ests) estimates.push_back(rwde::to_json(e));
    json j{{"command", "speed"}, {"alphas", rwde::format_alphas(p)}, {"seed", c.seed}};
    j.update(rwde::to_json(ests.front()));
    j["estimates"] = estimates;
    if (ests.size() == 2) {
        const double se = std::hypot(ests[0].std_error, ests[1].std_error);
        j["agreement_z"] = rwde::num(se > 0 ? (ests[0].v_hat - ests[1].v_hat) / se : 0.0);
    }
    out.emit(j);
    return kOk;
}

int cmd_verify(const Config& c, Output& out) {
    namespace v = rwde::verify;
    const unsigned threads = rwde::resolve_threads(c.threads);
    v::SuiteResult r;
    if (c.suite == "beta-law") {
        v::BetaLawConfig b;
        b.replicas = c.replicas.value_or(2000);
        b.window = c.window.value_or(512);
        b.seed = c.seed;
        b.threads = threads;
        r = v::beta_law(c.alphas.empty() ? rwde::parse_alphas("-1:1,1:2") : require_alphas(c), b);
    } else if (c.suite == "derrw") {
        r = v::derrw(c.replicas.value_or(1'000'000), c.seed);
    } else if (c.suite == "loop-reversal") {
        const auto p = c.alphas.empty() ? rwde::parse_alphas("-1:1,1:2") : require_alphas(c);
        r = v::loop_reversal(p, c.window.value_or(6), c.replicas.value_or(1'000'000), c.seed);
    } else if (c.suite == "reversal") {
        const auto p = c.alphas.empty() ? rwde::parse_alphas("-1:1,1:2") : require_alphas(c);
        v::ReversalConfig rc;
        rc.M = c.window.value_or(6);
        rc.draws = c.replicas.value_or(10000);
        rc.seed = c.seed;
        r = v::reversal(p, rc);
    } else if (c.suite == "harmonic") {
        r = v::harmonic(c.replicas.value_or(1000), c.seed);
    } else if (c.suite == "tournier") {
        r = v::tournier(c.replicas.value_or(100000), c.seed, threads);
    } else {
        throw rwde::Error(rwde::ErrorCode::ParseError, "unknown suite '" + c.suite + "'");
    }
    json j{{"command", "verify"}, {"seed", c.seed}};
    j.update(v::to_json(r));
    out.emit(j);
    return r.passed ? kOk : kVerifyFailed;
}

void add_common(CLI::App* sub, Config& c) {
    sub->add_option("--alphas", c.alphas, "Dirichlet weights as offset:weight,...");
    sub->add_option("--seed", c.seed, "Master seed");
    sub->add_option("--steps", c.steps, "Walk length");
    sub->add_option("--replicas", c.replicas, "Replicas, environments or runs");
    sub->add_option("--window", c.window, "Window size (W for half-line graphs, M for closed graphs)");
    sub->add_option("--max-diameter", c.max_diameter, "Largest trap diameter searched");
    sub->add_option("--strategy", c.strategy, "kappa0 search: branch-and-bound or exhaustive");
    sub->add_option("--node-budget", c.node_budget, "kappa0 search node budget");
    sub->add_option("--out", c.out, "Write output to this file");
    sub->add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--require-certified", c.require_certified, "Exit 3 when kappa0 is not certified");
    sub->add_option("--threads", c.threads, "Worker threads (0 = RWDE_THREADS or hardware)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walks in Dirichlet environments on Z with bounded jumps"};
    app.require_subcommand(1);
    Config c;
    auto* analyze = app.add_subcommand("analyze", "Derived parameters, kappa0 and regime");
    auto* simulate = app.add_subcommand("simulate", "Simulate one quenched trajectory");
    auto* speed = app.add_subcommand("speed", "Estimate the limiting velocity");
    auto* kappa0 = app.add_subcommand("kappa0", "Search for the minimal trap exit weight");
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    for (auto* sub : {analyze, simulate, speed, kappa0, verify}) add_common(sub, c);
    simulate->add_option("--sites", c.sites, "Sites for hitting statistics, comma separated");
    simulate->add_option("--pairs", c.pairs, "Pairs x:y for trip counts, comma separated");
    speed->add_option("--method", c.method, "endpoint, regeneration or both");
    verify->add_option("suite", c.suite, "beta-law | derrw | reversal | loop-reversal | harmonic | tournier")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << json{{"error", {{"code", "ParseError"}, {"message", e.what()}}}}.dump(2) << '\n';
        return kInvalid;
    }

    try {
        Output out(c.out);
        if (analyze->parsed()) return cmd_analyze(c, out);
        if (simulate->parsed()) return cmd_simulate(c, out);
        if (speed->parsed()) return cmd_speed(c, out);
        if (kappa0->parsed()) return cmd_kappa0(c, out);
        return cmd_verify(c, out);
    } catch (const rwde::Error& e) {
        std::cout << rwde::error_json(e).dump(2) << '\n';
        return kInvalid;
    }
}
