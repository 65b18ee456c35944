// relubound command-line tool.
//
// Exit codes: 0 success, 1 solver or time-limit degradation (outputs are still written),
// 2 usage or input error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "relubound/relubound.hpp"

namespace fs = std::filesystem;
using namespace relubound;

namespace {

constexpr const char* kToolVersion = "relubound 0.3.0";

enum ExitCode { kOk = 0, kDegraded = 1, kUsage = 2 };

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

/// Records what a command read and wrote; saved next to the primary output.
class Manifest {
public:
    explicit Manifest(std::string command) : command_(std::move(command)), start_(std::chrono::steady_clock::now()) {}

    /// Reads an input file and remembers the digest of exactly those bytes.
    std::string read_input(const fs::path& path) {
        std::string bytes = read_text_file(path);
        inputs_.push_back({{"path", path.string()}, {"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}});
        return bytes;
    }

    void output(const fs::path& path) { outputs_.push_back(path.string()); }
    nlohmann::json& config() { return config_; }

    void save(const fs::path& primary) {
        const fs::path path = primary.string() + ".manifest.json";
        outputs_.push_back(path.string());
        nlohmann::json j;
        j["command"] = command_;
        j["config"] = config_;
        j["inputs"] = inputs_;
        j["outputs"] = outputs_;
        j["tool_version"] = kToolVersion;
        j["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        write_text_file(path, j.dump(1) + "\n");
    }

private:
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    nlohmann::json config_ = nlohmann::json::object();
    nlohmann::json inputs_ = nlohmann::json::array();
    std::vector<std::string> outputs_;
};

void write_output(Manifest& manifest, const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text_file(path, text);
    manifest.output(path);
}

std::vector<std::size_t> parse_arch(const std::string& text) {
    std::vector<std::size_t> arch;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, 'x')) {
        if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
            throw InputError("malformed architecture '" + text + "': expected widths such as 2x20x20x3");
        const unsigned long long w = std::stoull(part);
        if (w == 0) throw InputError("malformed architecture '" + text + "': widths must be positive");
        arch.push_back(static_cast<std::size_t>(w));
    }
    if (arch.size() < 2 || text.back() == 'x')
        throw InputError("malformed architecture '" + text + "': need an input width and at least one layer");
    return arch;
}

std::vector<BoundMethod> parse_method_list(const std::string& text) {
    std::vector<BoundMethod> out;
    std::stringstream in(text);
    std::string part;
    while (std::getline(in, part, ',')) out.push_back(parse_bound_method(part));
    if (out.empty()) throw InputError("empty method list");
    return out;
}

double env_or(const char* name, double fallback) {
    const char* v = std::getenv(name);
    if (!v || !*v) return fallback;
    char* end = nullptr;
    const double d = std::strtod(v, &end);
    if (end == v || *end != '\0' || !(d > 0.0)) throw InputError(std::string("invalid value for ") + name);
    return d;
}

struct Tolerances {
    ToleranceConfig lp;
    double int_tol = 1e-6;
};

Tolerances tolerances_from_env() {
    Tolerances t;
    t.lp.feas_tol = env_or("FEAS_TOL", t.lp.feas_tol);
    t.lp.opt_tol = env_or("OPT_TOL", t.lp.opt_tol);
    t.int_tol = env_or("INT_TOL", t.int_tol);
    return t;
}

struct X0File {
    std::vector<double> x0;
    std::optional<long long> label;
};

X0File parse_x0(const std::string& text) {
    X0File f;
    try {
        auto j = nlohmann::json::parse(text);
        f.x0 = j.at("x0").get<std::vector<double>>();
        if (j.contains("label") && !j["label"].is_null()) f.label = j["label"].get<long long>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("x0 file: ") + e.what());
    }
    return f;
}

bool degraded(const BoundsSet& b) {
    for (const LayerBounds& l : b.layers)
        for (std::size_t j = 0; j < l.width(); ++j)
            if (l.status(j) == BoundStatus::dual_bound || l.status(j) == BoundStatus::fallback) return true;
    return false;
}

// ---- gen ----------------------------------------------------------------------------

struct GenOptions {
    std::string arch;
    std::uint64_t seed = 0;
    double scale = 1.0;
    std::string name;
    fs::path out;
};

int cmd_gen(const GenOptions& o) {
    Manifest manifest("gen");
    const auto arch = parse_arch(o.arch);
    const Network net = generate_random(arch, o.seed, o.scale, o.name);
    manifest.config() = {{"arch", o.arch}, {"seed", o.seed}, {"scale", o.scale}, {"name", net.name}};
    write_output(manifest, o.out, dump_network(net));
    manifest.save(o.out);
    std::cout << "wrote " << o.out.string() << " (" << net.depth() << " layers, " << net.hidden_relu_count()
              << " hidden ReLUs)\n";
    return kOk;
}

// ---- prune --------------------------------------------------------------------------

struct PruneOptions {
    fs::path network;
    double epsilon = 0.0;
    bool keep_biases = false;
    fs::path out;
};

int cmd_prune(const PruneOptions& o) {
    Manifest manifest("prune");
    const Network net = parse_network(manifest.read_input(o.network));
    const Network pruned = prune(net, o.epsilon, !o.keep_biases);
    const std::size_t zeroed = count_nonzero_weights(net) - count_nonzero_weights(pruned);
    manifest.config() = {{"epsilon", o.epsilon}, {"prune_biases", !o.keep_biases}, {"zeroed_weights", zeroed}};
    write_output(manifest, o.out, dump_network(pruned));
    manifest.save(o.out);
    std::cout << "zeroed " << zeroed << " of " << count_nonzero_weights(net) << " nonzero weights\n";
    return kOk;
}

// ---- bounds -------------------------------------------------------------------------

struct BoundsOptions {
    fs::path network;
    std::string method = "weak";
    std::string layer_methods;
    double time_limit = 60.0;
    std::size_t workers = 1;
    double margin = FormulationOptions{}.bound_margin;
    bool no_fallback = false;
    bool omit_timing = false;
    fs::path out;
    std::string csv;
    std::string export_lp;
};

int cmd_bounds(const BoundsOptions& o) {
    Manifest manifest("bounds");
    const Network net = parse_network(manifest.read_input(o.network));
    const Tolerances tol = tolerances_from_env();
    BounderConfig cfg;
    cfg.method = parse_bound_method(o.method);
    if (!o.layer_methods.empty()) {
        cfg.layer_methods = parse_method_list(o.layer_methods);
        cfg.method = BoundMethod::hybrid;
    }
    cfg.time_limit = o.time_limit;
    cfg.workers = o.workers;
    cfg.lp = tol.lp;
    cfg.int_tol = tol.int_tol;
    cfg.fallback = !o.no_fallback;
    cfg.formulation.bound_margin = o.margin;
    if (!o.export_lp.empty()) cfg.export_dir = fs::path(o.export_lp);

    manifest.config() = {{"method", to_string(cfg.method)},   {"layer_methods", o.layer_methods},
                         {"time_limit", cfg.time_limit},       {"workers", cfg.workers},
                         {"feas_tol", cfg.lp.feas_tol},        {"opt_tol", cfg.lp.opt_tol},
                         {"int_tol", cfg.int_tol},             {"bound_margin", o.margin},
                         {"fallback", cfg.fallback},           {"omit_timing", o.omit_timing}};

    const BoundsSet bounds = run_bounder(net, cfg);
    const BoundsWriteOptions wopt{o.omit_timing};
    write_output(manifest, o.out, dump_bounds(bounds, wopt));
    if (!o.csv.empty()) write_output(manifest, o.csv, bounds_csv(bounds, wopt));
    if (cfg.export_dir)
        for (const auto& entry : fs::directory_iterator(*cfg.export_dir))
            if (entry.path().extension() == ".lp") manifest.output(entry.path());
    manifest.save(o.out);

    const LayerBounds& last = bounds.layers.back();
    std::cout << to_string(bounds.method) << " bounds in " << bounds.total_time << " s; output layer:";
    for (std::size_t j = 0; j < last.width(); ++j) std::cout << " [" << last.lb[j] << ", " << last.ub[j] << "]";
    std::cout << '\n';
    if (degraded(bounds)) {
        std::cerr << "warning: some bounds come from dual bounds or the norm fallback\n";
        return kDegraded;
    }
    return kOk;
}

// ---- verify -------------------------------------------------------------------------

struct VerifyOptions {
    fs::path network;
    fs::path bounds;
    fs::path x0;
    double radius = 0.0;
    std::string target = "all";
    double time_limit = 60.0;
    bool early_exit = false;
    fs::path out;
};

std::string witness_json(const TargetOutcome& t, std::size_t reference) {
    nlohmann::json j;
    j["x"] = t.witness;
    j["target_class"] = t.target;
    j["reference_class"] = reference;
    j["predicted_class"] = t.witness_class.value_or(reference);
    j["objective"] = t.objective.value_or(0.0);
    j["adversarial"] = t.adversarial();
    return j.dump(1) + "\n";
}

int cmd_verify(const VerifyOptions& o) {
    Manifest manifest("verify");
    const Network net = parse_network(manifest.read_input(o.network));
    const BoundsSet bounds = bounds_from_json([&] {
        try {
            return nlohmann::json::parse(manifest.read_input(o.bounds));
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(o.bounds.string() + ": " + e.what());
        }
    }());
    if (bounds.depth() != net.depth()) throw InputError("bounds file does not match the network's depth");
    bounds.validate(net);
    const X0File x0 = parse_x0(manifest.read_input(o.x0));
    const Tolerances tol = tolerances_from_env();

    VerifyConfig cfg;
    cfg.x0 = x0.x0;
    cfg.radius = o.radius;
    cfg.time_limit = o.time_limit;
    cfg.early_exit = o.early_exit;
    if (o.target != "all") {
        try {
            cfg.target = static_cast<std::size_t>(std::stoull(o.target));
        } catch (const std::exception&) {
            throw InputError("--target must be 'all' or a class index");
        }
    }
    BnbConfig bnb;
    bnb.time_limit = o.time_limit;
    bnb.lp = tol.lp;
    bnb.int_tol = tol.int_tol;
    manifest.config() = {{"radius", o.radius}, {"target", o.target}, {"time_limit", o.time_limit},
                         {"early_exit", o.early_exit}, {"feas_tol", tol.lp.feas_tol}, {"opt_tol", tol.lp.opt_tol},
                         {"int_tol", tol.int_tol}};

    const VerificationReport report = verify(net, bounds, cfg, bnb);
    if (x0.label && static_cast<std::size_t>(*x0.label) != report.reference_class)
        std::cerr << "note: x0 label " << *x0.label << " differs from the predicted class " << report.reference_class << '\n';

    std::vector<std::string> witness_files;
    for (const TargetOutcome& t : report.targets) {
        if (t.witness.empty()) {
            witness_files.emplace_back();
            continue;
        }
        fs::path wp = o.out;
        wp.replace_filename(o.out.stem().string() + "_witness_t" + std::to_string(t.target) + ".json");
        write_output(manifest, wp, witness_json(t, report.reference_class));
        witness_files.push_back(wp.filename().string());
    }
    write_output(manifest, o.out, report_csv(report, witness_files));
    manifest.save(o.out);

    std::cout << "reference class " << report.reference_class << '\n';
    for (const TargetOutcome& t : report.targets)
        std::cout << "  target " << t.target << ": " << to_string(t.status) << ", objective "
                  << (t.objective ? format_double(*t.objective) : std::string("-"))
                  << (t.adversarial() ? "  (adversarial)" : "") << '\n';
    return report.all_optimal() ? kOk : kDegraded;
}

// ---- compare ------------------------------------------------------------------------

struct CompareOptions {
    fs::path strong;
    fs::path other;
    fs::path out;
};

BoundsSet read_bounds(Manifest& manifest, const fs::path& path) {
    try {
        return bounds_from_json(nlohmann::json::parse(manifest.read_input(path)));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

int cmd_compare(const CompareOptions& o) {
    Manifest manifest("compare");
    const BoundsSet strong = read_bounds(manifest, o.strong);
    const BoundsSet other = read_bounds(manifest, o.other);
    const RoGapTable table = ro_gap(strong, other);
    manifest.config() = {{"strong_method", to_string(strong.method)}, {"other_method", to_string(other.method)}};
    write_output(manifest, o.out, ro_gap_csv(strong, other, table));
    manifest.save(o.out);
    for (std::size_t l = 0; l < table.layers.size(); ++l)
        std::cout << "layer " << l + 1 << ": mean RO gap lower " << table.layers[l].lower_mean << ", upper "
                  << table.layers[l].upper_mean << '\n';
    return kOk;
}

// ---- tradeoff -----------------------------------------------------------------------

struct TradeoffOptions {
    fs::path network;
    fs::path x0;
    double radius = 0.0;
    std::string methods = "naive,weak,strong";
    double bound_time_limit = 60.0;
    double verify_time_limit = 60.0;
    std::size_t workers = 1;
    fs::path out;
};

int cmd_tradeoff(const TradeoffOptions& o) {
    Manifest manifest("tradeoff");
    const Network net = parse_network(manifest.read_input(o.network));
    const X0File x0 = parse_x0(manifest.read_input(o.x0));
    const Tolerances tol = tolerances_from_env();
    VerifyConfig vcfg;
    vcfg.x0 = x0.x0;
    vcfg.radius = o.radius;
    vcfg.time_limit = o.verify_time_limit;
    BnbConfig bnb;
    bnb.time_limit = o.verify_time_limit;
    bnb.lp = tol.lp;
    bnb.int_tol = tol.int_tol;
    manifest.config() = {{"methods", o.methods}, {"radius", o.radius}, {"bound_time_limit", o.bound_time_limit},
                         {"verify_time_limit", o.verify_time_limit}, {"workers", o.workers}};

    std::vector<TradeoffRun> runs;
    bool any_degraded = false;
    for (BoundMethod m : parse_method_list(o.methods)) {
        if (m == BoundMethod::hybrid) throw InputError("tradeoff: hybrid is not a single method");
        BounderConfig cfg;
        cfg.method = m;
        cfg.time_limit = o.bound_time_limit;
        cfg.workers = o.workers;
        cfg.lp = tol.lp;
        cfg.int_tol = tol.int_tol;
        TradeoffRun run;
        run.bounds = run_bounder(net, cfg);
        run.report = verify(net, run.bounds, vcfg, bnb);
        any_degraded |= degraded(run.bounds) || !run.report.all_optimal();
        std::cout << to_string(m) << ": bounds " << run.bounds.total_time << " s, verification " << run.report.verify_time
                  << " s\n";
        runs.push_back(std::move(run));
    }
    write_output(manifest, o.out, tradeoff_report(net, runs));
    manifest.save(o.out);
    return any_degraded ? kDegraded : kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Activation bounds and verification MILPs for feed-forward ReLU networks"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    GenOptions gen;
    auto* g = app.add_subcommand("gen", "Write a random network");
    g->add_option("--arch", gen.arch, "Widths joined by 'x', input first (e.g. 2x20x20x3)")->required();
    g->add_option("--seed", gen.seed, "Generator seed")->required();
    g->add_option("--scale", gen.scale, "Weights and biases are uniform on [-scale, scale]");
    g->add_option("--name", gen.name, "Network name (default derived from arch and seed)");
    g->add_option("--out", gen.out, "Output network JSON")->required();

    PruneOptions pr;
    auto* p = app.add_subcommand("prune", "Zero weights below a magnitude threshold");
    p->add_option("--network", pr.network, "Input network JSON")->required();
    p->add_option("--epsilon", pr.epsilon, "Threshold; entries with |w| < epsilon become 0")->required();
    p->add_flag("--keep-biases", pr.keep_biases, "Only prune weights");
    p->add_option("--out", pr.out, "Output network JSON")->required();

    BoundsOptions bo;
    auto* b = app.add_subcommand("bounds", "Compute activation bounds");
    b->add_option("--network", bo.network, "Network JSON")->required();
    b->add_option("--method", bo.method, "naive | interval | weak | strong");
    b->add_option("--layer-methods", bo.layer_methods, "Comma-separated method per layer (hybrid run)");
    b->add_option("--time-limit", bo.time_limit, "Seconds per neuron and direction");
    b->add_option("--workers", bo.workers, "Concurrent solves within a layer")->check(CLI::PositiveNumber);
    b->add_option("--margin", bo.margin, "Widening of solved bounds before use as big-M constants");
    b->add_flag("--no-fallback", bo.no_fallback, "Fail instead of falling back to norm bounds");
    b->add_flag("--omit-timing", bo.omit_timing, "Write zero for timing fields (byte-reproducible output)");
    b->add_option("--out", bo.out, "Output bounds JSON")->required();
    b->add_option("--csv", bo.csv, "Optional per-neuron CSV");
    b->add_option("--export-lp", bo.export_lp, "Directory for one LP file per OBBT model");

    VerifyOptions vo;
    auto* v = app.add_subcommand("verify", "Search for adversarial inputs around x0");
    v->add_option("--network", vo.network, "Network JSON")->required();
    v->add_option("--bounds", vo.bounds, "Bounds JSON")->required();
    v->add_option("--x0", vo.x0, "Reference input JSON {\"x0\": [...]}")->required();
    v->add_option("--radius", vo.radius, "Infinity-norm perturbation radius")->required();
    v->add_option("--target", vo.target, "'all' or one class index");
    v->add_option("--time-limit", vo.time_limit, "Seconds per target class");
    v->add_flag("--early-exit", vo.early_exit, "Stop at the first adversarial class");
    v->add_option("--out", vo.out, "Report CSV")->required();

    CompareOptions co;
    auto* c = app.add_subcommand("compare", "Relative optimality gaps against strong bounds");
    c->add_option("--strong", co.strong, "Strong bounds JSON")->required();
    c->add_option("--other", co.other, "Bounds JSON to compare")->required();
    c->add_option("--out", co.out, "Gap CSV")->required();

    TradeoffOptions to;
    auto* t = app.add_subcommand("tradeoff", "Bound and verify with several methods, then tabulate");
    t->add_option("--network", to.network, "Network JSON")->required();
    t->add_option("--x0", to.x0, "Reference input JSON")->required();
    t->add_option("--radius", to.radius, "Infinity-norm perturbation radius")->required();
    t->add_option("--methods", to.methods, "Comma-separated bound methods");
    t->add_option("--bound-time-limit", to.bound_time_limit, "Seconds per bound solve");
    t->add_option("--verify-time-limit", to.verify_time_limit, "Seconds per verification MILP");
    t->add_option("--workers", to.workers, "Concurrent bound solves")->check(CLI::PositiveNumber);
    t->add_option("--out", to.out, "Tradeoff CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*g) return cmd_gen(gen);
        if (*p) return cmd_prune(pr);
        if (*b) return cmd_bounds(bo);
        if (*v) return cmd_verify(vo);
        if (*c) return cmd_compare(co);
        if (*t) return cmd_tradeoff(to);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kDegraded;
    }
    return kUsage;
}
