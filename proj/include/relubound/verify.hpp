#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/branch_bound.hpp"
#include "relubound/error.hpp"
#include "relubound/format.hpp"
#include "relubound/formulate.hpp"
#include "relubound/network.hpp"

namespace relubound {

/// Objectives above this count as a proven misclassification.
inline constexpr double kAdversarialThreshold = 1e-6;

struct TargetOutcome {
    std::size_t target = 0;
    MilpStatus status = MilpStatus::infeasible;
    std::optional<double> objective;
    std::optional<double> dual_bound;
    std::optional<double> rel_gap;
    std::vector<double> witness;  ///< input coordinates of the incumbent, empty if none
    std::optional<std::size_t> witness_class;
    double solve_time = 0.0;
    std::size_t nodes = 0;

    bool adversarial() const { return objective && *objective > kAdversarialThreshold; }
};

struct VerificationReport {
    std::string network_name;
    BoundMethod bound_method = BoundMethod::naive_norm;
    std::size_t reference_class = 0;
    std::vector<double> x0;
    double radius = 0.0;
    double bound_time = 0.0;
    double verify_time = 0.0;
    std::vector<TargetOutcome> targets;

    bool any_adversarial() const {
        return std::any_of(targets.begin(), targets.end(), [](const TargetOutcome& t) { return t.adversarial(); });
    }
    bool all_optimal() const {
        return std::all_of(targets.begin(), targets.end(), [](const TargetOutcome& t) { return t.status == MilpStatus::optimal; });
    }
};

/// Solves one verification MILP per target class (ascending), each under bnb.time_limit.
inline VerificationReport verify(const Network& net, const BoundsSet& bounds, const VerifyConfig& cfg,
                                 const BnbConfig& bnb, const FormulationOptions& fopt = {}) {
    net.validate();
    cfg.validate(net);
    bounds.check_covers(net, net.depth() - 1);
    if (!bounds.network_name.empty() && bounds.network_name != net.name)
        throw InputError("verify: bounds were computed for network '" + bounds.network_name + "', not '" + net.name + "'");

    const auto start = std::chrono::steady_clock::now();
    VerificationReport report;
    report.network_name = net.name;
    report.bound_method = bounds.method;
    report.bound_time = bounds.total_time;
    report.reference_class = classify(net, cfg.x0);
    report.x0 = cfg.x0;
    report.radius = cfg.radius;

    std::vector<std::size_t> targets;
    if (cfg.target) {
        if (*cfg.target == report.reference_class)
            throw InputError("verify: target class equals the reference class " + std::to_string(report.reference_class));
        targets.push_back(*cfg.target);
    } else {
        for (std::size_t j = 0; j < net.output_dim(); ++j)
            if (j != report.reference_class) targets.push_back(j);
    }

    FormulationOptions opt = fopt;
    opt.relax = false;
    for (std::size_t j : targets) {
        const MilpModel model = build_verification(net, bounds, cfg, j, opt);
        const MilpResult r = solve_milp(model, net, bnb);
        TargetOutcome t;
        t.target = j;
        t.status = r.status;
        t.objective = r.incumbent;
        t.dual_bound = r.dual_bound;
        t.rel_gap = r.relative_gap();
        t.solve_time = r.wall_time;
        t.nodes = r.nodes;
        if (r.incumbent) {
            for (int v : model.input_vars) t.witness.push_back(r.solution[v]);
            t.witness_class = classify(net, t.witness);
        }
        report.targets.push_back(std::move(t));
        if (cfg.early_exit && report.targets.back().adversarial()) break;
    }
    report.verify_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

namespace detail {

inline std::string opt_str(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

} // namespace detail

/// Per-target CSV. `witness_files[i]`, when given, names the witness file of target i.
inline std::string report_csv(const VerificationReport& r, const std::vector<std::string>& witness_files = {}) {
    std::ostringstream out;
    out << "network,bound_method,target_class,status,objective,dual_bound,rel_gap,verify_time_s,bound_time_s,witness_file\n";
    for (std::size_t i = 0; i < r.targets.size(); ++i) {
        const TargetOutcome& t = r.targets[i];
        out << r.network_name << ',' << to_string(r.bound_method) << ',' << t.target << ',' << to_string(t.status) << ','
            << detail::opt_str(t.objective) << ',' << detail::opt_str(t.dual_bound) << ',' << detail::opt_str(t.rel_gap)
            << ',' << format_double(t.solve_time) << ',' << format_double(r.bound_time) << ','
            << (i < witness_files.size() ? witness_files[i] : std::string()) << '\n';
    }
    return out.str();
}

struct TradeoffRun {
    BoundsSet bounds;
    VerificationReport report;
};

/// Gap threshold used for the "near optimal" count.
inline constexpr double kNearOptimalGap = 0.01;

/// One detail row per (bound method, target) and one summary row per run: how many targets
/// reached optimality, how many closed the gap to 1%, and the total time including the
/// bound computation.
inline std::string tradeoff_report(const Network& net, const std::vector<TradeoffRun>& runs) {
    if (runs.empty()) throw InputError("tradeoff_report: no runs given");
    for (const TradeoffRun& run : runs) {
        if (run.report.network_name != net.name || (!run.bounds.network_name.empty() && run.bounds.network_name != net.name))
            throw InputError("tradeoff_report: runs refer to different networks");
        if (run.report.x0 != runs.front().report.x0 || run.report.radius != runs.front().report.radius)
            throw InputError("tradeoff_report: runs use different verification settings");
    }

    std::ostringstream out;
    out << "row,network,bound_method,target_class,status,objective,dual_bound,rel_gap,bound_time_s,verify_time_s,"
           "n_targets,n_optimal,n_gap_le_1pct,total_time_s\n";
    for (const TradeoffRun& run : runs) {
        const VerificationReport& r = run.report;
        for (const TargetOutcome& t : r.targets)
            out << "detail," << net.name << ',' << to_string(run.bounds.method) << ',' << t.target << ','
                << to_string(t.status) << ',' << detail::opt_str(t.objective) << ',' << detail::opt_str(t.dual_bound)
                << ',' << detail::opt_str(t.rel_gap) << ',' << format_double(run.bounds.total_time) << ','
                << format_double(t.solve_time) << ",,,,\n";
    }
    for (const TradeoffRun& run : runs) {
        const VerificationReport& r = run.report;
        std::size_t optimal = 0, near = 0;
        for (const TargetOutcome& t : r.targets) {
            optimal += t.status == MilpStatus::optimal;
            near += t.rel_gap && *t.rel_gap <= kNearOptimalGap;
        }
        out << "summary," << net.name << ',' << to_string(run.bounds.method) << ",,,,,,"
            << format_double(run.bounds.total_time) << ',' << format_double(r.verify_time) << ',' << r.targets.size()
            << ',' << optimal << ',' << near << ',' << format_double(run.bounds.total_time + r.verify_time) << '\n';
    }
    return out.str();
}

} // namespace relubound
