// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "relubound/relubound.hpp"
#include "support/helpers.hpp"

namespace fs = std::filesystem;
using namespace relubound;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail << "first failure: " << what << "; ";
        pass = pass && ok;
    }
};

BoundsSet bounds(const Network& net, BoundMethod m, double time_limit = 60.0, std::size_t workers = 1) {
    BounderConfig cfg;
    cfg.method = m;
    cfg.time_limit = time_limit;
    cfg.workers = workers;
    return run_bounder(net, cfg);
}

std::string where(std::size_t l, std::size_t j) { return "layer " + std::to_string(l) + " neuron " + std::to_string(j); }

Network seeded(std::uint64_t seed, std::size_t in_lo, std::size_t in_hi, std::size_t d_lo, std::size_t d_hi,
               std::size_t w_lo, std::size_t w_hi, std::size_t outputs, std::size_t max_relus = 0) {
    std::mt19937_64 gen(seed * 7919 + 17);
    while (true) {
        const auto arch = testsupport::random_arch(gen, in_lo, in_hi, d_lo, d_hi, w_lo, w_hi, outputs);
        std::size_t relus = 0;
        for (std::size_t k = 1; k + 1 < arch.size(); ++k) relus += arch[k];
        if (max_relus == 0 || relus <= max_relus) return generate_random(arch, seed, 1.0);
    }
}

// Networks shared by the soundness and first-layer criteria.
std::vector<Network> fixture_networks() {
    std::vector<Network> nets{testsupport::gap_net(), testsupport::identity_logit()};
    for (std::uint64_t s = 0; s < 4; ++s) nets.push_back(seeded(100 + s, 2, 5, 2, 3, 3, 6, 3));
    return nets;
}

Outcome criterion1() {
    Outcome o;
    const auto start = Clock::now();
    const Network net = testsupport::gap_net();
    const BoundsSet s = bounds(net, BoundMethod::strong);
    const BoundsSet w = bounds(net, BoundMethod::weak);
    const BoundsSet n = bounds(net, BoundMethod::naive_norm);
    const double gw = ro_gap(s, w).layers[1].upper[0];
    const double gn = ro_gap(s, n).layers[1].upper[0];
    const double t = seconds_since(start);
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-6; };
    o.require(near(s.layer(2).lb[0], 0.0) && near(s.layer(2).ub[0], 2.0), "strong output bounds");
    o.require(near(w.layer(2).lb[0], 0.0) && near(w.layer(2).ub[0], 3.0), "weak output bounds");
    o.require(near(n.layer(2).lb[0], -4.0) && near(n.layer(2).ub[0], 4.0), "naive output bounds");
    o.require(near(gw, 0.5) && near(gn, 1.0), "upper RO gaps");
    o.require(t < 1.0, "runtime");
    o.detail << "strong [" << s.layer(2).lb[0] << ", " << s.layer(2).ub[0] << "], weak [" << w.layer(2).lb[0] << ", "
             << w.layer(2).ub[0] << "], naive [" << n.layer(2).lb[0] << ", " << n.layer(2).ub[0] << "], RO gaps " << gw
             << " / " << gn << ", " << t << " s";
    return o;
}

Outcome criterion2() {
    Outcome o;
    const auto start = Clock::now();
    double worst = 0.0;
    std::size_t checked = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Network net = seeded(seed, 2, 6, 2, 4, 2, 4, 2, 12);
        const BoundsSet s = bounds(net, BoundMethod::strong);
        for (std::size_t l = 1; l <= net.depth(); ++l)
            for (std::size_t j = 0; j < net.width(l); ++j) {
                const double hi = brute_force_oracle(net, l, j, Sense::maximize);
                const double lo = brute_force_oracle(net, l, j, Sense::minimize);
                const double err = std::max(std::abs(s.layer(l).ub[j] - hi), std::abs(s.layer(l).lb[j] - lo));
                worst = std::max(worst, err);
                o.require(err <= 1e-5, net.name + " " + where(l, j));
                checked += 2;
            }
    }
    const double t = seconds_since(start);
    o.require(t < 300.0, "runtime");
    o.detail << checked << " bounds on 20 networks, max |strong - oracle| " << worst << ", " << t << " s";
    return o;
}

Outcome criterion3() {
    Outcome o;
    const auto start = Clock::now();
    std::size_t checked = 0;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        // Wide-and-shallow and narrow-and-deep shapes alternate to cover widths up to 20 and
        // depths up to 5 within a single-core budget.
        const Network net = seed % 2 == 0 ? seeded(200 + seed, 2, 6, 1, 2, 5, 20, 3)
                                          : seeded(200 + seed, 2, 6, 3, 5, 2, 6, 3);
        const BoundsSet s = bounds(net, BoundMethod::strong, 5.0);
        const BoundsSet w = bounds(net, BoundMethod::weak);
        const BoundsSet n = bounds(net, BoundMethod::naive_norm);
        for (std::size_t l = 1; l <= net.depth(); ++l)
            for (std::size_t j = 0; j < net.width(l); ++j) {
                const double v = std::max({s.layer(l).ub[j] - w.layer(l).ub[j], w.layer(l).ub[j] - n.layer(l).ub[j],
                                           w.layer(l).lb[j] - s.layer(l).lb[j], n.layer(l).lb[j] - w.layer(l).lb[j]});
                worst = std::max(worst, v);
                o.require(v <= 1e-6, net.name + " " + where(l, j));
                ++checked;
            }
    }
    o.detail << checked << " neurons on 20 networks, max ordering violation " << worst << ", " << seconds_since(start)
             << " s";
    return o;
}

Outcome criterion4() {
    Outcome o;
    std::size_t samples = 0;
    double worst = 0.0;
    for (const Network& net : fixture_networks()) {
        std::vector<BoundsSet> sets;
        for (BoundMethod m : {BoundMethod::naive_norm, BoundMethod::naive_interval, BoundMethod::weak, BoundMethod::strong})
            sets.push_back(bounds(net, m));
        for (const auto& x : testsupport::sample_inputs(net, 10000, 4242)) {
            const Activations a = forward(net, x);
            for (const BoundsSet& b : sets)
                for (std::size_t l = 1; l <= net.depth(); ++l)
                    for (std::size_t j = 0; j < net.width(l); ++j) {
                        const double v = a.pre[l - 1][j];
                        const double excess = std::max(b.layer(l).lb[j] - v, v - b.layer(l).ub[j]);
                        worst = std::max(worst, excess);
                        o.require(excess <= 1e-6, net.name + " " + to_string(b.method) + " " + where(l, j));
                    }
            ++samples;
        }
    }
    o.detail << samples << " sampled inputs over " << fixture_networks().size()
             << " networks and 4 methods, max excess " << worst;
    return o;
}

Outcome criterion5() {
    Outcome o;
    double worst = 0.0;
    for (const Network& net : fixture_networks()) {
        const BoundsSet s = bounds(net, BoundMethod::strong);
        const BoundsSet w = bounds(net, BoundMethod::weak);
        const BoundsSet iv = bounds(net, BoundMethod::naive_interval);
        for (std::size_t j = 0; j < net.width(1); ++j)
            for (const BoundsSet* b : {&s, &w}) {
                const double d = std::max(std::abs(b->layer(1).lb[j] - iv.layer(1).lb[j]),
                                          std::abs(b->layer(1).ub[j] - iv.layer(1).ub[j]));
                worst = std::max(worst, d);
                o.require(d <= 1e-6, net.name + " " + where(1, j));
            }
    }
    o.detail << "max layer-1 disagreement " << worst << " over " << fixture_networks().size() << " networks";
    return o;
}

Outcome criterion6() {
    Outcome o;
    struct Instance {
        Network net;
        VerifyConfig cfg;
    };
    std::vector<Instance> instances;
    {
        Instance id{testsupport::identity_logit(), {}};
        id.cfg.x0 = {0.6, 0.4};
        id.cfg.radius = 0.18;
        instances.push_back(id);
    }
    for (std::uint64_t s = 0; s < 5; ++s) {
        Instance in{generate_random({3, 6, 6, 3}, 300 + s, 1.0), {}};
        in.cfg.x0 = {0.5, 0.4, 0.6};
        in.cfg.radius = 0.2;
        instances.push_back(in);
    }
    double worst = 0.0;
    std::size_t positive = 0, problems = 0;
    for (const Instance& in : instances) {
        std::vector<VerificationReport> reports;
        for (BoundMethod m : {BoundMethod::naive_norm, BoundMethod::weak, BoundMethod::strong})
            reports.push_back(verify(in.net, bounds(in.net, m), in.cfg, BnbConfig{}));
        for (std::size_t t = 0; t < reports[0].targets.size(); ++t) {
            ++problems;
            for (const VerificationReport& r : reports) {
                const TargetOutcome& out = r.targets[t];
                o.require(out.status == MilpStatus::optimal, in.net.name + " not optimal");
                if (!out.objective) continue;
                const double d = std::abs(*out.objective - *reports[0].targets[t].objective);
                worst = std::max(worst, d);
                o.require(d <= 1e-5, in.net.name + " target " + std::to_string(out.target));
                if (*out.objective > 0.0) {
                    ++positive;
                    o.require(!out.witness.empty() && classify(in.net, out.witness) != r.reference_class,
                              in.net.name + " witness class");
                }
            }
        }
    }
    o.require(instances.front().net.name == "identity_logit", "fixture");
    o.detail << problems << " verification problems x 3 bound methods, max optimum spread " << worst << ", "
             << positive << " positive-objective runs with misclassifying witnesses";
    return o;
}

Outcome criterion7() {
    Outcome o;
    std::size_t dual = 0, fallback = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const Network net = seeded(400 + seed, 2, 4, 2, 3, 3, 4, 2, 12);
        const BoundsSet b = bounds(net, BoundMethod::strong, 1e-9);
        for (std::size_t l = 1; l <= net.depth(); ++l)
            for (std::size_t j = 0; j < net.width(l); ++j) {
                const double hi = brute_force_oracle(net, l, j, Sense::maximize);
                const double lo = brute_force_oracle(net, l, j, Sense::minimize);
                o.require(b.layer(l).ub[j] >= hi - 1e-6 && b.layer(l).lb[j] <= lo + 1e-6, "validity at " + where(l, j));
                for (BoundStatus s : {b.layer(l).lb_status[j], b.layer(l).ub_status[j]}) {
                    o.require(s == BoundStatus::dual_bound || s == BoundStatus::fallback, "status at " + where(l, j));
                    dual += s == BoundStatus::dual_bound;
                    fallback += s == BoundStatus::fallback;
                }
            }
    }
    o.detail << "time limit 1e-9 s: " << dual << " dual-bound and " << fallback
             << " fallback values, all enclosing the oracle range";
    return o;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(RELUBOUND_CLI) + " " + args + " >/dev/null 2>&1";
    const int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Outcome criterion8() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "relubound_acceptance_c8";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::vector<fs::path> nets{testsupport::fixture("gap_net.json"), testsupport::fixture("identity_logit.json")};
    save_network(generate_random({4, 10, 10, 3}, 500, 1.0), dir / "rand.json");
    nets.push_back(dir / "rand.json");
    std::size_t compared = 0;
    for (const fs::path& net : nets)
        for (const char* m : {"weak", "strong"}) {
            const std::string base = "bounds --network " + net.string() + " --method " + m + " --omit-timing --out ";
            const fs::path one = dir / "w1.json", eight = dir / "w8.json";
            const bool ran = run_cli(base + one.string() + " --workers 1") == 0 &&
                             run_cli(base + eight.string() + " --workers 8") == 0;
            o.require(ran, "bounds command failed on " + net.filename().string());
            if (!ran) continue;
            o.require(read_text_file(one) == read_text_file(eight), net.filename().string() + " " + m);
            ++compared;
        }
    fs::remove_all(dir);
    o.detail << compared << " file pairs (workers 1 vs 8) byte-identical";
    return o;
}

Outcome criterion9() {
    Outcome o;
    const Network net = generate_random({10, 20, 20, 20, 20, 20}, 2024, 1.0);
    const double limit = 3.0;
    const BoundsSet n = bounds(net, BoundMethod::naive_norm);
    const BoundsSet w = bounds(net, BoundMethod::weak);
    const BoundsSet s = bounds(net, BoundMethod::strong, limit);
    std::size_t limited = 0;
    for (const LayerBounds& l : s.layers)
        for (std::size_t j = 0; j < l.width(); ++j) limited += l.status(j) != BoundStatus::milp_optimal;
    const RoGapTable gaps = ro_gap(s, w);
    const double first = gaps.layers.front().upper_mean, last = gaps.layers.back().upper_mean;
    o.require(n.total_time < w.total_time, "naive faster than weak");
    o.require(w.total_time < s.total_time, "weak faster than strong");
    o.require(last >= first, "RO gap growth");
    o.detail << "wall time naive " << n.total_time << " s, weak " << w.total_time << " s, strong " << s.total_time
             << " s; mean upper RO gap by layer";
    for (const auto& l : gaps.layers) o.detail << ' ' << l.upper_mean;
    o.detail << "; " << limited << " strong neurons stopped at the " << limit << " s limit";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"GAP-NET golden bounds and RO gaps", criterion1},
        {"strong bounds match the brute-force oracle", criterion2},
        {"strong within weak within naive on every neuron", criterion3},
        {"sampled pre-activations inside every method's bounds", criterion4},
        {"first-layer agreement of strong, weak and interval", criterion5},
        {"verification optimum independent of bound method", criterion6},
        {"near-zero time limit yields valid degraded bounds", criterion7},
        {"identical bound files for 1 and 8 workers", criterion8},
        {"runtime and RO gap tradeoff on a 5x20 network", criterion9},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = Clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        failures += !o.pass;
        std::cout << "criterion " << i + 1 << ' ' << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << " ("
                  << o.detail.str() << "; " << seconds_since(start) << " s)" << std::endl;
    }
    std::cout << (failures ? "acceptance FAILED" : "acceptance PASSED") << " (" << criteria.size() - failures << '/'
              << criteria.size() << ')' << std::endl;
    return failures ? 1 : 0;
}
