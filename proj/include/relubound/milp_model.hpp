#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relubound/bounds.hpp"
#include "relubound/error.hpp"

namespace relubound {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { continuous, binary };
enum class RowSense { le, eq, ge };

struct Variable {
    std::string name;
    double lb = 0.0;
    double ub = kInf;
    VarKind kind = VarKind::continuous;
};

struct Term {
    int var;
    double coef;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    RowSense sense = RowSense::le;
    double rhs = 0.0;
};

/// Column indices of the variables that encode one neuron. -1 when absent.
struct NeuronVars {
    int a = -1;
    int h = -1;
    int hbar = -1;
    int z = -1;
};

/// Mixed-integer linear model: boxed variables, sparse rows, linear objective.
///
/// Besides the generic model, it records which columns carry the network's inputs and
/// per-neuron variables, so that solvers can map an input vector back to a full point.
struct MilpModel {
    std::string name;
    std::vector<Variable> variables;
    std::vector<Constraint> constraints;
    std::vector<Term> objective;
    Sense sense = Sense::maximize;
    std::map<std::string, int> var_index;

    std::vector<int> input_vars;
    std::vector<std::vector<NeuronVars>> neurons;  // neurons[l - 1][j]

    std::size_t num_vars() const noexcept { return variables.size(); }
    std::size_t num_rows() const noexcept { return constraints.size(); }

    int add_variable(std::string vname, double lb, double ub, VarKind kind = VarKind::continuous) {
        if (var_index.count(vname)) throw InputError("model: duplicate variable '" + vname + "'");
        if (std::isnan(lb) || std::isnan(ub) || lb > ub)
            throw InputError("model: invalid bounds for variable '" + vname + "'");
        if (kind == VarKind::binary && (lb < 0.0 || ub > 1.0))
            throw InputError("model: binary variable '" + vname + "' must lie in [0, 1]");
        const int idx = static_cast<int>(variables.size());
        var_index.emplace(vname, idx);
        variables.push_back({std::move(vname), lb, ub, kind});
        return idx;
    }

    int add_constraint(std::vector<Term> terms, RowSense rsense, double rhs, std::string cname = {}) {
        for (const Term& t : terms) {
            if (t.var < 0 || static_cast<std::size_t>(t.var) >= variables.size())
                throw InputError("model: constraint references undeclared variable");
            if (!std::isfinite(t.coef)) throw InputError("model: non-finite constraint coefficient");
        }
        if (!std::isfinite(rhs)) throw InputError("model: non-finite right-hand side");
        if (cname.empty()) cname = "r" + std::to_string(constraints.size());
        constraints.push_back({std::move(cname), std::move(terms), rsense, rhs});
        return static_cast<int>(constraints.size()) - 1;
    }

    int index(const std::string& vname) const {
        auto it = var_index.find(vname);
        if (it == var_index.end()) throw InputError("model: unknown variable '" + vname + "'");
        return it->second;
    }

    std::vector<int> binaries() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < variables.size(); ++i)
            if (variables[i].kind == VarKind::binary) out.push_back(static_cast<int>(i));
        return out;
    }

    NeuronVars& neuron(std::size_t l, std::size_t j) {
        if (neurons.size() < l) neurons.resize(l);
        if (neurons[l - 1].size() <= j) neurons[l - 1].resize(j + 1);
        return neurons[l - 1][j];
    }
    const NeuronVars& neuron(std::size_t l, std::size_t j) const { return neurons.at(l - 1).at(j); }

    double objective_value(std::span<const double> x) const {
        double v = 0.0;
        for (const Term& t : objective) v += t.coef * x[t.var];
        return v;
    }

    /// Largest violation of any row or variable bound at point x (0 when feasible).
    double max_violation(std::span<const double> x) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            worst = std::max(worst, variables[i].lb - x[i]);
            worst = std::max(worst, x[i] - variables[i].ub);
        }
        for (const Constraint& c : constraints) {
            double lhs = 0.0;
            for (const Term& t : c.terms) lhs += t.coef * x[t.var];
            switch (c.sense) {
            case RowSense::le: worst = std::max(worst, lhs - c.rhs); break;
            case RowSense::ge: worst = std::max(worst, c.rhs - lhs); break;
            case RowSense::eq: worst = std::max(worst, std::abs(lhs - c.rhs)); break;
            }
        }
        return worst;
    }
};

inline std::string input_var_name(std::size_t j) { return "x_" + std::to_string(j); }
inline std::string neuron_var_name(const char* prefix, std::size_t l, std::size_t j) {
    return std::string(prefix) + "_" + std::to_string(l) + "_" + std::to_string(j);
}

} // namespace relubound
