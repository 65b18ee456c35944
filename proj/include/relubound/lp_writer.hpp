#pragma once

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "relubound/format.hpp"
#include "relubound/io.hpp"
#include "relubound/milp_model.hpp"

namespace relubound {

namespace detail {

inline void write_terms(std::ostringstream& out, const MilpModel& model, const std::vector<Term>& terms) {
    if (terms.empty()) {
        if (!model.variables.empty()) out << " 0 " << model.variables.front().name;
        return;
    }
    for (const Term& t : terms) {
        out << (t.coef < 0 ? " - " : " + ") << format_g17(std::abs(t.coef)) << ' ' << model.variables[t.var].name;
    }
}

} // namespace detail

/// CPLEX LP text rendering. Output depends only on the model, in declaration order.
inline std::string to_lp_string(const MilpModel& model) {
    std::ostringstream out;
    out << "\\ Problem: " << (model.name.empty() ? "model" : model.name) << '\n';
    out << (model.sense == Sense::maximize ? "Maximize" : "Minimize") << '\n';
    out << " obj:";
    detail::write_terms(out, model, model.objective);
    out << "\nSubject To\n";
    for (const Constraint& c : model.constraints) {
        out << ' ' << c.name << ':';
        detail::write_terms(out, model, c.terms);
        switch (c.sense) {
        case RowSense::le: out << " <= "; break;
        case RowSense::ge: out << " >= "; break;
        case RowSense::eq: out << " = "; break;
        }
        out << format_g17(c.rhs) << '\n';
    }
    out << "Bounds\n";
    for (const Variable& v : model.variables) {
        const bool lo = std::isfinite(v.lb);
        const bool hi = std::isfinite(v.ub);
        if (lo && hi && v.lb == v.ub) out << ' ' << v.name << " = " << format_g17(v.lb) << '\n';
        else if (lo && hi) out << ' ' << format_g17(v.lb) << " <= " << v.name << " <= " << format_g17(v.ub) << '\n';
        else if (lo) out << ' ' << v.name << " >= " << format_g17(v.lb) << '\n';
        else if (hi) out << " -inf <= " << v.name << " <= " << format_g17(v.ub) << '\n';
        else out << ' ' << v.name << " free\n";
    }
    bool any_binary = false;
    for (const Variable& v : model.variables) {
        if (v.kind != VarKind::binary) continue;
        if (!any_binary) out << "Binaries\n";
        any_binary = true;
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
    return out.str();
}

inline void export_lp(const MilpModel& model, const std::filesystem::path& path) {
    write_text_file(path, to_lp_string(model));
}

} // namespace relubound
