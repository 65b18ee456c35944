#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relubound/error.hpp"
#include "relubound/milp_model.hpp"

namespace relubound {

struct ToleranceConfig {
    double feas_tol = 1e-7;
    double opt_tol = 1e-7;
    std::size_t iteration_limit = 50000;
    /// Consecutive degenerate pivots before switching to Bland's rule.
    std::size_t bland_after = 100;
    std::size_t refactor_every = 100;
    double pivot_tol = 1e-9;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* to_string(LpStatus s) {
    switch (s) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "?";
}

struct SolveResult {
    LpStatus status = LpStatus::infeasible;
    double objective = 0.0;
    std::vector<double> x;      ///< structural columns only
    std::vector<int> basis;     ///< basic column per row, in the solver's internal numbering
    std::size_t iterations = 0;
    double wall_time = 0.0;
};

/// LP relaxation of a MilpModel (integrality dropped) stored column-wise.
struct LpProblem {
    std::size_t num_cols = 0;
    std::size_t num_rows = 0;
    std::vector<std::size_t> col_start;  ///< size num_cols + 1
    std::vector<int> row_index;
    std::vector<double> value;
    std::vector<double> col_lb;
    std::vector<double> col_ub;
    std::vector<double> cost;
    std::vector<RowSense> row_sense;
    std::vector<double> rhs;
    bool maximize = true;

    static LpProblem from_model(const MilpModel& model) {
        LpProblem p;
        p.num_cols = model.num_vars();
        p.num_rows = model.num_rows();
        p.maximize = model.sense == Sense::maximize;
        p.col_lb.resize(p.num_cols);
        p.col_ub.resize(p.num_cols);
        p.cost.assign(p.num_cols, 0.0);
        for (std::size_t j = 0; j < p.num_cols; ++j) {
            p.col_lb[j] = model.variables[j].lb;
            p.col_ub[j] = model.variables[j].ub;
        }
        for (const Term& t : model.objective) p.cost[t.var] += t.coef;

        std::vector<std::size_t> count(p.num_cols, 0);
        for (const Constraint& c : model.constraints)
            for (const Term& t : c.terms) ++count[t.var];
        p.col_start.assign(p.num_cols + 1, 0);
        for (std::size_t j = 0; j < p.num_cols; ++j) p.col_start[j + 1] = p.col_start[j] + count[j];
        p.row_index.resize(p.col_start.back());
        p.value.resize(p.col_start.back());
        std::vector<std::size_t> fill(p.col_start.begin(), p.col_start.end() - 1);
        for (std::size_t i = 0; i < model.constraints.size(); ++i) {
            const Constraint& c = model.constraints[i];
            p.row_sense.push_back(c.sense);
            p.rhs.push_back(c.rhs);
            for (const Term& t : c.terms) {
                p.row_index[fill[t.var]] = static_cast<int>(i);
                p.value[fill[t.var]] = t.coef;
                ++fill[t.var];
            }
        }
        return p;
    }

    double objective_value(std::span<const double> x) const {
        double v = 0.0;
        for (std::size_t j = 0; j < num_cols; ++j) v += cost[j] * x[j];
        return v;
    }

    /// Largest row or bound violation at x.
    double max_violation(std::span<const double> x) const {
        double worst = 0.0;
        std::vector<double> lhs(num_rows, 0.0);
        for (std::size_t j = 0; j < num_cols; ++j) {
            worst = std::max({worst, col_lb[j] - x[j], x[j] - col_ub[j]});
            for (std::size_t k = col_start[j]; k < col_start[j + 1]; ++k) lhs[row_index[k]] += value[k] * x[j];
        }
        for (std::size_t i = 0; i < num_rows; ++i) {
            const double r = lhs[i] - rhs[i];
            if (row_sense[i] == RowSense::le) worst = std::max(worst, r);
            else if (row_sense[i] == RowSense::ge) worst = std::max(worst, -r);
            else worst = std::max(worst, std::abs(r));
        }
        return worst;
    }
};

namespace detail {

/// Bounded-variable primal simplex on  A x + s = b,  l <= (x, s) <= u,  minimize c x.
/// Row i's slack has bounds [0, inf) for <=, (-inf, 0] for >=, [0, 0] for =. Rows whose
/// slack cannot absorb the starting residual get an artificial column; phase one
/// minimizes the sum of artificials.
class BoundedSimplex {
public:
    BoundedSimplex(const LpProblem& p, const ToleranceConfig& tol) : p_(p), tol_(tol) {}

    SolveResult run() {
        const auto start = std::chrono::steady_clock::now();
        SolveResult res;
        setup();

        LpStatus st = LpStatus::optimal;
        if (num_artificial_ > 0) {
            set_phase_one_costs();
            st = iterate();
            if (st == LpStatus::optimal) {
                // Each artificial is one row's residual, so the tolerance applies per row.
                double infeas = 0.0;
                for (std::size_t k = 0; k < num_artificial_; ++k) infeas = std::max(infeas, std::abs(x_[first_art_ + k]));
                if (infeas > tol_.feas_tol * (1.0 + 1e-6)) st = LpStatus::infeasible;
            } else if (st == LpStatus::unbounded) {
                // Phase one is bounded below by zero; this only happens numerically.
                st = LpStatus::infeasible;
            }
            for (std::size_t k = 0; k < num_artificial_; ++k) {
                const std::size_t j = first_art_ + k;
                // Nonbasic artificials stay frozen at their (near-zero) values for the same
                // reason leaving variables are not snapped.
                if (state_[j] == State::basic) ub_[j] = 0.0;
                else lb_[j] = ub_[j] = x_[j];
            }
        }
        if (st == LpStatus::optimal) {
            set_phase_two_costs();
            st = iterate();
        }

        res.status = st;
        res.iterations = iterations_;
        res.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(p_.num_cols));
        res.objective = p_.objective_value(res.x);
        res.basis = head_;
        res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return res;
    }

private:
    enum class State : unsigned char { basic, at_lower, at_upper, free_zero };

    const LpProblem& p_;
    ToleranceConfig tol_;
    std::size_t m_ = 0;
    std::size_t n_total_ = 0;
    std::size_t first_slack_ = 0;
    std::size_t first_art_ = 0;
    std::size_t num_artificial_ = 0;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;
    std::vector<double> lb_, ub_, x_, c_;
    std::vector<State> state_;
    std::vector<int> head_;         // basic column per row
    std::vector<double> binv_;      // dense m x m, row-major
    std::size_t iterations_ = 0;
    std::size_t since_refactor_ = 0;

    // Column j as (row, value) pairs through a callback.
    template <class F>
    void for_column(std::size_t j, F&& f) const {
        if (j < p_.num_cols) {
            for (std::size_t k = p_.col_start[j]; k < p_.col_start[j + 1]; ++k) f(static_cast<std::size_t>(p_.row_index[k]), p_.value[k]);
        } else if (j < first_art_) {
            f(j - first_slack_, 1.0);
        } else {
            const std::size_t k = j - first_art_;
            f(static_cast<std::size_t>(art_row_[k]), art_sign_[k]);
        }
    }

    void setup() {
        m_ = p_.num_rows;
        first_slack_ = p_.num_cols;
        first_art_ = p_.num_cols + m_;
        lb_.assign(p_.col_lb.begin(), p_.col_lb.end());
        ub_.assign(p_.col_ub.begin(), p_.col_ub.end());
        for (std::size_t i = 0; i < m_; ++i) {
            switch (p_.row_sense[i]) {
            case RowSense::le: lb_.push_back(0.0); ub_.push_back(kInf); break;
            case RowSense::ge: lb_.push_back(-kInf); ub_.push_back(0.0); break;
            case RowSense::eq: lb_.push_back(0.0); ub_.push_back(0.0); break;
            }
        }
        x_.assign(first_art_, 0.0);
        state_.assign(first_art_, State::at_lower);
        for (std::size_t j = 0; j < p_.num_cols; ++j) {
            if (std::isfinite(lb_[j])) { x_[j] = lb_[j]; state_[j] = State::at_lower; }
            else if (std::isfinite(ub_[j])) { x_[j] = ub_[j]; state_[j] = State::at_upper; }
            else { x_[j] = 0.0; state_[j] = State::free_zero; }
        }
        std::vector<double> residual(p_.rhs.begin(), p_.rhs.end());
        for (std::size_t j = 0; j < p_.num_cols; ++j)
            if (x_[j] != 0.0) for_column(j, [&](std::size_t i, double v) { residual[i] -= v * x_[j]; });

        head_.assign(m_, -1);
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t s = first_slack_ + i;
            const double clamped = std::clamp(residual[i], lb_[s], ub_[s]);
            if (clamped == residual[i]) {
                x_[s] = residual[i];
                state_[s] = State::basic;
                head_[i] = static_cast<int>(s);
            } else {
                x_[s] = clamped;
                state_[s] = clamped == lb_[s] ? State::at_lower : State::at_upper;
                art_row_.push_back(static_cast<int>(i));
                art_sign_.push_back(residual[i] > clamped ? 1.0 : -1.0);
            }
        }
        num_artificial_ = art_row_.size();
        n_total_ = first_art_ + num_artificial_;
        for (std::size_t k = 0; k < num_artificial_; ++k) {
            const std::size_t j = first_art_ + k;
            const std::size_t i = static_cast<std::size_t>(art_row_[k]);
            lb_.push_back(0.0);
            ub_.push_back(kInf);
            x_.push_back(std::abs(residual[i] - x_[first_slack_ + i]));
            state_.push_back(State::basic);
            head_[i] = static_cast<int>(j);
        }
        c_.assign(n_total_, 0.0);
        refactor();
    }

    void set_phase_one_costs() {
        std::fill(c_.begin(), c_.end(), 0.0);
        for (std::size_t k = 0; k < num_artificial_; ++k) c_[first_art_ + k] = 1.0;
    }

    void set_phase_two_costs() {
        std::fill(c_.begin(), c_.end(), 0.0);
        const double sign = p_.maximize ? -1.0 : 1.0;
        for (std::size_t j = 0; j < p_.num_cols; ++j) c_[j] = sign * p_.cost[j];
    }

    /// Rebuilds the basis inverse by Gauss-Jordan elimination and recomputes basic values.
    void refactor() {
        std::vector<double> b(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i)
            for_column(static_cast<std::size_t>(head_[i]), [&](std::size_t r, double v) { b[r * m_ + i] = v; });
        binv_.assign(m_ * m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
        for (std::size_t col = 0; col < m_; ++col) {
            std::size_t piv = col;
            double best = std::abs(b[col * m_ + col]);
            for (std::size_t r = col + 1; r < m_; ++r)
                if (std::abs(b[r * m_ + col]) > best) { best = std::abs(b[r * m_ + col]); piv = r; }
            if (best < 1e-13) throw SolverError("simplex: singular basis during refactorization");
            if (piv != col) {
                for (std::size_t k = 0; k < m_; ++k) {
                    std::swap(b[piv * m_ + k], b[col * m_ + k]);
                    std::swap(binv_[piv * m_ + k], binv_[col * m_ + k]);
                }
            }
            const double inv = 1.0 / b[col * m_ + col];
            for (std::size_t k = 0; k < m_; ++k) { b[col * m_ + k] *= inv; binv_[col * m_ + k] *= inv; }
            for (std::size_t r = 0; r < m_; ++r) {
                if (r == col) continue;
                const double f = b[r * m_ + col];
                if (f == 0.0) continue;
                for (std::size_t k = 0; k < m_; ++k) {
                    b[r * m_ + k] -= f * b[col * m_ + k];
                    binv_[r * m_ + k] -= f * binv_[col * m_ + k];
                }
            }
        }
        recompute_basic_values();
        since_refactor_ = 0;
    }

    void recompute_basic_values() {
        std::vector<double> residual(p_.rhs.begin(), p_.rhs.end());
        for (std::size_t j = 0; j < n_total_; ++j) {
            if (state_[j] == State::basic || x_[j] == 0.0) continue;
            for_column(j, [&](std::size_t i, double v) { residual[i] -= v * x_[j]; });
        }
        for (std::size_t i = 0; i < m_; ++i) {
            double s = 0.0;
            const double* row = &binv_[i * m_];
            for (std::size_t k = 0; k < m_; ++k) s += row[k] * residual[k];
            x_[static_cast<std::size_t>(head_[i])] = s;
        }
    }

    LpStatus iterate() {
        std::vector<double> y(m_), alpha(m_);
        std::size_t degenerate_streak = 0;
        bool bland = false;
        while (true) {
            if (iterations_ >= tol_.iteration_limit) return LpStatus::iteration_limit;

            // Duals y = c_B^T B^{-1}.
            std::fill(y.begin(), y.end(), 0.0);
            for (std::size_t i = 0; i < m_; ++i) {
                const double cb = c_[static_cast<std::size_t>(head_[i])];
                if (cb == 0.0) continue;
                const double* row = &binv_[i * m_];
                for (std::size_t k = 0; k < m_; ++k) y[k] += cb * row[k];
            }

            // Pricing: Dantzig, lowest index on ties; Bland takes the first eligible column.
            std::size_t entering = n_total_;
            double best = 0.0;
            double entering_d = 0.0;
            for (std::size_t j = 0; j < n_total_; ++j) {
                const State s = state_[j];
                if (s == State::basic || lb_[j] == ub_[j]) continue;
                double d = c_[j];
                for_column(j, [&](std::size_t i, double v) { d -= y[i] * v; });
                bool eligible = false;
                if (s == State::at_lower) eligible = d < -tol_.opt_tol;
                else if (s == State::at_upper) eligible = d > tol_.opt_tol;
                else eligible = std::abs(d) > tol_.opt_tol;
                if (!eligible) continue;
                if (bland) { entering = j; entering_d = d; break; }
                if (std::abs(d) > best) { best = std::abs(d); entering = j; entering_d = d; }
            }
            if (entering == n_total_) {
                if (since_refactor_ == 0) return LpStatus::optimal;
                refactor();  // confirm optimality on fresh basic values
                continue;
            }

            const double dir = entering_d < 0.0 ? 1.0 : -1.0;
            std::fill(alpha.begin(), alpha.end(), 0.0);
            for_column(entering, [&](std::size_t k, double v) {
                for (std::size_t i = 0; i < m_; ++i) alpha[i] += binv_[i * m_ + k] * v;
            });

            // Ratio test. x_B moves by -dir * alpha * t.
            const double flip = (std::isfinite(lb_[entering]) && std::isfinite(ub_[entering]))
                                    ? ub_[entering] - lb_[entering] : kInf;
            std::size_t leave_row = m_;
            double step = kInf;
            if (bland) {
                for (std::size_t i = 0; i < m_; ++i) {
                    const double g = -dir * alpha[i];
                    if (std::abs(g) <= tol_.pivot_tol) continue;
                    const std::size_t bj = static_cast<std::size_t>(head_[i]);
                    const double room = g < 0.0 ? x_[bj] - lb_[bj] : ub_[bj] - x_[bj];
                    if (!std::isfinite(room)) continue;
                    const double t = std::max(0.0, room) / std::abs(g);
                    if (t < step - 1e-12) {
                        step = t;
                        leave_row = i;
                    } else if (t <= step + 1e-12 && head_[i] < head_[leave_row]) {
                        step = std::min(step, t);
                        leave_row = i;
                    }
                }
            } else {
                double relaxed = kInf;
                for (std::size_t i = 0; i < m_; ++i) {
                    const double g = -dir * alpha[i];
                    if (std::abs(g) <= tol_.pivot_tol) continue;
                    const std::size_t bj = static_cast<std::size_t>(head_[i]);
                    const double room = g < 0.0 ? x_[bj] - lb_[bj] : ub_[bj] - x_[bj];
                    if (!std::isfinite(room)) continue;
                    // Basic values may end up at most feas_tol outside their box. A value already
                    // beyond that (round-off) pins the threshold at zero rather than below it.
                    relaxed = std::min(relaxed, std::max(0.0, room + tol_.feas_tol) / std::abs(g));
                }
                double best_g = 0.0;
                for (std::size_t i = 0; i < m_; ++i) {
                    const double g = -dir * alpha[i];
                    if (std::abs(g) <= tol_.pivot_tol) continue;
                    const std::size_t bj = static_cast<std::size_t>(head_[i]);
                    const double room = g < 0.0 ? x_[bj] - lb_[bj] : ub_[bj] - x_[bj];
                    if (!std::isfinite(room)) continue;
                    const double t = std::max(0.0, room) / std::abs(g);
                    if (t <= relaxed && std::abs(g) > best_g) {
                        best_g = std::abs(g);
                        leave_row = i;
                        step = t;
                    }
                }
            }

            if (flip <= step) {
                step = flip;
                leave_row = m_;
            }
            if (!std::isfinite(step)) return LpStatus::unbounded;

            ++iterations_;
            if (step <= 1e-12) {
                if (++degenerate_streak >= tol_.bland_after) bland = true;
            } else {
                degenerate_streak = 0;
                bland = false;
            }

            x_[entering] += dir * step;
            for (std::size_t i = 0; i < m_; ++i)
                if (alpha[i] != 0.0) x_[static_cast<std::size_t>(head_[i])] -= dir * step * alpha[i];

            if (leave_row == m_) {
                // Bound flip: the entering column moves across its box without a basis change.
                if (dir > 0) { x_[entering] = ub_[entering]; state_[entering] = State::at_upper; }
                else { x_[entering] = lb_[entering]; state_[entering] = State::at_lower; }
                continue;
            }

            const std::size_t leaving = static_cast<std::size_t>(head_[leave_row]);
            const double g = -dir * alpha[leave_row];
            // The leaving value sits within feas_tol of the bound it reached. It keeps that value
            // as a nonbasic value: snapping it onto the bound would move the remaining basic
            // values by amounts amplified through the inverse.
            const double target = g < 0.0 ? lb_[leaving] : ub_[leaving];
            state_[leaving] = g < 0.0 ? State::at_lower : State::at_upper;
            if (lb_[leaving] == ub_[leaving]) state_[leaving] = State::at_lower;
            const bool snapped = std::abs(x_[leaving] - target) > tol_.feas_tol;
            if (snapped) x_[leaving] = target;
            state_[entering] = State::basic;
            head_[leave_row] = static_cast<int>(entering);

            // Product-form update of the explicit inverse.
            const double piv = alpha[leave_row];
            double* prow = &binv_[leave_row * m_];
            for (std::size_t k = 0; k < m_; ++k) prow[k] /= piv;
            for (std::size_t i = 0; i < m_; ++i) {
                if (i == leave_row || alpha[i] == 0.0) continue;
                const double f = alpha[i];
                double* row = &binv_[i * m_];
                for (std::size_t k = 0; k < m_; ++k) row[k] -= f * prow[k];
            }
            if (++since_refactor_ >= tol_.refactor_every) refactor();
            else if (snapped) recompute_basic_values();
        }
    }
};

} // namespace detail

/// Solves the LP. Deterministic for a fixed problem: pricing and ratio tests break ties
/// by index and nothing is randomized.
inline SolveResult solve_lp(const LpProblem& p, const ToleranceConfig& tol = {}) {
    for (std::size_t j = 0; j < p.num_cols; ++j)
        if (std::isnan(p.col_lb[j]) || std::isnan(p.col_ub[j]) || p.col_lb[j] > p.col_ub[j]) {
            SolveResult r;
            r.status = LpStatus::infeasible;
            return r;
        }
    detail::BoundedSimplex simplex(p, tol);
    return simplex.run();
}

/// Solve with the listed columns fixed to the given values.
inline SolveResult fix_and_resolve(const LpProblem& p, std::span<const std::pair<int, double>> fixings,
                                   const ToleranceConfig& tol = {}) {
    LpProblem q = p;
    for (auto [j, v] : fixings) {
        if (j < 0 || static_cast<std::size_t>(j) >= p.num_cols) throw InputError("fix_and_resolve: column out of range");
        if (!(v >= p.col_lb[j] && v <= p.col_ub[j]))
            throw InputError("fix_and_resolve: value outside the variable's box for column " + std::to_string(j));
        q.col_lb[j] = q.col_ub[j] = v;
    }
    return solve_lp(q, tol);
}

} // namespace relubound
