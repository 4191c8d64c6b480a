#include "mecnc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace mecnc::lp {

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (double v : x) worst = std::max(worst, -v);
    for (const auto& row : rows_) {
        double lhs = 0.0;
        for (const auto& t : row.terms) lhs += t.coef * x[t.var];
        const double d = lhs - row.rhs;
        switch (row.sense) {
        case Sense::le: worst = std::max(worst, d); break;
        case Sense::ge: worst = std::max(worst, -d); break;
        case Sense::eq: worst = std::max(worst, std::abs(d)); break;
        }
    }
    return worst;
}

double LinearProgram::objective(const std::vector<double>& x) const {
    double s = 0.0;
    for (std::size_t j = 0; j < cost_.size(); ++j) s += cost_[j] * x[j];
    return s;
}

const char* to_string(Status s) {
    switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
    case Status::numerical_failure: return "numerical_failure";
    }
    return "unknown";
}

namespace {

class Tableau {
public:
    Tableau(const LinearProgram& lp, const SolveOptions& opt) : opt_(opt) {
        const auto& rows = lp.constraints();
        m_ = rows.size();
        n_ = lp.num_variables();
        std::size_t slacks = 0;
        std::size_t artificials = 0;
        for (const auto& r : rows) {
            const Sense s = effective(r);
            if (s != Sense::eq) ++slacks;
            if (s != Sense::le) ++artificials;
        }
        first_artificial_ = n_ + slacks;
        cols_ = first_artificial_ + artificials;
        width_ = cols_ + 1;
        a_.assign((m_ + 1) * width_, 0.0);
        basis_.assign(m_, 0);

        std::size_t slack = n_;
        std::size_t art = first_artificial_;
        for (std::size_t i = 0; i < m_; ++i) {
            const auto& r = rows[i];
            const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
            for (const auto& t : r.terms) at(i, t.var) += sign * t.coef;
            at(i, cols_) = sign * r.rhs;
            const Sense s = effective(r);
            if (s == Sense::le) {
                at(i, slack) = 1.0;
                basis_[i] = slack++;
            } else {
                if (s == Sense::ge) at(i, slack++) = -1.0;
                at(i, art) = 1.0;
                basis_[i] = art++;
            }
        }
    }

    std::size_t iterations() const { return iterations_; }

    // Phase 1: minimize the sum of artificials. False when infeasible.
    Status phase_one() {
        auto obj = row(m_);
        std::fill(obj.begin(), obj.end(), 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < first_artificial_) continue;
            for (std::size_t j = 0; j < width_; ++j)
                if (j < first_artificial_ || j == cols_) obj[j] -= at(i, j);
        }
        const Status s = iterate(cols_);
        if (s != Status::optimal) return s;
        double scale = 1.0;
        for (std::size_t i = 0; i < m_; ++i) scale = std::max(scale, std::abs(at(i, cols_)));
        if (-at(m_, cols_) > opt_.feasibility_tolerance * scale) return Status::infeasible;
        drive_out_artificials();
        return Status::optimal;
    }

    Status phase_two(const std::vector<double>& cost) {
        auto obj = row(m_);
        std::fill(obj.begin(), obj.end(), 0.0);
        for (std::size_t j = 0; j < n_; ++j) obj[j] = cost[j];
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t b = basis_[i];
            if (b >= n_ || cost[b] == 0.0) continue;
            const double cb = cost[b];
            for (std::size_t j = 0; j < width_; ++j) obj[j] -= cb * at(i, j);
        }
        return iterate(first_artificial_);
    }

    const std::vector<std::size_t>& basis() const { return basis_; }
    std::size_t num_columns() const { return cols_; }
    std::size_t first_artificial() const { return first_artificial_; }

private:
    static Sense effective(const Constraint& r) {
        if (r.rhs >= 0.0 || r.sense == Sense::eq) return r.sense;
        return r.sense == Sense::le ? Sense::ge : Sense::le;
    }

    double& at(std::size_t i, std::size_t j) { return a_[i * width_ + j]; }
    std::span<double> row(std::size_t i) { return {a_.data() + i * width_, width_}; }

    void pivot(std::size_t r, std::size_t c) {
        auto pr = row(r);
        const double inv = 1.0 / pr[c];
        for (double& v : pr) v *= inv;
        pr[c] = 1.0;
        for (std::size_t i = 0; i <= m_; ++i) {
            if (i == r) continue;
            auto ri = row(i);
            const double f = ri[c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < width_; ++j)
                if (pr[j] != 0.0) ri[j] -= f * pr[j];
            ri[c] = 0.0;
        }
        basis_[r] = c;
        ++iterations_;
    }

    // Bland's rule over columns [0, limit).
    Status iterate(std::size_t limit) {
        while (true) {
            if (iterations_ >= opt_.max_iterations) return Status::iteration_limit;
            std::size_t enter = limit;
            for (std::size_t j = 0; j < limit; ++j)
                if (at(m_, j) < -opt_.optimality_tolerance) {
                    enter = j;
                    break;
                }
            if (enter == limit) return Status::optimal;
            std::size_t leave = m_;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < m_; ++i) {
                const double v = at(i, enter);
                if (v <= opt_.pivot_tolerance) continue;
                const double ratio = at(i, cols_) / v;
                if (leave == m_) {
                    best = ratio;
                    leave = i;
                    continue;
                }
                const double tie = 1e-12 * std::max(1.0, std::abs(best));
                if (ratio < best - tie || (std::abs(ratio - best) <= tie && basis_[i] < basis_[leave])) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave == m_) return Status::unbounded;
            pivot(leave, enter);
        }
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < first_artificial_) continue;
            for (std::size_t j = 0; j < first_artificial_; ++j)
                if (std::abs(at(i, j)) > opt_.pivot_tolerance) {
                    pivot(i, j);
                    break;
                }
            // A row with no admissible pivot is redundant; its artificial
            // stays basic at zero and cannot re-enter.
        }
    }

    const SolveOptions& opt_;
    std::size_t m_ = 0;
    std::size_t n_ = 0;
    std::size_t cols_ = 0;
    std::size_t width_ = 0;
    std::size_t first_artificial_ = 0;
    std::size_t iterations_ = 0;
    std::vector<double> a_;
    std::vector<std::size_t> basis_;
};

// Recomputes the basic values from the original rows by Gaussian
// elimination with partial pivoting, shedding the error the tableau
// accumulated over many pivots.
bool refine(const LinearProgram& lp, const std::vector<std::size_t>& basis, std::size_t n,
            std::size_t first_artificial, std::vector<double>& x) {
    const auto& rows = lp.constraints();
    const std::size_t m = rows.size();
    // Column of every slack in the standard form, matching the tableau.
    std::vector<std::size_t> slack_row(first_artificial > n ? first_artificial - n : 0);
    std::vector<double> slack_sign(slack_row.size());
    {
        std::size_t s = 0;
        for (std::size_t i = 0; i < m; ++i) {
            const auto& r = rows[i];
            Sense eff = r.sense;
            if (r.rhs < 0.0 && r.sense != Sense::eq) eff = r.sense == Sense::le ? Sense::ge : Sense::le;
            if (eff == Sense::eq) continue;
            const double sign = r.rhs < 0.0 ? -1.0 : 1.0;
            slack_row[s] = i;
            slack_sign[s] = (eff == Sense::le ? 1.0 : -1.0) * sign;
            ++s;
        }
    }
    // Dense B (m x m) in original row orientation; artificials are unit
    // columns of their row.
    std::vector<double> B(m * m, 0.0);
    std::vector<double> rhs(m);
    for (std::size_t i = 0; i < m; ++i) rhs[i] = rows[i].rhs;
    std::vector<std::size_t> col_of_var(n, m);
    for (std::size_t k = 0; k < m; ++k)
        if (basis[k] < n) col_of_var[basis[k]] = k;
    for (std::size_t i = 0; i < m; ++i)
        for (const auto& t : rows[i].terms)
            if (col_of_var[t.var] < m) B[i * m + col_of_var[t.var]] += t.coef;
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t b = basis[k];
        if (b < n) continue;
        if (b < first_artificial) {
            const std::size_t s = b - n;
            B[slack_row[s] * m + k] = slack_sign[s];
        } else {
            // Artificial columns are unit columns of the (sign-normalized) row.
            std::size_t row_of = m;
            std::size_t idx = first_artificial;
            for (std::size_t i = 0; i < m; ++i) {
                const auto& r = rows[i];
                Sense eff = r.sense;
                if (r.rhs < 0.0 && r.sense != Sense::eq) eff = r.sense == Sense::le ? Sense::ge : Sense::le;
                if (eff == Sense::le) continue;
                if (idx == b) {
                    row_of = i;
                    break;
                }
                ++idx;
            }
            if (row_of == m) return false;
            B[row_of * m + k] = rows[row_of].rhs < 0.0 ? -1.0 : 1.0;
        }
    }
    // Solve B y = rhs.
    std::vector<std::size_t> perm(m);
    for (std::size_t i = 0; i < m; ++i) perm[i] = i;
    for (std::size_t c = 0; c < m; ++c) {
        std::size_t p = c;
        double big = 0.0;
        for (std::size_t i = c; i < m; ++i)
            if (std::abs(B[i * m + c]) > big) {
                big = std::abs(B[i * m + c]);
                p = i;
            }
        if (big < 1e-14) return false;
        if (p != c) {
            for (std::size_t j = 0; j < m; ++j) std::swap(B[c * m + j], B[p * m + j]);
            std::swap(rhs[c], rhs[p]);
        }
        for (std::size_t i = c + 1; i < m; ++i) {
            const double f = B[i * m + c] / B[c * m + c];
            if (f == 0.0) continue;
            for (std::size_t j = c; j < m; ++j) B[i * m + j] -= f * B[c * m + j];
            rhs[i] -= f * rhs[c];
        }
    }
    std::vector<double> y(m);
    for (std::size_t c = m; c-- > 0;) {
        double s = rhs[c];
        for (std::size_t j = c + 1; j < m; ++j) s -= B[c * m + j] * y[j];
        y[c] = s / B[c * m + c];
    }
    x.assign(n, 0.0);
    for (std::size_t k = 0; k < m; ++k)
        if (basis[k] < n) x[basis[k]] = y[k];
    return true;
}

} // namespace

Solution solve(const LinearProgram& program, const SolveOptions& options) {
    Solution sol;
    const std::size_t n = program.num_variables();
    if (program.num_constraints() == 0) {
        // Only sign bounds: optimal at 0 unless some cost is negative.
        for (double c : program.cost())
            if (c < 0.0) {
                sol.status = Status::unbounded;
                return sol;
            }
        sol.status = Status::optimal;
        sol.x.assign(n, 0.0);
        return sol;
    }
    Tableau t(program, options);
    Status s = t.phase_one();
    if (s == Status::optimal) s = t.phase_two(program.cost());
    sol.iterations = t.iterations();
    if (s != Status::optimal) {
        sol.status = s;
        return sol;
    }
    if (!refine(program, t.basis(), n, t.first_artificial(), sol.x)) {
        sol.status = Status::numerical_failure;
        return sol;
    }
    for (double& v : sol.x)
        if (v < 0.0 && v > -options.acceptance_tolerance) v = 0.0;
    sol.max_violation = program.max_violation(sol.x);
    sol.objective = program.objective(sol.x);
    sol.status = sol.max_violation <= options.acceptance_tolerance ? Status::optimal : Status::numerical_failure;
    return sol;
}

} // namespace mecnc::lp
