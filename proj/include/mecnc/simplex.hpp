#pragma once

// Dense two-phase primal simplex with Bland's rule. Meant for the small
// programs the oracle builds: a few thousand columns at most.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mecnc::lp {

enum class Sense { le, ge, eq };

struct Term {
    std::size_t var;
    double coef;
};

struct Constraint {
    std::vector<Term> terms;
    Sense sense = Sense::le;
    double rhs = 0.0;
};

// minimize cost^T x  subject to rows, x >= 0.
class LinearProgram {
public:
    std::size_t add_variable(double cost = 0.0) {
        cost_.push_back(cost);
        return cost_.size() - 1;
    }
    void set_cost(std::size_t var, double cost) { cost_[var] = cost; }
    void add_constraint(std::vector<Term> terms, Sense sense, double rhs) {
        rows_.push_back({std::move(terms), sense, rhs});
    }

    std::size_t num_variables() const { return cost_.size(); }
    std::size_t num_constraints() const { return rows_.size(); }
    const std::vector<double>& cost() const { return cost_; }
    const std::vector<Constraint>& constraints() const { return rows_; }

    // Largest violation of any row or sign bound by `x`.
    double max_violation(const std::vector<double>& x) const;
    double objective(const std::vector<double>& x) const;

private:
    std::vector<double> cost_;
    std::vector<Constraint> rows_;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit, numerical_failure };

const char* to_string(Status s);

struct Solution {
    Status status = Status::numerical_failure;
    std::vector<double> x;
    double objective = 0.0;
    std::size_t iterations = 0;
    double max_violation = 0.0;
};

struct SolveOptions {
    std::size_t max_iterations = 200000;
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
    double optimality_tolerance = 1e-11;
    double acceptance_tolerance = 1e-8; // residual above this is a numerical failure
};

Solution solve(const LinearProgram& program, const SolveOptions& options = {});

} // namespace mecnc::lp
