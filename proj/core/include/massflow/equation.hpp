#pragma once

#include <map>
#include <string>
#include <vector>

#include "massflow/linalg.hpp"
#include "massflow/properties.hpp"

namespace massflow {

inline constexpr double kInf = 1e30;  // bound sentinel treated as infinite

enum class VarRole {
    ComponentFlow,
    TotalFlow,
    Fraction,
    Temperature,
    Duty,
    SplitRatio,
    Inventory,
};

const char* to_string(VarRole role);

struct Variable {
    std::string name;
    VarRole role = VarRole::TotalFlow;
    double lb = -kInf;
    double ub = kInf;
    int period = 0;
    double init = 0.0;

    bool fixed() const { return lb == ub; }
};

struct LinearTerm {
    int var;
    double coef;
};

/// One equality row: sum(coef*x) + sum(attached bilinear products) = rhs.
struct LinearRow {
    std::vector<LinearTerm> terms;
    double rhs = 0.0;
    std::string node;
    std::string tag;
};

/// coef * x[a] * x[b], owned by rows[row]. `frozen` names the factor a
/// successive-LP pass holds at its incumbent value (ratios and temperatures
/// freeze; flows stay free).
struct BilinearTerm {
    int row;
    int a;
    int b;
    double coef;
    int frozen;
    std::string node;
};

/// One enthalpy carrier inside a general (non-bilinear) residual:
/// sign * x[f_var] * H(T) with H the cubic correlation, T either x[t_var]
/// or the constant t_value.
struct EnthalpyEntry {
    int f_var;
    int t_var;  // -1 when the temperature is a constant
    double t_value = 0.0;
    double sign = 1.0;
    EnthalpyCorrelation correlation;
};

/// Closed-form nonlinear residual beyond the bilinear inventory. Currently
/// only rigorous-enthalpy energy balances live here.
struct GeneralResidual {
    std::string node;
    std::string tag;
    std::vector<LinearTerm> linear;
    std::vector<EnthalpyEntry> enthalpy;
    double rhs = 0.0;
};

struct TermCountReport {
    int linear_rows = 0;
    int bilinear_terms = 0;
    int general_residuals = 0;
    std::map<std::string, int> bilinear_by_node;
};

/// Structured variables + linear rows + explicitly enumerated bilinear terms
/// + general residuals, with an objective vector. Rows are equalities;
/// inequalities live in variable bounds.
class EquationSystem {
  public:
    int add_variable(const std::string& name, VarRole role, double lb = -kInf, double ub = kInf,
                     int period = 0, double init = 0.0);
    int find_variable(const std::string& name) const;  // -1 when absent
    int require_variable(const std::string& name) const;

    int add_row(const std::string& node, const std::string& tag);
    void row_add(int row, int var, double coef);
    void row_rhs(int row, double rhs);
    void add_bilinear(int row, int a, int b, double coef, int frozen);

    int add_general(GeneralResidual res);
    /// Drop all bilinear/general terms (used after folding them into rows).
    void clear_nonlinear() {
        bilinear_.clear();
        general_.clear();
    }

    void objective_add(int var, double coef);
    void objective_constant(double c) { objective_constant_ += c; }

    const std::vector<Variable>& variables() const { return vars_; }
    Variable& variable(int i) { return vars_[static_cast<std::size_t>(i)]; }
    const Variable& variable(int i) const { return vars_[static_cast<std::size_t>(i)]; }
    const std::vector<LinearRow>& rows() const { return rows_; }
    const std::vector<BilinearTerm>& bilinear() const { return bilinear_; }
    const std::vector<GeneralResidual>& general() const { return general_; }
    const std::map<int, double>& objective() const { return objective_; }
    bool has_objective() const { return !objective_.empty(); }

    std::size_t num_vars() const { return vars_.size(); }
    std::size_t num_rows() const { return rows_.size() + general_.size(); }
    bool is_linear() const { return bilinear_.empty() && general_.empty(); }

    /// Residual of every row (linear rows first, then general) at x.
    std::vector<double> residuals(const std::vector<double>& x) const;
    /// Dense Jacobian of residuals over all variables at x.
    Matrix jacobian(const std::vector<double>& x) const;

    double objective_value(const std::vector<double>& x) const;
    std::vector<double> initial_point() const;

    TermCountReport term_counts() const;

  private:
    std::vector<Variable> vars_;
    std::map<std::string, int> var_index_;
    std::vector<LinearRow> rows_;
    std::vector<BilinearTerm> bilinear_;
    std::vector<GeneralResidual> general_;
    std::map<int, double> objective_;
    double objective_constant_ = 0.0;
};

}  // namespace massflow
