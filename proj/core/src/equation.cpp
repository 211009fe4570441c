#include "massflow/equation.hpp"

#include <stdexcept>

namespace massflow {

const char* to_string(VarRole role) {
    switch (role) {
        case VarRole::ComponentFlow: return "component-flow";
        case VarRole::TotalFlow: return "total-flow";
        case VarRole::Fraction: return "fraction";
        case VarRole::Temperature: return "temperature";
        case VarRole::Duty: return "duty";
        case VarRole::SplitRatio: return "split-ratio";
        case VarRole::Inventory: return "inventory";
    }
    return "?";
}

int EquationSystem::add_variable(const std::string& name, VarRole role, double lb, double ub,
                                 int period, double init) {
    if (var_index_.count(name)) {
        throw std::invalid_argument("duplicate variable '" + name + "'");
    }
    int idx = static_cast<int>(vars_.size());
    vars_.push_back({name, role, lb, ub, period, init});
    var_index_[name] = idx;
    return idx;
}

int EquationSystem::find_variable(const std::string& name) const {
    auto it = var_index_.find(name);
    return it == var_index_.end() ? -1 : it->second;
}

int EquationSystem::require_variable(const std::string& name) const {
    int i = find_variable(name);
    if (i < 0) throw std::out_of_range("no variable '" + name + "'");
    return i;
}

int EquationSystem::add_row(const std::string& node, const std::string& tag) {
    rows_.push_back({{}, 0.0, node, tag});
    return static_cast<int>(rows_.size() - 1);
}

void EquationSystem::row_add(int row, int var, double coef) {
    if (coef == 0.0) return;
    auto& terms = rows_[static_cast<std::size_t>(row)].terms;
    for (auto& t : terms) {
        if (t.var == var) {
            t.coef += coef;
            return;
        }
    }
    terms.push_back({var, coef});
}

void EquationSystem::row_rhs(int row, double rhs) {
    rows_[static_cast<std::size_t>(row)].rhs = rhs;
}

void EquationSystem::add_bilinear(int row, int a, int b, double coef, int frozen) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= vars_.size() ||
        static_cast<std::size_t>(b) >= vars_.size()) {
        throw std::invalid_argument("bilinear term references unknown variable");
    }
    if (frozen != a && frozen != b) {
        throw std::invalid_argument("frozen factor must be one of the two variables");
    }
    bilinear_.push_back({row, a, b, coef, frozen, rows_[static_cast<std::size_t>(row)].node});
}

int EquationSystem::add_general(GeneralResidual res) {
    general_.push_back(std::move(res));
    return static_cast<int>(general_.size() - 1);
}

void EquationSystem::objective_add(int var, double coef) {
    if (coef == 0.0) return;
    objective_[var] += coef;
}

std::vector<double> EquationSystem::residuals(const std::vector<double>& x) const {
    std::vector<double> r(num_rows(), 0.0);
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double s = -rows_[i].rhs;
        for (const auto& t : rows_[i].terms) s += t.coef * x[static_cast<std::size_t>(t.var)];
        r[i] = s;
    }
    for (const auto& b : bilinear_) {
        r[static_cast<std::size_t>(b.row)] +=
            b.coef * x[static_cast<std::size_t>(b.a)] * x[static_cast<std::size_t>(b.b)];
    }
    for (std::size_t g = 0; g < general_.size(); ++g) {
        const auto& res = general_[g];
        double s = -res.rhs;
        for (const auto& t : res.linear) s += t.coef * x[static_cast<std::size_t>(t.var)];
        for (const auto& e : res.enthalpy) {
            double t = e.t_var >= 0 ? x[static_cast<std::size_t>(e.t_var)] : e.t_value;
            s += e.sign * x[static_cast<std::size_t>(e.f_var)] * e.correlation.value(t);
        }
        r[rows_.size() + g] = s;
    }
    return r;
}

Matrix EquationSystem::jacobian(const std::vector<double>& x) const {
    Matrix j(num_rows(), num_vars());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        for (const auto& t : rows_[i].terms) j(i, static_cast<std::size_t>(t.var)) += t.coef;
    }
    for (const auto& b : bilinear_) {
        auto row = static_cast<std::size_t>(b.row);
        j(row, static_cast<std::size_t>(b.a)) += b.coef * x[static_cast<std::size_t>(b.b)];
        j(row, static_cast<std::size_t>(b.b)) += b.coef * x[static_cast<std::size_t>(b.a)];
    }
    for (std::size_t g = 0; g < general_.size(); ++g) {
        const auto& res = general_[g];
        std::size_t row = rows_.size() + g;
        for (const auto& t : res.linear) j(row, static_cast<std::size_t>(t.var)) += t.coef;
        for (const auto& e : res.enthalpy) {
            double t = e.t_var >= 0 ? x[static_cast<std::size_t>(e.t_var)] : e.t_value;
            j(row, static_cast<std::size_t>(e.f_var)) += e.sign * e.correlation.value(t);
            if (e.t_var >= 0) {
                j(row, static_cast<std::size_t>(e.t_var)) +=
                    e.sign * x[static_cast<std::size_t>(e.f_var)] * e.correlation.slope(t);
            }
        }
    }
    return j;
}

double EquationSystem::objective_value(const std::vector<double>& x) const {
    double v = objective_constant_;
    for (const auto& [var, coef] : objective_) v += coef * x[static_cast<std::size_t>(var)];
    return v;
}

std::vector<double> EquationSystem::initial_point() const {
    std::vector<double> x(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
        x[i] = vars_[i].fixed() ? vars_[i].lb : vars_[i].init;
    }
    return x;
}

TermCountReport EquationSystem::term_counts() const {
    TermCountReport rep;
    rep.linear_rows = static_cast<int>(rows_.size());
    rep.bilinear_terms = static_cast<int>(bilinear_.size());
    rep.general_residuals = static_cast<int>(general_.size());
    for (const auto& b : bilinear_) rep.bilinear_by_node[b.node] += 1;
    return rep;
}

}  // namespace massflow
