#include "doctest.h"

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "massflow/equation.hpp"

using namespace massflow;

namespace {

/// Random small system mixing linear rows, bilinear terms and one rigorous
/// enthalpy residual; x0 stays in a range where correlations are valid.
EquationSystem random_system(std::mt19937& rng, std::vector<double>& x0) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> upos(0.5, 3.0);
    EquationSystem sys;
    int nv = 3 + static_cast<int>(rng() % 6);
    x0.clear();
    for (int i = 0; i < nv; ++i) {
        sys.add_variable("v" + std::to_string(i), VarRole::TotalFlow);
        x0.push_back(upos(rng));
    }
    int tvar = sys.add_variable("t", VarRole::Temperature);
    x0.push_back(300.0 + 100.0 * upos(rng));
    int nr = 2 + static_cast<int>(rng() % 3);
    for (int r = 0; r < nr; ++r) {
        int row = sys.add_row("n", "r" + std::to_string(r));
        int nt = 1 + static_cast<int>(rng() % 3);
        for (int k = 0; k < nt; ++k)
            sys.row_add(row, static_cast<int>(rng() % static_cast<unsigned>(nv)), u(rng));
        sys.row_rhs(row, u(rng));
        if (rng() % 2) {
            int a = static_cast<int>(rng() % static_cast<unsigned>(nv));
            int b = static_cast<int>(rng() % static_cast<unsigned>(nv));
            sys.add_bilinear(row, a, b, u(rng), b);
        }
        if (rng() % 3 == 0) sys.add_bilinear(row, static_cast<int>(rng() % 2), tvar, u(rng), tvar);
    }
    GeneralResidual res;
    res.node = "n";
    res.tag = "energy";
    res.linear.push_back({0, u(rng)});
    EnthalpyEntry e;
    e.f_var = 1 % nv;
    e.t_var = tvar;
    e.sign = 1.0;
    e.correlation = EnthalpyCorrelation{u(rng), 2.0 + u(rng), 1e-3 * u(rng), 1e-7 * u(rng),
                                        1.0, 1e9};
    res.enthalpy.push_back(e);
    EnthalpyEntry ec = e;
    ec.t_var = -1;
    ec.t_value = 350.0;
    ec.sign = -1.0;
    res.enthalpy.push_back(ec);
    sys.add_general(std::move(res));
    return sys;
}

}  // namespace

TEST_CASE("analytic Jacobian matches finite differences on random systems") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x0;
        EquationSystem sys = random_system(rng, x0);
        Matrix jac = sys.jacobian(x0);
        std::vector<double> r0 = sys.residuals(x0);
        REQUIRE(jac.rows() == sys.num_rows());
        REQUIRE(jac.cols() == sys.num_vars());
        for (std::size_t j = 0; j < sys.num_vars(); ++j) {
            std::vector<double> xp = x0;
            double h = 1e-6 * std::max(1.0, std::abs(x0[j]));
            xp[j] += h;
            std::vector<double> rp = sys.residuals(xp);
            std::vector<double> xm = x0;
            xm[j] -= h;
            std::vector<double> rm = sys.residuals(xm);
            for (std::size_t i = 0; i < sys.num_rows(); ++i) {
                double fd = (rp[i] - rm[i]) / (2.0 * h);
                double an = jac(i, j);
                CHECK(std::abs(an - fd) <= 1e-6 * std::max(1.0, std::abs(an)));
            }
        }
    }
}

TEST_CASE("term counts report rows, bilinears and general residuals") {
    EquationSystem sys;
    int a = sys.add_variable("a", VarRole::TotalFlow);
    int b = sys.add_variable("b", VarRole::Fraction);
    int r0 = sys.add_row("nodeA", "x");
    sys.row_add(r0, a, 1.0);
    sys.add_bilinear(r0, a, b, 1.0, b);
    int r1 = sys.add_row("nodeB", "y");
    sys.row_add(r1, b, 1.0);
    sys.add_bilinear(r1, a, b, 2.0, b);
    sys.add_bilinear(r1, a, b, 3.0, b);
    TermCountReport tc = sys.term_counts();
    CHECK(tc.linear_rows == 2);
    CHECK(tc.bilinear_terms == 3);
    CHECK(tc.general_residuals == 0);
    CHECK(tc.bilinear_by_node.at("nodeA") == 1);
    CHECK(tc.bilinear_by_node.at("nodeB") == 2);
}

TEST_CASE("objective value includes bilinear-free linear terms and constant") {
    EquationSystem sys;
    int a = sys.add_variable("a", VarRole::TotalFlow);
    int b = sys.add_variable("b", VarRole::TotalFlow);
    sys.objective_add(a, 2.0);
    sys.objective_add(b, -1.0);
    sys.objective_constant(5.0);
    CHECK(sys.objective_value({3.0, 4.0}) == doctest::Approx(2 * 3 - 4 + 5));
}

TEST_CASE("initial point respects bounds and declared initials") {
    EquationSystem sys;
    sys.add_variable("free", VarRole::TotalFlow, 0.0, kInf, 0, 2.5);
    sys.add_variable("pinned", VarRole::Temperature, 400.0, 400.0, 0, 123.0);
    std::vector<double> x0 = sys.initial_point();
    CHECK(x0[0] == 2.5);
    CHECK(x0[1] == 400.0);
}
