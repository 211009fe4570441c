#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace massflow {

/// Cubic specific-enthalpy correlation H(T) = c0 + c1*T + c2*T^2 + c3*T^3,
/// valid on [t_min, t_max].
struct EnthalpyCorrelation {
    double c0 = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double t_min = 0.0;
    double t_max = 1e9;

    /// Outside the fitted range the curve continues as its tangent line, so
    /// H stays monotone and iterative solves cannot latch onto a spurious
    /// polynomial root far from the data.
    double value(double t) const {
        double tc = t < t_min ? t_min : (t > t_max ? t_max : t);
        double v = c0 + tc * (c1 + tc * (c2 + tc * c3));
        return tc == t ? v : v + slope(tc) * (t - tc);
    }
    double slope(double t) const {
        double tc = t < t_min ? t_min : (t > t_max ? t_max : t);
        return c1 + tc * (2.0 * c2 + 3.0 * c3 * tc);
    }
};

/// Per-mass thermal state of one stream at its typical operating point.
/// T0 [K], H0 [kJ/kg], Cp [kJ/(kg K)], Hvap [kJ/kg].
struct StreamPropertyRecord {
    std::string stream;
    double t0 = 298.15;
    double h0 = 0.0;
    double cp = 1.0;
    double pressure = 0.0;  // annotation only, never enters a balance
    std::optional<double> hvap;
    std::optional<EnthalpyCorrelation> correlation;
};

/// Fixed-reference enthalpy: the constant H0, independent of temperature.
double enthalpy_fixed(const StreamPropertyRecord& rec);

/// Locally linearized enthalpy H0 + Cp*(T - T0). Throws on T <= 0.
double enthalpy_local(const StreamPropertyRecord& rec, double t);

/// Cubic correlation evaluated at T. Throws if the record has no correlation
/// or T lies outside its declared range.
double enthalpy_rigorous(const StreamPropertyRecord& rec, double t);

/// Slope dH_rig/dT at T, same preconditions as enthalpy_rigorous.
double rigorous_cp(const StreamPropertyRecord& rec, double t);

/// New record re-anchored at t_new: T0 = t_new, H0 = H_rig(t_new),
/// Cp = dH_rig/dT(t_new). The input record is not modified.
StreamPropertyRecord refresh_reference(const StreamPropertyRecord& rec, double t_new);

/// Stream-keyed property table with declaration order preserved.
class PropertyTable {
  public:
    PropertyTable() = default;
    explicit PropertyTable(std::vector<StreamPropertyRecord> records);

    void upsert(const StreamPropertyRecord& rec);
    const StreamPropertyRecord* find(const std::string& stream) const;
    const StreamPropertyRecord& at(const std::string& stream) const;
    bool contains(const std::string& stream) const { return find(stream) != nullptr; }
    const std::vector<StreamPropertyRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

  private:
    std::vector<StreamPropertyRecord> records_;
};

}  // namespace massflow
