#include "massflow/properties.hpp"

#include <algorithm>

namespace massflow {

double enthalpy_fixed(const StreamPropertyRecord& rec) { return rec.h0; }

double enthalpy_local(const StreamPropertyRecord& rec, double t) {
    if (t <= 0.0) {
        throw std::invalid_argument("enthalpy_local: nonpositive temperature for stream '" +
                                    rec.stream + "'");
    }
    return rec.h0 + rec.cp * (t - rec.t0);
}

double enthalpy_rigorous(const StreamPropertyRecord& rec, double t) {
    if (!rec.correlation) {
        throw std::invalid_argument("enthalpy_rigorous: stream '" + rec.stream +
                                    "' has no correlation");
    }
    const auto& c = *rec.correlation;
    if (t < c.t_min || t > c.t_max) {
        throw std::out_of_range("enthalpy_rigorous: T=" + std::to_string(t) +
                                " outside valid range of stream '" + rec.stream + "'");
    }
    return c.value(t);
}

double rigorous_cp(const StreamPropertyRecord& rec, double t) {
    if (!rec.correlation) {
        throw std::invalid_argument("rigorous_cp: stream '" + rec.stream +
                                    "' has no correlation");
    }
    const auto& c = *rec.correlation;
    if (t < c.t_min || t > c.t_max) {
        throw std::out_of_range("rigorous_cp: T outside valid range of stream '" +
                                rec.stream + "'");
    }
    return c.slope(t);
}

StreamPropertyRecord refresh_reference(const StreamPropertyRecord& rec, double t_new) {
    StreamPropertyRecord out = rec;
    out.t0 = t_new;
    out.h0 = enthalpy_rigorous(rec, t_new);
    out.cp = rigorous_cp(rec, t_new);
    return out;
}

PropertyTable::PropertyTable(std::vector<StreamPropertyRecord> records)
    : records_(std::move(records)) {}

void PropertyTable::upsert(const StreamPropertyRecord& rec) {
    auto it = std::find_if(records_.begin(), records_.end(),
                           [&](const StreamPropertyRecord& r) { return r.stream == rec.stream; });
    if (it != records_.end()) {
        *it = rec;
    } else {
        records_.push_back(rec);
    }
}

const StreamPropertyRecord* PropertyTable::find(const std::string& stream) const {
    for (const auto& r : records_) {
        if (r.stream == stream) return &r;
    }
    return nullptr;
}

const StreamPropertyRecord& PropertyTable::at(const std::string& stream) const {
    const StreamPropertyRecord* r = find(stream);
    if (!r) throw std::out_of_range("no property record for stream '" + stream + "'");
    return *r;
}

}  // namespace massflow
