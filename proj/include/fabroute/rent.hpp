// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fabroute/error.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

struct RentParams {
    double r = 0.75;
    double A = 3.0;
};

inline void check(const RentParams &p)
{
    if (!(p.r > 0.5 && p.r < 1.0))
        throw Error("Rent exponent must lie in (0.5, 1)");
    if (!(p.A > 0))
        throw Error("terminals per cell must be > 0");
}

struct PinDensityInput {
    double total_pins = 0;
    double die_area = 0; // um^2
    int pin_layers = 1;  // N
};

struct DemandEstimate {
    double E = 0; // pins/um^2 after dividing by N
    double G = 0; // cells/um^2
    double l = 0; // demand, proportionality constant 1
};

/// pins / (N * area). Written as (pins/area)/N so that N > 1 is exactly the
/// N = 1 density divided by N.
inline double effective_pin_density(const PinDensityInput &in)
{
    if (!(in.die_area > 0))
        throw Error("die area must be > 0");
    if (in.pin_layers < 1)
        throw Error("pin-access layer count must be >= 1");
    if (in.total_pins < 0)
        throw Error("pin count must be >= 0");
    return (in.total_pins / in.die_area) / in.pin_layers;
}

inline double cell_density(double E, const RentParams &p = {})
{
    if (E < 0)
        throw Error("pin density must be >= 0");
    if (E == p.A)
        return 1.0;
    return std::pow(E / p.A, 1.0 / p.r);
}

inline double routing_demand(double G, const RentParams &p = {})
{
    if (!(p.r > 0.5))
        throw Error("routing demand needs r > 0.5");
    if (G < 0)
        throw Error("cell density must be >= 0");
    if (G == 1.0)
        return 1.0;
    return std::pow(G, p.r - 0.5);
}

inline DemandEstimate estimate_demand(const PinDensityInput &in, const RentParams &p = {})
{
    DemandEstimate d;
    d.E = effective_pin_density(in);
    d.G = cell_density(d.E, p);
    d.l = routing_demand(d.G, p);
    return d;
}

struct LabeledDensity {
    std::string label;
    PinDensityInput input;
};

struct DemandRow {
    std::string label;
    DemandEstimate estimate;
    double l_normalized = 0;
};

inline std::vector<DemandRow> compare_demand(const std::vector<LabeledDensity> &designs, const RentParams &p,
                                             const std::string &baseline)
{
    check(p);
    std::vector<DemandRow> rows;
    const DemandEstimate *base = nullptr;
    for (const auto &d : designs)
        rows.push_back({d.label, estimate_demand(d.input, p), 0});
    for (const auto &r : rows)
        if (r.label == baseline) {
            base = &r.estimate;
            break;
        }
    if (!base)
        throw Error("baseline '" + baseline + "' not among the designs");
    if (!(base->l > 0))
        throw Error("baseline '" + baseline + "' has zero demand");
    for (auto &r : rows)
        r.l_normalized = r.estimate.l == base->l ? 1.0 : r.estimate.l / base->l;
    return rows;
}

inline std::string demand_csv(const std::vector<DemandRow> &rows)
{
    std::string out = "label,E_effective,G,l_normalized\n";
    for (const auto &r : rows)
        out += r.label + "," + text::format_double(r.estimate.E) + "," + text::format_double(r.estimate.G) + "," +
               text::format_double(r.l_normalized) + "\n";
    return out;
}

} // namespace fabroute
