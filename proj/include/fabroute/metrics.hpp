// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fabroute/error.hpp"
#include "fabroute/fabric.hpp"
#include "fabroute/globalroute.hpp"
#include "fabroute/netlist.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

struct PowerParams {
    double clock_freq = 1.0;     // GHz
    double supply_voltage = 0.8; // V
    double switching_activity = 0.2;
};

inline void check(const PowerParams &p)
{
    if (!(p.clock_freq > 0))
        throw Error("clock frequency must be > 0");
    if (!(p.supply_voltage > 0))
        throw Error("supply voltage must be > 0");
    if (!(p.switching_activity > 0 && p.switching_activity <= 1))
        throw Error("switching activity must lie in (0, 1]");
}

inline PowerParams power_params_for(const FabricSpec &f, double freq = 1.0, double activity = 0.2)
{
    return {freq, f.vdd, activity};
}

// Units: lengths in um, caps in fF, energies in fJ, frequency in GHz.
// fF * GHz * V^2 = uW, fJ * GHz = uW; results are reported in mW.

inline double edge_length_um(const RoutingGraph &g, const FabricSpec &f, EdgeId e)
{
    return g.is_via(e) ? f.via_length_um : g.gcell_um();
}

inline double edge_cap_ff(const RoutingGraph &g, const FabricSpec &f, EdgeId e)
{
    // a via takes the cap of the layer it rises from
    return edge_length_um(g, f, e) * f.layer(g.tail(e).layer).cap_per_um;
}

/// mm
inline double total_wirelength(const std::vector<NetRoute> &routes, const RoutingGraph &g, const FabricSpec &f)
{
    double um = 0;
    for (const auto &r : routes)
        for (EdgeId e : r.edges)
            um += edge_length_um(g, f, e);
    return um * 1e-3;
}

inline double net_capacitance_ff(const NetRoute &r, const RoutingGraph &g, const FabricSpec &f)
{
    double c = 0;
    for (EdgeId e : r.edges)
        c += edge_cap_ff(g, f, e);
    return c;
}

/// mW
inline double wire_power(const std::vector<NetRoute> &routes, const RoutingGraph &g, const FabricSpec &f,
                         const PowerParams &p)
{
    double c = 0;
    for (const auto &r : routes)
        c += net_capacitance_ff(r, g, f);
    return p.switching_activity * p.clock_freq * p.supply_voltage * p.supply_voltage * c * 1e-3;
}

struct CellPowers {
    double pin_power = 0;      // mW
    double internal_power = 0; // mW
};

inline const CellEnergyEntry &energy_of(const EnergyTable &t, const std::string &master)
{
    const auto *e = t.find(master);
    if (!e)
        throw Error("no energy-table entry for master '" + master + "'");
    return *e;
}

/// Pin power charges every input pin that sits on a net; internal power counts
/// one toggle-energy per cell.
inline CellPowers cell_powers(const Netlist &nl, const EnergyTable &table, const PowerParams &p)
{
    for (const auto &m : nl.masters)
        energy_of(table, m.name);
    double cap = 0, energy = 0;
    for (const auto &net : nl.nets)
        for (const auto &t : net.terminals) {
            const auto &m = nl.master_of(t.cell);
            if (!m.is_output(t.pin))
                cap += energy_of(table, m.name).input_cap_ff;
        }
    for (CellIndex c = 0; c < nl.cells.size(); ++c)
        energy += energy_of(table, nl.master_of(c).name).internal_fj;
    const double af = p.switching_activity * p.clock_freq;
    return {af * p.supply_voltage * p.supply_voltage * cap * 1e-3, af * energy * 1e-3};
}

struct BenchmarkReport {
    std::string label;
    std::size_t cell_count = 0;
    double total_wirelength = 0; // mm
    double wire_power = 0, pin_power = 0, internal_power = 0, total_power = 0; // mW
    double footprint = 0;            // um^2
    double footprint_normalized = 0; // vs baseline
    double density = 0;              // 1 / footprint_normalized
    double ppa_normalized = 0;
    double clock_freq = 1.0; // GHz
};

inline BenchmarkReport make_report(std::string label, std::size_t cells, double wirelength_mm, double wire_mw,
                                   const CellPowers &cp, double footprint_um2, double freq)
{
    BenchmarkReport r;
    r.label = std::move(label);
    r.cell_count = cells;
    r.total_wirelength = wirelength_mm;
    r.wire_power = wire_mw;
    r.pin_power = cp.pin_power;
    r.internal_power = cp.internal_power;
    r.total_power = wire_mw + cp.pin_power + cp.internal_power;
    r.footprint = footprint_um2;
    r.clock_freq = freq;
    return r;
}

inline const BenchmarkReport &find_row(const std::vector<BenchmarkReport> &rows, const std::string &label)
{
    for (const auto &r : rows)
        if (r.label == label)
            return r;
    throw Error("baseline '" + label + "' not among the reports");
}

/// Fills footprint_normalized, density and ppa_normalized against the baseline row.
/// PPA = f / (P * S).
inline void ppa(std::vector<BenchmarkReport> &rows, const std::string &baseline)
{
    for (const auto &r : rows) {
        if (!(r.total_power > 0))
            throw Error("report '" + r.label + "' has zero power");
        if (!(r.footprint > 0))
            throw Error("report '" + r.label + "' has zero footprint");
    }
    const BenchmarkReport b = find_row(rows, baseline);
    for (auto &r : rows) {
        if (r.label == baseline) {
            r.footprint_normalized = r.density = r.ppa_normalized = 1.0;
            continue;
        }
        r.footprint_normalized = r.footprint / b.footprint;
        r.density = b.footprint / r.footprint;
        r.ppa_normalized = (r.clock_freq / b.clock_freq) * (b.total_power / r.total_power) * (b.footprint / r.footprint);
    }
}

/// Signed whole percent of x relative to base; nullopt when base is 0 and x is not.
inline std::optional<long> delta_pct(double x, double base)
{
    if (x == base)
        return 0;
    if (base == 0)
        return std::nullopt;
    return std::lround(100.0 * (x - base) / base);
}

enum class ReportFormat { Csv, Json };

namespace detail {

struct ReportColumn {
    const char *name;
    double BenchmarkReport::*field;
    bool delta;
};

inline const std::vector<ReportColumn> &report_columns()
{
    static const std::vector<ReportColumn> cols{
        {"total_wirelength", &BenchmarkReport::total_wirelength, true},
        {"wire_power", &BenchmarkReport::wire_power, true},
        {"pin_power", &BenchmarkReport::pin_power, true},
        {"internal_power", &BenchmarkReport::internal_power, true},
        {"total_power", &BenchmarkReport::total_power, true},
        {"footprint", &BenchmarkReport::footprint, true},
        {"footprint_normalized", &BenchmarkReport::footprint_normalized, false},
        {"density", &BenchmarkReport::density, false},
        {"ppa_normalized", &BenchmarkReport::ppa_normalized, false},
        {"clock_freq", &BenchmarkReport::clock_freq, true},
    };
    return cols;
}

inline std::string csv_field(const std::string &s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s)
        out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

} // namespace detail

/// CSV or JSON with every report field plus `<field>_delta_pct` columns
/// relative to the baseline row (whole percent, signed).
inline std::string emit_report(const std::vector<BenchmarkReport> &rows, const std::string &baseline,
                               ReportFormat format)
{
    if (rows.empty())
        throw Error("no report rows");
    const BenchmarkReport &b = find_row(rows, baseline);
    const auto &cols = detail::report_columns();
    if (format == ReportFormat::Json) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto &r : rows) {
            nlohmann::ordered_json o;
            o["label"] = r.label;
            o["cell_count"] = r.cell_count;
            for (const auto &c : cols)
                o[c.name] = r.*c.field;
            for (const auto &c : cols)
                if (c.delta) {
                    const auto d = delta_pct(r.*c.field, b.*c.field);
                    o[std::string(c.name) + "_delta_pct"] = d ? nlohmann::ordered_json(*d) : nlohmann::ordered_json();
                }
            arr.push_back(std::move(o));
        }
        nlohmann::ordered_json doc;
        doc["baseline"] = baseline;
        doc["rows"] = std::move(arr);
        return doc.dump(2) + "\n";
    }
    std::string out = "label,cell_count";
    for (const auto &c : cols)
        out += std::string(",") + c.name;
    for (const auto &c : cols)
        if (c.delta)
            out += std::string(",") + c.name + "_delta_pct";
    out += "\n";
    for (const auto &r : rows) {
        out += detail::csv_field(r.label) + "," + std::to_string(r.cell_count);
        for (const auto &c : cols)
            out += "," + text::format_double(r.*c.field);
        for (const auto &c : cols)
            if (c.delta) {
                const auto d = delta_pct(r.*c.field, b.*c.field);
                out += "," + (d ? std::to_string(*d) : std::string());
            }
        out += "\n";
    }
    return out;
}

} // namespace fabroute
