// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fabroute/error.hpp"
#include "fabroute/netlist.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

enum class FabricKind { Planar2D, TransistorMonolithic3D, SkybridgeS3DC };

inline std::string_view to_string(FabricKind k)
{
    switch (k) {
    case FabricKind::Planar2D: return "2d";
    case FabricKind::TransistorMonolithic3D: return "tmi";
    case FabricKind::SkybridgeS3DC: return "s3dc";
    }
    return "?";
}

inline std::optional<FabricKind> parse_kind(std::string_view s)
{
    if (s == "2d" || s == "planar2d" || s == "Planar2D")
        return FabricKind::Planar2D;
    if (s == "tmi" || s == "t-mi" || s == "TransistorMonolithic3D")
        return FabricKind::TransistorMonolithic3D;
    if (s == "s3dc" || s == "SkybridgeS3DC")
        return FabricKind::SkybridgeS3DC;
    return std::nullopt;
}

enum class Direction { Horizontal, Vertical };

struct RoutingLayer {
    int index = 1; // M1 = 1
    Direction dir = Direction::Horizontal;
    double pitch_nm = 64;
    int capacity = 10; // tracks per gcell edge, 0 = blocked
    double cap_per_um = 0.2; // fF/um
    double res_per_um = 2.0; // ohm/um

    bool operator==(const RoutingLayer &) const = default;
};

struct CellEnergyEntry {
    double internal_fj = 1.0;  // per toggle
    double input_cap_ff = 0.5; // per input pin
    double drive_res_ohm = 1000.0;

    bool operator==(const CellEnergyEntry &) const = default;
};

/// Per-master energy numbers; "*" is the fallback for unlisted masters.
struct EnergyTable {
    std::map<std::string, CellEnergyEntry> entries;

    const CellEnergyEntry *find(const std::string &master) const
    {
        auto it = entries.find(master);
        if (it == entries.end())
            it = entries.find("*");
        return it == entries.end() ? nullptr : &it->second;
    }

    bool operator==(const EnergyTable &) const = default;
};

struct FabricSpec {
    FabricKind kind = FabricKind::Planar2D;
    std::vector<RoutingLayer> layers;
    int pin_layers = 1; // N: layers carrying pin accesses
    int pin_base = 1;   // lowest pin-access layer
    double footprint_scale = 1.0;
    double vdd = 0.8;
    bool via_exclusive = false;
    int via_capacity = 4;
    double via_length_um = 0.0;
    double site_nm = 128.0;
    int cell_width = 8, cell_height = 2; // sites
    std::vector<int> input_access{5, 6, 5}; // access count for input i is input_access[i % size]
    int output_access = 4;
    EnergyTable energy;

    int layer_count() const { return static_cast<int>(layers.size()); }
    const RoutingLayer &layer(int index) const { return layers.at(static_cast<std::size_t>(index - 1)); }
    double site_um() const { return site_nm * 1e-3; }
    double cell_area_um2() const { return cell_width * cell_height * site_um() * site_um(); }

    bool operator==(const FabricSpec &) const = default;
};

/// Throws Error naming the first violated invariant.
inline void check(const FabricSpec &f)
{
    if (f.layers.empty())
        throw Error("fabric has no routing layers");
    for (std::size_t i = 0; i < f.layers.size(); ++i) {
        const auto &l = f.layers[i];
        if (l.index != static_cast<int>(i) + 1)
            throw Error("layer indices must run 1.." + std::to_string(f.layers.size()));
        if (!(l.pitch_nm > 0))
            throw Error("layer " + std::to_string(l.index) + ": pitch must be > 0");
        if (l.capacity < 0)
            throw Error("layer " + std::to_string(l.index) + ": negative capacity");
        if (l.cap_per_um < 0 || l.res_per_um < 0)
            throw Error("layer " + std::to_string(l.index) + ": negative RC");
    }
    if (f.pin_layers < 1)
        throw Error("pin_layers must be >= 1");
    if (f.pin_base < 1 || f.pin_base + f.pin_layers - 1 > f.layer_count())
        throw Error("pin-access layers " + std::to_string(f.pin_base) + ".." +
                    std::to_string(f.pin_base + f.pin_layers - 1) + " exceed the " +
                    std::to_string(f.layer_count()) + "-layer stack");
    if (f.kind != FabricKind::SkybridgeS3DC && f.pin_layers != 1)
        throw Error(std::string(to_string(f.kind)) + " fabric keeps pins on one layer");
    if (f.kind == FabricKind::SkybridgeS3DC && !f.via_exclusive)
        throw Error("s3dc via stacks carry one signal each");
    if (f.via_capacity < 1 || (f.via_exclusive && f.via_capacity != 1))
        throw Error("via capacity must be >= 1 (exactly 1 for exclusive stacks)");
    if (!(f.footprint_scale > 0) || !(f.vdd > 0) || !(f.site_nm > 0) || f.via_length_um < 0)
        throw Error("footprint, vdd and site size must be positive");
    if (f.cell_width < 1 || f.cell_height < 1)
        throw Error("cell size must be at least 1x1 sites");
    if (f.input_access.empty() || f.output_access < 1 ||
        std::any_of(f.input_access.begin(), f.input_access.end(), [](int a) { return a < 1; }))
        throw Error("pin access counts must be >= 1");
    for (const auto &[name, e] : f.energy.entries)
        if (e.internal_fj < 0 || e.input_cap_ff < 0 || e.drive_res_ohm < 0)
            throw Error("cellpower '" + name + "': values must be >= 0");
}

inline FabricSpec builtin_fabric(FabricKind kind)
{
    FabricSpec f;
    f.kind = kind;
    int count = 8;
    double pitch = 64;
    switch (kind) {
    case FabricKind::Planar2D:
        break;
    case FabricKind::TransistorMonolithic3D:
        f.footprint_scale = 0.5;
        f.cell_width = 8;
        f.cell_height = 1;
        f.input_access = {3, 2, 3};
        f.output_access = 3;
        break;
    case FabricKind::SkybridgeS3DC:
        count = 13;
        pitch = 25.6;
        f.pin_layers = 5;
        f.pin_base = 2;
        f.footprint_scale = 0.09;
        f.via_exclusive = true;
        f.via_capacity = 1;
        f.site_nm = 51.2;
        f.cell_width = 3;
        f.cell_height = 3;
        f.input_access = {5, 5, 5};
        f.output_access = 4;
        break;
    }
    for (int i = 1; i <= count; ++i)
        f.layers.push_back({i, i % 2 == 1 ? Direction::Horizontal : Direction::Vertical, pitch, 10, 0.2, 2.0});
    f.energy.entries["*"] = CellEnergyEntry{};
    return f;
}

// ---------------------------------------------------------------------------
// Config text
//
//   kind <2d|tmi|s3dc>                    required; everything else overrides its builtin
//   layers <L>                            resize the stack (new layers copy the top one)
//   layer <idx> [dir h|v] [pitch nm] [cap tracks] [c fF/um] [r ohm/um]
//   pin_layers <N>      pin_base <layer>  vdd <V>   footprint <scale>
//   via_cap <n>         via_length <um>   site <nm> cellsize <w> <h>
//   pin_access in <n>... | out <n>
//   cellpower <master|*> <fJ/toggle> <fF> <ohm>
// ---------------------------------------------------------------------------

inline FabricSpec load_fabric(std::string_view body)
{
    struct Line {
        std::size_t no;
        std::vector<text::Token> tk;
    };
    std::vector<Line> lines;
    std::optional<FabricKind> kind;
    text::for_each_line(body, [&](std::size_t no, const std::vector<text::Token> &tk) {
        if (tk[0].text == "kind") {
            if (tk.size() != 2)
                throw ParseError("expected 'kind <name>'", no, tk[0].column);
            if (kind)
                throw DuplicateError("kind declared twice", no, tk[0].column);
            kind = parse_kind(tk[1].text);
            if (!kind)
                throw ParseError("unknown fabric kind '" + std::string(tk[1].text) + "'", no, tk[1].column);
        } else {
            lines.push_back({no, tk});
        }
    });
    if (!kind)
        throw ParseError("missing 'kind' line", 0, 0);

    FabricSpec f = builtin_fabric(*kind);
    auto arity = [](const Line &l, std::size_t n) {
        if (l.tk.size() != n)
            throw ParseError("'" + std::string(l.tk[0].text) + "' takes " + std::to_string(n - 1) + " value(s)",
                             l.no, l.tk[0].column);
    };
    auto integer = [](const Line &l, std::size_t i, const char *what) {
        const long long v = text::expect_int(l.tk[i], l.no, what);
        if (v < -1000000 || v > 1000000)
            throw ParseError(std::string(what) + " out of range", l.no, l.tk[i].column);
        return static_cast<int>(v);
    };

    // Stack size first, so layer lines may address new layers.
    for (const auto &l : lines) {
        if (l.tk[0].text != "layers")
            continue;
        arity(l, 2);
        const int n = integer(l, 1, "layer count");
        if (n < 1)
            throw ParseError("layer count must be >= 1", l.no, l.tk[1].column);
        while (f.layer_count() > n)
            f.layers.pop_back();
        while (f.layer_count() < n) {
            RoutingLayer top = f.layers.back();
            top.index += 1;
            top.dir = top.index % 2 == 1 ? Direction::Horizontal : Direction::Vertical;
            f.layers.push_back(top);
        }
    }

    std::set<int> declared;
    for (const auto &l : lines) {
        const std::string_view kw = l.tk[0].text;
        if (kw == "layers") {
            continue;
        } else if (kw == "layer") {
            if (l.tk.size() < 2 || l.tk.size() % 2 != 0)
                throw ParseError("expected 'layer <idx> [key value]...'", l.no, l.tk[0].column);
            const int idx = integer(l, 1, "layer index");
            if (idx < 1)
                throw ParseError("layer index must be >= 1", l.no, l.tk[1].column);
            if (!declared.insert(idx).second)
                throw DuplicateError("layer " + std::to_string(idx) + " declared twice", l.no, l.tk[1].column);
            if (idx > f.layer_count() + 1)
                throw ParseError("layer " + std::to_string(idx) + " leaves a gap above layer " +
                                     std::to_string(f.layer_count()),
                                 l.no, l.tk[1].column);
            if (idx == f.layer_count() + 1) {
                RoutingLayer top = f.layers.back();
                top.index = idx;
                top.dir = idx % 2 == 1 ? Direction::Horizontal : Direction::Vertical;
                f.layers.push_back(top);
            }
            RoutingLayer &layer = f.layers[static_cast<std::size_t>(idx - 1)];
            for (std::size_t i = 2; i < l.tk.size(); i += 2) {
                const std::string_view key = l.tk[i].text;
                const auto &val = l.tk[i + 1];
                if (key == "dir") {
                    if (val.text == "h")
                        layer.dir = Direction::Horizontal;
                    else if (val.text == "v")
                        layer.dir = Direction::Vertical;
                    else
                        throw ParseError("dir must be h or v", l.no, val.column);
                } else if (key == "pitch") {
                    layer.pitch_nm = text::expect_double(val, l.no, "pitch");
                    if (!(layer.pitch_nm > 0))
                        throw ParseError("pitch must be > 0", l.no, val.column);
                } else if (key == "cap") {
                    layer.capacity = integer(l, i + 1, "capacity");
                    if (layer.capacity < 0)
                        throw ParseError("negative capacity on layer " + std::to_string(idx), l.no, val.column);
                } else if (key == "c") {
                    layer.cap_per_um = text::expect_double(val, l.no, "c");
                } else if (key == "r") {
                    layer.res_per_um = text::expect_double(val, l.no, "r");
                } else {
                    throw ParseError("unknown layer key '" + std::string(key) + "'", l.no, l.tk[i].column);
                }
            }
        } else if (kw == "pin_layers") {
            arity(l, 2);
            f.pin_layers = integer(l, 1, "pin_layers");
        } else if (kw == "pin_base") {
            arity(l, 2);
            f.pin_base = integer(l, 1, "pin_base");
        } else if (kw == "vdd") {
            arity(l, 2);
            f.vdd = text::expect_double(l.tk[1], l.no, "vdd");
        } else if (kw == "footprint") {
            arity(l, 2);
            f.footprint_scale = text::expect_double(l.tk[1], l.no, "footprint");
        } else if (kw == "via_cap") {
            arity(l, 2);
            f.via_capacity = integer(l, 1, "via_cap");
        } else if (kw == "via_length") {
            arity(l, 2);
            f.via_length_um = text::expect_double(l.tk[1], l.no, "via_length");
        } else if (kw == "site") {
            arity(l, 2);
            f.site_nm = text::expect_double(l.tk[1], l.no, "site");
        } else if (kw == "cellsize") {
            arity(l, 3);
            f.cell_width = integer(l, 1, "cell width");
            f.cell_height = integer(l, 2, "cell height");
        } else if (kw == "pin_access") {
            if (l.tk.size() < 3 || (l.tk[1].text != "in" && l.tk[1].text != "out"))
                throw ParseError("expected 'pin_access in <n>...' or 'pin_access out <n>'", l.no, l.tk[0].column);
            if (l.tk[1].text == "out") {
                arity(l, 3);
                f.output_access = integer(l, 2, "access count");
            } else {
                f.input_access.clear();
                for (std::size_t i = 2; i < l.tk.size(); ++i)
                    f.input_access.push_back(integer(l, i, "access count"));
            }
        } else if (kw == "cellpower") {
            arity(l, 5);
            CellEnergyEntry e{text::expect_double(l.tk[2], l.no, "energy"),
                              text::expect_double(l.tk[3], l.no, "pin cap"),
                              text::expect_double(l.tk[4], l.no, "drive resistance")};
            f.energy.entries[std::string(l.tk[1].text)] = e;
        } else {
            throw ParseError("unknown keyword '" + std::string(kw) + "'", l.no, l.tk[0].column);
        }
    }
    if (!declared.empty() && *declared.rbegin() - *declared.begin() + 1 != static_cast<int>(declared.size()))
        throw ParseError("declared layer indices are not contiguous", 0, 0);
    check(f);
    return f;
}

/// Builtin name or config file path.
inline FabricSpec fabric_from(const std::string &name_or_path)
{
    if (auto k = parse_kind(name_or_path))
        return builtin_fabric(*k);
    const std::string body = text::read_file(name_or_path);
    try {
        return load_fabric(body);
    } catch (const ParseError &e) {
        throw ParseError(name_or_path + ": " + e.what(), 0, 0);
    } catch (const Error &e) {
        throw Error(name_or_path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Cell masters
// ---------------------------------------------------------------------------

enum class PinDirection { Input, Output };

struct AccessPoint {
    int layer = 1;
    double x = 0, y = 0; // sites from the cell origin
};

struct PinDef {
    std::string name;
    PinDirection dir = PinDirection::Input;
    std::vector<AccessPoint> accesses;
};

struct Rect {
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

struct Obstacle {
    int layer = 1;
    Rect box;
};

struct CellMaster {
    std::string name;
    int width = 1, height = 1;
    std::vector<PinDef> pins;
    std::vector<Obstacle> obstacles;
};

struct PinSpec {
    std::string name;
    PinDirection dir = PinDirection::Input;
    int access_count = 1;
};

/// Spreads each pin's accesses over the cell. On a multi-layer fabric access j
/// of pin p sits on layer pin_base + (p + j) mod N, so one pin touches
/// min(count, N) layers and the rotation keeps per-layer pin load even.
inline CellMaster make_cell_master(const FabricSpec &f, const std::string &name, const std::vector<PinSpec> &pins)
{
    CellMaster m{name, f.cell_width, f.cell_height, {}, {}};
    const double k = static_cast<double>(std::max<std::size_t>(pins.size(), 1));
    for (std::size_t p = 0; p < pins.size(); ++p) {
        if (pins[p].access_count < 1)
            throw Error("pin '" + pins[p].name + "' needs at least one access");
        PinDef pd{pins[p].name, pins[p].dir, {}};
        const int n = pins[p].access_count;
        for (int j = 0; j < n; ++j) {
            const int layer = f.pin_base + static_cast<int>((p + static_cast<std::size_t>(j)) %
                                                            static_cast<std::size_t>(f.pin_layers));
            pd.accesses.push_back({layer, (static_cast<double>(p) + 0.5) * f.cell_width / k,
                                   (j + 0.5) * f.cell_height / n});
        }
        m.pins.push_back(std::move(pd));
    }
    // Supply rails: full-width strips along the bottom and top edges.
    const double rail = f.kind == FabricKind::SkybridgeS3DC ? 0.5 : 0.25;
    std::vector<int> rail_layers{1};
    if (f.kind == FabricKind::SkybridgeS3DC && f.layer_count() >= 9)
        rail_layers.push_back(9);
    for (int layer : rail_layers) {
        m.obstacles.push_back({layer, {0, 0, double(f.cell_width), rail}});
        m.obstacles.push_back({layer, {0, f.cell_height - rail, double(f.cell_width), double(f.cell_height)}});
    }
    return m;
}

inline CellMaster make_cell_master(FabricKind kind, const std::vector<PinSpec> &pins)
{
    return make_cell_master(builtin_fabric(kind), "cell", pins);
}

/// Physical masters for every master of one netlist, in netlist order.
struct CellLibrary {
    std::vector<CellMaster> masters;

    static CellLibrary build(const Netlist &nl, const FabricSpec &f)
    {
        CellLibrary lib;
        for (const auto &decl : nl.masters) {
            std::vector<PinSpec> spec;
            std::size_t inputs = 0;
            for (PinIndex p = 0; p < decl.pins.size(); ++p) {
                if (decl.is_output(p))
                    spec.push_back({decl.pins[p], PinDirection::Output, f.output_access});
                else
                    spec.push_back({decl.pins[p], PinDirection::Input, f.input_access[inputs++ % f.input_access.size()]});
            }
            lib.masters.push_back(make_cell_master(f, decl.name, spec));
        }
        return lib;
    }

    const CellMaster &of(const Netlist &nl, CellIndex c) const { return masters.at(nl.cells.at(c).master); }
};

} // namespace fabroute
