// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fabroute/error.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

using CellIndex = std::uint32_t;
using PinIndex = std::uint32_t;
using MasterIndex = std::uint32_t;

/// Logical cell type as declared in a netlist. The last pin is the output.
struct MasterDecl {
    std::string name;
    std::vector<std::string> pins;

    std::optional<PinIndex> find_pin(std::string_view pin) const
    {
        for (PinIndex i = 0; i < pins.size(); ++i)
            if (pins[i] == pin)
                return i;
        return std::nullopt;
    }
    PinIndex output_pin() const { return static_cast<PinIndex>(pins.size() - 1); }
    bool is_output(PinIndex p) const { return p + 1 == pins.size(); }

    bool operator==(const MasterDecl &) const = default;
};

struct CellInstance {
    std::string id;
    MasterIndex master = 0;
    bool is_sequential = false;

    bool operator==(const CellInstance &) const = default;
};

struct Terminal {
    CellIndex cell = 0;
    PinIndex pin = 0;

    auto operator<=>(const Terminal &) const = default;
};

struct Net {
    std::string id;
    std::vector<Terminal> terminals;
    std::optional<std::size_t> driver; // index into terminals

    bool operator==(const Net &) const = default;
};

struct Netlist {
    std::string name = "design";
    std::vector<MasterDecl> masters;
    std::vector<CellInstance> cells;
    std::vector<Net> nets;

    const MasterDecl &master_of(CellIndex c) const { return masters.at(cells.at(c).master); }

    std::size_t terminal_count() const
    {
        std::size_t n = 0;
        for (const auto &net : nets)
            n += net.terminals.size();
        return n;
    }

    std::optional<CellIndex> find_cell(std::string_view id) const
    {
        for (CellIndex i = 0; i < cells.size(); ++i)
            if (cells[i].id == id)
                return i;
        return std::nullopt;
    }

    bool operator==(const Netlist &) const = default;
};

// ---------------------------------------------------------------------------
// Text format
//
//   design <name>                      (optional)
//   master <name> pins <p1> ... <pk>   last pin is the output
//   cell <id> <master> [seq]
//   net <id> <cell>.<pin> ...
//
// '#' starts a comment. Declarations may appear in any order; references are
// resolved after the whole text is read.
// ---------------------------------------------------------------------------

namespace detail {

struct RawRef {
    std::string text;
    std::size_t line, column;
};

struct RawCell {
    RawRef id, master;
    bool seq;
};

struct RawNet {
    RawRef id;
    std::vector<RawRef> terminals;
};

} // namespace detail

inline Netlist parse_netlist(std::string_view body)
{
    using detail::RawRef;
    Netlist nl;
    std::vector<detail::RawCell> raw_cells;
    std::vector<detail::RawNet> raw_nets;
    std::unordered_map<std::string, MasterIndex> master_ix;

    text::for_each_line(body, [&](std::size_t line, const std::vector<text::Token> &tk) {
        const std::string_view kw = tk[0].text;
        if (kw == "design") {
            if (tk.size() != 2)
                throw ParseError("'design' takes exactly one name", line, tk[0].column);
            nl.name = std::string(tk[1].text);
        } else if (kw == "master") {
            if (tk.size() < 4 || tk[2].text != "pins")
                throw ParseError("expected 'master <name> pins <pin>...'", line,
                                 tk.size() < 3 ? tk[0].column : tk[2].column);
            MasterDecl m{std::string(tk[1].text), {}};
            for (std::size_t i = 3; i < tk.size(); ++i) {
                if (m.find_pin(tk[i].text))
                    throw DuplicateError("duplicate pin '" + std::string(tk[i].text) + "' on master '" + m.name + "'",
                                         line, tk[i].column);
                m.pins.emplace_back(tk[i].text);
            }
            if (!master_ix.emplace(m.name, static_cast<MasterIndex>(nl.masters.size())).second)
                throw DuplicateError("duplicate master '" + m.name + "'", line, tk[1].column);
            nl.masters.push_back(std::move(m));
        } else if (kw == "cell") {
            if (tk.size() < 3 || tk.size() > 4)
                throw ParseError("expected 'cell <id> <master> [seq]'", line, tk[0].column);
            bool seq = false;
            if (tk.size() == 4) {
                if (tk[3].text != "seq")
                    throw ParseError("unexpected token '" + std::string(tk[3].text) + "'", line, tk[3].column);
                seq = true;
            }
            raw_cells.push_back({{std::string(tk[1].text), line, tk[1].column},
                                 {std::string(tk[2].text), line, tk[2].column},
                                 seq});
        } else if (kw == "net") {
            if (tk.size() < 3)
                throw ParseError("net needs at least one terminal", line, tk[0].column);
            detail::RawNet rn{{std::string(tk[1].text), line, tk[1].column}, {}};
            for (std::size_t i = 2; i < tk.size(); ++i) {
                const auto dot = tk[i].text.rfind('.');
                if (dot == std::string_view::npos || dot == 0 || dot + 1 == tk[i].text.size())
                    throw ParseError("terminal must be <cell>.<pin>, got '" + std::string(tk[i].text) + "'", line,
                                     tk[i].column);
                rn.terminals.push_back({std::string(tk[i].text), line, tk[i].column});
            }
            raw_nets.push_back(std::move(rn));
        } else {
            throw ParseError("unknown keyword '" + std::string(kw) + "'", line, tk[0].column);
        }
    });

    std::unordered_map<std::string, CellIndex> cell_ix;
    nl.cells.reserve(raw_cells.size());
    for (const auto &rc : raw_cells) {
        auto m = master_ix.find(rc.master.text);
        if (m == master_ix.end())
            throw ReferenceError("unresolved master '" + rc.master.text + "'", rc.master.line, rc.master.column);
        if (!cell_ix.emplace(rc.id.text, static_cast<CellIndex>(nl.cells.size())).second)
            throw DuplicateError("duplicate cell id '" + rc.id.text + "'", rc.id.line, rc.id.column);
        nl.cells.push_back({rc.id.text, m->second, rc.seq});
    }

    std::unordered_map<std::string, std::size_t> net_ix;
    nl.nets.reserve(raw_nets.size());
    for (const auto &rn : raw_nets) {
        if (!net_ix.emplace(rn.id.text, nl.nets.size()).second)
            throw DuplicateError("duplicate net id '" + rn.id.text + "'", rn.id.line, rn.id.column);
        Net net{rn.id.text, {}, std::nullopt};
        std::set<Terminal> seen;
        for (const auto &rt : rn.terminals) {
            const auto dot = rt.text.rfind('.');
            const std::string cell = rt.text.substr(0, dot);
            const std::string pin = rt.text.substr(dot + 1);
            auto c = cell_ix.find(cell);
            if (c == cell_ix.end())
                throw ReferenceError("unresolved cell '" + cell + "' in net '" + rn.id.text + "'", rt.line, rt.column);
            const MasterDecl &m = nl.master_of(c->second);
            auto p = m.find_pin(pin);
            if (!p)
                throw ReferenceError("master '" + m.name + "' has no pin '" + pin + "'", rt.line, rt.column);
            Terminal t{c->second, *p};
            if (!seen.insert(t).second)
                throw DuplicateError("terminal '" + rt.text + "' repeated in net '" + rn.id.text + "'", rt.line,
                                     rt.column);
            if (!net.driver && m.is_output(*p))
                net.driver = net.terminals.size();
            net.terminals.push_back(t);
        }
        nl.nets.push_back(std::move(net));
    }
    return nl;
}

inline Netlist read_netlist(const std::string &path)
{
    const std::string body = text::read_file(path);
    try {
        return parse_netlist(body);
    } catch (const ParseError &e) {
        throw ParseError(path + ": " + e.what(), 0, 0);
    }
}

inline std::string serialize(const Netlist &nl)
{
    std::string out;
    out += "design " + nl.name + "\n";
    for (const auto &m : nl.masters) {
        out += "master " + m.name + " pins";
        for (const auto &p : m.pins)
            out += " " + p;
        out += "\n";
    }
    for (const auto &c : nl.cells) {
        out += "cell " + c.id + " " + nl.masters[c.master].name;
        if (c.is_sequential)
            out += " seq";
        out += "\n";
    }
    for (const auto &n : nl.nets) {
        out += "net " + n.id;
        for (const auto &t : n.terminals)
            out += " " + nl.cells[t.cell].id + "." + nl.master_of(t.cell).pins[t.pin];
        out += "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { Warning, Error };

struct Finding {
    Severity severity;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;

    bool empty() const { return findings.empty(); }
    std::size_t error_count() const
    {
        return static_cast<std::size_t>(std::count_if(findings.begin(), findings.end(),
                                                      [](const Finding &f) { return f.severity == Severity::Error; }));
    }
    bool contains(std::string_view needle) const
    {
        return std::any_of(findings.begin(), findings.end(),
                           [&](const Finding &f) { return f.message.find(needle) != std::string::npos; });
    }
};

/// Checks every structural invariant of a netlist built in code. Never throws.
inline ValidationReport validate(const Netlist &nl)
{
    ValidationReport rep;
    auto error = [&](std::string m) { rep.findings.push_back({Severity::Error, std::move(m)}); };
    auto warn = [&](std::string m) { rep.findings.push_back({Severity::Warning, std::move(m)}); };

    std::set<std::string_view> names;
    for (const auto &m : nl.masters) {
        if (!names.insert(m.name).second)
            error("duplicate master '" + m.name + "'");
        if (m.pins.empty())
            error("master '" + m.name + "' has no pins");
    }
    names.clear();
    for (const auto &c : nl.cells) {
        if (!names.insert(c.id).second)
            error("duplicate cell id '" + c.id + "'");
        if (c.master >= nl.masters.size())
            error("cell '" + c.id + "' references missing master #" + std::to_string(c.master));
    }
    names.clear();
    std::map<Terminal, std::string_view> owner;
    for (const auto &n : nl.nets) {
        if (!names.insert(n.id).second)
            error("duplicate net id '" + n.id + "'");
        if (n.terminals.empty()) {
            error("net '" + n.id + "' has no terminals");
            continue;
        }
        if (n.terminals.size() == 1)
            warn("dangling net '" + n.id + "'");
        if (n.driver && *n.driver >= n.terminals.size())
            error("net '" + n.id + "' driver index out of range");
        std::set<Terminal> seen;
        for (const auto &t : n.terminals) {
            if (t.cell >= nl.cells.size() || nl.cells[t.cell].master >= nl.masters.size()) {
                error("net '" + n.id + "' references missing cell #" + std::to_string(t.cell));
                continue;
            }
            const auto &m = nl.masters[nl.cells[t.cell].master];
            if (t.pin >= m.pins.size()) {
                error("net '" + n.id + "' references missing pin #" + std::to_string(t.pin) + " on cell '" +
                      nl.cells[t.cell].id + "'");
                continue;
            }
            if (!seen.insert(t).second)
                error("net '" + n.id + "' repeats terminal " + nl.cells[t.cell].id + "." + m.pins[t.pin]);
            auto [it, fresh] = owner.emplace(t, n.id);
            if (!fresh && it->second != n.id)
                warn("pin " + nl.cells[t.cell].id + "." + m.pins[t.pin] + " is on nets '" + std::string(it->second) +
                     "' and '" + n.id + "'");
        }
    }
    return rep;
}

} // namespace fabroute
