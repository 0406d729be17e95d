// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fabroute/error.hpp"
#include "fabroute/fabric.hpp"
#include "fabroute/netlist.hpp"
#include "fabroute/rent.hpp"
#include "fabroute/rng.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

struct Die {
    int width = 0, height = 0; // sites
    double site_nm = 128;
    double utilization = 0.6;
    int cell_width = 1, cell_height = 1; // slot size in sites

    int cols() const { return width / cell_width; }
    int rows() const { return height / cell_height; }
    std::size_t slots() const { return static_cast<std::size_t>(cols()) * static_cast<std::size_t>(rows()); }
    double area_um2() const { return double(width) * double(height) * site_nm * site_nm * 1e-6; }

    bool operator==(const Die &) const = default;
};

struct Placement {
    Die die;
    std::vector<int> x, y; // cell origin in sites, indexed by CellIndex

    std::size_t size() const { return x.size(); }
};

/// Smallest-area die of aspect <= 2 whose area keeps cell area / die area at or
/// below the utilization and that holds every cell on the slot grid. Ties go to
/// the squarer die, then the wider one.
inline Die size_die(const Netlist &nl, const FabricSpec &f, double utilization)
{
    if (nl.cells.empty())
        throw Error("cannot size a die for an empty netlist");
    if (!(utilization > 0 && utilization <= 1))
        throw Error("utilization must lie in (0, 1]");
    const std::int64_t n = static_cast<std::int64_t>(nl.cells.size());
    const std::int64_t cw = f.cell_width, ch = f.cell_height;
    const double cell_area = double(n) * double(cw * ch);
    const auto required = static_cast<std::int64_t>(std::ceil(cell_area / utilization - 1e-9));

    Die best{0, 0, f.site_nm, utilization, f.cell_width, f.cell_height};
    std::int64_t best_area = std::numeric_limits<std::int64_t>::max();
    const auto w_max = static_cast<std::int64_t>(2 * std::ceil(std::sqrt(2.0 * double(required))) + cw + 2 * ch + 2);
    for (std::int64_t w = cw; w <= w_max; ++w) {
        const std::int64_t per_row = w / cw;
        std::int64_t h = std::max<std::int64_t>((required + w - 1) / w, ch * ((n + per_row - 1) / per_row));
        h = std::max(h, (w + 1) / 2);
        if (h > 2 * w)
            continue;
        const std::int64_t area = w * h;
        const bool better = area < best_area ||
                            (area == best_area && (std::abs(w - h) < std::abs(best.width - best.height) ||
                                                   (std::abs(w - h) == std::abs(best.width - best.height) &&
                                                    w > best.width)));
        if (better) {
            best_area = area;
            best.width = static_cast<int>(w);
            best.height = static_cast<int>(h);
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Wirelength
// ---------------------------------------------------------------------------

struct Point {
    double x = 0, y = 0;
};

inline double net_hpwl(std::span<const Point> pts)
{
    if (pts.size() < 2)
        return 0.0;
    double x0 = pts[0].x, x1 = x0, y0 = pts[0].y, y1 = y0;
    for (const auto &p : pts) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    return (x1 - x0) + (y1 - y0);
}

/// Offset of a terminal from its cell origin: the pin's first access point.
inline Point pin_offset(const Netlist &nl, const CellLibrary &lib, const Terminal &t)
{
    const auto &a = lib.of(nl, t.cell).pins.at(t.pin).accesses.front();
    return {a.x, a.y};
}

inline double hpwl(const Netlist &nl, const CellLibrary &lib, const Placement &pl)
{
    if (pl.size() != nl.cells.size())
        throw Error("placement covers " + std::to_string(pl.size()) + " of " + std::to_string(nl.cells.size()) +
                    " cells");
    double total = 0;
    std::vector<Point> pts;
    for (const auto &net : nl.nets) {
        pts.clear();
        if (net.terminals.empty())
            continue;
        // Relative to the first terminal's cell, so a shifted placement gives bit-identical sums.
        const int x0 = pl.x[net.terminals[0].cell], y0 = pl.y[net.terminals[0].cell];
        for (const auto &t : net.terminals) {
            const Point o = pin_offset(nl, lib, t);
            pts.push_back({double(pl.x[t.cell] - x0) + o.x, double(pl.y[t.cell] - y0) + o.y});
        }
        total += net_hpwl(pts);
    }
    return total;
}

/// Empty string when every cell lies inside the die and no footprints overlap.
inline std::string legality_error(const Netlist &nl, const CellLibrary &lib, const Placement &pl)
{
    if (pl.size() != nl.cells.size())
        return "placement covers " + std::to_string(pl.size()) + " of " + std::to_string(nl.cells.size()) + " cells";
    std::vector<CellIndex> owner(static_cast<std::size_t>(pl.die.width) * static_cast<std::size_t>(pl.die.height),
                                 std::numeric_limits<CellIndex>::max());
    for (CellIndex c = 0; c < nl.cells.size(); ++c) {
        const auto &m = lib.of(nl, c);
        if (pl.x[c] < 0 || pl.y[c] < 0 || pl.x[c] + m.width > pl.die.width || pl.y[c] + m.height > pl.die.height)
            return "cell '" + nl.cells[c].id + "' lies outside the die";
        for (int dy = 0; dy < m.height; ++dy)
            for (int dx = 0; dx < m.width; ++dx) {
                auto &o = owner[static_cast<std::size_t>(pl.y[c] + dy) * static_cast<std::size_t>(pl.die.width) +
                                static_cast<std::size_t>(pl.x[c] + dx)];
                if (o != std::numeric_limits<CellIndex>::max())
                    return "cells '" + nl.cells[o].id + "' and '" + nl.cells[c].id + "' overlap";
                o = c;
            }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Annealing
// ---------------------------------------------------------------------------

struct PlaceParams {
    std::uint64_t seed = 1;
    double moves_per_cell = 100; // per temperature
    double cooling = 0.95;
    double stop_acceptance = 0.01;
    int restarts = 1;
    int max_temperatures = 2000;
};

struct PlaceResult {
    Placement placement;
    double initial_hpwl = 0; // random start of the first restart
    double final_hpwl = 0;
    int temperatures = 0;
};

namespace detail {

class Annealer {
  public:
    Annealer(const Netlist &nl, const CellLibrary &lib, const Die &die) : nl_(nl), die_(die)
    {
        const std::size_t n = nl.cells.size();
        if (die.slots() < n)
            throw Error("die holds " + std::to_string(die.slots()) + " cells, netlist has " + std::to_string(n));
        for (const auto &m : lib.masters)
            if (m.width != die.cell_width || m.height != die.cell_height)
                throw Error("master '" + m.name + "' does not match the die slot size");
        nets_of_.resize(n);
        net_pins_.resize(nl.nets.size());
        for (std::size_t k = 0; k < nl.nets.size(); ++k) {
            for (const auto &t : nl.nets[k].terminals) {
                net_pins_[k].push_back({t.cell, pin_offset(nl, lib, t)});
                auto &v = nets_of_[t.cell];
                if (v.empty() || v.back() != k)
                    v.push_back(static_cast<std::uint32_t>(k));
            }
        }
        for (auto &v : nets_of_) {
            std::sort(v.begin(), v.end());
            v.erase(std::unique(v.begin(), v.end()), v.end());
        }
        net_cost_.assign(nl.nets.size(), 0.0);
        stamp_.assign(nl.nets.size(), 0);
    }

    void randomize(Rng &rng)
    {
        std::vector<std::uint32_t> order(die_.slots());
        for (std::uint32_t i = 0; i < order.size(); ++i)
            order[i] = i;
        rng.shuffle(order.begin(), order.end());
        cell_at_.assign(die_.slots(), kEmpty);
        slot_.assign(nl_.cells.size(), 0);
        for (std::uint32_t c = 0; c < slot_.size(); ++c) {
            slot_[c] = order[c];
            cell_at_[order[c]] = c;
        }
        recompute();
    }

    double cost() const { return total_; }

    void recompute()
    {
        total_ = 0;
        for (std::size_t k = 0; k < net_cost_.size(); ++k) {
            net_cost_[k] = cost_of(k);
            total_ += net_cost_[k];
        }
    }

    /// Runs the schedule; returns the number of temperatures used.
    int anneal(Rng &rng, const PlaceParams &p, std::vector<std::uint32_t> &best_slots, double &best_cost)
    {
        const std::size_t n = nl_.cells.size();
        best_slots = slot_;
        best_cost = total_;
        if (n < 2 && die_.slots() < 2)
            return 0;
        const int max_r = std::max(die_.cols(), die_.rows());
        double rlim = max_r;

        // Starting temperature from the spread of random move costs.
        double sum = 0, sum2 = 0;
        const std::size_t probes = std::max<std::size_t>(n, 16);
        for (std::size_t i = 0; i < probes; ++i) {
            const double d = propose(rng, rlim);
            undo();
            sum += d;
            sum2 += d * d;
        }
        const double mean = sum / double(probes);
        double T = std::sqrt(std::max(0.0, sum2 / double(probes) - mean * mean));
        if (!(T > 0))
            T = 1.0;

        const auto moves = static_cast<std::size_t>(std::max(1.0, std::ceil(p.moves_per_cell * double(n))));
        int temps = 0;
        while (temps < p.max_temperatures) {
            ++temps;
            std::size_t tried = 0, accepted = 0;
            for (std::size_t m = 0; m < moves; ++m) {
                const double d = propose(rng, rlim);
                bool take;
                if (std::abs(d) < 1e-9) {
                    take = rng.chance(0.5);
                } else {
                    ++tried;
                    take = d < 0 || rng.uniform() < std::exp(-d / T);
                    accepted += take ? 1 : 0;
                }
                if (take)
                    commit(d);
                else
                    undo();
            }
            recompute();
            if (total_ < best_cost - 1e-9) {
                best_cost = total_;
                best_slots = slot_;
            }
            const double rate = tried ? double(accepted) / double(tried) : 0.0;
            if (rate < p.stop_acceptance)
                break;
            rlim = std::clamp(rlim * (1.0 - 0.44 + rate), 1.0, double(max_r));
            T *= p.cooling;
        }
        return temps;
    }

    void load(const std::vector<std::uint32_t> &slots)
    {
        slot_ = slots;
        cell_at_.assign(die_.slots(), kEmpty);
        for (std::uint32_t c = 0; c < slot_.size(); ++c)
            cell_at_[slot_[c]] = c;
        recompute();
    }

    Placement placement() const
    {
        Placement pl{die_, {}, {}};
        for (auto s : slot_) {
            pl.x.push_back(static_cast<int>(s % static_cast<std::uint32_t>(die_.cols())) * die_.cell_width);
            pl.y.push_back(static_cast<int>(s / static_cast<std::uint32_t>(die_.cols())) * die_.cell_height);
        }
        return pl;
    }

  private:
    static constexpr std::uint32_t kEmpty = std::numeric_limits<std::uint32_t>::max();

    struct NetPin {
        CellIndex cell;
        Point offset;
    };

    double cost_of(std::size_t k) const
    {
        const auto &pins = net_pins_[k];
        if (pins.size() < 2)
            return 0.0;
        const auto cols = static_cast<std::uint32_t>(die_.cols());
        double x0 = std::numeric_limits<double>::max(), x1 = -x0, y0 = x0, y1 = -x0;
        for (const auto &p : pins) {
            const double x = double(slot_[p.cell] % cols) * die_.cell_width + p.offset.x;
            const double y = double(slot_[p.cell] / cols) * die_.cell_height + p.offset.y;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
        return (x1 - x0) + (y1 - y0);
    }

    /// Applies a random swap or relocation tentatively and returns its cost delta.
    double propose(Rng &rng, double rlim)
    {
        const auto cols = die_.cols(), rows = die_.rows();
        const auto r = static_cast<std::int64_t>(rlim);
        a_ = static_cast<CellIndex>(rng.below(nl_.cells.size()));
        const auto from = slot_[a_];
        const std::int64_t fx = from % static_cast<std::uint32_t>(cols), fy = from / static_cast<std::uint32_t>(cols);
        std::uint32_t to = from;
        for (int attempt = 0; attempt < 8 && to == from; ++attempt) {
            const std::int64_t tx = std::clamp<std::int64_t>(fx + rng.between(-r, r), 0, cols - 1);
            const std::int64_t ty = std::clamp<std::int64_t>(fy + rng.between(-r, r), 0, rows - 1);
            to = static_cast<std::uint32_t>(ty * cols + tx);
        }
        from_ = from;
        to_ = to;
        b_ = cell_at_[to];
        if (to == from)
            return 0.0;
        move(a_, to);
        if (b_ != kEmpty)
            move(b_, from);
        else
            cell_at_[from] = kEmpty;

        ++epoch_;
        touched_.clear();
        double delta = 0;
        auto visit = [&](CellIndex c) {
            for (auto k : nets_of_[c]) {
                if (stamp_[k] == epoch_)
                    continue;
                stamp_[k] = epoch_;
                const double now = cost_of(k);
                touched_.push_back({k, now});
                delta += now - net_cost_[k];
            }
        };
        visit(a_);
        if (b_ != kEmpty)
            visit(b_);
        return delta;
    }

    void commit(double delta)
    {
        for (const auto &[k, c] : touched_)
            net_cost_[k] = c;
        total_ += delta;
        touched_.clear();
    }

    void undo()
    {
        if (to_ == from_)
            return;
        move(a_, from_);
        if (b_ != kEmpty)
            move(b_, to_);
        else
            cell_at_[to_] = kEmpty;
        touched_.clear();
    }

    void move(CellIndex c, std::uint32_t s)
    {
        slot_[c] = s;
        cell_at_[s] = c;
    }

    const Netlist &nl_;
    Die die_;
    std::vector<std::vector<std::uint32_t>> nets_of_;
    std::vector<std::vector<NetPin>> net_pins_;
    std::vector<double> net_cost_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t epoch_ = 0;
    std::vector<std::pair<std::uint32_t, double>> touched_;
    std::vector<std::uint32_t> slot_, cell_at_;
    double total_ = 0;
    CellIndex a_ = 0, b_ = 0;
    std::uint32_t from_ = 0, to_ = 0;
};

} // namespace detail

/// Simulated annealing over a slot grid; returns the best placement seen.
inline PlaceResult place(const Netlist &nl, const CellLibrary &lib, const Die &die, const PlaceParams &p = {})
{
    if (nl.cells.empty())
        throw Error("cannot place an empty netlist");
    if (p.restarts < 1 || !(p.cooling > 0 && p.cooling < 1) || !(p.moves_per_cell > 0))
        throw Error("invalid annealing parameters");
    detail::Annealer sa(nl, lib, die);
    PlaceResult out;
    std::vector<std::uint32_t> best;
    double best_cost = std::numeric_limits<double>::max();
    for (int k = 0; k < p.restarts; ++k) {
        Rng rng(mix_seed(p.seed, static_cast<std::uint64_t>(k)));
        sa.randomize(rng);
        if (k == 0)
            out.initial_hpwl = hpwl(nl, lib, sa.placement());
        std::vector<std::uint32_t> slots;
        double cost = 0;
        out.temperatures += sa.anneal(rng, p, slots, cost);
        if (cost < best_cost - 1e-9) {
            best_cost = cost;
            best = std::move(slots);
        }
    }
    sa.load(best);
    out.placement = sa.placement();
    out.final_hpwl = hpwl(nl, lib, out.placement);
    return out;
}

inline PinDensityInput pin_density_of(const Placement &pl, const Netlist &nl, const FabricSpec &f)
{
    return {static_cast<double>(nl.terminal_count()), pl.die.area_um2(), f.pin_layers};
}

// ---------------------------------------------------------------------------
// Placement CSV: header `cell,x,y`, one row per cell in netlist order.
// ---------------------------------------------------------------------------

inline std::string placement_csv(const Netlist &nl, const Placement &pl)
{
    std::string out = "cell,x,y\n";
    for (CellIndex c = 0; c < nl.cells.size(); ++c)
        out += nl.cells[c].id + "," + std::to_string(pl.x[c]) + "," + std::to_string(pl.y[c]) + "\n";
    return out;
}

inline Placement parse_placement_csv(std::string_view body, const Netlist &nl, const Die &die)
{
    Placement pl{die, std::vector<int>(nl.cells.size(), 0), std::vector<int>(nl.cells.size(), 0)};
    std::vector<std::uint8_t> seen(nl.cells.size(), 0);
    std::unordered_map<std::string_view, CellIndex> index;
    for (CellIndex c = 0; c < nl.cells.size(); ++c)
        index.emplace(nl.cells[c].id, c);
    std::size_t line_no = 0, pos = 0;
    while (pos < body.size()) {
        std::size_t end = body.find('\n', pos);
        if (end == std::string_view::npos)
            end = body.size();
        std::string_view line = body.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (line.empty() || (line_no == 1 && line == "cell,x,y"))
            continue;
        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
        if (c2 == std::string_view::npos)
            throw ParseError("expected 'cell,x,y'", line_no, 1);
        auto it = index.find(line.substr(0, c1));
        if (it == index.end())
            throw ReferenceError("unknown cell '" + std::string(line.substr(0, c1)) + "'", line_no, 1);
        const auto x = text::to_int(line.substr(c1 + 1, c2 - c1 - 1));
        const auto y = text::to_int(line.substr(c2 + 1));
        if (!x || !y)
            throw ParseError("bad coordinate", line_no, c1 + 2);
        if (seen[it->second]++)
            throw DuplicateError("cell '" + std::string(line.substr(0, c1)) + "' placed twice", line_no, 1);
        pl.x[it->second] = static_cast<int>(*x);
        pl.y[it->second] = static_cast<int>(*y);
    }
    for (CellIndex c = 0; c < nl.cells.size(); ++c)
        if (!seen[c])
            throw Error("cell '" + nl.cells[c].id + "' is not placed");
    return pl;
}

} // namespace fabroute
