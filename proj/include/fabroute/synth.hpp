// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fabroute/netlist.hpp"
#include "fabroute/rng.hpp"

namespace fabroute {

struct SynthesisParams {
    std::size_t num_cells = 4096;
    double rent_exponent = 0.75;
    double avg_pins_per_cell = 3.0;
    double sequential_fraction = 0.1;
    std::uint64_t seed = 1;
};

inline void check(const SynthesisParams &p)
{
    if (p.num_cells < 8)
        throw std::invalid_argument("num_cells must be >= 8 (got " + std::to_string(p.num_cells) + ")");
    if (!(p.rent_exponent > 0.5 && p.rent_exponent < 1.0))
        throw std::invalid_argument("rent exponent must lie in (0.5, 1.0)");
    if (!(p.avg_pins_per_cell >= 2.0) || p.avg_pins_per_cell > 16.0)
        throw std::invalid_argument("average pins per cell must lie in [2, 16]");
    if (!(p.sequential_fraction >= 0.0 && p.sequential_fraction <= 1.0))
        throw std::invalid_argument("sequential fraction must lie in [0, 1]");
}

namespace detail {

inline constexpr std::uint32_t kMaxNetArity = 16;

inline MasterDecl master_with_pins(std::uint32_t pin_count)
{
    static const char *const kInputs[] = {"A", "B", "C", "D"};
    MasterDecl m;
    switch (pin_count) {
    case 2: m.name = "INV"; break;
    case 3: m.name = "NAND2"; break;
    case 4: m.name = "NAND3"; break;
    case 5: m.name = "AOI22"; break;
    default: m.name = "G" + std::to_string(pin_count); break;
    }
    for (std::uint32_t i = 0; i + 1 < pin_count; ++i)
        m.pins.push_back(pin_count <= 5 ? kInputs[i] : "I" + std::to_string(i));
    m.pins.push_back("OUT");
    return m;
}

/// Union-find over pins; each root carries the state of the net it forms.
class NetForest {
  public:
    explicit NetForest(std::size_t pins) : parent_(pins), arity_(pins, 1), driven_(pins, 0), target_(pins, 0)
    {
        std::iota(parent_.begin(), parent_.end(), 0u);
    }

    std::uint32_t find(std::uint32_t x)
    {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void make_driver(std::uint32_t pin, std::uint32_t target)
    {
        driven_[pin] = 1;
        target_[pin] = target;
    }

    std::uint32_t unite(std::uint32_t a, std::uint32_t b)
    {
        a = find(a);
        b = find(b);
        if (a == b)
            return a;
        if (a > b)
            std::swap(a, b);
        parent_[b] = a;
        arity_[a] += arity_[b];
        if (!driven_[a] && driven_[b])
            target_[a] = target_[b];
        driven_[a] = driven_[a] | driven_[b];
        return a;
    }

    std::uint32_t arity(std::uint32_t root) const { return arity_[root]; }
    bool driven(std::uint32_t root) const { return driven_[root] != 0; }
    std::uint32_t target(std::uint32_t root) const { return target_[root]; }

  private:
    std::vector<std::uint32_t> parent_, arity_;
    std::vector<std::uint8_t> driven_;
    std::vector<std::uint32_t> target_;
};

struct Cluster {
    std::size_t size = 0;
    std::vector<std::uint32_t> open; // net roots still looking for outside connections
};

} // namespace detail

/// Builds a netlist whose partition statistics follow Rent's rule.
///
/// Clusters are merged pairwise bottom-up. When two clusters of total size G
/// merge, open nets from the two sides are joined until the merged cluster has
/// A*G^r open nets left, so every level of the hierarchy has the terminal count
/// Rent's rule prescribes for its block size. Driver pins carry a target arity
/// drawn from 2 + Geometric(1/2) (mean 3, capped at 16); a net closes once it
/// reaches that arity. Open nets left at the root are paired at random.
inline Netlist generate_synthetic(const SynthesisParams &params)
{
    check(params);
    Rng rng(params.seed);
    const double A = params.avg_pins_per_cell;
    const double r = params.rent_exponent;

    // Pin counts average A: a floor/ceil mix.
    const auto base = static_cast<std::uint32_t>(std::floor(A));
    const double frac = A - base;
    std::vector<std::uint32_t> pin_count(params.num_cells);
    std::vector<std::uint8_t> seq(params.num_cells);
    for (std::size_t c = 0; c < params.num_cells; ++c) {
        pin_count[c] = base + (rng.chance(frac) ? 1 : 0);
        seq[c] = rng.chance(params.sequential_fraction) ? 1 : 0;
    }

    std::vector<std::uint32_t> first_pin(params.num_cells + 1, 0);
    for (std::size_t c = 0; c < params.num_cells; ++c)
        first_pin[c + 1] = first_pin[c] + pin_count[c];
    const std::uint32_t total_pins = first_pin.back();

    detail::NetForest forest(total_pins);
    std::vector<detail::Cluster> level(params.num_cells);
    for (std::size_t c = 0; c < params.num_cells; ++c) {
        level[c].size = 1;
        for (std::uint32_t p = first_pin[c]; p < first_pin[c + 1]; ++p)
            level[c].open.push_back(p);
        const std::uint32_t out = first_pin[c + 1] - 1;
        const auto target = std::min<std::uint32_t>(2 + static_cast<std::uint32_t>(rng.geometric(0.5)),
                                                    detail::kMaxNetArity);
        forest.make_driver(out, target);
    }

    auto merge = [&](detail::Cluster &L, detail::Cluster &R) {
        detail::Cluster M;
        M.size = L.size + R.size;
        const auto goal = static_cast<std::size_t>(std::max(1.0, std::round(A * std::pow(double(M.size), r))));
        std::size_t open = L.open.size() + R.open.size();
        rng.shuffle(L.open.begin(), L.open.end());
        rng.shuffle(R.open.begin(), R.open.end());
        std::size_t i = 0, j = 0;
        while (open > goal && i < L.open.size() && j < R.open.size()) {
            const std::uint32_t a = forest.find(L.open[i]);
            // Keep one driver per net where the right side offers an undriven partner.
            if (forest.driven(a) && forest.driven(forest.find(R.open[j]))) {
                for (std::size_t k = j + 1; k < R.open.size(); ++k) {
                    if (!forest.driven(forest.find(R.open[k]))) {
                        std::swap(R.open[j], R.open[k]);
                        break;
                    }
                }
            }
            const std::uint32_t m = forest.unite(a, R.open[j]);
            ++i;
            ++j;
            const std::uint32_t arity = forest.arity(m);
            const bool full = forest.driven(m) && arity >= forest.target(m);
            if (arity >= detail::kMaxNetArity || (full && open - 2 >= goal)) {
                open -= 2;
            } else {
                M.open.push_back(m);
                open -= 1;
            }
        }
        M.open.insert(M.open.end(), L.open.begin() + static_cast<std::ptrdiff_t>(i), L.open.end());
        M.open.insert(M.open.end(), R.open.begin() + static_cast<std::ptrdiff_t>(j), R.open.end());
        return M;
    };

    while (level.size() > 1) {
        std::vector<detail::Cluster> next;
        next.reserve(level.size() / 2 + 1);
        for (std::size_t k = 0; k + 1 < level.size(); k += 2)
            next.push_back(merge(level[k], level[k + 1]));
        if (level.size() % 2 == 1)
            next.push_back(std::move(level.back()));
        level = std::move(next);
    }

    // Close what is still open at the root by random pairing.
    auto &root = level.front().open;
    for (auto &x : root)
        x = forest.find(x);
    rng.shuffle(root.begin(), root.end());
    for (std::size_t k = 0; k + 1 < root.size(); k += 2) {
        const auto a = forest.find(root[k]), b = forest.find(root[k + 1]);
        if (forest.arity(a) + forest.arity(b) <= detail::kMaxNetArity || forest.arity(a) == 1 ||
            forest.arity(b) == 1)
            forest.unite(a, b);
    }

    // No single-pin nets survive: attach each to a random other net.
    for (std::uint32_t p = 0; p < total_pins; ++p) {
        const auto rp = forest.find(p);
        if (forest.arity(rp) != 1)
            continue;
        for (int attempt = 0;; ++attempt) {
            const auto q = forest.find(static_cast<std::uint32_t>(rng.below(total_pins)));
            if (q != rp && (forest.arity(q) < detail::kMaxNetArity || attempt > 64)) {
                forest.unite(rp, q);
                break;
            }
        }
    }

    Netlist nl;
    nl.name = "synth_" + std::to_string(params.num_cells) + "_s" + std::to_string(params.seed);
    std::vector<std::int32_t> master_for_count(17, -1);
    for (std::uint32_t k = 2; k <= 16; ++k) {
        if (std::find(pin_count.begin(), pin_count.end(), k) == pin_count.end())
            continue;
        master_for_count[k] = static_cast<std::int32_t>(nl.masters.size());
        nl.masters.push_back(detail::master_with_pins(k));
    }
    nl.cells.reserve(params.num_cells);
    std::vector<CellIndex> cell_of_pin(total_pins);
    for (std::size_t c = 0; c < params.num_cells; ++c) {
        nl.cells.push_back({"c" + std::to_string(c), static_cast<MasterIndex>(master_for_count[pin_count[c]]),
                            seq[c] != 0});
        for (std::uint32_t p = first_pin[c]; p < first_pin[c + 1]; ++p)
            cell_of_pin[p] = static_cast<CellIndex>(c);
    }

    // Nets in order of their lowest pin; terminals in pin order.
    std::vector<std::int64_t> net_of_root(total_pins, -1);
    for (std::uint32_t p = 0; p < total_pins; ++p) {
        const auto rp = forest.find(p);
        if (net_of_root[rp] < 0) {
            net_of_root[rp] = static_cast<std::int64_t>(nl.nets.size());
            nl.nets.push_back({"n" + std::to_string(nl.nets.size()), {}, std::nullopt});
        }
        Net &net = nl.nets[static_cast<std::size_t>(net_of_root[rp])];
        const CellIndex c = cell_of_pin[p];
        const auto pin = static_cast<PinIndex>(p - first_pin[c]);
        if (!net.driver && pin + 1 == pin_count[c])
            net.driver = net.terminals.size();
        net.terminals.push_back({c, pin});
    }
    return nl;
}

} // namespace fabroute
