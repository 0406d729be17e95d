// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include "fabroute/error.hpp"
#include "fabroute/fabric.hpp"
#include "fabroute/netlist.hpp"
#include "fabroute/placement.hpp"
#include "fabroute/text.hpp"

namespace fabroute {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

struct GridNode {
    int x = 0, y = 0, layer = 1;

    bool operator==(const GridNode &) const = default;
};

/// X*Y*L gcell grid. Planar edges run only along each layer's preferred
/// direction; via edges join vertically adjacent layers. Node ids order
/// nodes by (layer, y, x).
class RoutingGraph {
  public:
    RoutingGraph() = default;

    RoutingGraph(int X, int Y, std::vector<Direction> dirs, int gcell_size, double gcell_um)
        : X_(X), Y_(Y), L_(static_cast<int>(dirs.size())), gcell_size_(gcell_size), gcell_um_(gcell_um),
          dirs_(std::move(dirs))
    {
        if (X < 1 || Y < 1 || L_ < 1)
            throw Error("routing grid needs at least one gcell and one layer");
        EdgeId next = 0;
        for (int l = 1; l <= L_; ++l) {
            planar_base_.push_back(next);
            next += static_cast<EdgeId>(dirs_[static_cast<std::size_t>(l - 1)] == Direction::Horizontal
                                            ? Y_ * (X_ - 1)
                                            : (Y_ - 1) * X_);
        }
        via_base_ = next;
        next += static_cast<EdgeId>((L_ - 1) * X_ * Y_);
        capacity_.assign(next, 0);
        demand_.assign(next, 0);
        history_.assign(next, 0.0);
    }

    int X() const { return X_; }
    int Y() const { return Y_; }
    int L() const { return L_; }
    int gcell_size() const { return gcell_size_; }
    double gcell_um() const { return gcell_um_; }
    Direction dir(int layer) const { return dirs_.at(static_cast<std::size_t>(layer - 1)); }
    std::size_t node_count() const { return std::size_t(X_) * std::size_t(Y_) * std::size_t(L_); }
    std::size_t edge_count() const { return capacity_.size(); }

    NodeId node(int x, int y, int layer) const
    {
        return static_cast<NodeId>((std::size_t(layer - 1) * std::size_t(Y_) + std::size_t(y)) * std::size_t(X_) +
                                   std::size_t(x));
    }
    GridNode at(NodeId n) const
    {
        return {static_cast<int>(n % NodeId(X_)), static_cast<int>((n / NodeId(X_)) % NodeId(Y_)),
                static_cast<int>(n / (NodeId(X_) * NodeId(Y_))) + 1};
    }

    bool is_via(EdgeId e) const { return e >= via_base_; }

    /// Lower endpoint of an edge (the one with the smaller node id).
    GridNode tail(EdgeId e) const
    {
        if (is_via(e)) {
            const EdgeId k = e - via_base_;
            return {static_cast<int>(k % EdgeId(X_)), static_cast<int>((k / EdgeId(X_)) % EdgeId(Y_)),
                    static_cast<int>(k / (EdgeId(X_) * EdgeId(Y_))) + 1};
        }
        const int l = layer_of_planar(e);
        const EdgeId k = e - planar_base_[static_cast<std::size_t>(l - 1)];
        const EdgeId w = dir(l) == Direction::Horizontal ? EdgeId(X_ - 1) : EdgeId(X_);
        return {static_cast<int>(k % w), static_cast<int>(k / w), l};
    }
    GridNode head(EdgeId e) const
    {
        GridNode n = tail(e);
        if (is_via(e))
            ++n.layer;
        else if (dir(n.layer) == Direction::Horizontal)
            ++n.x;
        else
            ++n.y;
        return n;
    }

    /// Planar edge leaving (x,y) in the +x or +y direction on its layer, if any.
    std::optional<EdgeId> planar_edge(int x, int y, int layer) const
    {
        if (dir(layer) == Direction::Horizontal) {
            if (x + 1 >= X_)
                return std::nullopt;
            return planar_base_[static_cast<std::size_t>(layer - 1)] + EdgeId(y * (X_ - 1) + x);
        }
        if (y + 1 >= Y_)
            return std::nullopt;
        return planar_base_[static_cast<std::size_t>(layer - 1)] + EdgeId(y * X_ + x);
    }
    /// Via from (x,y,layer) to layer+1, if any.
    std::optional<EdgeId> via_edge(int x, int y, int layer) const
    {
        if (layer >= L_)
            return std::nullopt;
        return via_base_ + EdgeId((std::size_t(layer - 1) * std::size_t(Y_) + std::size_t(y)) * std::size_t(X_) +
                                  std::size_t(x));
    }

    /// Calls fn(neighbor, edge) for every edge at n, in a fixed order.
    template <class Fn> void for_each_edge(NodeId n, Fn &&fn) const
    {
        const GridNode g = at(n);
        if (dir(g.layer) == Direction::Horizontal) {
            if (g.x > 0)
                fn(node(g.x - 1, g.y, g.layer), *planar_edge(g.x - 1, g.y, g.layer));
            if (g.x + 1 < X_)
                fn(node(g.x + 1, g.y, g.layer), *planar_edge(g.x, g.y, g.layer));
        } else {
            if (g.y > 0)
                fn(node(g.x, g.y - 1, g.layer), *planar_edge(g.x, g.y - 1, g.layer));
            if (g.y + 1 < Y_)
                fn(node(g.x, g.y + 1, g.layer), *planar_edge(g.x, g.y, g.layer));
        }
        if (g.layer > 1)
            fn(node(g.x, g.y, g.layer - 1), *via_edge(g.x, g.y, g.layer - 1));
        if (g.layer < L_)
            fn(node(g.x, g.y, g.layer + 1), *via_edge(g.x, g.y, g.layer));
    }

    int capacity(EdgeId e) const { return capacity_[e]; }
    int demand(EdgeId e) const { return demand_[e]; }
    double history(EdgeId e) const { return history_[e]; }
    void set_capacity(EdgeId e, int c) { capacity_[e] = c; }
    void add_demand(EdgeId e, int d) { demand_[e] += d; }
    void add_history(EdgeId e, double h) { history_[e] += h; }
    void clear_demand() { std::fill(demand_.begin(), demand_.end(), 0); }

    std::size_t overflow_count() const
    {
        std::size_t n = 0;
        for (std::size_t e = 0; e < capacity_.size(); ++e)
            n += demand_[e] > capacity_[e] ? 1 : 0;
        return n;
    }

  private:
    int layer_of_planar(EdgeId e) const
    {
        const auto it = std::upper_bound(planar_base_.begin(), planar_base_.end(), e);
        return static_cast<int>(it - planar_base_.begin());
    }

    int X_ = 0, Y_ = 0, L_ = 0;
    int gcell_size_ = 1;
    double gcell_um_ = 1.0;
    std::vector<Direction> dirs_;
    std::vector<EdgeId> planar_base_;
    EdgeId via_base_ = 0;
    std::vector<int> capacity_, demand_;
    std::vector<double> history_;
};

inline RoutingGraph build_grid(const FabricSpec &f, const Die &die, int gcell_size)
{
    if (gcell_size < 1)
        throw Error("gcell size must be >= 1 site");
    const int X = (die.width + gcell_size - 1) / gcell_size;
    const int Y = (die.height + gcell_size - 1) / gcell_size;
    std::vector<Direction> dirs;
    for (const auto &l : f.layers)
        dirs.push_back(l.dir);
    RoutingGraph g(std::max(X, 1), std::max(Y, 1), dirs, gcell_size, gcell_size * f.site_um());
    for (EdgeId e = 0; e < g.edge_count(); ++e)
        g.set_capacity(e, g.is_via(e) ? (f.via_exclusive ? 1 : f.via_capacity) : f.layer(g.tail(e).layer).capacity);
    return g;
}

/// Lowers planar capacities by the share of each gcell the placed cells'
/// obstacles cover on that layer: cap' = round(cap * (1 - mean coverage of the
/// edge's two gcells)).
inline void apply_obstacles(RoutingGraph &g, const Netlist &nl, const CellLibrary &lib, const Placement &pl)
{
    const int X = g.X(), Y = g.Y(), L = g.L(), s = g.gcell_size();
    std::vector<double> blocked(std::size_t(X) * std::size_t(Y) * std::size_t(L), 0.0);
    bool any = false;
    for (CellIndex c = 0; c < nl.cells.size(); ++c) {
        for (const auto &ob : lib.of(nl, c).obstacles) {
            if (ob.layer < 1 || ob.layer > L)
                continue;
            const double x0 = pl.x[c] + ob.box.x0, x1 = pl.x[c] + ob.box.x1;
            const double y0 = pl.y[c] + ob.box.y0, y1 = pl.y[c] + ob.box.y1;
            const int gx0 = std::clamp(static_cast<int>(std::floor(x0 / s)), 0, X - 1);
            const int gx1 = std::clamp(static_cast<int>(std::ceil(x1 / s)) - 1, 0, X - 1);
            const int gy0 = std::clamp(static_cast<int>(std::floor(y0 / s)), 0, Y - 1);
            const int gy1 = std::clamp(static_cast<int>(std::ceil(y1 / s)) - 1, 0, Y - 1);
            for (int gy = gy0; gy <= gy1; ++gy)
                for (int gx = gx0; gx <= gx1; ++gx) {
                    const double w = std::min(x1, double(gx + 1) * s) - std::max(x0, double(gx) * s);
                    const double h = std::min(y1, double(gy + 1) * s) - std::max(y0, double(gy) * s);
                    if (w > 0 && h > 0) {
                        blocked[g.node(gx, gy, ob.layer)] += w * h;
                        any = true;
                    }
                }
        }
    }
    if (!any)
        return;
    auto coverage = [&](int x, int y, int l) {
        const double w = std::min(double(s), double(pl.die.width) - double(x) * s);
        const double h = std::min(double(s), double(pl.die.height) - double(y) * s);
        const double area = std::max(w, 0.0) * std::max(h, 0.0);
        return area > 0 ? std::min(1.0, blocked[g.node(x, y, l)] / area) : 0.0;
    };
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        if (g.is_via(e))
            continue;
        const GridNode a = g.tail(e), b = g.head(e);
        const double cov = 0.5 * (coverage(a.x, a.y, a.layer) + coverage(b.x, b.y, b.layer));
        if (cov > 0)
            g.set_capacity(e, static_cast<int>(std::llround(g.capacity(e) * (1.0 - cov))));
    }
}

/// One entry per access point of the terminal's pin: the gcell it falls in, on its layer.
inline std::vector<GridNode> terminal_gcells(const Netlist &nl, const CellLibrary &lib, const Placement &pl,
                                             const RoutingGraph &g, const Terminal &t)
{
    if (t.cell >= pl.size())
        throw Error("terminal on unplaced cell #" + std::to_string(t.cell));
    std::vector<GridNode> out;
    for (const auto &a : lib.of(nl, t.cell).pins.at(t.pin).accesses) {
        const int gx = std::clamp(static_cast<int>(std::floor((pl.x[t.cell] + a.x) / g.gcell_size())), 0, g.X() - 1);
        const int gy = std::clamp(static_cast<int>(std::floor((pl.y[t.cell] + a.y) / g.gcell_size())), 0, g.Y() - 1);
        out.push_back({gx, gy, std::min(a.layer, g.L())});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Negotiated-congestion routing
// ---------------------------------------------------------------------------

struct RouteParams {
    int max_iters = 40;
    double first_pressure = 0.5;
    double pressure_growth = 1.5;
    double history_gain = 1.0;
    int window_margin = 3; // gcells around a net's terminal box
    int window_growth = 4; // extra margin gained one gcell per iteration, at most this much
    // Give up early once overflow stops falling: after stall_after iterations,
    // stop when the last stall_span iterations cut overflow by less than stall_gain.
    int stall_after = 10;
    int stall_span = 5;
    double stall_gain = 0.05;
    unsigned threads = 1;
};

/// One net's connection request: candidate entry nodes per terminal.
struct RouteRequest {
    std::uint32_t net = 0;
    std::vector<std::vector<NodeId>> terminals;
};

struct NetRoute {
    std::uint32_t net = 0;
    std::vector<EdgeId> edges;
    bool routed = false;
};

struct RouteOutcome {
    std::vector<NetRoute> routes; // one per netlist net
    std::size_t overflow = 0;
    int iterations = 0;
    bool stalled = false; // stopped before max_iters because overflow stopped falling
    std::vector<std::string> warnings;
};

namespace detail {

struct Box {
    int x0, y0, x1, y1;

    bool overlaps(const Box &o) const { return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1; }
};

inline Box terminal_box(const RoutingGraph &g, const RouteRequest &r)
{
    Box b{g.X(), g.Y(), -1, -1};
    for (const auto &t : r.terminals)
        for (auto n : t) {
            const GridNode p = g.at(n);
            b.x0 = std::min(b.x0, p.x);
            b.y0 = std::min(b.y0, p.y);
            b.x1 = std::max(b.x1, p.x);
            b.y1 = std::max(b.y1, p.y);
        }
    return b;
}

inline Box grow(const RoutingGraph &g, Box b, int m)
{
    return {std::max(0, b.x0 - m), std::max(0, b.y0 - m), std::min(g.X() - 1, b.x1 + m), std::min(g.Y() - 1, b.y1 + m)};
}

/// Edge costs read from the graph during one batch. Pressure is the present
/// congestion weight of the current iteration.
struct CostView {
    const RoutingGraph *g;
    double pressure;

    double operator()(EdgeId e) const
    {
        const int over = g->demand(e) + 1 - g->capacity(e);
        return 1.0 + g->history(e) + (over > 0 ? pressure * over : 0.0);
    }
};

/// A* over a window of the grid. Sources enter at cost 0; the search stops at
/// the first target popped. Ties on f go to the smaller node id.
class WindowSearch {
  public:
    WindowSearch(const RoutingGraph &g, Box w) : g_(g), w_(w)
    {
        wx_ = w.x1 - w.x0 + 1;
        wy_ = w.y1 - w.y0 + 1;
        const std::size_t n = std::size_t(wx_) * std::size_t(wy_) * std::size_t(g.L());
        cost_.resize(n);
        via_.resize(n);
        closed_.resize(n);
        target_.assign(n, 0);
        seen_.assign(n, 0);
        tree_.assign(n, 0);
    }

    bool inside(NodeId n) const
    {
        const GridNode p = g_.at(n);
        return p.x >= w_.x0 && p.x <= w_.x1 && p.y >= w_.y0 && p.y <= w_.y1;
    }

    void mark_tree(NodeId n) { tree_[local(g_.at(n))] = 1; }
    bool in_tree(NodeId n) const { return inside(n) && tree_[local(g_.at(n))]; }

    /// Cheapest path from any source to any target: the target reached and the
    /// path edges, target end first. nullopt when no target is reachable inside
    /// the window.
    std::optional<std::pair<NodeId, std::vector<EdgeId>>> connect(const std::vector<NodeId> &sources,
                                                                  const std::vector<NodeId> &targets,
                                                                  const CostView &cost)
    {
        ++stamp_;
        // Lower bound to a target: one unit per remaining step, except that the
        // last step costs at least the cheapest edge into that target.
        struct Goal {
            GridNode at;
            double entry;
        };
        std::vector<Goal> goal;
        for (auto t : targets) {
            if (!inside(t))
                continue;
            const GridNode p = g_.at(t);
            target_[local(p)] = stamp_;
            double entry = std::numeric_limits<double>::infinity();
            g_.for_each_edge(t, [&](NodeId m, EdgeId e) {
                if (g_.capacity(e) > 0 && inside(m))
                    entry = std::min(entry, cost(e));
            });
            goal.push_back({p, std::isinf(entry) ? 1.0 : entry});
        }
        if (goal.empty())
            return std::nullopt;
        // Many targets (a whole tree): distance to their bounding box instead.
        const bool boxed = goal.size() > 8;
        GridNode lo = goal.front().at, hi = lo;
        for (const auto &q : goal) {
            lo = {std::min(lo.x, q.at.x), std::min(lo.y, q.at.y), std::min(lo.layer, q.at.layer)};
            hi = {std::max(hi.x, q.at.x), std::max(hi.y, q.at.y), std::max(hi.layer, q.at.layer)};
        }
        auto h = [&](const GridNode &p, std::size_t li) {
            if (target_[li] == stamp_)
                return 0.0;
            if (boxed)
                return double(std::max({0, lo.x - p.x, p.x - hi.x}) + std::max({0, lo.y - p.y, p.y - hi.y}) +
                              std::max({0, lo.layer - p.layer, p.layer - hi.layer}));
            double best = std::numeric_limits<double>::infinity();
            for (const auto &q : goal)
                best = std::min(best, double(std::abs(p.x - q.at.x) + std::abs(p.y - q.at.y) +
                                             std::abs(p.layer - q.at.layer) - 1) +
                                          q.entry);
            return best;
        };

        struct Item {
            double f;
            NodeId id;
            std::uint32_t li;
            bool operator>(const Item &o) const { return f != o.f ? f > o.f : id > o.id; }
        };
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> open;
        for (auto s : sources) {
            if (!inside(s))
                continue;
            const GridNode p = g_.at(s);
            const auto ls = local(p);
            if (seen_[ls] != stamp_) {
                visit(ls);
                cost_[ls] = 0;
                open.push({h(p, ls), s, static_cast<std::uint32_t>(ls)});
            }
        }
        const std::size_t plane = std::size_t(wx_) * std::size_t(wy_);
        while (!open.empty()) {
            const Item top = open.top();
            open.pop();
            const std::size_t ln = top.li;
            if (closed_[ln])
                continue;
            closed_[ln] = 1;
            if (target_[ln] == stamp_) {
                std::vector<EdgeId> path;
                std::size_t cur = ln;
                NodeId reached = top.id;
                while (via_[cur] != std::numeric_limits<EdgeId>::max()) {
                    const EdgeId e = via_[cur];
                    path.push_back(e);
                    const GridNode a = g_.tail(e), b = g_.head(e);
                    const std::size_t la = local(a);
                    cur = la == cur ? local(b) : la;
                }
                return std::make_pair(reached, std::move(path));
            }
            const double gn = cost_[ln];
            const int layer = static_cast<int>(ln / plane) + 1;
            const int ly = static_cast<int>((ln % plane) / std::size_t(wx_));
            const int lx = static_cast<int>(ln % std::size_t(wx_));
            const GridNode p{w_.x0 + lx, w_.y0 + ly, layer};
            auto relax = [&](const GridNode &q, std::size_t lq, EdgeId e) {
                if (g_.capacity(e) <= 0)
                    return;
                if (seen_[lq] != stamp_)
                    visit(lq);
                else if (closed_[lq])
                    return;
                const double c = gn + cost(e);
                if (c < cost_[lq]) {
                    cost_[lq] = c;
                    via_[lq] = e;
                    open.push({c + h(q, lq), g_.node(q.x, q.y, q.layer), static_cast<std::uint32_t>(lq)});
                }
            };
            if (g_.dir(layer) == Direction::Horizontal) {
                if (lx > 0)
                    relax({p.x - 1, p.y, layer}, ln - 1, *g_.planar_edge(p.x - 1, p.y, layer));
                if (lx + 1 < wx_)
                    relax({p.x + 1, p.y, layer}, ln + 1, *g_.planar_edge(p.x, p.y, layer));
            } else {
                if (ly > 0)
                    relax({p.x, p.y - 1, layer}, ln - std::size_t(wx_), *g_.planar_edge(p.x, p.y - 1, layer));
                if (ly + 1 < wy_)
                    relax({p.x, p.y + 1, layer}, ln + std::size_t(wx_), *g_.planar_edge(p.x, p.y, layer));
            }
            if (layer > 1)
                relax({p.x, p.y, layer - 1}, ln - plane, *g_.via_edge(p.x, p.y, layer - 1));
            if (layer < g_.L())
                relax({p.x, p.y, layer + 1}, ln + plane, *g_.via_edge(p.x, p.y, layer));
        }
        return std::nullopt;
    }

  private:
    void visit(std::size_t i)
    {
        seen_[i] = stamp_;
        cost_[i] = std::numeric_limits<double>::infinity();
        via_[i] = std::numeric_limits<EdgeId>::max();
        closed_[i] = 0;
    }

    std::size_t local(const GridNode &p) const
    {
        return (std::size_t(p.layer - 1) * std::size_t(wy_) + std::size_t(p.y - w_.y0)) * std::size_t(wx_) +
               std::size_t(p.x - w_.x0);
    }

    const RoutingGraph &g_;
    Box w_;
    int wx_ = 0, wy_ = 0;
    std::vector<double> cost_;
    std::vector<EdgeId> via_;
    std::vector<std::uint8_t> closed_, tree_;
    std::vector<std::uint32_t> target_, seen_;
    std::uint32_t stamp_ = 0;
};

/// Terminal visiting order: Prim's tree over terminal gcells (rectilinear
/// distance on each terminal's first entry), ties to the lower index.
inline std::vector<std::size_t> prim_order(const RoutingGraph &g, const RouteRequest &r)
{
    const std::size_t n = r.terminals.size();
    std::vector<std::size_t> order;
    if (n == 0)
        return order;
    std::vector<GridNode> at(n);
    for (std::size_t i = 0; i < n; ++i)
        at[i] = g.at(r.terminals[i].front());
    std::vector<int> dist(n, std::numeric_limits<int>::max());
    std::vector<std::uint8_t> done(n, 0);
    std::size_t cur = 0;
    for (std::size_t step = 0; step < n; ++step) {
        done[cur] = 1;
        order.push_back(cur);
        std::size_t next = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i])
                continue;
            dist[i] = std::min(dist[i], std::abs(at[i].x - at[cur].x) + std::abs(at[i].y - at[cur].y));
            if (next == n || dist[i] < dist[next])
                next = i;
        }
        if (next == n)
            break;
        cur = next;
    }
    return order;
}

/// Routes one net as a tree inside window w; nullopt if it does not fit there.
inline std::optional<std::vector<EdgeId>> route_net(const RoutingGraph &g, const RouteRequest &r, Box w,
                                                    const CostView &cost)
{
    WindowSearch ws(g, w);
    const auto order = prim_order(g, r);
    std::vector<EdgeId> edges;
    std::vector<NodeId> tree;
    auto absorb = [&](NodeId reached, const std::vector<EdgeId> &path) {
        if (!ws.in_tree(reached)) {
            ws.mark_tree(reached);
            tree.push_back(reached);
        }
        for (auto e : path) {
            edges.push_back(e);
            for (const GridNode p : {g.tail(e), g.head(e)}) {
                const NodeId n = g.node(p.x, p.y, p.layer);
                if (!ws.in_tree(n)) {
                    ws.mark_tree(n);
                    tree.push_back(n);
                }
            }
        }
    };
    for (std::size_t k = 1; k < order.size(); ++k) {
        const auto &targets = r.terminals[order[k]];
        if (k > 1 && std::any_of(targets.begin(), targets.end(), [&](NodeId t) { return ws.in_tree(t); }))
            continue;
        // Later terminals search from the terminal toward the tree: congestion
        // around a pin is then paid at the start of the search, not at its end.
        auto hit = k == 1 ? ws.connect(r.terminals[order[0]], targets, cost) : ws.connect(targets, tree, cost);
        if (!hit)
            return std::nullopt;
        absorb(hit->first, hit->second);
    }
    return edges;
}

} // namespace detail

inline std::vector<RouteRequest> route_requests(const Netlist &nl, const CellLibrary &lib, const Placement &pl,
                                                const RoutingGraph &g)
{
    std::vector<RouteRequest> reqs;
    for (std::uint32_t k = 0; k < nl.nets.size(); ++k) {
        RouteRequest r{k, {}};
        for (const auto &t : nl.nets[k].terminals) {
            std::vector<NodeId> nodes;
            for (const auto &p : terminal_gcells(nl, lib, pl, g, t))
                nodes.push_back(g.node(p.x, p.y, p.layer));
            std::sort(nodes.begin(), nodes.end());
            nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
            r.terminals.push_back(std::move(nodes));
        }
        reqs.push_back(std::move(r));
    }
    return reqs;
}

/// Negotiated-congestion routing of every request with at least two terminals.
///
/// Nets are taken in order of decreasing terminal-box half-perimeter. Each
/// pass cuts that order into batches of consecutive nets whose search windows
/// do not overlap; a batch is routed against the demand left by earlier
/// batches and committed in order. The schedule depends only on the inputs, so
/// any thread count gives the same routes. Later passes rip up and reroute the
/// nets crossing an overflowing edge, with growing present-congestion pressure
/// and accumulated history.
inline RouteOutcome route(RoutingGraph &g, const std::vector<RouteRequest> &reqs, const RouteParams &p = {})
{
    RouteOutcome out;
    std::uint32_t max_net = 0;
    for (const auto &r : reqs)
        max_net = std::max(max_net, r.net + 1);
    out.routes.resize(max_net);
    for (std::uint32_t k = 0; k < max_net; ++k)
        out.routes[k].net = k;

    std::vector<std::size_t> order;
    std::vector<int> half_perimeter(reqs.size(), 0);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        if (reqs[i].terminals.size() < 2) {
            out.warnings.push_back("net #" + std::to_string(reqs[i].net) + " has fewer than two terminals, skipped");
            continue;
        }
        for (const auto &t : reqs[i].terminals)
            if (t.empty())
                throw Error("net #" + std::to_string(reqs[i].net) + " has a terminal without access points");
        const auto b = detail::terminal_box(g, reqs[i]);
        half_perimeter[i] = (b.x1 - b.x0) + (b.y1 - b.y0);
        order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (half_perimeter[a] != half_perimeter[b])
            return half_perimeter[a] > half_perimeter[b];
        return reqs[a].net < reqs[b].net;
    });

    g.clear_demand();
    const detail::Box full{0, 0, g.X() - 1, g.Y() - 1};
    auto commit = [&](std::size_t i, std::vector<EdgeId> edges) {
        auto &nr = out.routes[reqs[i].net];
        for (auto e : edges)
            g.add_demand(e, 1);
        nr.edges = std::move(edges);
        nr.routed = true;
    };
    auto rip = [&](std::size_t i) {
        auto &nr = out.routes[reqs[i].net];
        for (auto e : nr.edges)
            g.add_demand(e, -1);
        nr.edges.clear();
        nr.routed = false;
    };

    const unsigned threads = std::max(1u, p.threads);
    constexpr std::size_t kMaxBatch = 64;
    double pressure = p.first_pressure;
    std::vector<std::size_t> todo = order;
    std::vector<std::size_t> history;
    for (int iter = 0; iter < std::max(1, p.max_iters); ++iter) {
        out.iterations = iter + 1;
        const detail::CostView cost{&g, pressure};
        const int margin = p.window_margin + std::min(iter, p.window_growth);
        std::size_t at = 0;
        while (at < todo.size()) {
            std::vector<std::size_t> batch;
            std::vector<detail::Box> boxes;
            while (at < todo.size() && batch.size() < kMaxBatch) {
                const auto b = detail::grow(g, detail::terminal_box(g, reqs[todo[at]]), margin);
                if (std::any_of(boxes.begin(), boxes.end(), [&](const detail::Box &o) { return o.overlaps(b); }))
                    break;
                batch.push_back(todo[at]);
                boxes.push_back(b);
                ++at;
            }
            for (auto i : batch)
                rip(i);
            std::vector<std::optional<std::vector<EdgeId>>> found(batch.size());
            auto work = [&](std::size_t first, std::size_t step) {
                for (std::size_t j = first; j < batch.size(); j += step)
                    found[j] = detail::route_net(g, reqs[batch[j]], boxes[j], cost);
            };
            const std::size_t nthreads = std::min<std::size_t>(threads, batch.size());
            if (nthreads <= 1) {
                work(0, 1);
            } else {
                std::vector<std::jthread> pool;
                for (std::size_t t = 0; t < nthreads; ++t)
                    pool.emplace_back(work, t, nthreads);
            }
            for (std::size_t j = 0; j < batch.size(); ++j)
                if (found[j])
                    commit(batch[j], std::move(*found[j]));
            // Nets that did not fit their window retry on the whole grid, one at a time.
            for (std::size_t j = 0; j < batch.size(); ++j) {
                if (found[j])
                    continue;
                auto whole = detail::route_net(g, reqs[batch[j]], full, cost);
                if (!whole)
                    throw Error("net #" + std::to_string(reqs[batch[j]].net) + " has an unreachable terminal");
                commit(batch[j], std::move(*whole));
            }
        }

        out.overflow = g.overflow_count();
        history.push_back(out.overflow);
        if (out.overflow == 0 || iter + 1 >= p.max_iters)
            break;
        if (iter + 1 >= p.stall_after && history.size() > std::size_t(p.stall_span)) {
            const double before = double(history[history.size() - 1 - std::size_t(p.stall_span)]);
            if (double(out.overflow) > before * (1.0 - p.stall_gain)) {
                out.stalled = true;
                break;
            }
        }
        std::vector<std::uint8_t> hot(g.edge_count(), 0);
        for (EdgeId e = 0; e < g.edge_count(); ++e)
            if (g.demand(e) > g.capacity(e)) {
                hot[e] = 1;
                g.add_history(e, p.history_gain * (g.demand(e) - g.capacity(e)));
            }
        todo.clear();
        for (auto i : order) {
            const auto &edges = out.routes[reqs[i].net].edges;
            if (std::any_of(edges.begin(), edges.end(), [&](EdgeId e) { return hot[e] != 0; }))
                todo.push_back(i);
        }
        pressure *= p.pressure_growth;
    }
    return out;
}

/// Builds the grid, applies cell obstacles and routes every net of a placed netlist.
inline RouteOutcome route(const Netlist &nl, const CellLibrary &lib, const Placement &pl, RoutingGraph &g,
                          const RouteParams &p = {})
{
    auto out = route(g, route_requests(nl, lib, pl, g), p);
    for (auto &w : out.warnings) {
        const auto hash = w.find('#');
        const auto end = w.find(' ', hash);
        if (hash != std::string::npos) {
            const auto k = std::stoul(w.substr(hash + 1, end - hash - 1));
            w = "net '" + nl.nets.at(k).id + "'" + w.substr(end);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Congestion reporting
// ---------------------------------------------------------------------------

struct EdgeLoad {
    int layer = 1;
    int x = 0, y = 0;
    char dir = 'h'; // h, v, or u for the via up to layer + 1
    int demand = 0;
    int capacity = 0;

    double ratio() const
    {
        if (capacity > 0)
            return double(demand) / double(capacity);
        return demand > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
};

struct CongestionMap {
    int layers = 0;
    std::vector<EdgeLoad> edges;

    std::size_t overflow() const
    {
        return static_cast<std::size_t>(
            std::count_if(edges.begin(), edges.end(), [](const EdgeLoad &e) { return e.demand > e.capacity; }));
    }
};

inline CongestionMap congestion_map(const RoutingGraph &g)
{
    CongestionMap m{g.L(), {}};
    m.edges.reserve(g.edge_count());
    for (EdgeId e = 0; e < g.edge_count(); ++e) {
        const GridNode t = g.tail(e);
        const char d = g.is_via(e) ? 'u' : (g.dir(t.layer) == Direction::Horizontal ? 'h' : 'v');
        m.edges.push_back({t.layer, t.x, t.y, d, g.demand(e), g.capacity(e)});
    }
    return m;
}

struct LayerRatio {
    int layer = 1;
    bool via = false; // row for the via edges from layer to layer + 1
    long long demand = 0, capacity = 0;
    double aggregate = 0; // total demand / total capacity
    double max_edge = 0;
};

/// Planar row then via row per layer, ordered by layer.
inline std::vector<LayerRatio> demand_resource_ratios(const CongestionMap &m)
{
    int layers = m.layers;
    for (const auto &e : m.edges)
        layers = std::max(layers, e.layer);
    std::vector<LayerRatio> planar(static_cast<std::size_t>(layers)), vias(static_cast<std::size_t>(layers));
    std::vector<std::uint8_t> has_via(static_cast<std::size_t>(layers), 0), has_planar(planar.size(), 0);
    for (int l = 1; l <= layers; ++l) {
        planar[std::size_t(l - 1)].layer = l;
        vias[std::size_t(l - 1)] = {l, true, 0, 0, 0, 0};
    }
    for (const auto &e : m.edges) {
        auto &row = e.dir == 'u' ? vias[std::size_t(e.layer - 1)] : planar[std::size_t(e.layer - 1)];
        (e.dir == 'u' ? has_via : has_planar)[std::size_t(e.layer - 1)] = 1;
        row.demand += e.demand;
        row.capacity += e.capacity;
        row.max_edge = std::max(row.max_edge, e.ratio());
    }
    std::vector<LayerRatio> out;
    for (std::size_t i = 0; i < planar.size(); ++i) {
        for (auto *row : {&planar[i], &vias[i]}) {
            if (!(row->via ? has_via[i] : has_planar[i]))
                continue;
            row->aggregate = row->capacity > 0 ? double(row->demand) / double(row->capacity)
                                               : (row->demand > 0 ? std::numeric_limits<double>::infinity() : 0.0);
            out.push_back(*row);
        }
    }
    return out;
}

inline bool is_congested(const std::vector<LayerRatio> &rows)
{
    return std::any_of(rows.begin(), rows.end(), [](const LayerRatio &r) { return r.max_edge > 1.0; });
}

/// Largest total-demand/total-capacity ratio over the planar layers.
inline double max_layer_ratio(const std::vector<LayerRatio> &rows)
{
    double best = 0;
    for (const auto &r : rows)
        if (!r.via)
            best = std::max(best, r.aggregate);
    return best;
}

inline std::string format_ratio(double r)
{
    return std::isinf(r) ? std::string("inf") : text::format_double(r);
}

/// Heatmap rows of one layer: its planar edges and the vias rising from it.
inline std::string congestion_csv(const CongestionMap &m, int layer)
{
    std::string out = "layer,x,y,dir,demand,capacity,ratio\n";
    for (const auto &e : m.edges) {
        if (e.layer != layer)
            continue;
        out += std::to_string(e.layer) + "," + std::to_string(e.x) + "," + std::to_string(e.y) + "," + e.dir + "," +
               std::to_string(e.demand) + "," + std::to_string(e.capacity) + "," + format_ratio(e.ratio()) + "\n";
    }
    return out;
}

inline std::string edge_label(const RoutingGraph &g, EdgeId e)
{
    const GridNode t = g.tail(e);
    const char d = g.is_via(e) ? 'u' : (g.dir(t.layer) == Direction::Horizontal ? 'h' : 'v');
    return "L" + std::to_string(t.layer) + ":" + std::to_string(t.x) + ":" + std::to_string(t.y) + ":" + d;
}

/// `net,edge_list`; edges as L<layer>:<x>:<y>:<h|v|u>, space separated.
inline std::string routes_txt(const Netlist &nl, const RoutingGraph &g, const RouteOutcome &r)
{
    std::string out = "net,edge_list\n";
    for (const auto &nr : r.routes) {
        if (!nr.routed)
            continue;
        out += nl.nets.at(nr.net).id + ",";
        for (std::size_t i = 0; i < nr.edges.size(); ++i) {
            if (i)
                out += ' ';
            out += edge_label(g, nr.edges[i]);
        }
        out += "\n";
    }
    return out;
}

} // namespace fabroute
