// SPDX-License-Identifier: Apache-2.0
// Acceptance runner: one PASS/FAIL line per criterion. With arguments, runs
// only the named criteria (e.g. `acceptance AC4 AC8`).
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "fabroute/cli.hpp"
#include "fabroute/globalroute.hpp"
#include "fabroute/metrics.hpp"
#include "fabroute/placement.hpp"
#include "fabroute/rent.hpp"
#include "fabroute/synth.hpp"
#include "support/rent_oracle.hpp"
#include "support/route_oracle.hpp"
#include "support/small_designs.hpp"

using namespace fabroute;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string &what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
    void note(const std::string &what) { detail += (detail.empty() ? "" : "; ") + what; }
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double rel(double got, const Big &want)
{
    return static_cast<double>(boost::multiprecision::abs((Big(got) - want) / want));
}

// ---------------------------------------------------------------------------

Verdict ac1()
{
    Verdict v;
    const RentParams p{0.75, 3.0};
    v.require(cell_density(p.A, p) == 1.0, "G(E=A) != 1");
    v.require(routing_demand(1.0, p) == 1.0, "l(G=1) != 1");
    Rng rng(11);
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const double E = 1e-3 + rng.uniform() * 1e3;
        const double got = routing_demand(cell_density(E, p), p);
        const Big G = boost::multiprecision::pow(Big(E) / Big(3), Big(1) / Big(0.75));
        worst = std::max(worst, rel(got, boost::multiprecision::pow(G, Big(0.25))));
    }
    v.require(worst <= 1e-10, "oracle error " + num(worst));
    double worst_ratio = 0;
    const Big want = boost::multiprecision::pow(Big(2), Big(1) / Big(3));
    for (int i = 0; i < 100; ++i) {
        const double E = 1e-3 + rng.uniform() * 1e3;
        const double ratio = routing_demand(cell_density(2 * E, p), p) / routing_demand(cell_density(E, p), p);
        worst_ratio = std::max(worst_ratio, rel(ratio, want));
    }
    v.require(worst_ratio <= 1e-12, "l(2E)/l(E) error " + num(worst_ratio));
    v.note("max rel err " + num(worst) + ", ratio err " + num(worst_ratio));
    return v;
}

Verdict ac2()
{
    Verdict v;
    Rng rng(12);
    int bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const double pins = double(rng.between(1, 10'000'000));
        const double area = 1e-3 + rng.uniform() * 1e6;
        bad += effective_pin_density({pins, area, 5}) == effective_pin_density({pins, area, 1}) / 5 ? 0 : 1;
    }
    v.require(bad == 0, std::to_string(bad) + " inexact of 10000");
    v.note("10000 random (pins, area) pairs");
    return v;
}

Verdict ac3()
{
    Verdict v;
    Rng rng(2024);
    int checked = 0, mismatched = 0;
    while (checked < 50) {
        std::vector<Direction> dirs;
        const int X = int(rng.between(1, 6)), Y = int(rng.between(1, 6)), L = int(rng.between(1, 4));
        for (int l = 0; l < L; ++l)
            dirs.push_back(rng.chance(0.5) ? Direction::Horizontal : Direction::Vertical);
        RoutingGraph g(X, Y, dirs, 1, 1.0);
        for (EdgeId e = 0; e < g.edge_count(); ++e)
            g.set_capacity(e, int(rng.between(1, 3)));
        auto pick = [&] {
            return GridNode{int(rng.below(std::uint64_t(X))), int(rng.below(std::uint64_t(Y))),
                            int(rng.between(1, L))};
        };
        const GridNode s = pick(), t = pick();
        const auto d = testing_support::bfs_distance(g, s, t);
        if (!d)
            continue;
        const auto out = route(g, {{0, {{g.node(s.x, s.y, s.layer)}, {g.node(t.x, t.y, t.layer)}}}});
        mismatched += int(out.routes[0].edges.size()) == *d ? 0 : 1;
        ++checked;
    }
    v.require(mismatched == 0, std::to_string(mismatched) + " of 50 single nets differ from BFS");

    struct Fixture {
        int X, Y;
        std::vector<Direction> dirs;
        GridNode a0, a1, b0, b1;
        int max_len;
    };
    const std::vector<Fixture> fixtures{
        {4, 1, {Direction::Horizontal, Direction::Horizontal}, {0, 0, 1}, {3, 0, 1}, {1, 0, 1}, {2, 0, 1}, 12},
        {4, 4, {Direction::Horizontal, Direction::Vertical}, {0, 1, 1}, {3, 1, 1}, {1, 1, 1}, {2, 1, 1}, 11},
    };
    for (const auto &fx : fixtures) {
        RoutingGraph g(fx.X, fx.Y, fx.dirs, 1, 1.0);
        for (EdgeId e = 0; e < g.edge_count(); ++e)
            g.set_capacity(e, 1);
        const auto best = testing_support::best_pair_cost(g, fx.a0, fx.a1, fx.b0, fx.b1, fx.max_len);
        auto id = [&](GridNode p) { return g.node(p.x, p.y, p.layer); };
        const auto out = route(g, {{0, {{id(fx.a0)}, {id(fx.a1)}}}, {1, {{id(fx.b0)}, {id(fx.b1)}}}});
        const auto total = out.routes[0].edges.size() + out.routes[1].edges.size();
        v.require(best && out.overflow == 0 && total == *best,
                  "2-net fixture total " + std::to_string(total) + " vs optimum " +
                      (best ? std::to_string(*best) : std::string("none")));
        v.note(std::to_string(fx.X) + "x" + std::to_string(fx.Y) + " fixture cost " + std::to_string(total) +
               " (optimum " + (best ? std::to_string(*best) : std::string("none")) + ")");
    }
    return v;
}

Verdict ac4()
{
    Verdict v;
    const int instances = 20;
    double sum_s = 0, sum_t = 0;
    int overflow_ok = 0;
    for (int i = 0; i < instances; ++i) {
        SynthesisParams sp;
        sp.num_cells = 2000 + 50 * std::size_t(i);
        sp.rent_exponent = 0.75;
        sp.seed = std::uint64_t(i) + 1;
        const auto nl = generate_synthetic(sp);
        double ratio[2];
        std::size_t overflow[2];
        int k = 0;
        for (auto kind : {FabricKind::SkybridgeS3DC, FabricKind::TransistorMonolithic3D}) {
            const auto f = builtin_fabric(kind);
            const auto lib = CellLibrary::build(nl, f);
            PlaceParams pp;
            pp.seed = sp.seed;
            pp.moves_per_cell = 10;
            const auto pl = place(nl, lib, size_die(nl, f, 0.6), pp).placement;
            auto g = build_grid(f, pl.die, 4);
            apply_obstacles(g, nl, lib, pl);
            const auto out = route(nl, lib, pl, g);
            ratio[k] = max_layer_ratio(demand_resource_ratios(congestion_map(g)));
            overflow[k] = out.overflow;
            ++k;
        }
        sum_s += ratio[0];
        sum_t += ratio[1];
        overflow_ok += overflow[0] <= overflow[1] ? 1 : 0;
        std::printf("  AC4 %zu cells: s3dc ratio %.3f overflow %zu | tmi ratio %.3f overflow %zu\n", sp.num_cells,
                    ratio[0], overflow[0], ratio[1], overflow[1]);
        std::fflush(stdout);
    }
    const double ms = sum_s / instances, mt = sum_t / instances;
    v.require(ms < mt, "mean ratio s3dc " + num(ms) + " not below tmi " + num(mt));
    v.require(overflow_ok * 10 >= instances * 9, "s3dc overflow <= tmi in only " + std::to_string(overflow_ok));
    v.note("mean max-layer ratio s3dc " + num(ms) + " vs tmi " + num(mt) + "; overflow s3dc <= tmi in " +
           std::to_string(overflow_ok) + "/" + std::to_string(instances));
    return v;
}

Verdict ac5()
{
    Verdict v;
    const RentParams rp{};
    const double pins = 30000, base_area = 1000;
    auto demand = [&](double s3dc_area, double tmi_area, int n) {
        return compare_demand({{"2d", {pins, base_area, 1}},
                               {"tmi", {pins, base_area * tmi_area, 1}},
                               {"s3dc", {pins, base_area * s3dc_area, n}}},
                              rp, "2d");
    };
    auto ordered = [](const std::vector<DemandRow> &r) {
        return r[0].l_normalized <= r[2].l_normalized && r[2].l_normalized < r[1].l_normalized;
    };

    // The conditional claim over a sweep of footprints and access-layer counts.
    int premise = 0, broken = 0;
    for (int n = 1; n <= 8; ++n)
        for (int a = 1; a <= 100; ++a)
            for (int t : {30, 50, 70}) {
                // areas in percent of the baseline, compared exactly
                if (!(a * n > t) || a * n >= 100)
                    continue;
                ++premise;
                broken += ordered(demand(a / 100.0, t / 100.0, n)) ? 0 : 1;
            }
    v.require(broken == 0, std::to_string(broken) + " of " + std::to_string(premise) + " premise cases misordered");

    // Default fabric parameters.
    const auto s3 = builtin_fabric(FabricKind::SkybridgeS3DC);
    const auto tmi = builtin_fabric(FabricKind::TransistorMonolithic3D);
    const double s_area = s3.footprint_scale, t_area = tmi.footprint_scale;
    const auto rows = demand(s_area, t_area, s3.pin_layers);
    const bool holds = s_area * s3.pin_layers > t_area;
    v.note("sweep: ordering holds in " + std::to_string(premise - broken) + "/" + std::to_string(premise) +
           " cases with area_s3dc*N > area_tmi");
    v.note("defaults: area_s3dc*N = " + num(s_area * s3.pin_layers) + ", area_tmi = " + num(t_area) +
           "; l(2d)=1, l(s3dc)=" + num(rows[2].l_normalized) + ", l(tmi)=" + num(rows[1].l_normalized));
    v.require(ordered(rows), std::string("default ordering l(2d) <= l(s3dc) < l(tmi) does not hold") +
                                 (holds ? "" : " (premise false at defaults)"));
    return v;
}

Verdict ac6()
{
    Verdict v;
    const auto st = testing_support::small_optimality_trials(100);
    v.require(st.optimal >= 95, "optimum reached in " + std::to_string(st.optimal) + "/100");
    v.require(st.never_worse_than_start, "annealed HPWL above the random start");

    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SynthesisParams sp;
        sp.num_cells = 8 + (seed * 37) % 120;
        sp.seed = seed;
        const auto nl = generate_synthetic(sp);
        const auto f = builtin_fabric(static_cast<FabricKind>(seed % 3));
        const auto lib = CellLibrary::build(nl, f);
        PlaceParams pp;
        pp.seed = seed;
        pp.moves_per_cell = 10;
        const auto r = place(nl, lib, size_die(nl, f, 0.6), pp);
        if (r.final_hpwl > r.initial_hpwl) {
            v.require(false, "seed " + std::to_string(seed) + " ends above its start");
            break;
        }
        Placement moved = r.placement;
        moved.die.width += 1000;
        moved.die.height += 1000;
        for (auto &x : moved.x)
            x += 37 * int(seed);
        for (auto &y : moved.y)
            y += 11 * int(seed);
        if (hpwl(nl, lib, moved) != r.final_hpwl) {
            v.require(false, "hpwl changes under translation, seed " + std::to_string(seed));
            break;
        }
    }
    v.note("brute-force optimum in " + std::to_string(st.optimal) + "/100 runs");
    return v;
}

Verdict ac7()
{
    Verdict v;
    const RoutingGraph g(11, 1, {Direction::Horizontal, Direction::Vertical}, 1, 2.5);
    const auto f = builtin_fabric(FabricKind::Planar2D);
    NetRoute r{0, {}, true};
    for (int x = 0; x < 10; ++x)
        r.edges.push_back(*g.planar_edge(x, 0, 1));
    const std::vector<NetRoute> rs{r};
    const PowerParams p{1.0, 0.8, 0.2};
    const double base = wire_power(rs, g, f, p);
    double worst = 0;
    for (double k : {0.5, 1.7, 2.0, 3.0}) {
        worst = std::max(worst, std::abs(wire_power(rs, g, f, {k, 0.8, 0.2}) / (k * base) - 1));
        worst = std::max(worst, std::abs(wire_power(rs, g, f, {1.0, 0.8 * k, 0.2}) / (k * k * base) - 1));
        if (0.2 * k <= 1)
            worst = std::max(worst, std::abs(wire_power(rs, g, f, {1.0, 0.8, 0.2 * k}) / (k * base) - 1));
    }
    v.require(worst <= 1e-12, "power scaling error " + num(worst));

    const auto rep = make_report("x", 1, 1.0, 0.1, {0.2, 0.3}, 1.0, 1.0);
    v.require(rep.total_power == rep.wire_power + rep.pin_power + rep.internal_power, "total != sum");

    std::vector<BenchmarkReport> rows{make_report("2d", 1, 1, 5, {2.5, 2.5}, 100, 1.0),
                                      make_report("x", 1, 1, 2.5, {1.25, 1.25}, 50, 1.0)};
    ppa(rows, "2d");
    v.require(rows[1].ppa_normalized == 4.0, "PPA " + num(rows[1].ppa_normalized));

    std::vector<BenchmarkReport> des{make_report("2d", 1, 99.00, 1, {1, 1}, 1, 1),
                                     make_report("s3dc", 1, 30.69, 1, {1, 1}, 1, 1)};
    ppa(des, "2d");
    const auto d = delta_pct(30.69, 99.00);
    v.require(d && *d == -69, "delta wrong");
    const auto csv = emit_report(des, "2d", ReportFormat::Csv);
    v.require(csv.find("-69") != std::string::npos, "report lacks -69");
    v.note("wirelength delta " + (d ? std::to_string(*d) : std::string("n/a")) + "%");
    return v;
}

Verdict ac8()
{
    Verdict v;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "fabroute_acceptance_ac8";
    fs::remove_all(dir);
    std::ostringstream sink;
    auto run = [&](const std::string &name, unsigned threads) {
        cli::RunConfig c;
        c.fabric = "2d";
        c.cells = 4096;
        c.seed = 8;
        c.threads = threads;
        c.out = (dir / name).string();
        const int code = cli::cmd_run(c, sink, sink);
        return code == cli::kOk || code == cli::kCongested;
    };
    v.require(run("a", 4) && run("b", 4) && run("serial", 1), "cmd_run failed");
    const auto a = text::read_file((dir / "a" / "report.csv").string());
    v.require(a == text::read_file((dir / "b" / "report.csv").string()), "threaded reruns differ");
    v.require(a == text::read_file((dir / "serial" / "report.csv").string()), "threads 4 differs from threads 1");
    v.require(text::read_file((dir / "a" / "routes.txt").string()) ==
                  text::read_file((dir / "serial" / "routes.txt").string()),
              "routes differ across thread counts");
    fs::remove_all(dir);
    v.note("4096 cells, threads 4 twice and threads 1");
    return v;
}

Verdict ac9()
{
    Verdict v;
    std::string fits;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthesisParams sp;
        sp.num_cells = 4096;
        sp.rent_exponent = 0.75;
        sp.seed = seed;
        const double r = oracle::fit_rent_region_one(generate_synthetic(sp), seed).exponent;
        v.require(r >= 0.70 && r <= 0.80, "seed " + std::to_string(seed) + " fits r=" + num(r));
        fits += (fits.empty() ? "" : " ") + num(r);
    }
    v.note("fitted r: " + fits);
    return v;
}

} // namespace

int main(int argc, char **argv)
{
    struct Criterion {
        const char *name;
        double limit_s;
        std::function<Verdict()> fn;
    };
    const std::vector<Criterion> all{
        {"AC1", 1, ac1},   {"AC2", 1, ac2},   {"AC3", 10, ac3}, {"AC4", 600, ac4}, {"AC5", 1, ac5},
        {"AC6", 120, ac6}, {"AC7", 1, ac7}, {"AC8", 300, ac8}, {"AC9", 120, ac9},
    };
    std::set<std::string> only(argv + 1, argv + argc);
    int failed = 0;
    for (const auto &c : all) {
        if (!only.empty() && !only.count(c.name))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.fn();
        } catch (const std::exception &e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.require(secs < c.limit_s, "runtime over " + num(c.limit_s) + " s");
        std::printf("%s %s (%.2f s) %s\n", v.pass ? "PASS" : "FAIL", c.name, secs, v.detail.c_str());
        std::fflush(stdout);
        failed += v.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
