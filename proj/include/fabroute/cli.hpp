// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fabroute/error.hpp"
#include "fabroute/fabric.hpp"
#include "fabroute/globalroute.hpp"
#include "fabroute/metrics.hpp"
#include "fabroute/netlist.hpp"
#include "fabroute/placement.hpp"
#include "fabroute/rent.hpp"
#include "fabroute/synth.hpp"
#include "fabroute/text.hpp"

namespace fabroute::cli {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kUsage = 2, kCongested = 3 };

struct RunConfig {
    std::string fabric = "2d";
    std::string netlist; // path; empty means synthesize
    std::optional<std::size_t> cells;
    double rent = 0.75;
    double pins = 3.0;
    std::uint64_t seed = 1;
    double utilization = 0.6;
    int gcell = 4; // sites
    int max_iters = 40;
    unsigned threads = 1;
    double freq = 1.0;
    double activity = 0.2;
    double place_moves = 100; // per cell per temperature
    std::string label;        // defaults to the fabric kind
    std::string out = ".";
};

// ---------------------------------------------------------------------------
// Artifacts: every file is written as <name>.tmp and renamed only once the
// whole set is ready, so a failed run leaves the directory as it was.
// ---------------------------------------------------------------------------

class ArtifactSet {
  public:
    explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}
    ArtifactSet(const ArtifactSet &) = delete;
    ArtifactSet &operator=(const ArtifactSet &) = delete;
    ~ArtifactSet()
    {
        std::error_code ec;
        if (!committed_)
            for (const auto &name : names_)
                fs::remove(dir_ / (name + ".tmp"), ec);
    }

    void add(const std::string &name, std::string_view body)
    {
        if (names_.empty())
            fs::create_directories(dir_);
        text::write_file((dir_ / (name + ".tmp")).string(), body);
        names_.push_back(name);
    }

    void commit()
    {
        for (const auto &name : names_)
            fs::rename(dir_ / (name + ".tmp"), dir_ / name);
        committed_ = true;
    }

  private:
    fs::path dir_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

// ---------------------------------------------------------------------------
// Pipeline stages
// ---------------------------------------------------------------------------

inline Netlist load_netlist(const RunConfig &c)
{
    if (!c.netlist.empty() && c.cells)
        throw Error("give either --netlist or --cells, not both");
    if (!c.netlist.empty())
        return read_netlist(c.netlist);
    if (!c.cells)
        throw Error("no netlist: give --netlist <file> or --cells <n>");
    SynthesisParams sp;
    sp.num_cells = *c.cells;
    sp.rent_exponent = c.rent;
    sp.avg_pins_per_cell = c.pins;
    sp.seed = c.seed;
    check(sp);
    return generate_synthetic(sp);
}

inline std::string label_of(const RunConfig &c, const FabricSpec &f)
{
    return c.label.empty() ? std::string(to_string(f.kind)) : c.label;
}

inline std::string die_json(const std::string &label, const Netlist &nl, const FabricSpec &f, const Die &d)
{
    nlohmann::ordered_json j;
    j["label"] = label;
    j["fabric"] = std::string(to_string(f.kind));
    j["width"] = d.width;
    j["height"] = d.height;
    j["site_nm"] = d.site_nm;
    j["cell_width"] = d.cell_width;
    j["cell_height"] = d.cell_height;
    j["utilization"] = d.utilization;
    j["area_um2"] = d.area_um2();
    j["cells"] = nl.cells.size();
    j["total_pins"] = nl.terminal_count();
    j["pin_layers"] = f.pin_layers;
    return j.dump(2) + "\n";
}

inline nlohmann::json read_json(const fs::path &p)
{
    try {
        return nlohmann::json::parse(text::read_file(p.string()));
    } catch (const nlohmann::json::exception &e) {
        throw Error(p.string() + ": " + e.what());
    }
}

inline Die die_from_json(const nlohmann::json &j)
{
    try {
        Die d;
        d.width = j.at("width").get<int>();
        d.height = j.at("height").get<int>();
        d.site_nm = j.at("site_nm").get<double>();
        d.cell_width = j.at("cell_width").get<int>();
        d.cell_height = j.at("cell_height").get<int>();
        d.utilization = j.at("utilization").get<double>();
        return d;
    } catch (const nlohmann::json::exception &e) {
        throw Error(std::string("die.json: ") + e.what());
    }
}

struct Placed {
    Die die;
    Placement placement;
};

inline Placed place_stage(const RunConfig &c, const Netlist &nl, const CellLibrary &lib, const FabricSpec &f)
{
    if (!(c.utilization > 0 && c.utilization <= 1))
        throw Error("utilization must lie in (0, 1]");
    const Die die = size_die(nl, f, c.utilization);
    PlaceParams pp;
    pp.seed = c.seed;
    pp.moves_per_cell = c.place_moves;
    return {die, place(nl, lib, die, pp).placement};
}

struct Routed {
    RoutingGraph graph;
    RouteOutcome outcome;
    std::vector<LayerRatio> ratios;
    bool congested = false;
};

inline Routed route_stage(const RunConfig &c, const Netlist &nl, const CellLibrary &lib, const FabricSpec &f,
                          const Placement &pl)
{
    if (c.max_iters < 1)
        throw Error("max-iters must be >= 1");
    RoutingGraph g = build_grid(f, pl.die, c.gcell);
    apply_obstacles(g, nl, lib, pl);
    RouteParams rp;
    rp.max_iters = c.max_iters;
    rp.threads = std::max(1u, c.threads);
    auto outcome = route(nl, lib, pl, g, rp);
    auto ratios = demand_resource_ratios(congestion_map(g));
    const bool congested = outcome.overflow > 0 || is_congested(ratios);
    return {std::move(g), std::move(outcome), std::move(ratios), congested};
}

inline std::string ratio_summary(const std::vector<LayerRatio> &rows)
{
    std::string out = "layer,kind,demand,capacity,aggregate_ratio,max_edge_ratio\n";
    for (const auto &r : rows)
        out += std::to_string(r.layer) + "," + (r.via ? "via" : "planar") + "," + std::to_string(r.demand) + "," +
               std::to_string(r.capacity) + "," + format_ratio(r.aggregate) + "," + format_ratio(r.max_edge) + "\n";
    return out;
}

inline void add_route_artifacts(ArtifactSet &a, const Netlist &nl, const Routed &r)
{
    const auto map = congestion_map(r.graph);
    for (int l = 1; l <= r.graph.L(); ++l)
        a.add("congestion_L" + std::to_string(l) + ".csv", congestion_csv(map, l));
    a.add("congestion_summary.csv", ratio_summary(r.ratios));
    a.add("routes.txt", routes_txt(nl, r.graph, r.outcome));
}

inline void report_routing(const Routed &r, std::ostream &out, std::ostream &err)
{
    for (const auto &w : r.outcome.warnings)
        err << "warning: " << w << "\n";
    out << ratio_summary(r.ratios);
    out << "overflow " << r.outcome.overflow << " after " << r.outcome.iterations << " iterations"
        << (r.outcome.stalled ? " (stopped: no progress)" : "") << "\n";
    if (r.congested)
        err << "congested: " << r.outcome.overflow << " overflowing edges\n";
}

// ---------------------------------------------------------------------------
// Report rows as JSON (read back by `compare`)
// ---------------------------------------------------------------------------

inline std::vector<BenchmarkReport> reports_from_json(const nlohmann::json &doc, const std::string &where)
{
    std::vector<BenchmarkReport> rows;
    try {
        for (const auto &o : doc.at("rows")) {
            BenchmarkReport r;
            r.label = o.at("label").get<std::string>();
            r.cell_count = o.at("cell_count").get<std::size_t>();
            for (const auto &c : detail::report_columns())
                r.*c.field = o.at(c.name).get<double>();
            rows.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception &e) {
        throw Error(where + ": " + e.what());
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

inline int cmd_gen(const RunConfig &c, std::ostream &out)
{
    if (c.cells && !c.netlist.empty())
        throw Error("gen takes --cells, not --netlist");
    if (!c.cells)
        throw Error("gen needs --cells");
    const std::string body = serialize(load_netlist(c));
    if (c.out.empty() || c.out == "-") {
        out << body;
    } else {
        const fs::path p(c.out);
        if (p.has_parent_path())
            fs::create_directories(p.parent_path());
        text::write_file(c.out + ".tmp", body);
        fs::rename(c.out + ".tmp", c.out);
    }
    return kOk;
}

inline int cmd_place(const RunConfig &c, std::ostream &out)
{
    const FabricSpec f = fabric_from(c.fabric);
    const Netlist nl = load_netlist(c);
    const auto lib = CellLibrary::build(nl, f);
    const auto placed = place_stage(c, nl, lib, f);
    ArtifactSet a(c.out);
    a.add("placement.csv", placement_csv(nl, placed.placement));
    a.add("die.json", die_json(label_of(c, f), nl, f, placed.die));
    a.commit();
    out << "hpwl " << text::format_double(hpwl(nl, lib, placed.placement)) << " die " << placed.die.width << "x"
        << placed.die.height << " sites\n";
    return kOk;
}

inline int cmd_route(const RunConfig &c, const std::string &placement_dir, std::ostream &out, std::ostream &err)
{
    const FabricSpec f = fabric_from(c.fabric);
    const Netlist nl = load_netlist(c);
    const auto lib = CellLibrary::build(nl, f);
    const fs::path dir(placement_dir);
    const Die die = die_from_json(read_json(dir / "die.json"));
    if (die.site_nm != f.site_nm || die.cell_width != f.cell_width || die.cell_height != f.cell_height)
        throw Error((dir / "die.json").string() + ": die was sized for a different fabric");
    const Placement pl = parse_placement_csv(text::read_file((dir / "placement.csv").string()), nl, die);
    if (const auto why = legality_error(nl, lib, pl); !why.empty())
        throw Error((dir / "placement.csv").string() + ": " + why);
    const Routed r = route_stage(c, nl, lib, f, pl);
    ArtifactSet a(c.out);
    add_route_artifacts(a, nl, r);
    a.commit();
    report_routing(r, out, err);
    return r.congested ? kCongested : kOk;
}

inline int cmd_run(const RunConfig &c, std::ostream &out, std::ostream &err)
{
    const FabricSpec f = fabric_from(c.fabric);
    const Netlist nl = load_netlist(c);
    PowerParams pp = power_params_for(f, c.freq, c.activity);
    check(pp);
    const auto lib = CellLibrary::build(nl, f);
    const auto placed = place_stage(c, nl, lib, f);
    const Routed r = route_stage(c, nl, lib, f, placed.placement);

    const std::string label = label_of(c, f);
    std::vector<BenchmarkReport> rows{make_report(label, nl.cells.size(),
                                                  total_wirelength(r.outcome.routes, r.graph, f),
                                                  wire_power(r.outcome.routes, r.graph, f, pp),
                                                  cell_powers(nl, f.energy, pp), placed.die.area_um2(), c.freq)};
    ppa(rows, label);

    ArtifactSet a(c.out);
    a.add("placement.csv", placement_csv(nl, placed.placement));
    a.add("die.json", die_json(label, nl, f, placed.die));
    add_route_artifacts(a, nl, r);
    a.add("report.csv", emit_report(rows, label, ReportFormat::Csv));
    a.add("report.json", emit_report(rows, label, ReportFormat::Json));
    a.commit();
    report_routing(r, out, err);
    return r.congested ? kCongested : kOk;
}

/// Each input is a directory holding die.json, optionally written as label=dir.
inline int cmd_analyze(const std::vector<std::string> &inputs, const std::string &baseline, const RentParams &rp,
                       const std::string &out_file, std::ostream &out)
{
    std::vector<LabeledDensity> designs;
    for (const auto &in : inputs) {
        std::string label, dir = in;
        if (const auto eq = in.find('='); eq != std::string::npos) {
            label = in.substr(0, eq);
            dir = in.substr(eq + 1);
        }
        const fs::path p = fs::path(dir) / "die.json";
        if (!fs::exists(p))
            throw Error("missing placement artifact '" + p.string() + "'");
        const auto j = read_json(p);
        try {
            if (label.empty())
                label = j.at("label").get<std::string>();
            designs.push_back({label,
                               {j.at("total_pins").get<double>(), j.at("area_um2").get<double>(),
                                j.at("pin_layers").get<int>()}});
        } catch (const nlohmann::json::exception &e) {
            throw Error(p.string() + ": " + e.what());
        }
    }
    const std::string csv = demand_csv(compare_demand(designs, rp, baseline));
    if (out_file.empty() || out_file == "-") {
        out << csv;
    } else {
        text::write_file(out_file + ".tmp", csv);
        fs::rename(out_file + ".tmp", out_file);
    }
    return kOk;
}

/// Each input is a run directory or a report.json file.
inline int cmd_compare(const std::vector<std::string> &inputs, const std::string &baseline,
                       const std::string &out_dir, std::ostream &out)
{
    std::vector<BenchmarkReport> rows;
    for (const auto &in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p))
            p /= "report.json";
        if (!fs::exists(p))
            throw Error("missing report '" + p.string() + "'");
        for (auto &r : reports_from_json(read_json(p), p.string()))
            rows.push_back(std::move(r));
    }
    ppa(rows, baseline);
    const std::string csv = emit_report(rows, baseline, ReportFormat::Csv);
    if (!out_dir.empty()) {
        ArtifactSet a(out_dir);
        a.add("report.csv", csv);
        a.add("report.json", emit_report(rows, baseline, ReportFormat::Json));
        a.commit();
    }
    out << csv;
    return kOk;
}

// ---------------------------------------------------------------------------
// Argument handling
// ---------------------------------------------------------------------------

/// Turns `--config <file>` (TOML/INI, keys named like the long flags, optionally
/// under a [<subcommand>] section) into leading flags so explicit ones win.
inline std::vector<std::string> expand_config(std::vector<std::string> args)
{
    if (args.empty())
        return args;
    const std::string sub = args[0];
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string path;
        std::size_t used = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            used = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            used = 1;
        } else {
            continue;
        }
        if (!fs::exists(path))
            throw Error("cannot open config '" + path + "'");
        std::vector<std::string> flags;
        for (const auto &item : CLI::ConfigTOML().from_file(path)) {
            if (item.name.empty() || item.name == "++" || item.name == "--")
                continue;
            if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == sub))
                continue;
            flags.push_back((item.name.size() == 1 ? "-" : "--") + item.name);
            for (const auto &v : item.inputs)
                flags.push_back(v);
        }
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                   args.begin() + static_cast<std::ptrdiff_t>(i + used));
        args.insert(args.begin() + 1, flags.begin(), flags.end());
        break;
    }
    return args;
}

inline int main(std::vector<std::string> args, std::ostream &out, std::ostream &err)
{
    CLI::App app{"fabroute: routability comparison of 2D, T-MI and S3DC fabrics"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    RunConfig c;
    std::string placement_dir, baseline = "2d", out_file;
    std::vector<std::string> inputs;
    RentParams rp;
    std::optional<std::size_t> cells;

    auto common = [&](CLI::App *s, bool routing) {
        s->add_option("--fabric", c.fabric, "2d, tmi, s3dc or a fabric config file")->capture_default_str();
        s->add_option("--netlist,-n", c.netlist, "netlist file");
        s->add_option("--cells", cells, "synthesize a netlist with this many cells");
        s->add_option("--rent", c.rent, "Rent exponent for --cells")->capture_default_str();
        s->add_option("--pins", c.pins, "average pins per cell for --cells")->capture_default_str();
        s->add_option("--seed", c.seed, "seed for synthesis and placement")->capture_default_str();
        s->add_option("--utilization", c.utilization)->capture_default_str();
        s->add_option("--place-moves", c.place_moves, "annealing moves per cell per temperature")
            ->capture_default_str();
        s->add_option("--label", c.label, "report label (default: fabric kind)");
        s->add_option("-o,--out", c.out, "output directory")->capture_default_str();
        s->add_option("--config", "config file; flags override it");
        if (routing) {
            s->add_option("--gcell", c.gcell, "gcell size in sites")->capture_default_str();
            s->add_option("--max-iters", c.max_iters, "router iteration limit")->capture_default_str();
            s->add_option("--threads", c.threads, "router worker threads")->capture_default_str();
        }
    };

    auto *gen = app.add_subcommand("gen", "write a synthetic netlist");
    gen->add_option("--cells", cells, "cell count")->required();
    gen->add_option("--rent", c.rent)->capture_default_str();
    gen->add_option("--pins", c.pins)->capture_default_str();
    gen->add_option("--seed", c.seed)->capture_default_str();
    gen->add_option("-o,--out", c.out, "output file, - for stdout")->required();
    gen->add_option("--config", "config file; flags override it");

    auto *place = app.add_subcommand("place", "place a netlist");
    common(place, false);
    auto *route = app.add_subcommand("route", "route a placed netlist");
    common(route, true);
    route->add_option("--placement", placement_dir, "directory with placement.csv and die.json")->required();
    auto *run = app.add_subcommand("run", "place, route and report");
    common(run, true);
    run->add_option("--freq", c.freq, "clock frequency, GHz")->capture_default_str();
    run->add_option("--activity", c.activity, "switching activity")->capture_default_str();

    auto *analyze = app.add_subcommand("analyze", "analytic routing demand of placed designs");
    analyze->add_option("inputs", inputs, "placement directories, each optionally label=dir")->required();
    analyze->add_option("--baseline", baseline)->capture_default_str();
    analyze->add_option("--rent", rp.r)->capture_default_str();
    analyze->add_option("--pins", rp.A, "terminals per cell")->capture_default_str();
    analyze->add_option("-o,--out", out_file, "CSV file (default stdout)");
    analyze->add_option("--config", "config file; flags override it");

    auto *compare = app.add_subcommand("compare", "merge run reports against a baseline");
    compare->add_option("inputs", inputs, "run directories or report.json files")->required();
    compare->add_option("--baseline", baseline)->capture_default_str();
    compare->add_option("-o,--out", out_file, "output directory for report.{csv,json}");
    compare->add_option("--config", "config file; flags override it");

    try {
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        c.cells = cells;
        if (gen->parsed())
            return cmd_gen(c, out);
        if (place->parsed())
            return cmd_place(c, out);
        if (route->parsed())
            return cmd_route(c, placement_dir, out, err);
        if (run->parsed())
            return cmd_run(c, out, err);
        if (analyze->parsed()) {
            check(rp);
            return cmd_analyze(inputs, baseline, rp, out_file, out);
        }
        return cmd_compare(inputs, baseline, out_file, out);
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

inline int main(int argc, char **argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return main(std::move(args), std::cout, std::cerr);
}

} // namespace fabroute::cli
