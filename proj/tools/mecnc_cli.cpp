#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mecnc/harness.hpp"
#include "mecnc/oracle.hpp"

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> slots;
    std::optional<double> V;
    std::optional<double> lambda;
    std::optional<double> aggregate;
    std::optional<double> warmup;
    std::optional<std::string> controller;
    std::string out;
    bool trace = false;
    std::size_t every = 1;
};

struct Grid {
    std::vector<double> values;
    std::optional<double> from;
    std::optional<double> to;
    std::size_t points = 0;
    bool log = false;
    std::vector<std::uint64_t> seeds;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "instance config (JSON)")->required()->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "random seed");
    app->add_option("--slots", c.slots, "horizon in slots");
    app->add_option("--v", c.V, "cost-delay tradeoff weight V");
    app->add_option("--lambda", c.lambda, "arrival rate per UE per service, packets/slot");
    app->add_option("--aggregate-mbps", c.aggregate, "network-wide arrival rate in Mb/s, split equally");
    app->add_option("--warmup", c.warmup, "warm-up fraction of the horizon");
    app->add_option("--controller", c.controller, "mecnc, oracle or local")
        ->check(CLI::IsMember({"mecnc", "oracle", "local"}));
    app->add_option("--out", c.out, "output directory");
    app->add_flag("--trace", c.trace, "dump per-slot queues and decisions");
    app->add_option("--timeseries-every", c.every, "keep every n-th slot in timeseries.csv")
        ->check(CLI::PositiveNumber);
}

void add_grid(CLI::App* app, Grid& g) {
    app->add_option("--grid", g.values, "explicit grid values")->delimiter(',');
    app->add_option("--from", g.from, "first grid value");
    app->add_option("--to", g.to, "last grid value");
    app->add_option("--points", g.points, "number of grid points");
    app->add_flag("--log", g.log, "log-spaced grid");
    app->add_option("--seeds", g.seeds, "replicate seeds")->delimiter(',');
}

mecnc::RunConfig make_config(const Common& c) {
    auto cfg = mecnc::load_run_config(mecnc::load_json(c.config));
    if (c.seed) cfg.seed = *c.seed;
    if (c.slots) cfg.horizon = *c.slots;
    if (c.V) cfg.V = *c.V;
    if (c.warmup) cfg.warmup_fraction = *c.warmup;
    if (c.lambda) {
        cfg.rate = *c.lambda;
        cfg.aggregate_mbps.reset();
    }
    if (c.aggregate) {
        cfg.aggregate_mbps = *c.aggregate;
        cfg.rate.reset();
    }
    if (c.controller) cfg.controller = mecnc::parse_controller(*c.controller);
    cfg.out = c.out;
    cfg.trace = c.trace;
    cfg.timeseries_every = c.every;
    mecnc::validate(cfg);
    return cfg;
}

mecnc::SweepSpec make_spec(const Grid& g, std::uint64_t default_seed) {
    mecnc::SweepSpec spec;
    if (!g.values.empty()) {
        spec.grid = g.values;
    } else {
        if (!g.from || !g.to || g.points < 2)
            throw mecnc::ConfigError("sweep: give --grid or --from, --to and --points (>= 2)");
        for (std::size_t k = 0; k < g.points; ++k) {
            const double f = static_cast<double>(k) / static_cast<double>(g.points - 1);
            if (g.log) {
                if (!(*g.from > 0.0 && *g.to > 0.0)) throw mecnc::ConfigError("sweep: log grid needs positive ends");
                spec.grid.push_back(std::exp(std::log(*g.from) + f * (std::log(*g.to) - std::log(*g.from))));
            } else {
                spec.grid.push_back(*g.from + f * (*g.to - *g.from));
            }
        }
    }
    spec.seeds = g.seeds.empty() ? std::vector<std::uint64_t>{default_seed} : g.seeds;
    mecnc::validate(spec);
    return spec;
}

void print_run(const mecnc::RunResult& r) {
    const auto& m = r.metrics;
    std::printf("controller %s  V %s  rate %s  seed %llu\n", r.controller.c_str(), mecnc::format_double(r.V).c_str(),
                mecnc::format_double(r.rate).c_str(), static_cast<unsigned long long>(r.seed));
    std::printf("mean cost %.6g (se %.3g)  age delay %.6g ms  little delay %.6g ms  backlog %.6g  %s\n", m.mean_cost,
                m.cost_se, m.age_delay_ms, m.little_delay_ms, m.mean_backlog,
                r.stability.stable ? "stable" : "unstable");
    for (const auto& o : m.offload)
        std::printf("offload service %zu function %zu: %.4f\n", o.service, o.function, o.ratio());
}

void print_sweep(const mecnc::SweepReport& rep) {
    std::fputs(mecnc::sweep_csv(rep).c_str(), stdout);
    if (rep.knee)
        std::printf("knee %s%s\n", mecnc::format_double(*rep.knee).c_str(), rep.monotone ? "" : " (non-monotone)");
    else
        std::printf("knee above grid\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MEC network simulator"};
    app.require_subcommand(1);

    Common run_opts;
    auto* run = app.add_subcommand("run", "simulate one configuration");
    add_common(run, run_opts);

    Common sl_opts;
    Grid sl_grid;
    auto* sweep_lambda = app.add_subcommand("sweep-lambda", "sweep the arrival rate and estimate the knee");
    add_common(sweep_lambda, sl_opts);
    add_grid(sweep_lambda, sl_grid);

    Common sv_opts;
    Grid sv_grid;
    auto* sweep_v = app.add_subcommand("sweep-v", "sweep V at a fixed arrival rate");
    add_common(sweep_v, sv_opts);
    add_grid(sweep_v, sv_grid);

    std::string oracle_config;
    std::string objective = "max_throughput";
    std::optional<std::size_t> power_levels;
    std::optional<double> oracle_lambda;
    std::optional<int> project_ue;
    bool envelope = false;
    std::string oracle_out;
    auto* oracle = app.add_subcommand("oracle", "solve the stationary-policy program of a small instance");
    oracle->add_option("--config", oracle_config, "instance config (JSON)")->required()->check(CLI::ExistingFile);
    oracle->add_option("--objective", objective, "feasibility, max_throughput or min_cost")
        ->check(CLI::IsMember({"feasibility", "max_throughput", "min_cost"}));
    oracle->add_option("--power-levels", power_levels, "power levels per link, including zero");
    oracle->add_option("--lambda", oracle_lambda, "arrival rate per UE per service, packets/slot");
    oracle->add_option("--project", project_ue, "keep only this UE id and its nearest server");
    oracle->add_flag("--envelope", envelope, "continuous-power relaxation (lower bound)");
    oracle->add_option("--out", oracle_out, "write the solution JSON here instead of stdout");

    std::string validate_config;
    auto* validate = app.add_subcommand("validate", "check a config file");
    validate->add_option("--config", validate_config, "instance config (JSON)")->required();

    std::string aggregate_dir;
    auto* aggregate = app.add_subcommand("aggregate", "rebuild sweep.csv from stored run summaries");
    aggregate->add_option("--out", aggregate_dir, "sweep directory")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = make_config(run_opts);
            print_run(mecnc::run(cfg));
        } else if (sweep_lambda->parsed()) {
            const auto cfg = make_config(sl_opts);
            print_sweep(mecnc::sweep_lambda(make_spec(sl_grid, cfg.seed), cfg));
        } else if (sweep_v->parsed()) {
            const auto cfg = make_config(sv_opts);
            print_sweep(mecnc::sweep_V(make_spec(sv_grid, cfg.seed), cfg));
        } else if (oracle->parsed()) {
            auto cfg = mecnc::load_run_config(mecnc::load_json(oracle_config));
            if (oracle_lambda) cfg.rate = *oracle_lambda;
            mecnc::Instance inst = mecnc::resolved_instance(cfg);
            if (project_ue) inst = mecnc::project_instance(inst, inst.node_of(*project_ue));
            auto opts = cfg.oracle;
            if (power_levels) opts.power_levels = *power_levels;
            opts.envelope = envelope;
            const auto d = mecnc::discretize(inst, opts);
            mecnc::OracleSolution s;
            if (objective == "max_throughput") {
                std::vector<double> dir = inst.arrivals.rates;
                if (inst.arrivals.total() <= 0.0) dir.assign(dir.size(), 1.0);
                s = mecnc::max_throughput(d, dir);
            } else if (objective == "min_cost") {
                s = mecnc::min_cost(d, inst.arrivals.rates);
            } else {
                s = mecnc::check_feasible(d, inst.arrivals.rates);
            }
            const std::string text = mecnc::to_json(d, s).dump(2) + "\n";
            if (oracle_out.empty()) {
                std::fputs(text.c_str(), stdout);
            } else {
                std::ofstream f(oracle_out, std::ios::binary);
                if (!f) throw std::runtime_error("cannot write '" + oracle_out + "'");
                f << text;
            }
        } else if (validate->parsed()) {
            const auto cfg = mecnc::load_run_config(mecnc::load_json(validate_config));
            const auto& t = cfg.instance.topology;
            std::printf("ok: %zu UEs, %zu servers, %zu wired edges, %zu wireless links, %zu commodities\n",
                        t.num_ues, t.num_servers(), t.wired_edges.size(), t.wireless_links.size(),
                        cfg.instance.commodities.size());
        } else if (aggregate->parsed()) {
            const auto rep = mecnc::reaggregate(aggregate_dir);
            mecnc::write_sweep(rep, aggregate_dir);
            print_sweep(rep);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mecnc: %s\n", e.what());
        return 1;
    }
    return 0;
}
