#include "mecnc/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mecnc {

using nlohmann::json;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

json number_json(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double number_from(const json& j) {
    if (j.is_string()) return std::stod(j.get<std::string>());
    return j.get<double>();
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

std::string commodity_cols(const Instance& inst, std::size_t c) {
    const auto& item = inst.commodities[c];
    return std::to_string(inst.topology.ids[item.dest]) + "," + std::to_string(inst.services[item.service].id) +
           "," + std::to_string(item.stage);
}

class Tracer {
public:
    Tracer(const Instance& inst, const std::filesystem::path& dir)
        : inst_(&inst), queues_(open_out(dir / "trace_queues.csv")), decisions_(open_out(dir / "trace_decisions.csv")) {
        queues_ << "slot,node,dest,service,stage,backlog\n";
        decisions_ << "slot,kind,from,to,dest,service,stage,level,power,capacity,planned,executed\n";
    }

    void slot(Slot t, const QueueState& q, const Decision& d, const ExecutedFlows& ex) {
        const auto& topo = inst_->topology;
        for (NodeIndex i = 0; i < q.num_nodes(); ++i) {
            const auto b = q.backlogs(i);
            for (std::size_t c = 0; c < b.size(); ++c)
                if (b[c] != 0.0)
                    queues_ << t << ',' << topo.ids[i] << ',' << commodity_cols(*inst_, c) << ','
                            << format_double(b[c]) << '\n';
        }
        for (std::size_t k = 0; k < d.plan.processing.size(); ++k) {
            const auto& f = d.plan.processing[k];
            const auto id = topo.ids[f.node];
            decisions_ << t << ",process," << id << ',' << id << ',' << commodity_cols(*inst_, f.commodity) << ','
                       << d.compute_level[f.node] << ",0,"
                       << format_double(inst_->compute[f.node].capacity[d.compute_level[f.node]]) << ','
                       << format_double(f.amount) << ',' << format_double(ex.processing[k]) << '\n';
        }
        for (std::size_t k = 0; k < d.plan.wired.size(); ++k) {
            const auto& f = d.plan.wired[k];
            const auto& e = topo.wired_edges[f.link];
            decisions_ << t << ",wired," << topo.ids[e.from] << ',' << topo.ids[e.to] << ','
                       << commodity_cols(*inst_, f.commodity) << ',' << d.wired_level[f.link] << ",0,"
                       << format_double(inst_->wired[f.link].capacity[d.wired_level[f.link]]) << ','
                       << format_double(f.amount) << ',' << format_double(ex.wired[k]) << '\n';
        }
        for (std::size_t k = 0; k < d.plan.wireless.size(); ++k) {
            const auto& f = d.plan.wireless[k];
            const auto& l = topo.wireless_links[f.link];
            decisions_ << t << ",wireless," << topo.ids[l.from] << ',' << topo.ids[l.to] << ','
                       << commodity_cols(*inst_, f.commodity) << ",0," << format_double(d.power[f.link]) << ','
                       << format_double(d.wireless_capacity[f.link]) << ',' << format_double(f.amount) << ','
                       << format_double(ex.wireless[k]) << '\n';
        }
    }

private:
    const Instance* inst_;
    std::ofstream queues_;
    std::ofstream decisions_;
};

json cost_json(const SlotCost& c) {
    return json{{"proc_setup", number_json(c.proc_setup)},
                {"proc_unit", number_json(c.proc_unit)},
                {"wired_setup", number_json(c.wired_setup)},
                {"wired_unit", number_json(c.wired_unit)},
                {"wireless_energy", number_json(c.wireless_energy)}};
}

SlotCost cost_from(const json& j) {
    SlotCost c;
    c.proc_setup = number_from(j.at("proc_setup"));
    c.proc_unit = number_from(j.at("proc_unit"));
    c.wired_setup = number_from(j.at("wired_setup"));
    c.wired_unit = number_from(j.at("wired_unit"));
    c.wireless_energy = number_from(j.at("wireless_energy"));
    return c;
}

std::string run_dir_name(std::size_t index, std::uint64_t seed) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%03zu_seed%llu", index, static_cast<unsigned long long>(seed));
    return buf;
}

const char* variable_name(SweepVariable v) { return v == SweepVariable::lambda ? "lambda" : "V"; }

SweepReport sweep(const SweepSpec& spec, const RunConfig& base) {
    validate(spec);
    validate(base);
    std::vector<std::vector<RunResult>> runs(spec.grid.size());
    std::vector<std::vector<std::string>> names(spec.grid.size());
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        for (std::uint64_t seed : spec.seeds) {
            RunConfig cfg = base;
            cfg.seed = seed;
            if (spec.variable == SweepVariable::lambda) {
                cfg.rate = spec.grid[i];
                cfg.aggregate_mbps.reset();
            } else {
                cfg.V = spec.grid[i];
            }
            if (!base.out.empty()) {
                names[i].push_back(run_dir_name(i, seed));
                cfg.out = base.out / "runs" / names[i].back();
            }
            RunResult r = run(cfg);
            r.series.clear();
            r.series.shrink_to_fit();
            runs[i].push_back(std::move(r));
        }
    }
    SweepReport report = aggregate_sweep(spec, std::move(runs));
    if (!base.out.empty()) {
        write_sweep(report, base.out);
        json manifest{{"variable", variable_name(spec.variable)},
                      {"grid", spec.grid},
                      {"seeds", spec.seeds},
                      {"runs", names},
                      {"knee", report.knee ? json(*report.knee) : json(nullptr)},
                      {"monotone", report.monotone}};
        open_out(base.out / "sweep.json") << manifest.dump(2) << '\n';
    }
    return report;
}

} // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

ControllerKind parse_controller(const std::string& name) {
    if (name == "mecnc") return ControllerKind::mecnc;
    if (name == "oracle") return ControllerKind::oracle;
    if (name == "local") return ControllerKind::local;
    throw ConfigError("controller: expected mecnc, oracle or local, got '" + name + "'");
}

const char* to_string(ControllerKind kind) {
    switch (kind) {
    case ControllerKind::mecnc: return "mecnc";
    case ControllerKind::oracle: return "oracle";
    case ControllerKind::local: return "local";
    }
    return "?";
}

void validate(const RunConfig& c) {
    if (c.horizon < 1000) throw ConfigError("run: horizon must be at least 1000 slots");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 0.5))
        throw ConfigError("run: warm-up fraction must lie in [0, 0.5)");
    if (!(c.V >= 0.0) || !std::isfinite(c.V)) throw ConfigError("run: V must be finite and nonnegative");
    if (c.rate && c.aggregate_mbps) throw ConfigError("run: give either a per-UE rate or an aggregate rate");
    if (c.rate && !(*c.rate >= 0.0)) throw ConfigError("run: arrival rate must be nonnegative");
    if (c.aggregate_mbps && !(*c.aggregate_mbps >= 0.0))
        throw ConfigError("run: aggregate rate must be nonnegative");
    if (c.timeseries_every == 0) throw ConfigError("run: timeseries stride must be positive");
}

Instance resolved_instance(const RunConfig& c) {
    Instance inst = c.instance;
    if (c.rate) set_uniform_rate(inst, *c.rate);
    if (c.aggregate_mbps) set_uniform_rate(inst, aggregate_mbps_to_rate(*c.aggregate_mbps, inst));
    return inst;
}

RunConfig load_run_config(const json& config) {
    RunConfig c;
    c.instance = build_instance(config);
    try {
        if (config.contains("run")) {
            const json& r = config.at("run");
            c.V = r.value("V", c.V);
            c.horizon = r.value("slots", c.horizon);
            c.seed = r.value("seed", c.seed);
            c.warmup_fraction = r.value("warmup", c.warmup_fraction);
            if (r.contains("rate")) c.rate = r.at("rate").get<double>();
            if (r.contains("aggregate_mbps")) c.aggregate_mbps = r.at("aggregate_mbps").get<double>();
            if (r.contains("controller")) c.controller = parse_controller(r.at("controller").get<std::string>());
            c.oracle_margin = r.value("oracle_margin", c.oracle_margin);
        }
        if (config.contains("oracle")) {
            const json& o = config.at("oracle");
            c.oracle.power_levels = o.value("power_levels", c.oracle.power_levels);
            c.oracle.tangents = o.value("tangents", c.oracle.tangents);
            c.oracle.max_variables = o.value("max_variables", c.oracle.max_variables);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(c);
    return c;
}

json snapshot(const RunConfig& c) {
    json j = to_config(c.instance);
    json r{{"V", c.V},
           {"slots", c.horizon},
           {"seed", c.seed},
           {"warmup", c.warmup_fraction},
           {"controller", to_string(c.controller)},
           {"oracle_margin", c.oracle_margin}};
    if (c.rate) r["rate"] = *c.rate;
    if (c.aggregate_mbps) r["aggregate_mbps"] = *c.aggregate_mbps;
    j["run"] = r;
    j["oracle"] = {{"power_levels", c.oracle.power_levels},
                   {"tangents", c.oracle.tangents},
                   {"max_variables", c.oracle.max_variables}};
    return j;
}

std::unique_ptr<Controller> make_controller(const RunConfig& c, const Instance& inst) {
    switch (c.controller) {
    case ControllerKind::mecnc: return std::make_unique<MecncController>(inst, c.V);
    case ControllerKind::local: return std::make_unique<MecncController>(inst, c.V, MecncOptions{true});
    case ControllerKind::oracle:
        if (inst.wireless.radio.mode != ChannelMode::quantized || inst.topology.mobility_variance != 0.0)
            throw ConfigError("oracle controller needs the quantized channel and mobility_variance 0");
        return make_oracle_controller(inst, c.oracle, c.oracle_margin);
    }
    throw ConfigError("unknown controller");
}

RunResult run(const RunConfig& config, const SlotObserver& observer) {
    validate(config);
    const Instance inst = resolved_instance(config);
    const auto ctrl = make_controller(config, inst);
    const auto& topo = inst.topology;
    const auto& radio = inst.wireless.radio;

    RunResult result;
    result.controller = ctrl->name();
    result.V = config.V;
    result.seed = config.seed;
    result.rate = inst.arrivals.rates.empty() ? 0.0
                                              : inst.arrivals.total() / static_cast<double>(inst.arrivals.rates.size());

    std::unique_ptr<Tracer> tracer;
    if (!config.out.empty()) {
        std::filesystem::create_directories(config.out);
        if (config.trace) tracer = std::make_unique<Tracer>(inst, config.out);
    }

    RngStreams rng(config.seed);
    std::vector<Vec2> positions = topo.positions;
    QueueState queues(topo.num_nodes(), inst.commodities.size());
    const KappaTable weights = inst.arrivals.total() > 0.0 ? kappa(inst) : KappaTable{};
    const auto caps = arrival_caps(inst.arrivals.rates, inst.arrivals.a_max_factor);
    MetricsAccumulator acc(inst, config.horizon, config.warmup_fraction);
    result.series.reserve(config.horizon);

    for (Slot t = 0; t < static_cast<Slot>(config.horizon); ++t) {
        if (t > 0 && topo.mobility_variance > 0.0)
            step_mobility(positions, topo.num_ues, topo.mobility_variance, topo.area_side, rng.mobility);
        const ChannelState channel = sample_channel_gains(topo, positions, radio, rng.channel);
        const ArrivalBatch arrivals = sample_arrivals(rng.arrivals, inst.arrivals.rates, caps);

        SlotRecord record = make_slot_record(inst, weights, queues, t, {}, {});
        SlotOutcome outcome;
        Decision decision;
        try {
            decision = ctrl->decide(SlotContext{queues, channel, t, rng.policy});
            outcome = apply_decision(inst, queues, decision, arrivals, t);
        } catch (const PlanError& e) {
            throw RunError("slot " + std::to_string(t) + ": " + e.what());
        } catch (const OracleError& e) {
            throw RunError("slot " + std::to_string(t) + ": " + e.what());
        }
        record.cost = slot_cost(inst, decision, outcome.executed);
        record_deliveries(inst, outcome.deliveries, record);
        if (!std::isfinite(record.backlog) || !std::isfinite(record.cost.total()))
            throw RunError("slot " + std::to_string(t) + ": non-finite backlog or cost");
        acc.accumulate(record, decision, outcome.executed);
        if (tracer) tracer->slot(t, queues, decision, outcome.executed);
        if (observer) observer(SlotView{t, queues, channel, decision, outcome, record});
        result.series.push_back(record);
    }
    result.metrics = acc.finish();
    result.stability = classify_stability(acc.backlog_trajectory());
    if (!config.out.empty()) write_run(config, result, config.out);
    return result;
}

json summary_json(const RunResult& r) {
    const auto& m = r.metrics;
    json offload = json::array();
    for (const auto& o : m.offload)
        offload.push_back({{"service", o.service},
                           {"function", o.function},
                           {"at_servers", number_json(o.at_servers)},
                           {"total", number_json(o.total)},
                           {"ratio", number_json(o.ratio())}});
    return json{{"controller", r.controller},
                {"V", number_json(r.V)},
                {"rate", number_json(r.rate)},
                {"seed", r.seed},
                {"slots", m.slots},
                {"measured_slots", m.measured_slots},
                {"mean_cost", number_json(m.mean_cost)},
                {"cost_se", number_json(m.cost_se)},
                {"breakdown", cost_json(m.mean_breakdown)},
                {"little_delay_slots", number_json(m.little_delay_slots)},
                {"age_delay_slots", number_json(m.age_delay_slots)},
                {"little_delay_ms", number_json(m.little_delay_ms)},
                {"age_delay_ms", number_json(m.age_delay_ms)},
                {"delivered", number_json(m.delivered)},
                {"mean_backlog", number_json(m.mean_backlog)},
                {"offload", offload},
                {"stable", r.stability.stable},
                {"middle_backlog", number_json(r.stability.middle_mean)},
                {"trailing_backlog", number_json(r.stability.trailing_mean)}};
}

RunResult summary_from_json(const json& j) {
    RunResult r;
    try {
        r.controller = j.at("controller").get<std::string>();
        r.V = number_from(j.at("V"));
        r.rate = number_from(j.at("rate"));
        r.seed = j.at("seed").get<std::uint64_t>();
        auto& m = r.metrics;
        m.slots = j.at("slots").get<std::size_t>();
        m.measured_slots = j.at("measured_slots").get<std::size_t>();
        m.mean_cost = number_from(j.at("mean_cost"));
        m.cost_se = number_from(j.at("cost_se"));
        m.mean_breakdown = cost_from(j.at("breakdown"));
        m.little_delay_slots = number_from(j.at("little_delay_slots"));
        m.age_delay_slots = number_from(j.at("age_delay_slots"));
        m.little_delay_ms = number_from(j.at("little_delay_ms"));
        m.age_delay_ms = number_from(j.at("age_delay_ms"));
        m.delivered = number_from(j.at("delivered"));
        m.mean_backlog = number_from(j.at("mean_backlog"));
        for (const auto& o : j.at("offload"))
            m.offload.push_back({o.at("service").get<std::size_t>(), o.at("function").get<std::size_t>(),
                                 number_from(o.at("at_servers")), number_from(o.at("total"))});
        r.stability.stable = j.at("stable").get<bool>();
        r.stability.middle_mean = number_from(j.at("middle_backlog"));
        r.stability.trailing_mean = number_from(j.at("trailing_backlog"));
        m.stable = r.stability.stable;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("summary: ") + e.what());
    }
    return r;
}

void write_run(const RunConfig& config, const RunResult& result, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    open_out(dir / "config.snapshot") << snapshot(config).dump(2) << '\n';
    open_out(dir / "summary.json") << summary_json(result).dump(2) << '\n';
    auto ts = open_out(dir / "timeseries.csv");
    ts << "slot,cost,proc_setup,proc_unit,wired_setup,wired_unit,wireless_energy,weighted_backlog,backlog,"
          "delivered,age_sum\n";
    for (const auto& r : result.series) {
        if (r.slot % static_cast<Slot>(config.timeseries_every) != 0) continue;
        ts << r.slot << ',' << format_double(r.cost.total()) << ',' << format_double(r.cost.proc_setup) << ','
           << format_double(r.cost.proc_unit) << ',' << format_double(r.cost.wired_setup) << ','
           << format_double(r.cost.wired_unit) << ',' << format_double(r.cost.wireless_energy) << ','
           << format_double(r.weighted_backlog) << ',' << format_double(r.backlog) << ','
           << format_double(r.delivered) << ',' << format_double(r.age_sum) << '\n';
    }
}

void validate(const SweepSpec& spec) {
    if (spec.grid.empty()) throw ConfigError("sweep: empty grid");
    for (std::size_t i = 1; i < spec.grid.size(); ++i)
        if (!(spec.grid[i] > spec.grid[i - 1])) throw ConfigError("sweep: grid must be strictly increasing");
    if (spec.seeds.empty()) throw ConfigError("sweep: at least one replicate seed required");
}

SweepReport aggregate_sweep(const SweepSpec& spec, std::vector<std::vector<RunResult>> runs) {
    SweepReport rep;
    rep.spec = spec;
    for (std::size_t i = 0; i < spec.grid.size(); ++i) {
        SweepPoint p;
        p.value = spec.grid[i];
        p.runs = std::move(runs.at(i));
        const double n = static_cast<double>(p.runs.size());
        double se2 = 0.0;
        double age = 0.0;
        double little = 0.0;
        for (const auto& r : p.runs) {
            const auto& m = r.metrics;
            p.stable_votes += r.stability.stable ? 1 : 0;
            p.mean_cost += m.mean_cost;
            se2 += m.cost_se * m.cost_se;
            p.breakdown += m.mean_breakdown;
            p.mean_backlog += m.mean_backlog;
            age += m.age_delay_ms;
            little += m.little_delay_ms;
            if (p.offload.empty()) {
                p.offload = m.offload;
                for (auto& o : p.offload) o.at_servers = o.total = 0.0;
            }
            for (std::size_t k = 0; k < m.offload.size() && k < p.offload.size(); ++k) {
                p.offload[k].at_servers += m.offload[k].at_servers;
                p.offload[k].total += m.offload[k].total;
            }
        }
        p.stable = 2 * p.stable_votes > p.runs.size();
        p.mean_cost /= n;
        p.cost_se = std::sqrt(se2) / n;
        p.breakdown = p.breakdown.scaled(1.0 / n);
        p.mean_backlog /= n;
        p.age_delay_ms = p.stable ? age / n : inf;
        p.little_delay_ms = p.stable ? little / n : inf;
        rep.points.push_back(std::move(p));
    }
    std::size_t first = rep.points.size();
    for (std::size_t i = 0; i < rep.points.size(); ++i)
        if (!rep.points[i].stable) {
            first = i;
            break;
        }
    if (first < rep.points.size()) {
        rep.knee = first == 0 ? spec.grid[0] : 0.5 * (spec.grid[first - 1] + spec.grid[first]);
        for (std::size_t i = first + 1; i < rep.points.size(); ++i)
            if (rep.points[i].stable) rep.monotone = false;
    }
    return rep;
}

SweepReport sweep_lambda(const SweepSpec& spec, const RunConfig& base) {
    SweepSpec s = spec;
    s.variable = SweepVariable::lambda;
    return sweep(s, base);
}

SweepReport sweep_V(const SweepSpec& spec, const RunConfig& base) {
    SweepSpec s = spec;
    s.variable = SweepVariable::V;
    return sweep(s, base);
}

std::string sweep_csv(const SweepReport& rep) {
    std::ostringstream out;
    out << variable_name(rep.spec.variable)
        << ",replicates,stable_votes,stable,mean_cost,cost_se,proc_setup,proc_unit,wired_setup,wired_unit,"
           "wireless_energy,age_delay_ms,little_delay_ms,mean_backlog";
    if (!rep.points.empty())
        for (const auto& o : rep.points.front().offload) out << ",offload_s" << o.service << "_f" << o.function;
    out << '\n';
    for (const auto& p : rep.points) {
        out << format_double(p.value) << ',' << p.runs.size() << ',' << p.stable_votes << ',' << (p.stable ? 1 : 0)
            << ',' << format_double(p.mean_cost) << ',' << format_double(p.cost_se) << ','
            << format_double(p.breakdown.proc_setup) << ',' << format_double(p.breakdown.proc_unit) << ','
            << format_double(p.breakdown.wired_setup) << ',' << format_double(p.breakdown.wired_unit) << ','
            << format_double(p.breakdown.wireless_energy) << ',' << format_double(p.age_delay_ms) << ','
            << format_double(p.little_delay_ms) << ',' << format_double(p.mean_backlog);
        for (const auto& o : p.offload) out << ',' << format_double(o.ratio());
        out << '\n';
    }
    return out.str();
}

void write_sweep(const SweepReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    open_out(dir / "sweep.csv") << sweep_csv(report);
}

SweepReport reaggregate(const std::filesystem::path& dir) {
    const json manifest = load_json(dir / "sweep.json");
    SweepSpec spec;
    std::vector<std::vector<RunResult>> runs;
    try {
        const std::string var = manifest.at("variable").get<std::string>();
        spec.variable = var == "V" ? SweepVariable::V : SweepVariable::lambda;
        spec.grid = manifest.at("grid").get<std::vector<double>>();
        spec.seeds = manifest.at("seeds").get<std::vector<std::uint64_t>>();
        for (const auto& row : manifest.at("runs")) {
            runs.emplace_back();
            for (const auto& name : row)
                runs.back().push_back(summary_from_json(load_json(dir / "runs" / name.get<std::string>() / "summary.json")));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("sweep manifest: ") + e.what());
    }
    return aggregate_sweep(spec, std::move(runs));
}

} // namespace mecnc
