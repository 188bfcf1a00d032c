#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "ada/service.hpp"

using namespace ada;

namespace {

Service* g_service = nullptr;

void on_signal(int) {
    if (g_service != nullptr) g_service->stop();
}

const ObservationArea& find_area(const std::vector<ObservationArea>& areas, const Id& id) {
    for (const auto& a : areas) {
        if (a.id == id) return a;
    }
    throw Error(ErrorCode::UnknownArea, id);
}

int run_serve(const RunConfig& config) {
    Service service(config);
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::fprintf(stderr, "serving %s on %s\n", config.scenario.c_str(), config.bind.c_str());
    service.serve();
    g_service = nullptr;
    return 0;
}

int run_solve_once(const std::string& scenario_name, const Id& area_id, const RunConfig& config) {
    const Simulator sim(load_scenario(scenario_name, config.seed));
    const auto areas = scenario_areas(sim.scenario());
    const auto& area = find_area(areas, area_id);
    const auto snap = build_snapshot(sim.world(), sim.network(), area, area.horizon);
    const auto model = build_model(snap, sim.network());
    SolveParams params;
    params.time_limit = config.time_limit;
    params.gap_target = config.gap_target;
    const auto sol = solve(model, {}, params);
    std::printf("objective=%g gap=%.3f status=%s bound=%g nodes=%zu\n", sol.objective, sol.gap,
                to_string(sol.status).c_str(), sol.lower_bound, sol.nodes);
    return sol.status == SolveStatus::Infeasible || sol.status == SolveStatus::TimedOutNoIncumbent ? 1 : 0;
}

int run_mesh(const std::string& scenario_name, int rounds, const RunConfig& config) {
    const Simulator sim(load_scenario(scenario_name, config.seed));
    MeshConfig mc;
    mc.max_rounds = rounds;
    mc.params.time_limit = config.time_limit;
    mc.params.gap_target = config.gap_target;
    const auto result = run_to_fixed_point(scenario_areas(sim.scenario()), sim.world(), sim.network(), mc);
    for (const auto& r : result.rounds) {
        std::printf("round %d\n", r.round);
        for (const auto& a : r.areas) {
            if (a.solution) {
                std::printf("  area %s objective=%g gap=%.3f status=%s\n", a.area_id.c_str(), a.solution->objective,
                            a.solution->gap, to_string(a.solution->status).c_str());
            } else {
                std::printf("  area %s error=%s\n", a.area_id.c_str(), a.error.c_str());
            }
        }
        for (const auto& h : r.handoffs) std::printf("  handoff %s\n", to_json(h).dump().c_str());
    }
    if (result.fixed_point_round) {
        std::printf("fixed point at round %d\n", *result.fixed_point_round);
        return 0;
    }
    std::printf("no fixed point within %d rounds\n", rounds);
    return 1;
}

int run_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MalformedDocument, "cannot read " + path);
    RecommendationRegistry reg;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto record = nlohmann::json::parse(line);
        const auto r = reg.apply_event(record);
        std::printf("%lld %s %s %s\n", static_cast<long long>(record.value("ts", Time{0})), r.id.c_str(),
                    record.at("event").get<std::string>().c_str(), to_string(r.status).c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rolling-horizon dispatching assistant"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::string scenario;
    std::string area;
    std::string log_path;
    int rounds = 10;

    auto* serve = app.add_subcommand("serve", "Run the simulation and HTTP API");
    serve->add_option("--config", config_path, "key=value or JSON config file");
    serve->add_option("--scenario", config.scenario, "Preset name or scenario file");
    serve->add_option("--seed", config.seed);
    serve->add_option("--bind", config.bind, "host:port");
    serve->add_option("--cadence", config.cadence, "Sim seconds between solve cycles")->check(CLI::PositiveNumber);
    serve->add_option("--time-limit", config.time_limit, "Seconds per area solve")->check(CLI::PositiveNumber);
    serve->add_option("--gap-target", config.gap_target)->check(CLI::Range(1e-9, 0.999999));
    serve->add_option("--event-log", config.event_log, "Recommendation event log (JSONL)");
    serve->add_option("--speed", config.speed, "Sim seconds per wall second")->check(CLI::PositiveNumber);

    auto* once = app.add_subcommand("solve-once", "Solve one area of a scenario at its start");
    once->add_option("scenario", scenario, "Preset name or scenario file")->required();
    once->add_option("area", area, "Area id")->required();
    once->add_option("--seed", config.seed);
    once->add_option("--time-limit", config.time_limit)->check(CLI::PositiveNumber);
    once->add_option("--gap-target", config.gap_target)->check(CLI::Range(1e-9, 0.999999));

    auto* mesh = app.add_subcommand("mesh-run", "Exchange boundary handoffs until a fixed point");
    mesh->add_option("scenario", scenario, "Preset name or scenario file")->required();
    mesh->add_option("--rounds", rounds, "Maximum rounds")->check(CLI::PositiveNumber);
    mesh->add_option("--seed", config.seed);
    mesh->add_option("--time-limit", config.time_limit)->check(CLI::PositiveNumber);
    mesh->add_option("--gap-target", config.gap_target)->check(CLI::Range(1e-9, 0.999999));

    auto* replay = app.add_subcommand("replay", "Print the recommendation history of an event log");
    replay->add_option("log", log_path, "Event log")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*serve) {
            if (!config_path.empty()) {
                // Command-line flags win over the file.
                RunConfig from_file = load_config(config_path);
                for (const auto* opt : serve->get_options()) {
                    if (opt->count() == 0 || opt->get_name() == "--config") continue;
                    const auto key = opt->get_name().substr(2);
                    set_option(from_file, key, opt->as<std::string>());
                }
                config = from_file;
            }
            return run_serve(config);
        }
        if (*once) return run_solve_once(scenario, area, config);
        if (*mesh) return run_mesh(scenario, rounds, config);
        if (*replay) return run_replay(log_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
