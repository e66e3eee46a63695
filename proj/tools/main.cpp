// Command-line front end for the cooperative-perception driving simulator.
//
//   coopsim run --scenario coop5 --episodes 30 --seed 1 --out results/
//   coopsim list
//   coopsim validate my_scenario.json
//   coopsim export --dir scenarios
//
// Exit codes: 0 on success, 1 on usage or validation errors, 2 on runtime
// failures (I/O, internal errors).

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "coopsim/sim.hpp"

namespace {

using coopsim::sim::ParticipantFilter;

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw coopsim::IoError("cannot open " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    if (in.bad()) throw coopsim::IoError("read failed for " + path.string());
    return body.str();
}

// "none" | "det:<seconds>" | "uniform:<lo>:<hi>"
coopsim::comms::LatencyModel parse_latency_arg(const std::string& text) {
    if (text == "none") return coopsim::comms::NoLatency{};
    const auto parse_number = [&](const std::string& part) {
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(part, &used);
        } catch (const std::exception&) {
            throw CLI::ValidationError("--latency", "bad number '" + part + "' in '" + text + "'");
        }
        if (used != part.size())
            throw CLI::ValidationError("--latency", "bad number '" + part + "' in '" + text + "'");
        return value;
    };
    if (text.rfind("det:", 0) == 0) {
        const double delay = parse_number(text.substr(4));
        if (delay < 0.0) throw CLI::ValidationError("--latency", "delay must be >= 0");
        return coopsim::comms::DeterministicLatency{delay};
    }
    if (text.rfind("uniform:", 0) == 0) {
        const std::string rest = text.substr(8);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError("--latency", "expected uniform:<lo>:<hi>");
        const double lo = parse_number(rest.substr(0, colon));
        const double hi = parse_number(rest.substr(colon + 1));
        if (lo < 0.0 || hi < lo)
            throw CLI::ValidationError("--latency", "need 0 <= lo <= hi");
        return coopsim::comms::UniformLatency{lo, hi};
    }
    throw CLI::ValidationError("--latency",
                               "expected none, det:<seconds> or uniform:<lo>:<hi>");
}

ParticipantFilter parse_participants_arg(const std::string& text) {
    if (text == "both") return ParticipantFilter::All;
    if (text == "ego") return ParticipantFilter::EgoOnly;
    if (text == "vehicle") return ParticipantFilter::VehiclesOnly;
    if (text == "rsu") return ParticipantFilter::RsusOnly;
    throw CLI::ValidationError("--participants", "expected both, ego, vehicle or rsu");
}

coopsim::perception::PerceptionMode parse_perception_arg(const std::string& text) {
    if (text == "oracle") return coopsim::perception::PerceptionMode::Oracle;
    if (text == "noisy") return coopsim::perception::PerceptionMode::Noisy;
    throw CLI::ValidationError("--perception", "expected oracle or noisy");
}

coopsim::scenario::ScenarioSpec load_scenario(const std::string& name_or_path) {
    if (coopsim::scenario::is_builtin(name_or_path))
        return coopsim::scenario::builtin(name_or_path);
    if (std::filesystem::exists(name_or_path)) {
        auto spec = coopsim::scenario::from_document(read_text_file(name_or_path));
        coopsim::scenario::validate(spec);
        return spec;
    }
    throw coopsim::UnknownScenarioError("no built-in scenario or file named '" +
                                        name_or_path + "'");
}

int cmd_run(const std::string& scenario_arg, int episodes, std::uint64_t seed,
            const std::optional<std::string>& latency_arg,
            const std::optional<double>& drop_arg,
            const std::optional<std::string>& participants_arg,
            const std::optional<std::string>& perception_arg,
            const std::string& out_dir) {
    if (episodes < 1) throw CLI::ValidationError("--episodes", "must be >= 1");
    if (drop_arg && (*drop_arg < 0.0 || *drop_arg > 1.0))
        throw CLI::ValidationError("--drop", "must be in [0, 1]");

    coopsim::sim::RunOverrides overrides;
    if (latency_arg) overrides.latency = parse_latency_arg(*latency_arg);
    if (drop_arg) overrides.drop_rate = *drop_arg;
    if (participants_arg) overrides.participants = parse_participants_arg(*participants_arg);
    if (perception_arg) overrides.perception = parse_perception_arg(*perception_arg);

    const auto spec = load_scenario(scenario_arg);
    const auto batch = coopsim::sim::run_batch(spec, episodes, seed, overrides);
    coopsim::sim::emit_outputs(out_dir, batch);

    const auto& s = batch.stats;
    std::cout << "scenario " << batch.spec.name << ": " << s.episodes
              << (s.episodes == 1 ? " episode" : " episodes") << ", seed " << seed << "\n";
    std::cout << "success rate " << coopsim::sim::detail::fmt(s.success_rate) << " % ("
              << s.collisions << " collisions, " << s.goals << " goals, " << s.timeouts
              << " timeouts)\n";
    if (s.min_distance_n > 0) {
        std::cout << "min distance mean " << coopsim::sim::detail::fmt(s.min_distance_mean)
                  << " m, std " << coopsim::sim::detail::fmt(s.min_distance_std) << " (n="
                  << s.min_distance_n << ")\n";
    }
    std::cout << "outputs written to " << out_dir << "/\n";
    return 0;
}

int cmd_list() {
    for (const auto& name : coopsim::scenario::builtin_names()) std::cout << name << "\n";
    return 0;
}

int cmd_validate(const std::string& path) {
    auto spec = coopsim::scenario::from_document(read_text_file(path));
    coopsim::scenario::validate(spec);
    std::cout << path << ": ok (scenario '" << spec.name << "')\n";
    return 0;
}

int cmd_export(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw coopsim::IoError("cannot create directory " + dir);
    int count = 0;
    for (const auto& name : coopsim::scenario::builtin_names()) {
        const auto doc = coopsim::scenario::to_document(coopsim::scenario::builtin(name));
        coopsim::sim::detail::write_file(std::filesystem::path(dir) / (name + ".json"), doc);
        ++count;
    }
    std::cout << "wrote " << count << " scenario documents to " << dir << "/\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coopsim: a deterministic cooperative-perception driving simulator"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run a batch of episodes and write outputs");
    std::string scenario_arg;
    int episodes = 1;
    std::uint64_t seed = 1;
    std::optional<std::string> latency_arg;
    std::optional<double> drop_arg;
    std::optional<std::string> participants_arg;
    std::optional<std::string> perception_arg;
    std::string out_dir = "out";
    run->add_option("--scenario", scenario_arg, "Built-in scenario name or path to a JSON document")
        ->required();
    run->add_option("--episodes", episodes, "Number of episodes (seeds seed..seed+N-1)");
    run->add_option("--seed", seed, "Base random seed");
    run->add_option("--latency", latency_arg,
                    "Override sharing latency: none, det:<seconds>, uniform:<lo>:<hi>");
    run->add_option("--drop", drop_arg, "Override sharing frame-drop probability [0,1]");
    run->add_option("--participants", participants_arg,
                    "Which sharers stay active: both, ego, vehicle, rsu");
    run->add_option("--perception", perception_arg, "Detector mode: oracle or noisy");
    run->add_option("--out", out_dir, "Output directory (default: out)");

    // list
    auto* list = app.add_subcommand("list", "List built-in scenarios");

    // validate
    auto* validate = app.add_subcommand("validate", "Check a scenario document");
    std::string validate_path;
    validate->add_option("path", validate_path, "Scenario JSON document")->required();

    // export
    auto* exp = app.add_subcommand("export", "Write all built-in scenarios as JSON documents");
    std::string export_dir = "scenarios";
    exp->add_option("--dir", export_dir, "Target directory (default: scenarios)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message to stderr
        return 1;
    }

    try {
        if (run->parsed())
            return cmd_run(scenario_arg, episodes, seed, latency_arg, drop_arg,
                           participants_arg, perception_arg, out_dir);
        if (list->parsed()) return cmd_list();
        if (validate->parsed()) return cmd_validate(validate_path);
        if (exp->parsed()) return cmd_export(export_dir);
    } catch (const coopsim::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const coopsim::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    } catch (const coopsim::UnknownScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const coopsim::SimError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
