// Command-line front end: `sim run <config>` and `sim sweep <config>`.
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sirdsim/config.hpp"
#include "sirdsim/experiment.hpp"
#include "sirdsim/invariants.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitInvariant = 3;

const char* kind_label(sirdsim::ConfigError::Kind k) {
    using K = sirdsim::ConfigError::Kind;
    switch (k) {
    case K::MissingFile:
        return "missing file";
    case K::Syntax:
        return "syntax error";
    case K::UnknownKey:
        return "unknown key";
    case K::TypeMismatch:
        return "type mismatch";
    case K::Invalid:
        return "invalid value";
    }
    return "error";
}

sirdsim::RunConfig load(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out,
                        bool trace) {
    sirdsim::RunConfig cfg = sirdsim::parse_config_file(path);
    if (seed)
        cfg.seed = *seed;
    if (!out.empty())
        cfg.output_dir = out;
    if (trace)
        cfg.trace = true;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Packet-level simulator of the SIRD receiver-driven transport"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool trace = false;
    std::string axis;
    std::vector<std::string> values;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "Configuration file")->required();
        cmd->add_option("--seed", seed, "Override the configured seed");
        cmd->add_option("--out", out_dir, "Output directory");
        cmd->add_flag("--trace", trace, "Write a per-event protocol trace");
    };
    CLI::App* run = app.add_subcommand("run", "Run one configuration");
    add_common(run);
    CLI::App* sweep = app.add_subcommand("sweep", "Sweep one parameter");
    add_common(sweep);
    sweep->add_option("--axis", axis, "Parameter to sweep")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        const sirdsim::RunConfig cfg = load(config_path, seed, out_dir, trace);
        if (*run) {
            const sirdsim::Summary s = sirdsim::run_config(cfg, cfg.output_dir);
            std::cout << "completed " << s.messages_completed << "/" << s.messages_total << " messages, goodput "
                      << sirdsim::format_double(s.max_goodput_gbps) << " Gbps, outputs in " << cfg.output_dir << "\n";
            return kExitOk;
        }
        const auto results = sirdsim::run_sweep(cfg, axis, values, cfg.output_dir);
        int rc = kExitOk;
        for (const auto& r : results) {
            if (r.ok) {
                std::cout << axis << "=" << r.value << ": goodput " << sirdsim::format_double(r.summary.max_goodput_gbps)
                          << " Gbps\n";
                continue;
            }
            std::cerr << axis << "=" << r.value << ": " << r.error << "\n";
            const bool invariant = r.error.rfind("invariant violation", 0) == 0;
            rc = std::max(rc, invariant ? kExitInvariant : kExitConfig);
        }
        return rc;
    } catch (const sirdsim::ConfigError& e) {
        std::cerr << "config error (" << kind_label(e.kind()) << "): " << e.what() << "\n";
        return kExitConfig;
    } catch (const sirdsim::InvariantViolation& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
