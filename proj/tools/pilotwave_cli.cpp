#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pilotwave/error.hpp"
#include "pilotwave/output.hpp"
#include "pilotwave/scenario.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pilotwave::ValidationError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run(const std::string& path, const std::string& output) {
    pilotwave::ScenarioConfig config;
    try {
        config = pilotwave::parse_config(read_file(path));
    } catch (const pilotwave::Error& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitValidation;
    }
    try {
        const auto dir = output.empty() ? pilotwave::resolve_output_dir(config) : std::filesystem::path(output);
        const auto m = pilotwave::run_scenario(config, dir);
        for (const auto& r : m.residuals) {
            std::cout << "residual " << r.equation << " rel_l2=" << pilotwave::format_number(r.rel_l2)
                      << " l_inf=" << pilotwave::format_number(r.l_inf) << '\n';
        }
        for (const auto& s : m.summary) std::cout << "summary " << s.metric << '=' << pilotwave::format_number(s.value) << '\n';
        for (const auto& f : m.failures) std::cerr << "failed [" << f.phase << "] " << f.message << '\n';
        std::cout << "wrote " << m.files.size() + 1 << " files to " << dir.string() << '\n';
        return m.ok() ? 0 : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

int validate(const std::string& path, bool print) {
    try {
        const auto config = pilotwave::parse_config(read_file(path));
        if (print) {
            std::cout << pilotwave::serialize_config(config);
        } else {
            std::cout << "ok " << config.id << " (" << pilotwave::to_string(config.kind) << ")\n";
        }
        return 0;
    } catch (const pilotwave::Error& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kExitValidation;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pilotwave: pilot-wave scenario runner"};
    app.require_subcommand(1);

    std::string config_path, output;
    auto* run_cmd = app.add_subcommand("run", "run a scenario and write its outputs");
    run_cmd->add_option("config", config_path, "scenario config (JSON)")->required();
    run_cmd->add_option("-o,--output", output, "output directory, overriding the config and PILOTWAVE_OUTPUT_ROOT");

    bool print = false;
    auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
    validate_cmd->add_option("config", config_path, "scenario config (JSON)")->required();
    validate_cmd->add_flag("--print", print, "print the config with every default filled in");

    auto* list_cmd = app.add_subcommand("list-scenarios", "list built-in scenario kinds");
    auto* version_cmd = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitValidation;
    }

    if (*run_cmd) return run(config_path, output);
    if (*validate_cmd) return validate(config_path, print);
    if (*list_cmd) {
        for (const auto& s : pilotwave::list_scenarios()) {
            std::printf("%-16s %s\n", pilotwave::to_string(s.kind).c_str(), s.description.c_str());
        }
        return 0;
    }
    if (*version_cmd) std::cout << "pilotwave " << pilotwave::version_string() << '\n';
    return 0;
}
