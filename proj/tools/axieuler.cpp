#include "axieuler/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace axieuler;
    CLI::App app{"Axisymmetric Euler diagnostics"};
    app.require_subcommand(1, 1);
    std::string config, out;
    for (const auto& name : command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "JSON run configuration")->required();
        sub->add_option("--out", out, "output directory (overrides output.dir)");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    try {
        const RunConfig cfg = load_config(config);
        const auto dir = run_command(command, cfg, out);
        std::cout << command << ": wrote " << dir.string() << "\n";
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
}
