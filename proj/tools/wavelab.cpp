#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "wavelab/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Forced-speed reaction-diffusion lab"};
    app.require_subcommand(1, 1);
    std::string config;
    std::string out;
    for (const auto& name : wavelab::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config, "key = value config file")->required();
        sub->add_option("--out", out, "output directory");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return wavelab::run_command(app.get_subcommands().front()->get_name(), config, out, std::cout);
}
