#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "collar/config.hpp"
#include "collar/errors.hpp"
#include "collar/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"collar_solve: maximal-gauge vacuum evolution on T^2 x [x3_min, 0]"};
    std::string mode;
    std::string config_path;
    app.add_option("mode", mode,
                   "evolve | picard | mms | trace-check | compat-check | convergence-suite")
        ->required();
    app.add_option("--config", config_path, "key=value config file");
    // every config key doubles as a long flag; collect raw strings and apply
    // them after the file so flags win
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const std::string& key : collar::config_keys()) {
        app.add_option("--" + key)
            ->each([&overrides, key](const std::string& v) { overrides.emplace_back(key, v); })
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2; // malformed command line is a config error
    }

    try {
        collar::RunConfig cfg;
        if (!config_path.empty()) cfg = collar::parse_config_file(config_path);
        for (const auto& [key, value] : overrides)
            collar::apply_config_entry(cfg, key, value);
        return collar::run_mode(mode, cfg);
    } catch (const collar::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const collar::compat_error& e) {
        std::cerr << "compatibility error: " << e.what() << "\n";
        return 3;
    } catch (const collar::solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 4;
    } catch (const collar::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
