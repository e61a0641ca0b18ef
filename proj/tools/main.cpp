// kahlerflow command-line driver.  All real work lives in the library's io
// layer; this file is argument plumbing only.
#include <CLI11.hpp>
#include <string>

#include "kahlerflow/io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Charged-particle dynamics on constant-curvature Kaehler charts"};
    app.require_subcommand(1);

    struct SubSpec {
        const char* name;
        const char* desc;
        bool needs_config;
    };
    const SubSpec subs[] = {
        {"geodesic", "sample an exact geodesic through the chart origin", true},
        {"flow", "integrate the charged equations of motion (RK4)", true},
        {"closed-form", "sample the exact cyclotron orbit of a single mode", true},
        {"sweep", "classify regimes over a grid of the ratio k", true},
        {"collapse", "census and time series of a diagonalized mode system", true},
        {"validate", "run the built-in invariant checks", false},
    };

    std::string config_path;
    kahlerflow::io::RunOptions opts;
    for (const SubSpec& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.desc);
        if (s.needs_config)
            sub->add_option("-c,--config", config_path, "JSON config file")
                ->required()
                ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", opts.out_override, "output path (overrides config)");
        sub->add_option("-j,--jobs", opts.jobs, "worker threads (default: hardware)");
        sub->add_option("-s,--seed", opts.seed, "RNG seed for randomized work");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 uses 0 for --help; keep config-style errors on exit code 2.
        return code == 0 ? 0 : kahlerflow::io::exit_config;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    return kahlerflow::io::run_from_file(command, config_path, opts);
}
