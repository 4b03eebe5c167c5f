#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eitlin/config.hpp"
#include "eitlin/error.hpp"
#include "eitlin/experiments.hpp"

namespace {

int exit_code(const eitlin::Error& e) {
    switch (e.category()) {
    case eitlin::Error::Category::Config:
    case eitlin::Error::Category::Argument: return 1;
    case eitlin::Error::Category::Numerical: return 2;
    case eitlin::Error::Category::Io: return 3;
    }
    return 1;
}

struct ConfigOptions {
    std::string path;
    std::vector<std::string> overrides;

    void attach(CLI::App* cmd) {
        cmd->add_option("-c,--config", path, "key = value configuration file");
        cmd->add_option("overrides", overrides, "key=value settings applied after the file");
    }

    eitlin::ExperimentConfig load() const {
        return eitlin::load_config(path.empty() ? std::nullopt : std::optional(path), overrides);
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linearized forward maps and one-step reconstructions for electrical impedance tomography"};
    app.require_subcommand(1);

    ConfigOptions forward_opts, inverse_opts, recon_opts, dump_opts;
    auto* forward = app.add_subcommand("forward-bench", "Monte-Carlo linearization errors of the four methods");
    forward_opts.attach(forward);

    auto* inverse = app.add_subcommand("inverse-bench", "regularization sweeps of the one-step reconstructions");
    inverse_opts.attach(inverse);

    std::uint64_t draw_seed = 1;
    auto* recon = app.add_subcommand("reconstruct", "reconstruct one random draw with both one-step methods");
    recon->add_option("--draw-seed", draw_seed, "seed of the reconstructed draw")->capture_default_str();
    recon_opts.attach(recon);

    int selftest_nodes = 8000;
    auto* selftest = app.add_subcommand("selftest", "oracle and property checks on a reduced mesh");
    selftest->add_option("--mesh-nodes", selftest_nodes, "target node count")->capture_default_str();

    std::string mesh_path = "mesh.txt";
    auto* dump = app.add_subcommand("mesh-dump", "write the configured mesh in the plain-text format");
    dump->add_option("-o,--output", mesh_path, "output file")->capture_default_str();
    dump_opts.attach(dump);

    CLI11_PARSE(app, argc, argv);

    try {
        if (forward->parsed()) {
            eitlin::cmd_forward_bench(forward_opts.load(), std::cout);
        } else if (inverse->parsed()) {
            eitlin::cmd_inverse_bench(inverse_opts.load(), std::cout);
        } else if (recon->parsed()) {
            eitlin::cmd_reconstruct(recon_opts.load(), draw_seed, std::cout);
        } else if (selftest->parsed()) {
            const auto checks = eitlin::cmd_selftest(std::cout, selftest_nodes);
            int failed = 0;
            for (const auto& c : checks) {
                if (!c.passed) {
                    std::cerr << "failed check: " << c.name << '\n';
                    ++failed;
                }
            }
            std::cout << checks.size() - failed << " of " << checks.size() << " checks passed\n";
            return failed ? 2 : 0;
        } else if (dump->parsed()) {
            eitlin::cmd_mesh_dump(dump_opts.load(), mesh_path, std::cout);
        }
    } catch (const eitlin::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
