// slp: config-driven runs of the contact, curvature, viscosity, abp and
// harnack pipelines. Exit status: 0 when no verdict is "fails", 1 otherwise,
// 2 on a bad command line, config or parameter, 3 on I/O failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "slp/slp.hpp"

namespace {

int write_scenes(const slp::RunConfig& cfg, const std::filesystem::path& out)
{
    slp::Table index{"scenes", {"scene", "file", "generator", "n", "intrinsic_dim", "rho", "mc_bound", "samples", "config_hash"}, {}};
    std::vector<std::pair<std::string, std::string>> files;
    const auto scenes = slp::detail::scene_instances(cfg);
    std::size_t k = 0;
    for (const auto& g : scenes) {
        std::ostringstream os;
        slp::write_points(os, g.points());
        const std::string file = "scene_" + g.id() + "_" + std::to_string(k++) + ".csv";
        files.emplace_back(file, os.str());
        const auto& spec = cfg.scenes[(k - 1) / std::max<std::size_t>(1, cfg.resolutions.size())];
        index.add({g.id(), file, slp::generator_tag(spec.generator), std::to_string(g.n()), std::to_string(g.intrinsic_dim()),
                   slp::format_real(g.rho()), slp::format_real(g.mc_bound()), std::to_string(g.size()), cfg.hash});
    }
    std::filesystem::create_directories(out);
    for (const auto& [file, text] : files) {
        std::ofstream f(out / file, std::ios::binary);
        f << text;
        if (!f)
            throw std::runtime_error("cannot write '" + (out / file).string() + "'");
    }
    std::ofstream f(out / "scenes.csv", std::ios::binary);
    slp::emit_table(index, f);
    if (!f)
        throw std::runtime_error("cannot write scenes.csv");
    std::cout << "wrote " << files.size() << " scene files to " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sliding-paraboloid checks on sampled closed sets"};
    app.require_subcommand(1, 1);
    app.fallthrough();  // before the subcommands exist, so they inherit it

    std::string config_path;
    std::string out_dir = "out";
    unsigned threads = 0;
    std::uint64_t seed = 0;
    bool svg = false;
    app.add_option("--config", config_path, "run configuration (sectioned key = value text)")->required();
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    auto* seed_opt = app.add_option("--seed", seed, "overrides the config seed");
    app.add_flag("--svg", svg, "also write SVG plots");

    const std::vector<std::pair<std::string, std::string>> subs{
        {"scene", "dump the configured scenes as point files"},
        {"contact", "contact sets A_a over the center lattice"},
        {"curvature", "principal curvature bounds at contact pairs"},
        {"viscosity", "randomized (m,h) viscosity test"},
        {"abp", "ABP inequality verdicts"},
        {"harnack", "barrier, measure-to-point and weak Harnack checks"},
        {"report", "run the operation selected in the config and write a summary"},
    };
    for (const auto& [name, help] : subs)
        app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    slp::RunConfig cfg;
    try {
        cfg = slp::load_config(config_path);
    } catch (const slp::ConfigError& e) {
        std::cerr << config_path << ":" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    if (*seed_opt)
        cfg.seed = seed;
    cfg.svg = cfg.svg || svg;
    if (threads > 0)
        slp::set_default_threads(threads);
    else
        slp::set_default_threads(std::max(1u, std::thread::hardware_concurrency()));

    try {
        if (cmd == "scene")
            return write_scenes(cfg, out_dir);

        slp::Operation op = cfg.operation;
        if (cmd != "report")
            op = *slp::operation_from_tag(cmd);
        auto result = slp::run(cfg, op);
        if (cmd == "report")
            result.tables.push_back(slp::summary_table(result, cfg));
        slp::write_outputs(result, out_dir);
        for (const auto& t : result.tables)
            std::cout << t.name << ": " << t.rows.size() << " rows, " << t.count_verdict("fails") << " fails\n";
        return result.any_fails() ? 1 : 0;
    } catch (const slp::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
