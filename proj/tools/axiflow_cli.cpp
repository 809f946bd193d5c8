// axiflow: run, validate or sweep configuration files.
//
//   axiflow run configs/sd_cylinder_1x7x1.cfg
//   axiflow sweep 'configs/*.cfg'
//   axiflow validate my.cfg
//
// AXIFLOW_OUT overrides out_dir (for sweeps, each config writes to AXIFLOW_OUT/<name>).

#include <glob.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "axiflow/axiflow.hpp"

namespace fs = std::filesystem;

namespace {

std::mutex out_mutex;

void say(const std::string& s) {
    std::lock_guard<std::mutex> lock(out_mutex);
    std::cout << s << std::endl;
}

void complain(const std::string& s) {
    std::lock_guard<std::mutex> lock(out_mutex);
    std::cerr << s << std::endl;
}

int run_one(const fs::path& cfg_path, const std::string& out_override, bool quiet_prefix) {
    const std::string tag = quiet_prefix ? "[" + cfg_path.filename().string() + "] " : "";
    try {
        axiflow::RunConfig cfg = axiflow::load_config(cfg_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        const auto result = axiflow::run(cfg);
        const int code = axiflow::emit_outputs(result, cfg.out_dir);
        double max_dm = 0.0;
        int max_it = 0;
        for (const auto& d : result.diagnostics) {
            max_dm = std::max(max_dm, std::abs(d.volume_loss));
            max_it = std::max(max_it, d.newton_iters);
        }
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s%s at t=%.10g (%zu steps, max |dM|=%.3g, max newton iters=%d) -> %s",
                      tag.c_str(), axiflow::to_string(result.termination), result.t_end,
                      result.diagnostics.size() - 1, max_dm, max_it, cfg.out_dir.c_str());
        say(buf);
        if (!result.message.empty() && result.termination != axiflow::Termination::Completed)
            say(tag + "  " + result.message);
        return code;
    } catch (const axiflow::ConfigError& e) {
        for (const auto& p : e.problems()) complain(tag + cfg_path.string() + ": " + p);
        return 1;
    } catch (const std::exception& e) {
        complain(tag + "error: " + e.what());
        return 1;
    }
}

std::vector<fs::path> expand(const std::string& pattern) {
    glob_t g{};
    std::vector<fs::path> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

// Worst outcome wins: failure over pinch-off over completion.
int combine(int a, int b) {
    auto rank = [](int c) { return c == 1 ? 2 : (c == 2 ? 1 : 0); };
    return rank(a) >= rank(b) ? a : b;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Axisymmetric surface diffusion, intermediate and conserved mean curvature flows"};
    app.require_subcommand(1);

    std::string run_cfg, sweep_glob, validate_cfg;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

    auto* run_cmd = app.add_subcommand("run", "Run one configuration");
    run_cmd->add_option("config", run_cfg, "Configuration file")->required()->check(CLI::ExistingFile);

    auto* sweep_cmd = app.add_subcommand("sweep", "Run every configuration matching a glob pattern");
    sweep_cmd->add_option("pattern", sweep_glob, "Glob pattern, e.g. 'configs/*.cfg'")->required();
    sweep_cmd->add_option("-j,--jobs", jobs, "Concurrent runs")->check(CLI::PositiveNumber);

    auto* validate_cmd = app.add_subcommand("validate", "Check a configuration without running it");
    validate_cmd->add_option("config", validate_cfg, "Configuration file")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    const char* env_out = std::getenv("AXIFLOW_OUT");
    const std::string out_env = env_out ? env_out : "";

    if (*validate_cmd) {
        try {
            const auto cfg = axiflow::load_config(validate_cfg);
            std::cout << validate_cfg << ": ok (" << axiflow::to_string(cfg.flow.kind) << ", "
                      << axiflow::to_string(cfg.flow.variant) << ", J=" << cfg.shape.elements << ")\n";
            return 0;
        } catch (const axiflow::ConfigError& e) {
            for (const auto& p : e.problems()) std::cerr << validate_cfg << ": " << p << '\n';
        } catch (const std::exception& e) {
            std::cerr << validate_cfg << ": " << e.what() << '\n';
        }
        return 1;
    }

    if (*run_cmd) return run_one(run_cfg, out_env, false);

    const auto files = expand(sweep_glob);
    if (files.empty()) {
        std::cerr << "no configuration matches " << sweep_glob << '\n';
        return 1;
    }
    std::vector<int> codes(files.size(), 1);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            const std::string out = out_env.empty() ? "" : (fs::path(out_env) / files[i].stem()).string();
            codes[i] = run_one(files[i], out, true);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, files.size()); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int code = 0;
    for (int c : codes) code = combine(code, c);
    return code;
}
