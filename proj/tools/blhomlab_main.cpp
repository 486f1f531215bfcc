// blhomlab: experiment harness for the boundary-layer homogenization lab.
// Exit codes: 0 pass, 2 criterion failure, 3 config error, 4 non-convergence.

#include "blhomlab/asymptotics.hpp"
#include "blhomlab/blsolver.hpp"
#include "blhomlab/cell.hpp"
#include "blhomlab/errors.hpp"
#include "blhomlab/experiments.hpp"
#include "blhomlab/geometry.hpp"
#include "blhomlab/io.hpp"
#include "blhomlab/kernels.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <iostream>
#include <numbers>
#include <thread>

namespace {

using namespace blhomlab;
using nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitCriterion = 2;
constexpr int kExitConfig = 3;
constexpr int kExitNumerical = 4;

geometry::NormalFrame frame_from_name(const std::string& name, int levels, double offset) {
    if (name == "axis") {
        double raw[2] = {0.0, 1.0};
        return geometry::build_frame(std::span<const double>(raw, 2), offset);
    }
    if (name == "golden") return geometry::golden_direction(offset);
    if (name == "liouville") return geometry::liouville_direction(levels, offset).frame;
    // "x,y" literal
    auto comma = name.find(',');
    if (comma == std::string::npos)
        throw ConfigError("--direction: expected axis|golden|liouville|<x,y>");
    double raw[2] = {std::stod(name.substr(0, comma)), std::stod(name.substr(comma + 1))};
    return geometry::build_frame(std::span<const double>(raw, 2), offset);
}

int run_configs(const std::vector<std::string>& configs, const std::string& out, int jobs) {
    std::vector<int> codes(configs.size(), kExitPass);
    auto worker = [&](size_t idx) {
        try {
            auto res = experiments::run_experiment_file(configs[idx], out);
            for (const auto& c : res.criteria) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << res.experiment << " " << c.name
                          << " value=" << io::fmt(c.value)
                          << " threshold=" << io::fmt(c.threshold) << "\n";
            }
            std::cout << (res.pass ? "PASS " : "FAIL ") << res.experiment << " -> "
                      << res.manifest.string() << "\n";
            codes[idx] = res.pass ? kExitPass : kExitCriterion;
        } catch (const ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            codes[idx] = kExitConfig;
        } catch (const ConvergenceError& e) {
            std::cerr << "numerical failure: " << e.what() << "\n";
            codes[idx] = kExitNumerical;
        }
    };
    if (jobs <= 1 || configs.size() <= 1) {
        for (size_t i = 0; i < configs.size(); ++i) worker(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        int width = std::min<int>(jobs, static_cast<int>(configs.size()));
        for (int t = 0; t < width; ++t) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < configs.size();
                     i = next.fetch_add(1))
                    worker(i);
            });
        }
        for (auto& th : pool) th.join();
    }
    int worst = kExitPass;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-layer homogenization laboratory"};
    app.require_subcommand(1);

    // run ---------------------------------------------------------------
    auto* run = app.add_subcommand("run", "run experiments from JSON configs (E1..E6)");
    std::vector<std::string> configs;
    std::string out_dir;
    int jobs = 1;
    run->add_option("--config", configs, "experiment config file(s)")->required();
    run->add_option("--out", out_dir, "output directory (default from config)");
    run->add_option("--jobs", jobs, "max concurrent experiment runs");

    // dioph -------------------------------------------------------------
    auto* dioph = app.add_subcommand("dioph", "small-divisor scan of a boundary direction");
    std::string direction = "golden", out_path = "", format = "csv";
    int levels = 3;
    double tau = 0.0, offset = 0.0;
    long long radius = 100;
    int m_max = 0;
    long long xi_radius = 0;
    dioph->add_option("--direction", direction, "axis|golden|liouville|<x,y>");
    dioph->add_option("--levels", levels, "liouville truncation levels");
    dioph->add_option("--tau", tau, "Diophantine exponent");
    dioph->add_option("--radius", radius, "lattice scan radius");
    dioph->add_option("--xi-levels", m_max, "also build the xi sequence to this depth");
    dioph->add_option("--xi-radius", xi_radius,
                      "search radius for the xi sequence (defaults to --radius)");
    dioph->add_option("--offset", offset, "boundary offset a");
    dioph->add_option("--out", out_path, "output file (stdout when empty)");
    dioph->add_option("--format", format, "csv|json")->check(CLI::IsMember({"csv", "json"}));

    // cell ----------------------------------------------------------------
    auto* cellcmd = app.add_subcommand("cell", "cell problems and homogenized tensor");
    std::string ctype = "layered";
    int cgrid = 256;
    std::string cout_dir = "results/cell";
    cellcmd->add_option("--type", ctype, "identity|layered|checkerboard");
    cellcmd->add_option("--grid", cgrid, "collocation grid per axis (power of two)");
    cellcmd->add_option("--out", cout_dir, "output directory");

    // config-backed shortcuts ---------------------------------------------
    auto* decay = app.add_subcommand("decay", "rational-strip decay run (E1 defaults)");
    auto* slowcv = app.add_subcommand("slowcv", "slow-convergence witness (E3 defaults)");
    auto* tailscan = app.add_subcommand("tailscan", "tail-offset scan (E4 defaults)");
    auto* errsweep = app.add_subcommand("err-sweep", "homogenization sweep (E6 defaults)");
    std::string alias_out;
    for (auto* cmd : {decay, slowcv, tailscan, errsweep})
        cmd->add_option("--out", alias_out, "output directory");

    // kernel-check ---------------------------------------------------------
    auto* kcheck = app.add_subcommand("kernel-check", "half-plane kernel validation");
    std::string kout;
    kcheck->add_option("--out", kout, "output file (stdout when empty)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_configs(configs, out_dir, jobs);

        if (*dioph) {
            auto frame = frame_from_name(direction, levels, offset);
            auto rep = geometry::small_divisor_scan(frame, tau, radius);
            std::string payload = format == "json" ? io::diophantine_json(rep).dump(2) + "\n"
                                                   : io::diophantine_csv(rep);
            if (m_max > 0) {
                auto seq = geometry::xi_sequence(frame, m_max,
                                                 xi_radius > 0 ? xi_radius : radius);
                payload += format == "json" ? io::xi_sequence_json(seq).dump(2) + "\n"
                                            : io::xi_sequence_csv(seq);
            }
            if (out_path.empty())
                std::cout << payload;
            else
                io::write_file(out_path, payload);
            return kExitPass;
        }

        if (*cellcmd) {
            json cfg = {{"experiment", "E5"},
                        {"coefficients", {{"type", ctype}, {"grid", cgrid}}}};
            auto res = experiments::run_experiment(cfg, cout_dir);
            for (const auto& c : res.criteria) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value="
                          << io::fmt(c.value) << "\n";
            }
            return res.pass ? kExitPass : kExitCriterion;
        }

        auto alias = [&](const char* exp) {
            json cfg = {{"experiment", exp}};
            auto res = experiments::run_experiment(
                cfg, alias_out.empty() ? std::string("results/") + exp : alias_out);
            for (const auto& c : res.criteria) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value="
                          << io::fmt(c.value) << "\n";
            }
            return res.pass ? kExitPass : kExitCriterion;
        };
        if (*decay) return alias("E1");
        if (*slowcv) return alias("E3");
        if (*tailscan) return alias("E4");
        if (*errsweep) return alias("E6");

        if (*kcheck) {
            auto frame = frame_from_name("axis", 3, 0.0);
            auto rep = kernels::kernel_bound_check(frame);
            double mass = kernels::boundary_mass(frame, {0.0, 1.0});
            double harm = kernels::harmonicity_residual(frame);
            const double inv_pi = 1.0 / std::numbers::pi;
            json j;
            j["poisson_constant"] = rep.poisson_constant;
            j["gradient_constant"] = rep.gradient_constant;
            j["green_constant"] = rep.green_constant;
            j["boundary_mass"] = mass;
            j["harmonicity_residual"] = harm;
            bool ok = std::abs(rep.poisson_constant - inv_pi) <= 1e-9 &&
                      std::abs(mass - 1.0) <= 1e-8 && harm <= 1e-6 && rep.nonnegative;
            j["pass"] = ok;
            std::string payload = j.dump(2) + "\n";
            if (kout.empty())
                std::cout << payload;
            else
                io::write_file(kout, payload);
            return ok ? kExitPass : kExitCriterion;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ConvergenceError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const InvalidInput& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitPass;
}
