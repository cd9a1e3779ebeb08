#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "regcd/errors.hpp"

namespace {

using regcd::cli::CommonArgs;

constexpr int kExitSuccess = 0;
constexpr int kExitProcessing = 1;
constexpr int kExitUsage = 2;

void add_common_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Pipeline config JSON file");
    cmd->add_option("--out", args.out_dir, "Output directory")->required();
    cmd->add_option("--seed", args.seed, "Seed override (wins over the config file)");
    cmd->add_option("--workers", args.workers, "Worker thread override");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bi-temporal raster registration and change detection"};
    app.require_subcommand(1);

    // warpgen
    std::string wg_t1, wg_t2, wg_gt;
    int wg_level = 1;
    CommonArgs wg_args;
    CLI::App* warpgen =
        app.add_subcommand("warpgen", "Generate a distorted benchmark scenario bundle");
    warpgen->add_option("--t1", wg_t1, "Reference image")->required();
    warpgen->add_option("--t2", wg_t2, "Aligned follow-up image")->required();
    warpgen->add_option("--gt-change", wg_gt, "Ground-truth change mask (0/255)")->required();
    warpgen->add_option("--level", wg_level, "Distortion difficulty level")
        ->required()
        ->check(CLI::Range(1, 3));
    add_common_flags(warpgen, wg_args);

    // register
    std::string rg_t1, rg_t2;
    CommonArgs rg_args;
    CLI::App* reg = app.add_subcommand("register", "Estimate the T2-to-T1 homography and warp");
    reg->add_option("--t1", rg_t1, "Reference image")->required();
    reg->add_option("--t2", rg_t2, "Image to register onto T1")->required();
    add_common_flags(reg, rg_args);

    // detect
    std::string dt_t1, dt_t2r, dt_validity;
    CommonArgs dt_args;
    CLI::App* detect = app.add_subcommand("detect", "Score changes on a registered pair");
    detect->add_option("--t1", dt_t1, "Reference image")->required();
    detect->add_option("--t2-registered", dt_t2r, "Registered follow-up image")->required();
    detect->add_option("--validity", dt_validity, "Warp validity mask")->required();
    add_common_flags(detect, dt_args);

    // pipeline
    std::string pl_t1, pl_t2;
    std::optional<std::string> pl_gt;
    CommonArgs pl_args;
    CLI::App* pipeline =
        app.add_subcommand("pipeline", "Register, detect and mask to the overlap in one run");
    pipeline->add_option("--t1", pl_t1, "Reference image")->required();
    pipeline->add_option("--t2", pl_t2, "Image to register onto T1")->required();
    pipeline->add_option("--gt-change", pl_gt,
                         "Optional ground-truth change mask; enables metrics.json");
    add_common_flags(pipeline, pl_args);

    // eval
    std::string ev_pred, ev_gt;
    std::optional<std::string> ev_mask;
    CommonArgs ev_args;
    CLI::App* eval = app.add_subcommand("eval", "Compare a change map against ground truth");
    eval->add_option("--pred", ev_pred, "Predicted change map (0/255)")->required();
    eval->add_option("--gt", ev_gt, "Ground-truth change map (0/255)")->required();
    eval->add_option("--mask", ev_mask, "Optional evaluation region mask");
    add_common_flags(eval, ev_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*warpgen) {
            const regcd::cli::PipelineConfig cfg = resolve_config(wg_args);
            regcd::cli::cmd_warpgen(wg_t1, wg_t2, wg_gt, wg_level, cfg.seed, wg_args.out_dir);
        } else if (*reg) {
            regcd::cli::cmd_register(rg_t1, rg_t2, resolve_config(rg_args), rg_args.out_dir);
        } else if (*detect) {
            regcd::cli::cmd_detect(dt_t1, dt_t2r, dt_validity, resolve_config(dt_args),
                                   dt_args.out_dir);
        } else if (*pipeline) {
            regcd::cli::cmd_pipeline(pl_t1, pl_t2, pl_gt, resolve_config(pl_args),
                                     pl_args.out_dir);
        } else if (*eval) {
            regcd::cli::cmd_eval(ev_pred, ev_gt, ev_mask, ev_args.out_dir);
        }
    } catch (const regcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const regcd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProcessing;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitProcessing;
    }
    return kExitSuccess;
}
