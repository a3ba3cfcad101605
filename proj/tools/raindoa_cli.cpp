// SPDX-License-Identifier: Apache-2.0
//
// raindoa - array simulation and multi-task DoA / rain-rate estimation toolkit
// Copyright (C) 2026 raindoa developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// raindoa command line: dataset generation, training, evaluation, classical
// baselines and rain-model diagnostics, driven by a TOML run configuration.
//
// Exit codes: 0 success, 1 failed acceptance-style check, 2 usage or config
// error, 3 numerical/model error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "raindoa/dataset.hpp"
#include "raindoa/eval_harness.hpp"
#include "raindoa/parallel.hpp"
#include "raindoa/run_config.hpp"
#include "raindoa/train.hpp"

namespace
{
    using namespace raindoa;

    struct CommonArgs
    {
        std::string config_path;
        int workers = 0;
    };

    void apply_workers(const CommonArgs &common)
    {
        if (common.workers > 0)
            set_num_workers(common.workers);
    }

    std::string mode_label(net::WeightingMode mode, double alpha)
    {
        if (mode == net::WeightingMode::Uncertainty)
            return "uncertainty";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "fixed-%g", alpha);
        return buf;
    }

    int cmd_gen(const CommonArgs &common, const std::string &out_dir,
                std::optional<std::uint64_t> seed_override)
    {
        apply_workers(common);
        cli::RunConfig cfg = cli::RunConfig::load(common.config_path);
        if (seed_override)
        {
            cfg.data_seed = *seed_override;
            cfg.test_seed = *seed_override + 1;
        }
        std::filesystem::create_directories(out_dir);

        const auto full_spec = cfg.make_generation_spec(cfg.train_records, cfg.data_seed);
        const data::Dataset full = data::generate_dataset(full_spec);
        auto [train_set, val_set] = data::split(full, 1.0 - cfg.val_fraction, cfg.data_seed);

        const auto test_spec = cfg.make_generation_spec(cfg.test_records, cfg.test_seed);
        const data::Dataset test_set = data::generate_dataset(test_spec);

        const std::string train_path = out_dir + "/train.rdoa";
        const std::string val_path = out_dir + "/val.rdoa";
        const std::string test_path = out_dir + "/test.rdoa";
        data::write_dataset(train_set, train_path);
        data::write_dataset(val_set, val_path);
        data::write_dataset(test_set, test_path);
        data::write_manifest(train_set, full_spec, train_path, out_dir + "/train.manifest.json");
        data::write_manifest(val_set, full_spec, val_path, out_dir + "/val.manifest.json");
        data::write_manifest(test_set, test_spec, test_path, out_dir + "/test.manifest.json");

        std::printf("gen: %zu train / %zu val / %zu test records -> %s\n",
                    train_set.records.size(), val_set.records.size(),
                    test_set.records.size(), out_dir.c_str());
        std::printf("gen: train checksum %016llx, test checksum %016llx\n",
                    (unsigned long long)data::fnv1a64_file(train_path),
                    (unsigned long long)data::fnv1a64_file(test_path));
        return 0;
    }

    int cmd_train(const CommonArgs &common, const std::string &data_dir,
                  const std::string &out_dir, const std::string &mode_flag,
                  std::optional<double> alpha_flag, std::optional<std::uint64_t> seed_override,
                  const std::string &resume_path)
    {
        apply_workers(common);
        cli::RunConfig cfg = cli::RunConfig::load(common.config_path);
        if (!mode_flag.empty())
            cfg.mode = mode_flag;
        if (alpha_flag)
            cfg.fixed_alpha = *alpha_flag;
        if (seed_override)
            cfg.train_seed = *seed_override;
        std::filesystem::create_directories(out_dir);

        const data::Dataset train_set = data::read_dataset(data_dir + "/train.rdoa");
        const data::Dataset val_set = data::read_dataset(data_dir + "/val.rdoa");
        const doa::AngularGrid grid = cfg.make_grid();

        const net::WeightingMode mode = net::weighting_from_name(cfg.mode);
        const std::string label = mode_label(mode, cfg.fixed_alpha);

        net::TrainOptions opt;
        opt.epochs = cfg.epochs;
        opt.batch_size = cfg.batch_size;
        opt.learning_rate = cfg.learning_rate;
        opt.mode = mode;
        opt.fixed_alpha = cfg.fixed_alpha;
        opt.seed = cfg.train_seed;
        opt.best_checkpoint_path = out_dir + "/model-" + label + ".ckpt";
        opt.resume_checkpoint_path = out_dir + "/resume-" + label + ".ckpt";
        opt.metrics_csv_path = out_dir + "/metrics-" + label + ".csv";

        net::TrainResult result;
        if (!resume_path.empty())
        {
            net::LoadedCheckpoint loaded = net::load_checkpoint(resume_path);
            if (loaded.meta.mode != mode)
                throw ConfigError("train: resume checkpoint was trained with mode '" +
                                  net::weighting_name(loaded.meta.mode) + "'");
            net::ResumeState rs;
            rs.adam_m = std::move(loaded.adam_m);
            rs.adam_v = std::move(loaded.adam_v);
            rs.steps_done = loaded.meta.steps_done;
            rs.epochs_done = loaded.meta.epochs_done;
            if (rs.adam_m.empty())
                throw ConfigError("train: checkpoint has no optimizer state; cannot resume");
            result = net::train(loaded.net, train_set, val_set, grid, opt, &rs);
        }
        else
        {
            net::Network<float> network(cfg.make_net_config());
            network.init_params(cfg.train_seed);
            result = net::train(network, train_set, val_set, grid, opt);
        }

        std::printf("train[%s]: %zu epochs, best val %.6f at epoch %zu\n", label.c_str(),
                    result.epochs_run, result.best_val_total, result.best_epoch);
        std::printf("train[%s]: checkpoint %s\n", label.c_str(), opt.best_checkpoint_path.c_str());
        std::printf("train[%s]: metrics %s\n", label.c_str(), opt.metrics_csv_path.c_str());
        return 0;
    }

    int cmd_eval(const CommonArgs &common, const std::string &data_dir,
                 const std::vector<std::string> &checkpoints, const std::string &out_dir)
    {
        apply_workers(common);
        cli::RunConfig cfg = cli::RunConfig::load(common.config_path);
        const data::Dataset test_set = data::read_dataset(data_dir + "/test.rdoa");

        eval::EvalConfig ecfg;
        ecfg.geometry = cfg.geometry;
        ecfg.grid = cfg.make_grid();
        ecfg.num_sources = cfg.num_sources;
        ecfg.batch_size = cfg.batch_size;

        std::vector<net::LoadedCheckpoint> loaded;
        std::vector<eval::LabeledNet> nets;
        loaded.reserve(checkpoints.size());
        for (const std::string &path : checkpoints)
        {
            loaded.push_back(net::load_checkpoint(path));
            nets.push_back({mode_label(loaded.back().meta.mode, loaded.back().meta.fixed_alpha),
                            &loaded.back().net});
        }

        const eval::EvalReport report = eval::evaluate(test_set, nets, ecfg);
        eval::export_report(report, out_dir);

        for (const auto &row : report.acc_rows)
            std::printf("eval: rain accuracy %-14s @ %5.1f dB = %6.2f %%\n",
                        row.mode.c_str(), row.snr_db, row.accuracy_pct);
        for (const auto &row : report.rmse_rows)
            std::printf("eval: doa rmse %-16s @ %5.1f dB = %8.4f deg\n",
                        row.method.c_str(), row.snr_db, row.rmse_deg);
        for (const auto &w : report.warnings)
            std::printf("eval: warning: %s\n", w.c_str());
        std::printf("eval: report written to %s\n", out_dir.c_str());
        return 0;
    }

    int cmd_baseline(const CommonArgs &common, const std::string &data_dir,
                     const std::string &method_name, const std::string &out_dir)
    {
        apply_workers(common);
        cli::RunConfig cfg = cli::RunConfig::load(common.config_path);
        const doa::Method method = doa::method_from_name(method_name);
        if (method == doa::Method::CNN)
            throw ConfigError("baseline: 'cnn' is not a classical method");
        const data::Dataset test_set = data::read_dataset(data_dir + "/test.rdoa");

        eval::EvalConfig ecfg;
        ecfg.geometry = cfg.geometry;
        ecfg.grid = cfg.make_grid();
        ecfg.num_sources = cfg.num_sources;
        ecfg.baselines = {method};

        const eval::EvalReport report = eval::evaluate(test_set, {}, ecfg);
        std::filesystem::create_directories(out_dir);
        const std::string csv_path = out_dir + "/rmse_" + doa::method_name(method) + ".csv";
        {
            std::ofstream out(csv_path, std::ios::trunc);
            if (!out)
                throw IoError(csv_path + ": cannot open for writing");
            out << "snr_db,method,rmse_deg\n";
            char buf[128];
            for (const auto &row : report.rmse_rows)
            {
                std::snprintf(buf, sizeof(buf), "%.9g,%s,%.9g\n", row.snr_db,
                              row.method.c_str(), row.rmse_deg);
                out << buf;
            }
        }
        for (const auto &row : report.rmse_rows)
            std::printf("baseline: %s @ %5.1f dB -> %8.4f deg\n", row.method.c_str(),
                        row.snr_db, row.rmse_deg);
        std::printf("baseline: wrote %s\n", csv_path.c_str());
        return 0;
    }

    int cmd_alpha_table(const CommonArgs &common)
    {
        apply_workers(common);
        const cli::RunConfig cfg = cli::RunConfig::load(common.config_path);
        const std::size_t M = cfg.geometry.sensors;
        const double d0 = cfg.geometry.spacing_wl;
        const rain::FluctuationModel &fm = cfg.rain_table.fluctuation;

        std::printf("# rain-model diagnostics: lambda11=%g range_m=%g d0=%g M=%zu\n",
                    fm.lambda11, fm.range_m, d0, M);
        std::printf("# alpha per sensor separation k = 1..%zu at the wavefront spacing "
                    "d(theta) = d0 cos(theta); '!' marks separations outside the fitted "
                    "region [0.1, 8] wavelengths\n", M - 1);

        for (const rain::RainClass &cls : cfg.rain_table.classes)
        {
            for (double theta_deg : {0.0, 45.0})
            {
                std::printf("class %d (%5.1f mm/h) theta=%4.1f deg:", cls.index,
                            cls.rate_mm_per_h, theta_deg);
                const double spacing = rain::wavefront_spacing(deg2rad(theta_deg), d0);
                for (std::size_t k = 1; k < M; ++k)
                {
                    if (cls.distortion_free())
                    {
                        std::printf(" 1");
                        continue;
                    }
                    const rain::AlphaResult a =
                        rain::alpha(fm.range_m, double(k) * spacing, *cls.params);
                    std::printf(" %.4f%s", a.value, a.within_validity ? "" : "!");
                }
                const rain::DistortionCovariance rb =
                    rain::build_rb(deg2rad(theta_deg), M, d0, fm, cls);
                const auto eig = linalg::symmetric_eig(rb.matrix);
                std::printf("  | rb_diag=%.4f min_eig=%.3e\n", rb.matrix(0, 0),
                            eig.values.back());
            }
        }
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"raindoa: rain-distorted array simulation, multi-task network "
                 "training and classical DoA baselines"};
    app.require_subcommand(1);

    CommonArgs common;

    std::string out_dir = "out";
    std::string data_dir = "data";
    std::optional<std::uint64_t> seed_override;
    std::optional<double> alpha_flag;
    std::string mode_flag;
    std::string resume_path;
    std::string method_name;
    std::vector<std::string> checkpoints;

    auto add_common = [&](CLI::App *sub, bool needs_config = true) {
        auto *opt = sub->add_option("--config", common.config_path, "run configuration (TOML)");
        if (needs_config)
            opt->required();
        sub->add_option("--workers", common.workers, "worker threads (default: all cores)");
    };

    CLI::App *gen = app.add_subcommand("gen", "generate train/val/test datasets");
    add_common(gen);
    gen->add_option("--out", out_dir, "output directory");
    gen->add_option("--seed", seed_override, "override the dataset seed");

    CLI::App *train = app.add_subcommand("train", "train the multi-task network");
    add_common(train);
    train->add_option("--data", data_dir, "directory holding train.rdoa / val.rdoa");
    train->add_option("--out", out_dir, "output directory for checkpoints and metrics");
    train->add_option("--mode", mode_flag, "weighting mode: uncertainty or fixed");
    train->add_option("--alpha", alpha_flag, "fixed-mode rain loss weight");
    train->add_option("--seed", seed_override, "override the training seed");
    train->add_option("--resume", resume_path, "resume from a full-state checkpoint");

    CLI::App *eval_cmd = app.add_subcommand("eval", "evaluate checkpoints and baselines");
    add_common(eval_cmd);
    eval_cmd->add_option("--data", data_dir, "directory holding test.rdoa");
    eval_cmd->add_option("--checkpoints", checkpoints, "model checkpoints to evaluate")
        ->expected(-1);
    eval_cmd->add_option("--out", out_dir, "report output directory");

    CLI::App *baseline = app.add_subcommand("baseline", "run one classical estimator");
    add_common(baseline);
    baseline->add_option("--data", data_dir, "directory holding test.rdoa");
    baseline->add_option("--method", method_name, "music, root-music, esprit or mvdr")
        ->required();
    baseline->add_option("--out", out_dir, "output directory");

    CLI::App *alpha_table = app.add_subcommand("alpha-table",
                                               "print correlation/distortion diagnostics");
    add_common(alpha_table);

    try
    {
        app.parse(argc, argv);
        if (gen->parsed())
            return cmd_gen(common, out_dir, seed_override);
        if (train->parsed())
            return cmd_train(common, data_dir, out_dir, mode_flag, alpha_flag,
                             seed_override, resume_path);
        if (eval_cmd->parsed())
            return cmd_eval(common, data_dir, checkpoints, out_dir);
        if (baseline->parsed())
            return cmd_baseline(common, data_dir, method_name, out_dir);
        if (alpha_table->parsed())
            return cmd_alpha_table(common);
        return 2;
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e) == 0 ? 0 : 2;
    }
    catch (const raindoa::NumericalError &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    catch (const raindoa::ModelError &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
