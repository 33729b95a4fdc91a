#include "cli_commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ofmpc/config.hpp"
#include "ofmpc/log_io.hpp"

namespace ofmpc::cli {

namespace {

int exit_code_for(const Error& e) {
    switch (e.code()) {
    case ErrorCode::ConfigParse:
    case ErrorCode::ParseError:
    case ErrorCode::Io:
        return kConfigError;
    default:
        return kRuntimeError;
    }
}

void print_report(const ConditionReport& report) {
    for (const ConditionResult& r : report.results) {
        std::printf("%-30s %s  value=%.6g  (%s)\n", r.name.c_str(), r.pass ? "PASS" : "FAIL", r.value,
                    r.detail.c_str());
    }
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
    return out;
}

std::filesystem::path prepare_dir(const RunConfig& cfg,
                                  const std::optional<std::filesystem::path>& override_dir) {
    const std::filesystem::path dir = override_dir ? *override_dir : output_directory(cfg);
    std::filesystem::create_directories(dir);
    return dir;
}

// Loads the config and verifies the conditions, printing failures.
std::optional<RunConfig> load_checked(const std::filesystem::path& path, int& code) {
    RunConfig cfg = load_config(path);
    const ConditionReport report = check_conditions(cfg);
    if (!report.all_pass()) {
        print_report(report);
        std::fprintf(stderr, "error: %s fails the controller conditions\n", path.string().c_str());
        code = kConditionFailed;
        return std::nullopt;
    }
    return cfg;
}

std::vector<Vector> read_setpoint_file(const std::filesystem::path& path, std::size_t nz) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::vector<Vector> points;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream fields(line);
        std::vector<double> values;
        std::string token;
        while (fields >> token) {
            char* end = nullptr;
            const double v = std::strtod(token.c_str(), &end);
            if (end != token.c_str() + token.size()) {
                throw Error(ErrorCode::ParseError, path.string() + ": line " + std::to_string(line_no) +
                                                       ": '" + token + "' is not a number");
            }
            values.push_back(v);
        }
        if (values.empty()) {
            continue;
        }
        if (values.size() != nz) {
            throw Error(ErrorCode::ParseError, path.string() + ": line " + std::to_string(line_no) +
                                                   ": expected " + std::to_string(nz) + " values");
        }
        points.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(nz)));
    }
    return points;
}

void write_sample_file(const std::filesystem::path& path, const std::vector<HarvestedSample>& samples,
                       std::size_t nz, std::size_t nd) {
    GrnnModel model(nz, nd, std::max<std::size_t>(1, samples.size()));
    for (const HarvestedSample& s : samples) {
        model.add_sample(s.r, s.d_ss);
    }
    std::ofstream out = open_output(path);
    write_samples(out, model);
}

} // namespace

int cmd_check(const std::filesystem::path& config) {
    try {
        const RunConfig cfg = load_config(config);
        const ConditionReport report = check_conditions(cfg);
        print_report(report);
        return report.all_pass() ? kOk : kConditionFailed;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    }
}

int cmd_run(const RunOptions& opts) {
    try {
        int code = kOk;
        std::optional<RunConfig> loaded = load_checked(opts.config, code);
        if (!loaded) {
            return code;
        }
        RunConfig& cfg = *loaded;
        if (opts.grnn) {
            cfg.grnn.samples_file = *opts.grnn;
        }
        const std::filesystem::path dir = prepare_dir(cfg, opts.out);
        const std::string which = opts.mode ? *opts.mode : std::string(to_string(cfg.scenario.cfg.mode));
        std::vector<ControllerMode> modes;
        if (which == "both") {
            modes = {ControllerMode::Nominal, ControllerMode::Learned};
        } else {
            modes = {parse_mode(which)};
        }

        const ControllerSetup setup = make_setup(cfg);
        const ScenarioConfig base = resolve_scenario(cfg);
        std::optional<TrainedGrnn> trained;
        const bool need_grnn =
            std::find(modes.begin(), modes.end(), ControllerMode::Learned) != modes.end();
        if (need_grnn) {
            trained = build_grnn(cfg);
            if (!trained && !cfg.grnn.policy.online) {
                throw Error(ErrorCode::ConfigParse,
                            "learned mode needs grnn.samples_file, grnn.training or grnn.online");
            }
            if (trained && !trained->samples.empty()) {
                write_sample_file(dir / (cfg.output_prefix + "_training.txt"), trained->samples,
                                  cfg.model.nz(), cfg.dist.nd());
            }
            if (trained) {
                std::printf("grnn: %zu samples, sigma=%.6g\n", trained->model.size(),
                            trained->model.sigma());
            }
        }

        const AbsoluteOffsets offsets{cfg.model.C() * cfg.op.x_ss, cfg.op.u_ss,
                                      cfg.model.H() * cfg.model.C() * cfg.op.x_ss};
        for (const ControllerMode mode : modes) {
            ScenarioConfig scenario = base;
            scenario.mode = mode;
            auto plant = make_plant(cfg);
            const ClosedLoopLog log =
                run_scenario(setup, *plant, scenario, trained ? &trained->model : nullptr);
            const MetricsSummary summary = metrics(log, cfg.model.dt());
            const std::string stem = cfg.output_prefix + "_" + std::string(to_string(mode));
            {
                std::ofstream out = open_output(dir / (stem + ".csv"));
                write_log_csv(out, log.records, &offsets);
            }
            {
                std::ofstream out = open_output(dir / (stem + "_summary.json"));
                write_summary_json(out, log, summary);
            }
            if (!log.samples.empty()) {
                std::ofstream out = open_output(dir / (stem + "_samples.csv"));
                write_samples_csv(out, log.samples);
            }
            std::printf("%s: %zu intervals, ISE=%.6g, max terminal offset=%.3g\n",
                        std::string(to_string(mode)).c_str(), log.records.size(), summary.total_ise,
                        summary.max_terminal_offset);
            if (log.abort_reason) {
                std::fprintf(stderr, "error: run aborted at %s\n", log.abort_reason->c_str());
                code = kRuntimeError;
            }
        }
        return code;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
}

int cmd_sweep(const SweepOptions& opts) {
    try {
        int code = kOk;
        std::optional<RunConfig> loaded = load_checked(opts.config, code);
        if (!loaded) {
            return code;
        }
        RunConfig& cfg = *loaded;
        SweepSpec spec = cfg.sweep;
        if (opts.setpoints) {
            SetpointSource src;
            src.kind = SetpointSource::Kind::Points;
            src.points = read_setpoint_file(*opts.setpoints, cfg.model.nz());
            src.reachable_only = false;
            spec.setpoints = src;
        }
        if (opts.workers) {
            spec.workers = *opts.workers;
        }
        const std::filesystem::path dir = prepare_dir(cfg, opts.out);
        const SweepResult result = run_sweep(cfg, spec);
        write_sample_file(dir / (cfg.output_prefix + "_samples.txt"), result.samples, cfg.model.nz(),
                          cfg.dist.nd());
        {
            std::ofstream out = open_output(dir / (cfg.output_prefix + "_samples.csv"));
            write_samples_csv(out, result.samples);
        }
        std::printf("sweep: %zu samples\n", result.samples.size());
        return kOk;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
}

int cmd_grnn_fit(const FitOptions& opts) {
    try {
        std::ifstream in(opts.samples);
        if (!in) {
            throw Error(ErrorCode::Io, "cannot open " + opts.samples.string());
        }
        const SampleFile file = read_samples(in);
        GrnnModel model = model_from_file(file);
        std::optional<SigmaSelection> selection;
        if (opts.sigma == "auto") {
            selection = select_sigma(model);
            model.set_sigma(selection->sigma);
        } else {
            char* end = nullptr;
            const double sigma = std::strtod(opts.sigma.c_str(), &end);
            if (end != opts.sigma.c_str() + opts.sigma.size() || !(sigma > 0.0)) {
                std::fprintf(stderr, "error: --sigma expects 'auto' or a positive number\n");
                return kUsage;
            }
            model.set_sigma(sigma);
        }

        const std::filesystem::path dir = opts.out ? *opts.out : opts.samples.parent_path();
        if (!dir.empty()) {
            std::filesystem::create_directories(dir);
        }
        const std::string stem = opts.samples.stem().string();
        {
            std::ofstream out = open_output(dir / (stem + "_model.txt"));
            write_samples(out, model, true);
        }
        {
            // Prediction grid over the sample range, widened by 10 percent.
            std::ofstream out = open_output(dir / (stem + "_grid.csv"));
            const std::size_t nz = model.nz();
            Vector lo = model.samples().front().input;
            Vector hi = lo;
            for (const GrnnSample& s : model.samples()) {
                lo = lo.cwiseMin(s.input);
                hi = hi.cwiseMax(s.input);
            }
            const Vector pad = ((hi - lo) * 0.1).cwiseMax(1e-3);
            lo -= pad;
            hi += pad;
            std::string header;
            for (std::size_t i = 0; i < nz; ++i) {
                header += (i ? ",r_" : "r_") + std::to_string(i);
            }
            for (std::size_t i = 0; i < model.nd(); ++i) {
                header += ",d_" + std::to_string(i);
            }
            out << header << '\n';
            const std::size_t per_dim = nz == 1 ? opts.grid : (nz == 2 ? std::min<std::size_t>(opts.grid, 41) : 0);
            std::vector<Vector> queries;
            if (per_dim == 0) {
                for (const GrnnSample& s : model.samples()) {
                    queries.push_back(s.input);
                }
            } else {
                std::size_t total = 1;
                for (std::size_t i = 0; i < nz; ++i) {
                    total *= per_dim;
                }
                for (std::size_t k = 0; k < total; ++k) {
                    Vector q(static_cast<Eigen::Index>(nz));
                    std::size_t rest = k;
                    for (std::size_t i = 0; i < nz; ++i) {
                        const double t = static_cast<double>(rest % per_dim) / static_cast<double>(per_dim - 1);
                        rest /= per_dim;
                        const auto ii = static_cast<Eigen::Index>(i);
                        q(ii) = lo(ii) + t * (hi(ii) - lo(ii));
                    }
                    queries.push_back(q);
                }
            }
            char buf[32];
            for (const Vector& q : queries) {
                const Vector d = model.predict(q);
                std::string line;
                for (Eigen::Index i = 0; i < q.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g", q(i));
                    line += (i ? "," : "") + std::string(buf);
                }
                for (Eigen::Index i = 0; i < d.size(); ++i) {
                    std::snprintf(buf, sizeof buf, "%.17g", d(i));
                    line += ',' + std::string(buf);
                }
                out << line << '\n';
            }
        }
        if (selection) {
            std::ofstream out = open_output(dir / (stem + "_loo.csv"));
            out << "sigma,loo_error\n";
            char buf[80];
            for (std::size_t i = 0; i < selection->grid.size(); ++i) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g", selection->grid[i], selection->errors[i]);
                out << buf << '\n';
            }
            std::printf("samples=%zu sigma=%.6g loo_error=%.6g\n", model.size(), model.sigma(),
                        selection->error);
        } else {
            std::printf("samples=%zu sigma=%.6g\n", model.size(), model.sigma());
        }
        return kOk;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code_for(e);
    } catch (const std::filesystem::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntimeError;
    }
}

} // namespace ofmpc::cli
