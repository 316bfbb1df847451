#include "sgldr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "sgldr/bnn.hpp"
#include "sgldr/errors.hpp"
#include "sgldr/experiment.hpp"
#include "sgldr/trace_io.hpp"

namespace sgldr::cli {

namespace {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what();
    if (e.iteration() >= 0) err << " [iteration " << e.iteration() << "]";
    err << '\n';
    return kExitRuntime;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct MethodAggregate {
  std::string method;
  std::vector<double> ess;
  std::vector<double> ess_per_s;
  std::vector<double> err;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

int cmd_sample(const std::string& config_path, const std::optional<std::string>& out_dir, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const ExperimentResult result = run_experiment(cfg);
    const std::string dir = out_dir.value_or(cfg.output_dir);
    write_experiment(cfg, result, dir);

    if (cfg.target.name == "bnn") {
      const auto target = std::dynamic_pointer_cast<const bnn::BnnTarget>(make_target(cfg.target));
      const bnn::Evaluation ev = bnn::evaluate(result.trace, target->dataset());
      write_json({{"rmse", ev.rmse}, {"test_ll", ev.test_ll}}, dir + "/evaluation.json");
    }

    const auto& d = result.diagnostics;
    out << "method=" << to_string(cfg.sampler.method) << " target=" << cfg.target.name
        << " snapshots=" << result.trace.snapshots.size()
        << " particles=" << result.trace.particle_count
        << " ess=" << (d.ess ? short_fmt(d.ess->mean_ess) : "n/a")
        << " error=" << (d.moment ? short_fmt(d.moment->error) : "n/a");
    if (d.coverage) out << " modes=" << *d.coverage;
    out << " wall_s=" << short_fmt(result.trace.total_wall_s) << " out=" << dir << '\n';
    return kExitOk;
  });
}

int cmd_compare(const std::string& config_a, const std::string& config_b, const std::vector<std::uint64_t>& seeds,
                const std::string& out_dir, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (seeds.empty()) throw ConfigError("compare needs at least one seed");
    const ExperimentConfig a = load_experiment_config(config_a);
    const ExperimentConfig b = load_experiment_config(config_b);
    if (target_spec_json(a.target) != target_spec_json(b.target)) {
      throw ConfigError("compared configs must share the same target ('" + a.target.name + "' vs '" +
                        b.target.name + "')");
    }

    std::filesystem::create_directories(out_dir);
    std::ofstream runs(out_dir + "/compare_runs.csv", std::ios::binary);
    runs << "config,method,seed,ess,ess_per_s,err\n";

    std::vector<MethodAggregate> aggregates;
    const std::pair<const ExperimentConfig*, std::string> sides[] = {{&a, config_a}, {&b, config_b}};
    for (const auto& [cfg, path] : sides) {
      MethodAggregate agg;
      agg.method = to_string(cfg->sampler.method);
      for (std::uint64_t seed : seeds) {
        ExperimentConfig run_cfg = *cfg;
        run_cfg.sampler.seed = seed;
        const ExperimentResult r = run_experiment(run_cfg);
        const double ess = r.diagnostics.ess ? r.diagnostics.ess->mean_ess : std::nan("");
        const double eps = r.diagnostics.ess ? r.diagnostics.ess->ess_per_second : std::nan("");
        const double e = r.diagnostics.moment ? r.diagnostics.moment->error : std::nan("");
        agg.ess.push_back(ess);
        agg.ess_per_s.push_back(eps);
        agg.err.push_back(e);
        runs << path << ',' << agg.method << ',' << seed << ',' << fmt(ess) << ',' << fmt(eps) << ',' << fmt(e)
             << '\n';
      }
      aggregates.push_back(std::move(agg));
    }

    std::ofstream csv(out_dir + "/compare.csv", std::ios::binary);
    csv << "method,ess,ess_per_s,err_mean,err_std\n";
    out << std::left << std::setw(10) << "method" << std::right << std::setw(12) << "ESS" << std::setw(12)
        << "ESS/s" << std::setw(12) << "err mean" << std::setw(12) << "err std" << '\n';
    for (const auto& agg : aggregates) {
      csv << agg.method << ',' << fmt(mean_of(agg.ess)) << ',' << fmt(mean_of(agg.ess_per_s)) << ','
          << fmt(mean_of(agg.err)) << ',' << fmt(std_of(agg.err)) << '\n';
      out << std::left << std::setw(10) << agg.method << std::right << std::setw(12) << short_fmt(mean_of(agg.ess))
          << std::setw(12) << short_fmt(mean_of(agg.ess_per_s)) << std::setw(12) << short_fmt(mean_of(agg.err))
          << std::setw(12) << short_fmt(std_of(agg.err)) << '\n';
    }
    return kExitOk;
  });
}

namespace {

struct LoadedTrace {
  TraceStore trace;
  TargetSpec target;
  bool has_sidecar = false;
};

LoadedTrace load_trace_with_sidecar(const std::string& trace_path) {
  LoadedTrace lt;
  lt.trace = read_trace_csv(trace_path);
  const std::string side = sidecar_path(trace_path);
  if (std::filesystem::exists(side)) {
    const nlohmann::json doc = read_json(side);
    apply_sidecar(lt.trace, doc);
    if (doc.contains("target")) lt.target = target_spec_from_json(doc["target"]);
    lt.has_sidecar = true;
  } else {
    lt.target.name = "";
  }
  return lt;
}

void emit(const std::string& text, const std::string& output, std::ostream& out) {
  if (output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(output, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + output + "'");
  file << text;
}

}  // namespace

int cmd_diagnose(const std::string& trace_path, const std::string& output, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const LoadedTrace lt = load_trace_with_sidecar(trace_path);
    if (!lt.has_sidecar) err << "warning: no sidecar next to trace; ESS/s and ground truth unavailable\n";
    const DiagnosticsResult diag = compute_diagnostics(lt.trace, lt.target, DiagnosticsSpec{});
    emit(diag.to_json().dump(2) + "\n", output, out);
    return kExitOk;
  });
}

int cmd_trace_export(const std::string& trace_path, const std::string& format, const std::string& output,
                     std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    const LoadedTrace lt = load_trace_with_sidecar(trace_path);
    const GroundTruth truth = ground_truth(lt.target);
    const RunningMoments rm = running_moments(lt.trace, truth.transform);
    const auto d = rm.mean.cols();

    std::ostringstream text;
    if (format == "csv") {
      text << "iter";
      for (Eigen::Index c = 0; c < d; ++c) text << ",mean_x_" << c;
      for (Eigen::Index c = 0; c < d; ++c) text << ",mean_x2_" << c;
      text << '\n';
      for (Eigen::Index r = 0; r < rm.mean.rows(); ++r) {
        text << rm.iterations[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < d; ++c) text << ',' << fmt(rm.mean(r, c));
        for (Eigen::Index c = 0; c < d; ++c) text << ',' << fmt(rm.second_moment(r, c));
        text << '\n';
      }
    } else {
      nlohmann::json doc;
      doc["iter"] = rm.iterations;
      nlohmann::json mean = nlohmann::json::array();
      nlohmann::json second = nlohmann::json::array();
      for (Eigen::Index r = 0; r < rm.mean.rows(); ++r) {
        std::vector<double> m(static_cast<std::size_t>(d));
        std::vector<double> s(static_cast<std::size_t>(d));
        for (Eigen::Index c = 0; c < d; ++c) {
          m[static_cast<std::size_t>(c)] = rm.mean(r, c);
          s[static_cast<std::size_t>(c)] = rm.second_moment(r, c);
        }
        mean.push_back(m);
        second.push_back(s);
      }
      doc["mean_x"] = mean;
      doc["mean_x2"] = second;
      text << doc.dump(2) << '\n';
    }
    emit(text.str(), output, out);
    return kExitOk;
  });
}

int cmd_bnn(const BnnOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.data.empty()) throw ConfigError("--data is required");
    if (o.target_col.empty()) throw ConfigError("--target-col is required");
    const Method method = parse_method(o.method);
    if (method == Method::Svgd) throw ConfigError("bnn supports --method sgld or sgld_r");

    auto data = std::make_shared<const bnn::RegressionDataset>(
        bnn::load_uci_csv(o.data, o.target_col, o.seed, o.test_fraction, o.max_rows));
    const std::size_t batch = data->train.size() < o.batch_size ? data->train.size() : o.batch_size;

    SamplerConfig cfg;
    cfg.method = method;
    cfg.particle_count = o.particles;
    cfg.total_iterations = o.iterations;
    cfg.burn_in = o.burn_in;
    cfg.thin = o.thin;
    cfg.seed = o.seed;
    cfg.repulsion_cutoff_fraction = o.repulsion_cutoff;
    cfg.step = StepSchedule::constant(o.step_size);
    cfg.validate();

    nlohmann::json grid_json;
    if (o.grid_search) {
      const std::vector<double> grid = {1e-5, 3e-5, 1e-4, 3e-4, 1e-3};
      const bnn::GridSearchResult gs = bnn::select_step_size(*data, cfg, grid, batch);
      cfg.step = StepSchedule::constant(gs.best_step);
      grid_json["steps"] = gs.steps;
      std::vector<nlohmann::json> rmse;
      for (double r : gs.validation_rmse) rmse.push_back(std::isfinite(r) ? nlohmann::json(r) : nlohmann::json());
      grid_json["validation_rmse"] = rmse;
      grid_json["best_step"] = gs.best_step;
    }

    const bnn::BnnTarget target(data, batch);
    const TraceStore trace = run(cfg, target);
    const bnn::Evaluation ev = bnn::evaluate(trace, *data);

    // Constant predictor at the training mean, for reference.
    double sq = 0.0;
    for (std::size_t i : data->test) {
      const double y = data->denormalize_target(data->targets[static_cast<Eigen::Index>(i)]);
      sq += (y - data->target_mean) * (y - data->target_mean);
    }
    const double baseline = std::sqrt(sq / static_cast<double>(data->test.size()));

    std::filesystem::create_directories(o.out);
    write_trace_csv(trace, o.out + "/trace.csv");
    TargetSpec spec;
    spec.name = "bnn";
    spec.data_path = o.data;
    spec.target_column = o.target_col;
    spec.split_seed = o.seed;
    spec.test_fraction = o.test_fraction;
    spec.max_rows = o.max_rows;
    spec.batch_size = batch;
    nlohmann::json extra;
    extra["method"] = o.method;
    extra["target"] = target_spec_json(spec);
    extra["sampler"] = cfg.canonical();
    extra["init_policy"] = "bnn-prior";
    write_json(sidecar_json(trace, extra), o.out + "/trace.json");

    nlohmann::json result;
    result["method"] = o.method;
    result["rmse"] = ev.rmse;
    result["test_ll"] = ev.test_ll;
    result["baseline_rmse"] = baseline;
    result["step_size"] = cfg.step.epsilon;
    result["particles"] = cfg.particle_count;
    result["iterations"] = cfg.total_iterations;
    result["train_rows"] = data->train.size();
    result["test_rows"] = data->test.size();
    if (o.grid_search) result["grid_search"] = grid_json;
    write_json(result, o.out + "/evaluation.json");

    out << "method=" << o.method << " rmse=" << short_fmt(ev.rmse) << " test_ll=" << short_fmt(ev.test_ll)
        << " baseline_rmse=" << short_fmt(baseline) << " step=" << short_fmt(cfg.step.epsilon)
        << " wall_s=" << short_fmt(trace.total_wall_s) << " out=" << o.out << '\n';
    return kExitOk;
  });
}

int main(int argc, char** argv) {
  CLI::App app{"Particle samplers: parallel SGLD, SVGD and SGLD with kernel repulsion"};
  app.require_subcommand(1);

  std::string sample_config;
  std::optional<std::string> sample_out;
  auto* sample = app.add_subcommand("sample", "Run one experiment from a config file");
  sample->add_option("config", sample_config, "Experiment config (.toml)")->required();
  sample->add_option("--out", sample_out, "Override output.dir");

  std::string cmp_a;
  std::string cmp_b;
  std::vector<std::uint64_t> cmp_seeds{1, 2, 3, 4, 5};
  std::string cmp_out = "runs/compare";
  auto* compare = app.add_subcommand("compare", "Compare two configs over several seeds");
  compare->add_option("config_a", cmp_a)->required();
  compare->add_option("config_b", cmp_b)->required();
  compare->add_option("--seeds", cmp_seeds, "Seeds, comma separated")->delimiter(',');
  compare->add_option("--out", cmp_out, "Output directory");

  std::string diag_trace;
  std::string diag_output;
  auto* diagnose = app.add_subcommand("diagnose", "Compute diagnostics for a stored trace");
  diagnose->add_option("trace", diag_trace, "Trace CSV (sidecar JSON next to it)")->required();
  diagnose->add_option("-o,--output", diag_output, "Write JSON here instead of stdout");

  std::string exp_trace;
  std::string exp_format = "csv";
  std::string exp_output;
  auto* trace_export = app.add_subcommand("trace-export", "Export running moment estimates");
  trace_export->add_option("trace", exp_trace, "Trace CSV")->required();
  trace_export->add_option("--format", exp_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  trace_export->add_option("-o,--output", exp_output, "Write here instead of stdout");

  BnnOptions bnn_opts;
  auto* bnn_cmd = app.add_subcommand("bnn", "Bayesian neural network regression on a CSV dataset");
  bnn_cmd->add_option("--data", bnn_opts.data, "Numeric CSV with header")->required();
  bnn_cmd->add_option("--target-col", bnn_opts.target_col, "Target column name")->required();
  bnn_cmd->add_option("--method", bnn_opts.method, "sgld or sgld_r")->check(CLI::IsMember({"sgld", "sgld_r"}));
  bnn_cmd->add_option("--seed", bnn_opts.seed, "Seed for split and sampler");
  bnn_cmd->add_option("--out", bnn_opts.out, "Output directory");
  bnn_cmd->add_option("--particles", bnn_opts.particles);
  bnn_cmd->add_option("--iterations", bnn_opts.iterations);
  bnn_cmd->add_option("--burn-in", bnn_opts.burn_in);
  bnn_cmd->add_option("--thin", bnn_opts.thin);
  bnn_cmd->add_option("--step-size", bnn_opts.step_size);
  bnn_cmd->add_flag("--grid-search", bnn_opts.grid_search, "Pick the step size on a validation fold");
  bnn_cmd->add_option("--batch-size", bnn_opts.batch_size);
  bnn_cmd->add_option("--test-fraction", bnn_opts.test_fraction);
  bnn_cmd->add_option("--max-rows", bnn_opts.max_rows, "Random subset of rows (0 = all)");
  bnn_cmd->add_option("--repulsion-cutoff", bnn_opts.repulsion_cutoff,
                      "Fraction of iterations after which repulsion is switched off");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*sample) return cmd_sample(sample_config, sample_out, std::cout, std::cerr);
  if (*compare) return cmd_compare(cmp_a, cmp_b, cmp_seeds, cmp_out, std::cout, std::cerr);
  if (*diagnose) return cmd_diagnose(diag_trace, diag_output, std::cout, std::cerr);
  if (*trace_export) return cmd_trace_export(exp_trace, exp_format, exp_output, std::cout, std::cerr);
  if (*bnn_cmd) return cmd_bnn(bnn_opts, std::cout, std::cerr);
  return kExitConfig;
}

}  // namespace sgldr::cli
