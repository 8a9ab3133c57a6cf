#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "adaptive/calibrate/calibrate.hpp"
#include "adaptive/cli/pipeline.hpp"
#include "adaptive/core/error.hpp"

namespace fs = std::filesystem;
using namespace adaptive;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
};

void add_common(CLI::App* app, CommonFlags& flags) {
  app->add_option("--config", flags.config, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", flags.seed, "Seed override");
  app->add_option("--jobs", flags.jobs, "Worker threads (default: available cores)")->check(CLI::NonNegativeNumber);
  app->add_option("--out", flags.out, "Base directory for relative data paths (default: current directory)");
}

cli::PipelineConfig resolve_config(const CommonFlags& flags) {
  const fs::path base = flags.out.empty() ? fs::current_path() : fs::path(flags.out);
  cli::PipelineConfig c =
      flags.config.empty() ? cli::default_pipeline_config(base) : cli::load_pipeline_config(flags.config, base);
  if (flags.seed) c.seed = *flags.seed;
  if (flags.jobs) c.jobs = *flags.jobs;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive world-model planning pipeline"};
  app.require_subcommand(1);

  CommonFlags generate_flags, fit_flags, cluster_flags, train_flags, bench_flags, plot_flags, pipeline_flags;
  std::optional<int> count;
  std::vector<std::string> archetypes;

  auto* generate = app.add_subcommand("generate", "Write a synthetic scenario corpus");
  add_common(generate, generate_flags);
  generate->add_option("--count", count, "Logs per archetype")->check(CLI::NonNegativeNumber);
  generate->add_option("--archetypes", archetypes, "Archetype names (PIT BOS SIN LAS DEFAULT)")->delimiter(',');

  auto* fit = app.add_subcommand("fit", "Fit behaviour parameters to every log");
  add_common(fit, fit_flags);
  auto* cluster = app.add_subcommand("cluster", "Cluster the per-log fits");
  add_common(cluster, cluster_flags);
  auto* train = app.add_subcommand("train", "Train the behaviour classifiers");
  add_common(train, train_flags);
  auto* bench_cmd = app.add_subcommand("bench", "Run the closed-loop experiment suite");
  add_common(bench_cmd, bench_flags);
  auto* plot = app.add_subcommand("plot", "Write plot data files");
  add_common(plot, plot_flags);
  auto* pipeline = app.add_subcommand("pipeline", "Run fit, cluster, train, bench and plot");
  add_common(pipeline, pipeline_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const char* stage = "pipeline";
  try {
    if (generate->parsed()) {
      stage = "generate";
      auto c = resolve_config(generate_flags);
      if (generate_flags.seed) c.generate.seed = *generate_flags.seed;
      if (count) c.generate.count = *count;
      if (!archetypes.empty()) c.generate.archetypes = archetypes;
      const auto entries = cli::cmd_generate(c.generate, c.corpus_dir, c.jobs, std::cerr);
      std::cout << "wrote " << entries.size() << " logs to " << c.corpus_dir.string() << "\n";
    } else if (fit->parsed()) {
      stage = "fit";
      const auto c = resolve_config(fit_flags);
      const auto fits = cli::cmd_fit(cli::load_corpus(c.corpus_dir), c);
      std::cout << "fitted " << fits.size() << " logs\n";
    } else if (cluster->parsed()) {
      stage = "cluster";
      const auto c = resolve_config(cluster_flags);
      const auto model = cli::cmd_cluster(calibrate::load_fits(c.model_dir / "fits.jsonl"), c);
      std::cout << "K=" << model.k << " after " << model.iterations << " iterations\n";
    } else if (train->parsed()) {
      stage = "train";
      const auto c = resolve_config(train_flags);
      cli::cmd_train(cli::load_corpus(c.corpus_dir), calibrate::load_fits(c.model_dir / "fits.jsonl"),
                     calibrate::load_cluster_model(c.model_dir / "clusters.json"), c);
      std::cout << "wrote classifiers to " << c.model_dir.string() << "\n";
    } else if (bench_cmd->parsed()) {
      stage = "bench";
      const auto c = resolve_config(bench_flags);
      cli::cmd_bench(cli::load_corpus(c.corpus_dir), calibrate::load_fits(c.model_dir / "fits.jsonl"),
                     calibrate::load_cluster_model(c.model_dir / "clusters.json"), c);
      std::cout << "wrote report to " << c.report_dir.string() << "\n";
    } else if (plot->parsed()) {
      stage = "plot";
      const auto c = resolve_config(plot_flags);
      const auto corpus = cli::load_corpus(c.corpus_dir);
      const auto plots = bench::build_plot_data(corpus.logs, calibrate::load_fits(c.model_dir / "fits.jsonl"),
                                                calibrate::load_cluster_model(c.model_dir / "clusters.json"), c.jobs);
      cli::cmd_plot(plots, c, std::cerr);
      std::cout << "wrote plot data to " << c.plot_dir.string() << "\n";
    } else if (pipeline->parsed()) {
      cli::run_pipeline(resolve_config(pipeline_flags), std::cerr);
    }
  } catch (const cli::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: stage '" << stage << "' failed: " << e.what() << "\n";
    return cli::exit_code_for(e);
  }
  return 0;
}
