#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "taxo/error.hpp"
#include "taxo/pipeline.hpp"

namespace fs = std::filesystem;
using taxo::pipeline::PipelineConfig;
using taxo::pipeline::StageReport;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mock;
  std::string cache_dir;
  std::string output;
  bool force = false;
  bool verbose = false;
  // subcommand options
  std::vector<std::string> semeval;
  std::string judgments;
  std::vector<std::uint64_t> seeds;
  bool oracle = false;
  bool leaves_only = false;
  bool no_filter = false;
};

PipelineConfig resolve_config(const Overrides& o) {
  PipelineConfig c = o.config.empty() ? PipelineConfig{} : taxo::pipeline::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (!o.mock.empty()) c.mock_script = o.mock;
  if (!o.cache_dir.empty()) c.cache_dir = o.cache_dir;
  if (!o.output.empty()) c.output_dir = o.output;
  c.force = c.force || o.force;
  if (!o.semeval.empty()) c.semeval.assign(o.semeval.begin(), o.semeval.end());
  if (!o.judgments.empty()) c.judgments = o.judgments;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  c.oracle = c.oracle || o.oracle;
  c.leaves_only = c.leaves_only || o.leaves_only;
  if (o.no_filter) c.use_filter = false;
  return c;
}

int print(const StageReport& r) {
  for (const auto& line : r.lines) std::cout << r.stage << ": " << line << '\n';
  for (const auto& e : r.errors) std::cerr << "error: " << e << '\n';
  if (!r.ok()) std::cerr << r.stage << ": " << r.errors.size() << " error(s)\n";
  return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic taxonomy construction, tagging and expansion benchmark"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "INI configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Seed for topic models");
  app.add_option("--mock", o.mock, "Scripted mock provider (JSON list of {match, reply, fail_times})")
      ->check(CLI::ExistingFile);
  app.add_option("--cache-dir", o.cache_dir, "LLM response cache directory");
  app.add_option("--output", o.output, "Output directory");
  app.add_flag("--force", o.force, "Recompute stages even when their inputs are unchanged");
  app.add_flag("-v,--verbose", o.verbose, "Debug logging");

  auto* filter = app.add_subcommand("build-filter", "Build per-macro-category generic word filters");
  auto* build = app.add_subcommand("build-taxonomies", "Build one taxonomy per micro category");
  build->add_flag("--no-filter", o.no_filter, "Do not apply generic word filters");
  auto* tag = app.add_subcommand("tag", "Tag merchants with taxonomy terms");
  tag->add_flag("--leaves-only", o.leaves_only, "Index only leaf terms");
  auto* expand = app.add_subcommand("expand-eval", "Parent-prediction benchmark over hidden leaves");
  expand->add_option("--semeval", o.semeval, "Extra SemEval edge files")->check(CLI::ExistingFile);
  expand->add_option("--seeds", o.seeds, "Sampling seeds")->delimiter(',');
  expand->add_flag("--oracle", o.oracle, "Answer with the true parents");
  auto* coh = app.add_subcommand("coherence", "Coherence reports from judgment files");
  coh->add_option("--judgments", o.judgments, "Judgment JSONL")->check(CLI::ExistingFile);
  coh->add_option("--semeval", o.semeval, "SemEval edge files referenced by judgments")->check(CLI::ExistingFile);
  auto* sem = app.add_subcommand("load-semeval", "Convert SemEval edge lists to taxonomy files");
  sem->add_option("inputs", o.semeval, "Edge files")->check(CLI::ExistingFile);
  for (auto* sub : {filter, build, tag, expand, coh, sem}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_default_logger(spdlog::stderr_color_mt("taxo"));
  spdlog::set_level(o.verbose ? spdlog::level::debug : spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  PipelineConfig config;
  try {
    config = resolve_config(o);
  } catch (const std::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  }

  namespace p = taxo::pipeline;
  if (filter->parsed()) return print(p::build_filter(config));
  if (build->parsed()) return print(p::build_taxonomies(config));
  if (tag->parsed()) return print(p::tag(config));
  if (expand->parsed()) return print(p::expand_eval(config));
  if (coh->parsed()) return print(p::coherence(config));
  if (sem->parsed()) return print(p::load_semeval(config));
  return 2;
}
