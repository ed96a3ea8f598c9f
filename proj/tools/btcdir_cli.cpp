// Stage runner: btcdir <stage> --config <file> [--out <dir>] [--seed N]
//
// Output directory precedence: --out, then $BTCDIR_OUT, then the config's
// output_dir. Exit codes: 0 ok, 1 other failure, 2 invalid config or input,
// 3 missing upstream stage, 4 audit violation.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "btcdir/pipeline/stages.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bitcoin next-day direction pipeline"};
  std::string stage_name, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  app.add_option("stage", stage_name,
                 "ingest | featurize | reduce | tune | evaluate | backtest | audit | report | all | schema | hash")
      ->required();
  app.add_option("--config,-c", config_path, "pipeline config (JSON)");
  app.add_option("--out,-o", out_dir, "output directory");
  app.add_option("--seed", seed, "override the config seed (changes the config hash)");
  app.add_flag("--quiet,-q", quiet, "no progress lines on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : btcdir::kExitValidation;
  }

  if (stage_name == "schema") {
    std::cout << btcdir::config_schema().dump(2) << '\n';
    return btcdir::kExitOk;
  }
  if (config_path.empty()) {
    std::cerr << "error: --config is required for stage '" << stage_name << "'\n";
    return btcdir::kExitValidation;
  }

  try {
    auto cfg = btcdir::load_config(config_path, seed);
    std::filesystem::path out = cfg.output_dir;
    if (const char* env = std::getenv("BTCDIR_OUT"); env && *env) out = env;
    if (!out_dir.empty()) out = out_dir;
    btcdir::StageContext ctx(std::move(cfg), out, quiet ? nullptr : &std::cerr);
    if (stage_name == "hash") {
      std::cout << ctx.hash << '\n';
      return btcdir::kExitOk;
    }
    if (stage_name == "all") {
      for (auto s : btcdir::kAllStages) btcdir::run_stage(s, ctx);
    } else {
      btcdir::run_stage(btcdir::parse_stage(stage_name), ctx);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return btcdir::exit_code_for(e);
  }
  return btcdir::kExitOk;
}
