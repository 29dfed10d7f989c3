// stepplan: one binary, one subcommand per pipeline stage.
//
// Exit status: 0 success, 1 runtime failure, 2 configuration error. Failures
// print a single JSON object on stderr.

#include <iostream>

#include "commands.hpp"
#include "stepplan/error.hpp"

namespace {

using stepplan::cli::json;

int report(int code, const std::string& kind, const std::string& message, const std::string& field = "") {
  json err = {{"error", {{"kind", kind}, {"message", message}}}};
  if (!field.empty()) err["error"]["field"] = field;
  std::cerr << err.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Step-wise planning toolkit: decode, verifier data, curation, datagen, embodied evaluation"};
  app.set_version_flag("--version", std::string(STEPPLAN_VERSION));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<stepplan::cli::Command>> commands;
  commands.push_back(stepplan::cli::make_decode(app));
  commands.push_back(stepplan::cli::make_gen_negatives(app));
  commands.push_back(stepplan::cli::make_curate(app));
  commands.push_back(stepplan::cli::make_datagen(app));
  commands.push_back(stepplan::cli::make_eval_embodied(app));
  commands.push_back(stepplan::cli::make_bench(app));
  commands.push_back(stepplan::cli::make_serve_mock(app));

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help, --version
  } catch (const CLI::ParseError& e) {
    return report(2, "config", e.what());
  } catch (const stepplan::cli::ConfigError& e) {
    return report(2, "config", e.what(), e.field());
  }

  for (auto& cmd : commands) {
    if (!cmd->app()->parsed()) continue;
    try {
      cmd->settings().resolve();
      return cmd->run();
    } catch (const stepplan::cli::ConfigError& e) {
      return report(2, "config", e.what(), e.field());
    } catch (const stepplan::ProtocolError& e) {
      return report(1, "runtime", e.what(), e.field());
    } catch (const std::exception& e) {
      return report(1, "runtime", e.what());
    }
  }
  return report(2, "config", "no subcommand given");
}
