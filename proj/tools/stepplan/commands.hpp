#pragma once

#include <memory>
#include <vector>

#include "common.hpp"

namespace stepplan::cli {

class Command {
 public:
  Command(CLI::App& parent, const std::string& name, const std::string& description)
      : app_(parent.add_subcommand(name, description)), settings_(app_, name) {}
  virtual ~Command() = default;

  CLI::App* app() const noexcept { return app_; }
  Settings& settings() noexcept { return settings_; }

  // Runs after Settings::resolve(). Returns the process exit status.
  virtual int run() = 0;

 protected:
  CLI::App* app_;
  Settings settings_;
};

std::unique_ptr<Command> make_decode(CLI::App& app);
std::unique_ptr<Command> make_gen_negatives(CLI::App& app);
std::unique_ptr<Command> make_curate(CLI::App& app);
std::unique_ptr<Command> make_datagen(CLI::App& app);
std::unique_ptr<Command> make_eval_embodied(CLI::App& app);
std::unique_ptr<Command> make_bench(CLI::App& app);
std::unique_ptr<Command> make_serve_mock(CLI::App& app);

}  // namespace stepplan::cli
