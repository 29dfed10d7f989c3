#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stepplan/scorer.hpp"

namespace stepplan::cli {

using nlohmann::json;

// Raised for anything the operator can fix by changing flags, environment or
// the config file. Maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what) : std::runtime_error(what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

inline constexpr const char* kEnvPrefix = "STEPPLAN_";

std::string env_name(const std::string& key);

// Binds one subcommand's options to typed storage and remembers the config
// key of each, so that a run can be layered as
//   flag > environment > config file > built-in default
// and the effective values written back out as one JSON object.
class Settings {
 public:
  Settings(CLI::App* app, std::string command);

  template <typename T>
  void add(const std::string& key, T& storage, const std::string& help, const std::string& aliases = "") {
    CLI::Option* opt = nullptr;
    if constexpr (std::is_same_v<T, bool>)
      opt = app_->add_flag(names(key, aliases), storage, help);
    else
      opt = app_->add_option(names(key, aliases), storage, help)->capture_default_str();
    opt->envname(env_name(key));
    fields_.push_back({key, opt, [&storage] { return json(storage); },
                       [&storage, key](const json& v) {
                         try {
                           storage = v.get<T>();
                         } catch (const json::exception& e) {
                           throw ConfigError(key, "config field \"" + key + "\": " + e.what());
                         }
                       },
                       false, false});
  }

  // A filesystem input. Stored absolute in the effective config so a
  // manifest can be replayed from any working directory.
  void add_path(const std::string& key, std::string& storage, const std::string& help, bool required);

  // A field whose flag form is JSON text, e.g. --method_mix '[...]'.
  void add_json(const std::string& key, json& storage, const std::string& help);

  // Applies the config file (if any), checks required paths and records
  // input digests. Call after CLI11 has parsed.
  void resolve();

  json effective() const;
  const std::string& command() const noexcept { return command_; }
  const std::string& out_dir() const noexcept { return out_dir_; }
  const std::map<std::string, json>& inputs() const noexcept { return inputs_; }

  // Registers a file read by the run that is not a declared path field.
  void note_input(const std::filesystem::path& path);

 private:
  struct Field {
    std::string key;
    CLI::Option* opt;
    std::function<json()> get;
    std::function<void(const json&)> set;
    bool is_path;
    bool required;
  };
  static std::string names(const std::string& key, const std::string& aliases);

  CLI::App* app_;
  std::string command_;
  std::string config_path_;
  std::string out_dir_ = "runs";
  std::vector<Field> fields_;
  std::map<std::string, json> inputs_;
};

json file_digest(const std::filesystem::path& path);

// A fresh run directory under `root`, never reused.
class RunDir {
 public:
  RunDir(const std::filesystem::path& root, const std::string& command);
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path file(const std::string& name);
  void write_manifest(const Settings& settings, const json& extra = json::object()) const;

 private:
  std::filesystem::path path_;
  std::vector<std::string> outputs_;
};

// "mock:<fixture>" or "http(s)://host:port".
ScorerBundle open_scorer(const std::string& spec);
std::string absolute_scorer_spec(const std::string& spec);

std::filesystem::path default_data_dir();

}  // namespace stepplan::cli
