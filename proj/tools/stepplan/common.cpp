#include "common.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "stepplan/error.hpp"
#include "stepplan/jsonl.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/remote.hpp"
#include "stepplan/rng.hpp"

namespace fs = std::filesystem;

namespace stepplan::cli {

std::string env_name(const std::string& key) {
  std::string out = kEnvPrefix;
  for (char c : key) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Settings::Settings(CLI::App* app, std::string command) : app_(app), command_(std::move(command)) {
  app_->add_option("--config", config_path_,
                   "JSON config file; a previous run's manifest.json is accepted and replays that run")
      ->envname(env_name("config"));
  app_->add_option("--out_dir,--out", out_dir_, "parent directory for the timestamped run directory")
      ->capture_default_str()
      ->envname(env_name("out_dir"));
}

std::string Settings::names(const std::string& key, const std::string& aliases) {
  std::string n = "--" + key;
  if (!aliases.empty()) n += "," + aliases;
  return n;
}

void Settings::add_path(const std::string& key, std::string& storage, const std::string& help, bool required) {
  auto* opt = app_->add_option(names(key, ""), storage, help)->envname(env_name(key));
  fields_.push_back({key, opt, [&storage] { return json(storage); },
                     [&storage, key](const json& v) {
                       if (!v.is_string()) throw ConfigError(key, "config field \"" + key + "\" must be a string");
                       storage = v.get<std::string>();
                     },
                     true, required});
}

void Settings::add_json(const std::string& key, json& storage, const std::string& help) {
  auto* opt = app_->add_option_function<std::string>(
                      names(key, ""),
                      [&storage, key](const std::string& text) {
                        try {
                          storage = json::parse(text);
                        } catch (const json::exception& e) {
                          throw ConfigError(key, "--" + key + " is not valid JSON: " + e.what());
                        }
                      },
                      help)
                  ->envname(env_name(key));
  fields_.push_back({key, opt, [&storage] { return storage; }, [&storage](const json& v) { storage = v; }, false,
                     false});
}

void Settings::resolve() {
  json file = json::object();
  if (!config_path_.empty()) {
    try {
      file = read_json(config_path_);
    } catch (const std::exception& e) {
      throw ConfigError("config", e.what());
    }
    // A manifest wraps the effective config; unwrap it and insist it came
    // from the same subcommand.
    if (file.contains("config") && file.contains("command")) {
      if (file["command"] != command_)
        throw ConfigError("config", "manifest was written by \"" + file["command"].get<std::string>() +
                                        "\", not \"" + command_ + "\"");
      file = file["config"];
    }
    if (!file.is_object()) throw ConfigError("config", "config file must hold a JSON object");
    for (auto it = file.begin(); it != file.end(); ++it) {
      bool known = false;
      for (const auto& f : fields_) known = known || f.key == it.key();
      if (!known) throw ConfigError(it.key(), "unknown config field \"" + it.key() + "\" for " + command_);
    }
    note_input(config_path_);
  }
  for (auto& f : fields_)
    if (f.opt->count() == 0 && file.contains(f.key)) f.set(file[f.key]);

  for (auto& f : fields_) {
    if (!f.is_path) continue;
    std::string value = f.get().get<std::string>();
    if (value.empty()) {
      if (f.required) throw ConfigError(f.key, "--" + f.key + " is required");
      continue;
    }
    if (!fs::exists(value)) throw ConfigError(f.key, "--" + f.key + ": no such file: " + value);
    value = fs::canonical(value).string();
    f.set(json(value));
    note_input(value);
  }
}

void Settings::note_input(const fs::path& path) {
  const auto key = fs::weakly_canonical(path).string();
  inputs_[key] = file_digest(key);
}

json Settings::effective() const {
  json out = json::object();
  for (const auto& f : fields_) out[f.key] = f.get();
  return out;
}

json file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << hash_text(bytes);
  return {{"fnv1a64", hex.str()}, {"bytes", bytes.size()}};
}

namespace {

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
  return buf;
}

}  // namespace

RunDir::RunDir(const fs::path& root, const std::string& command) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("cannot create output root " + root.string() + ": " + ec.message());
  const std::string base = command + "-" + utc_stamp();
  // create_directory reports false when the name is taken, which makes the
  // suffix search race-free between concurrent runs.
  for (int i = 0;; ++i) {
    fs::path candidate = root / (i == 0 ? base : base + "-" + std::to_string(i));
    if (fs::create_directory(candidate, ec)) {
      path_ = candidate;
      return;
    }
    if (ec) throw std::runtime_error("cannot create run directory " + candidate.string() + ": " + ec.message());
  }
}

fs::path RunDir::file(const std::string& name) {
  outputs_.push_back(name);
  return path_ / name;
}

void RunDir::write_manifest(const Settings& settings, const json& extra) const {
  json inputs = json::object();
  for (const auto& [p, d] : settings.inputs()) inputs[p] = d;
  json outputs = json::object();
  for (const auto& name : outputs_)
    if (fs::exists(path_ / name)) outputs[name] = file_digest(path_ / name);
  json m = {{"tool", "stepplan"},
            {"version", STEPPLAN_VERSION},
            {"command", settings.command()},
            {"created_utc", utc_stamp()},
            {"config", settings.effective()},
            {"inputs", inputs},
            {"outputs", outputs}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_json(path_ / "manifest.json", m);
}

ScorerBundle open_scorer(const std::string& spec) {
  if (spec.rfind("mock:", 0) == 0) {
    auto world = std::make_shared<const MockWorld>(MockWorld::load(spec.substr(5)));
    return mock_bundle(world);
  }
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) return remote_bundle(spec);
  throw ConfigError("scorer", "--scorer must be mock:<fixture> or an http:// endpoint, got \"" + spec + "\"");
}

std::string absolute_scorer_spec(const std::string& spec) {
  if (spec.rfind("mock:", 0) != 0) return spec;
  const fs::path p = spec.substr(5);
  if (!fs::exists(p)) throw ConfigError("scorer", "mock fixture not found: " + p.string());
  return "mock:" + fs::canonical(p).string();
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("STEPPLAN_DATA_DIR")) return env;
  return STEPPLAN_DEFAULT_DATA_DIR;
}

}  // namespace stepplan::cli
