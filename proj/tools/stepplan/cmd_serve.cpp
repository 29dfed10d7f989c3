#include <pthread.h>

#include <csignal>
#include <iostream>
#include <thread>

#include "commands.hpp"
#include "stepplan/mock_world.hpp"
#include "stepplan/server.hpp"

namespace stepplan::cli {
namespace {

class ServeMock final : public Command {
 public:
  explicit ServeMock(CLI::App& parent)
      : Command(parent, "serve-mock", "Serve the scorer wire protocol backed by a mock world fixture") {
    settings_.add_path("world", world_, "mock world fixture", true);
    settings_.add("host", host_, "bind address");
    settings_.add("port", port_, "TCP port; 0 picks a free one");
  }

  int run() override {
    std::shared_ptr<const MockWorld> world;
    try {
      world = std::make_shared<const MockWorld>(MockWorld::load(world_));
    } catch (const std::exception& e) {
      throw ConfigError("world", e.what());
    }
    ScorerServer server(mock_bundle(world));
    const int port = server.bind(host_, port_);  // throws on bind failure, which is a runtime error

    RunDir dir(settings_.out_dir(), "serve-mock");
    dir.write_manifest(settings_, {{"listening", {{"host", host_}, {"port", port}}}});
    std::cout << "listening on http://" << host_ << ":" << port << std::endl;

    // SIGINT/SIGTERM are blocked before any server thread exists and then
    // collected by a dedicated thread, so shutdown runs outside signal
    // context.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread watcher([&] {
      int sig = 0;
      sigwait(&set, &sig);
      server.stop();
    });
    server.run();
    // run() also returns if the listener fails; wake the watcher so it exits.
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    return 0;
  }

 private:
  std::string world_, host_ = "127.0.0.1";
  int port_ = 8765;
};

}  // namespace

std::unique_ptr<Command> make_serve_mock(CLI::App& app) { return std::make_unique<ServeMock>(app); }

}  // namespace stepplan::cli
