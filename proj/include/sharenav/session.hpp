#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sharenav/simulation.hpp"

namespace sharenav {

inline constexpr int kWireVersion = 1;

struct SessionConfig {
  WorldModel world;
  ControlMode mode = ControlMode::SharedControl;
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double broadcast_rate = 20.0;  // Hz
  double speed = 1.0;  // sim seconds per wall second; 0 runs flat out
  bool autostart = false;
  bool exit_on_done = false;
  SimConfig sim;
  std::optional<std::filesystem::path> record_path;

  /// Throws std::invalid_argument: the broadcast rate may not exceed 1/dt
  /// and the latency must be a whole number of ticks.
  void validate() const;
  std::int64_t broadcast_every_ticks() const;
};

/// Wire encoding of the live session. Exposed for tests and tools.
nlohmann::json state_message(const Simulation& sim);
nlohmann::json costmap_message(const Costmap& costmap);
nlohmann::json metrics_message(const RunSummary& summary);

/// Live session: one simulation thread owns the Simulation; network I/O runs
/// on a separate thread and talks to it through an ordered inbound queue.
/// The first client to connect drives; later clients observe read-only.
class SessionServer {
 public:
  explicit SessionServer(SessionConfig config);
  ~SessionServer();
  SessionServer(const SessionServer&) = delete;
  SessionServer& operator=(const SessionServer&) = delete;

  /// Binds and starts both threads. Returns the bound port.
  unsigned short start();
  /// Blocks until stop() is called or, with exit_on_done, the run ends.
  void wait();
  /// Like wait(), bounded. Returns true once the server is done.
  bool wait_for(std::chrono::milliseconds timeout);
  void stop();

  /// Summary of the most recent finished run, if any.
  std::optional<RunSummary> last_summary() const;

  class Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace sharenav
