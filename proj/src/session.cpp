#include "sharenav/session.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>
#include <variant>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "sharenav/errors.hpp"

namespace sharenav {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

void SessionConfig::validate() const {
  sim.validate();
  if (!(broadcast_rate > 0.0)) {
    throw std::invalid_argument("broadcast rate must be > 0");
  }
  if (broadcast_rate > 1.0 / sim.dt + 1e-9) {
    throw std::invalid_argument("broadcast rate may not exceed 1/dt");
  }
  const double ticks = sim.latency / sim.dt;
  if (std::abs(ticks - std::round(ticks)) > 1e-6) {
    throw std::invalid_argument("latency must be a multiple of dt");
  }
  if (!(speed >= 0.0)) throw std::invalid_argument("speed must be >= 0");
}

std::int64_t SessionConfig::broadcast_every_ticks() const {
  return std::max<std::int64_t>(1, std::llround(1.0 / (sim.dt * broadcast_rate)));
}

namespace {

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

json envelope(const char* type) { return {{"v", kWireVersion}, {"type", type}}; }

}  // namespace

json state_message(const Simulation& sim) {
  json msg = envelope("state");
  const auto& q = sim.state();
  msg["tick"] = sim.tick();
  msg["t"] = sim.time();
  msg["mode"] = to_string(sim.mode());
  msg["pose"] = {{"x", q.x}, {"y", q.y}, {"theta", q.theta}};
  msg["u"] = {{"v", sim.last_control().v()}, {"omega", sim.last_control().omega()}};
  const auto& j = sim.applied_joystick();
  msg["joystick"] = {{"jx", j.jx}, {"jy", j.jy}, {"trigger", j.trigger}};
  msg["path"] = json::array();
  for (const auto& p : sim.path().points) msg["path"].push_back(vec_json(p));
  if (const auto& f = sim.filter()) {
    msg["filter"] = {{"d", f->params.d},
                     {"w", f->params.w},
                     {"l", f->params.l},
                     {"s", f->params.s},
                     {"p", f->params.p},
                     {"origin", vec_json(f->frame.origin)},
                     {"x_axis", vec_json(f->frame.x_axis)},
                     {"y_axis", vec_json(f->frame.y_axis)}};
  } else {
    msg["filter"] = nullptr;
  }
  json sensed_obstacles = json::array();
  for (auto i : sim.sensed().known_obstacles()) {
    sensed_obstacles.push_back(sim.world().obstacles[i].id);
  }
  json sensed_pools = json::array();
  for (auto i : sim.sensed().known_pools()) {
    sensed_pools.push_back(sim.world().pools[i].id);
  }
  msg["sensed"] = {{"obstacles", sensed_obstacles}, {"pools", sensed_pools}};
  msg["radiation"] = sim.radiation();
  msg["cum_radiation"] = sim.cumulative_radiation();
  msg["done"] = sim.finished();
  return msg;
}

json costmap_message(const Costmap& costmap) {
  json msg = envelope("costmap");
  msg["header"] = costmap_header(costmap);
  msg["cells"] = costmap.cells;
  return msg;
}

json metrics_message(const RunSummary& summary) {
  json msg = envelope("metrics");
  msg["summary"] = summary_to_json(summary);
  return msg;
}

// ------------------------------------------------------------------ server

class Connection;

class SessionServer::Impl {
 public:
  explicit Impl(SessionConfig config)
      : config_(std::move(config)), acceptor_(ioc_) {
    config_.validate();
    make_sim();
  }

  unsigned short start();
  void wait();
  bool wait_for(std::chrono::milliseconds timeout);
  void stop();
  std::optional<RunSummary> last_summary() const {
    std::lock_guard lock(summary_mutex_);
    return last_summary_;
  }

  // Called from the I/O thread.
  void on_open(const std::shared_ptr<Connection>& conn);
  void on_message(const std::shared_ptr<Connection>& conn, std::string text);
  void on_close(const std::shared_ptr<Connection>& conn);

 private:
  struct Opened {
    std::weak_ptr<Connection> conn;
  };
  struct Closed {
    bool was_driver;
  };
  struct Message {
    std::weak_ptr<Connection> conn;
    bool from_driver;
    std::string text;
  };
  using Inbound = std::variant<Opened, Closed, Message>;

  void do_accept();
  void sim_loop();
  void make_sim();
  void handle(const Inbound& event);
  void handle_message(const Message& m);
  void broadcast(const json& msg);
  void send_to(const std::weak_ptr<Connection>& conn, const json& msg);
  void publish_state(bool force);
  void flush_delayed_states(bool all);
  void on_finished();

  SessionConfig config_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::thread io_thread_;
  std::thread sim_thread_;
  std::atomic<bool> stopping_{false};

  std::mutex inbound_mutex_;
  std::condition_variable inbound_cv_;
  std::deque<Inbound> inbound_;

  std::mutex conns_mutex_;
  std::map<int, std::weak_ptr<Connection>> conns_;
  int next_id_ = 0;
  int driver_id_ = -1;

  // Owned by the sim thread.
  std::unique_ptr<Simulation> sim_;
  bool running_ = false;
  bool finish_reported_ = false;
  std::deque<std::pair<double, std::shared_ptr<const std::string>>> delayed_;

  mutable std::mutex summary_mutex_;
  std::optional<RunSummary> last_summary_;

  std::mutex done_mutex_;
  std::condition_variable done_cv_;
  bool done_ = false;

  friend class Connection;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket&& socket, SessionServer::Impl& server, int id)
      : ws_(std::move(socket)), server_(server), id_(id) {}

  int id() const { return id_; }
  bool driver() const { return driver_; }
  void set_driver(bool d) { driver_ = d; }

  void run() {
    net::dispatch(ws_.get_executor(),
                  [self = shared_from_this()] { self->on_run(); });
  }

  void send(std::shared_ptr<const std::string> text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text] {
      if (self->closed_) return;
      self->outbox_.push_back(text);
      if (self->outbox_.size() == 1) self->do_write();
    });
  }

  /// Only once the I/O thread has stopped.
  void close_now() {
    closed_ = true;
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void on_run() {
    ws_.set_option(
        websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.on_open(self);
      self->do_read();
    });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec,
                                                       std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->server_.on_close(self);
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.on_message(self, std::move(text));
      self->do_read();
    });
  }

  void do_write() {
    ws_.text(true);
    ws_.async_write(net::buffer(*outbox_.front()),
                    [self = shared_from_this()](beast::error_code ec,
                                                std::size_t) {
                      if (ec) {
                        self->outbox_.clear();
                        return;
                      }
                      self->outbox_.pop_front();
                      if (!self->outbox_.empty()) self->do_write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> outbox_;
  SessionServer::Impl& server_;
  int id_;
  bool driver_ = false;
  bool closed_ = false;
};

void SessionServer::Impl::make_sim() {
  sim_ = std::make_unique<Simulation>(config_.world, config_.mode, config_.sim);
  running_ = config_.autostart;
  finish_reported_ = false;
  delayed_.clear();
}

unsigned short SessionServer::Impl::start() {
  const tcp::endpoint endpoint{net::ip::make_address(config_.address),
                               config_.port};
  acceptor_.open(endpoint.protocol());
  acceptor_.set_option(net::socket_base::reuse_address(true));
  acceptor_.bind(endpoint);
  acceptor_.listen(net::socket_base::max_listen_connections);
  const unsigned short port = acceptor_.local_endpoint().port();
  do_accept();
  io_thread_ = std::thread([this] { ioc_.run(); });
  sim_thread_ = std::thread([this] { sim_loop(); });
  return port;
}

void SessionServer::Impl::do_accept() {
  acceptor_.async_accept(
      net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
        if (ec) return;  // acceptor closed
        int id = 0;
        {
          std::lock_guard lock(conns_mutex_);
          id = next_id_++;
        }
        std::make_shared<Connection>(std::move(socket), *this, id)->run();
        do_accept();
      });
}

void SessionServer::Impl::on_open(const std::shared_ptr<Connection>& conn) {
  {
    std::lock_guard lock(conns_mutex_);
    conns_[conn->id()] = conn;
    if (driver_id_ < 0) {
      driver_id_ = conn->id();
      conn->set_driver(true);
    }
  }
  std::lock_guard lock(inbound_mutex_);
  inbound_.push_back(Opened{conn});
  inbound_cv_.notify_one();
}

void SessionServer::Impl::on_message(const std::shared_ptr<Connection>& conn,
                                     std::string text) {
  std::lock_guard lock(inbound_mutex_);
  inbound_.push_back(Message{conn, conn->driver(), std::move(text)});
  inbound_cv_.notify_one();
}

void SessionServer::Impl::on_close(const std::shared_ptr<Connection>& conn) {
  bool was_driver = false;
  {
    std::lock_guard lock(conns_mutex_);
    conns_.erase(conn->id());
    if (driver_id_ == conn->id()) {
      driver_id_ = -1;
      was_driver = true;
    }
  }
  std::lock_guard lock(inbound_mutex_);
  inbound_.push_back(Closed{was_driver});
  inbound_cv_.notify_one();
}

void SessionServer::Impl::send_to(const std::weak_ptr<Connection>& conn,
                                  const json& msg) {
  if (auto c = conn.lock()) {
    c->send(std::make_shared<const std::string>(msg.dump()));
  }
}

void SessionServer::Impl::broadcast(const json& msg) {
  auto text = std::make_shared<const std::string>(msg.dump());
  std::lock_guard lock(conns_mutex_);
  for (auto& [id, weak] : conns_) {
    if (auto c = weak.lock()) c->send(text);
  }
}

void SessionServer::Impl::flush_delayed_states(bool all) {
  const double now = sim_->time();
  std::lock_guard lock(conns_mutex_);
  while (!delayed_.empty() &&
         (all || delayed_.front().first + config_.sim.state_delay <=
                     now + kTimeEpsilon)) {
    for (auto& [id, weak] : conns_) {
      if (auto c = weak.lock()) c->send(delayed_.front().second);
    }
    delayed_.pop_front();
  }
}

void SessionServer::Impl::publish_state(bool force) {
  if (!force && sim_->tick() % config_.broadcast_every_ticks() != 0) {
    flush_delayed_states(false);
    return;
  }
  delayed_.emplace_back(
      sim_->time(), std::make_shared<const std::string>(state_message(*sim_).dump()));
  flush_delayed_states(false);
}

void SessionServer::Impl::on_finished() {
  finish_reported_ = true;
  publish_state(true);
  flush_delayed_states(true);
  const RunSummary summary = sim_->record().summary;
  broadcast(metrics_message(summary));
  if (config_.record_path) {
    std::ofstream out(*config_.record_path);
    write_record(sim_->record(), out);
  }
  {
    std::lock_guard lock(summary_mutex_);
    last_summary_ = summary;
  }
  if (config_.exit_on_done) {
    std::lock_guard lock(done_mutex_);
    done_ = true;
    done_cv_.notify_all();
  }
}

void SessionServer::Impl::handle_message(const Message& m) {
  auto reply_error = [&](const std::string& what) {
    json err = envelope("error");
    err["message"] = what;
    send_to(m.conn, err);
  };
  json doc;
  try {
    doc = json::parse(m.text);
  } catch (const json::parse_error& e) {
    reply_error(std::string("malformed JSON: ") + e.what());
    return;
  }
  if (!doc.is_object() || doc.value("v", 0) != kWireVersion) {
    reply_error("expected an object with \"v\": 1");
    return;
  }
  const std::string type = doc.value("type", "");
  try {
    if (type == "input") {
      if (!m.from_driver) {
        reply_error("observers may not send input");
        return;
      }
      std::optional<double> t;
      if (doc.contains("t") && !doc["t"].is_null()) t = doc["t"].get<double>();
      sim_->enqueue_input(
          JoystickState::make(doc.value("jx", 0.0), doc.value("jy", 0.0),
                              doc.value("trigger", false)),
          t);
    } else if (type == "command") {
      const std::string command = doc.value("command", "");
      if (command == "costmap") {
        send_to(m.conn, costmap_message(sim_->costmap()));
        return;
      }
      if (!m.from_driver) {
        reply_error("observers may not send commands");
        return;
      }
      if (command == "start") {
        running_ = true;
      } else if (command == "reset") {
        make_sim();
        publish_state(true);
      } else if (command == "set_mode") {
        if (sim_->tick() != 0) {
          reply_error("mode is fixed once a run has started; reset first");
          return;
        }
        config_.mode = parse_control_mode(doc.value("mode", ""));
        make_sim();
        publish_state(true);
      } else {
        reply_error("unknown command \"" + command + "\"");
      }
    } else {
      reply_error("unknown message type \"" + type + "\"");
    }
  } catch (const std::exception& e) {
    reply_error(e.what());
  }
}

void SessionServer::Impl::handle(const Inbound& event) {
  if (const auto* o = std::get_if<Opened>(&event)) {
    auto conn = o->conn.lock();
    if (!conn) return;
    json hello = envelope("hello");
    hello["role"] = conn->driver() ? "driver" : "observer";
    hello["world"] = world_to_json(sim_->world());
    hello["mode"] = to_string(sim_->mode());
    hello["dt"] = config_.sim.dt;
    hello["latency"] = config_.sim.latency;
    hello["broadcast_rate"] = config_.broadcast_rate;
    hello["running"] = running_;
    send_to(conn, hello);
    send_to(conn, state_message(*sim_));
  } else if (const auto* c = std::get_if<Closed>(&event)) {
    if (c->was_driver) sim_->inject_neutral();
  } else {
    handle_message(std::get<Message>(event));
  }
}

void SessionServer::Impl::sim_loop() {
  using clock = std::chrono::steady_clock;
  auto next_tick = clock::now();
  while (!stopping_) {
    std::deque<Inbound> batch;
    {
      std::unique_lock lock(inbound_mutex_);
      const bool idle = !running_ || sim_->finished();
      if (idle && inbound_.empty()) {
        inbound_cv_.wait_for(lock, std::chrono::milliseconds(20));
      }
      batch.swap(inbound_);
    }
    for (const auto& e : batch) handle(e);
    if (stopping_) break;
    if (!running_ || sim_->finished()) {
      next_tick = clock::now();
      continue;
    }

    sim_->step();
    if (sim_->finished()) {
      if (!finish_reported_) on_finished();
      continue;
    }
    publish_state(false);

    if (config_.speed > 0.0) {
      next_tick += std::chrono::duration_cast<clock::duration>(
          std::chrono::duration<double>(config_.sim.dt / config_.speed));
      const auto now = clock::now();
      if (next_tick < now - std::chrono::milliseconds(250)) next_tick = now;
      std::unique_lock lock(inbound_mutex_);
      inbound_cv_.wait_until(lock, next_tick, [&] { return stopping_.load(); });
    }
  }
}

void SessionServer::Impl::wait() {
  std::unique_lock lock(done_mutex_);
  done_cv_.wait(lock, [&] { return done_; });
}

bool SessionServer::Impl::wait_for(std::chrono::milliseconds timeout) {
  std::unique_lock lock(done_mutex_);
  return done_cv_.wait_for(lock, timeout, [&] { return done_; });
}

void SessionServer::Impl::stop() {
  if (stopping_.exchange(true)) return;
  inbound_cv_.notify_all();
  if (sim_thread_.joinable()) sim_thread_.join();
  ioc_.stop();
  if (io_thread_.joinable()) io_thread_.join();
  beast::error_code ec;
  acceptor_.close(ec);
  {
    std::lock_guard lock(conns_mutex_);
    for (auto& [id, weak] : conns_) {
      if (auto c = weak.lock()) c->close_now();
    }
  }
  std::lock_guard lock(done_mutex_);
  done_ = true;
  done_cv_.notify_all();
}

SessionServer::SessionServer(SessionConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

SessionServer::~SessionServer() { stop(); }

unsigned short SessionServer::start() { return impl_->start(); }
void SessionServer::wait() { impl_->wait(); }
bool SessionServer::wait_for(std::chrono::milliseconds timeout) {
  return impl_->wait_for(timeout);
}
void SessionServer::stop() { impl_->stop(); }
std::optional<RunSummary> SessionServer::last_summary() const {
  return impl_->last_summary();
}

}  // namespace sharenav
