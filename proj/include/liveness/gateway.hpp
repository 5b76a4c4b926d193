// Copyright 2026 The liveness-gate Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "liveness/json_io.hpp"
#include "liveness/protocol.hpp"
#include "liveness/rng.hpp"

// WebSocket front end for ProtocolSession: one session per connection.
namespace liveness::gateway {

namespace beast = boost::beast;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

struct GatewayConfig {
  SessionConfig base;       ///< base.seed is replaced per session
  std::uint64_t seed = 0;   ///< session seeds derive from this and the session counter
  std::optional<std::filesystem::path> log_dir;
  std::chrono::milliseconds tick{100};
};

/// Session store directory from LIVENESS_GATE_LOG_DIR, if set and non-empty.
inline std::optional<std::filesystem::path> log_dir_from_env() {
  const char* v = std::getenv("LIVENESS_GATE_LOG_DIR");
  if (!v || !*v) return std::nullopt;
  return std::filesystem::path(v);
}

/// Append-only event log, one file per session named <session_id>_<seed>.jsonl.
inline void store_session_log(const std::filesystem::path& dir, const std::string& session_id,
                              const Session& s) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (session_id + "_" + std::to_string(s.config().seed) + ".jsonl");
  std::ofstream out(path, std::ios::app);
  out << serialize_events(s.events());
}

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  using Clock = std::chrono::steady_clock;

  Connection(tcp::socket socket, std::string session_id, SessionConfig base, const GatewayConfig& cfg)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        proto_(std::move(session_id), base),
        cfg_(cfg),
        epoch_(Clock::now()) {}

  ~Connection() { persist(); }

  void run() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->on_run(); });
  }

 private:
  std::int64_t wall_ms() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - epoch_).count();
  }

  void on_run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->read();
      self->schedule_tick();
    });
  }

  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      stop();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    wire::ProtocolSession::Reply reply;
    if (!ws_.got_text()) {
      reply = proto_.handle("\x01", wall_ms());  // binary frames are not JSON text
    } else {
      reply = proto_.handle(text, wall_ms());
    }
    deliver(std::move(reply));
    if (!closing_) read();
  }

  void schedule_tick() {
    timer_.expires_after(cfg_.tick);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec || self->closing_) return;
      self->deliver(self->proto_.tick(self->wall_ms()));
      if (!self->closing_) self->schedule_tick();
    });
  }

  void deliver(wire::ProtocolSession::Reply reply) {
    for (auto& m : reply.messages) outbox_.push_back(std::move(m));
    if (reply.close) closing_ = true;
    if (!writing_) write_next();
  }

  void write_next() {
    if (outbox_.empty()) {
      writing_ = false;
      if (closing_) close();
      return;
    }
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(outbox_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->outbox_.pop_front();
      if (ec) {
        self->stop();
        return;
      }
      self->write_next();
    });
  }

  void close() {
    timer_.cancel();
    persist();
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  void stop() {
    closing_ = true;
    timer_.cancel();
    persist();
  }

  /// Writes the event log once; an unfinished session is aborted first.
  void persist() {
    if (persisted_) return;
    proto_.abandon(wall_ms());
    const Session* s = proto_.session();
    if (!s) return;
    persisted_ = true;
    if (cfg_.log_dir) {
      try {
        store_session_log(*cfg_.log_dir, proto_.session_id(), *s);
      } catch (const std::exception& e) {
        std::fprintf(stderr, "session %s: failed to store log: %s\n", proto_.session_id().c_str(), e.what());
      }
    }
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  net::steady_timer timer_;
  wire::ProtocolSession proto_;
  GatewayConfig cfg_;
  Clock::time_point epoch_;
  std::deque<std::string> outbox_;
  bool writing_ = false;
  bool closing_ = false;
  bool persisted_ = false;
};

/// Accepts connections until the io_context stops.
class Gateway : public std::enable_shared_from_this<Gateway> {
 public:
  Gateway(net::io_context& ioc, const tcp::endpoint& endpoint, GatewayConfig cfg)
      : ioc_(ioc), acceptor_(net::make_strand(ioc)), cfg_(std::move(cfg)) {
    validate(cfg_.base);
    acceptor_.open(endpoint.protocol());
    acceptor_.set_option(net::socket_base::reuse_address(true));
    acceptor_.bind(endpoint);
    acceptor_.listen(net::socket_base::max_listen_connections);
  }

  unsigned short port() const { return acceptor_.local_endpoint().port(); }
  std::uint64_t sessions_accepted() const noexcept { return counter_.load(); }

  void start() { accept(); }

 private:
  void accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [self = shared_from_this()](beast::error_code ec, tcp::socket s) {
      if (!ec) {
        const std::uint64_t n = ++self->counter_;
        char id[32];
        std::snprintf(id, sizeof id, "s%06llu", static_cast<unsigned long long>(n));
        SessionConfig base = self->cfg_.base;
        base.seed = derive_seed(self->cfg_.seed, "gateway-session", n);
        std::make_shared<Connection>(std::move(s), id, base, self->cfg_)->run();
      }
      if (ec == net::error::operation_aborted) return;
      self->accept();
    });
  }

  net::io_context& ioc_;
  tcp::acceptor acceptor_;
  GatewayConfig cfg_;
  std::atomic<std::uint64_t> counter_{0};
};

}  // namespace liveness::gateway
