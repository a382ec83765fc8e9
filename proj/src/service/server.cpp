#include "rehearsal/service/server.hpp"

#include <csignal>
#include <deque>
#include <functional>
#include <map>
#include <optional>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "rehearsal/errors.hpp"

namespace rehearsal::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using asio::awaitable;
using asio::use_awaitable;

void apply_bind(ServerConfig& config, const std::string& bind) {
  if (bind.empty()) return;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    config.bind_address = bind;
    return;
  }
  if (colon > 0) config.bind_address = bind.substr(0, colon);
  const auto port_text = bind.substr(colon + 1);
  try {
    std::size_t used = 0;
    const int port = std::stoi(port_text, &used);
    if (used != port_text.size() || port < 0 || port > 65535) throw std::out_of_range(port_text);
    config.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ServiceError("invalid port in bind address '" + bind + "'");
  }
}

namespace {

class WsChannel {
 public:
  explicit WsChannel(tcp::socket socket) : ws_(std::move(socket)) {}

  awaitable<void> open() {
    co_await ws_.async_accept(use_awaitable);
    ws_.text(true);
  }

  awaitable<std::optional<std::string>> read() {
    buffer_.clear();
    co_await ws_.async_read(buffer_, use_awaitable);
    co_return beast::buffers_to_string(buffer_.data());
  }

  awaitable<void> write(const std::string& text) { co_await ws_.async_write(asio::buffer(text), use_awaitable); }

  void close() {
    beast::error_code ec;
    ws_.next_layer().socket().shutdown(tcp::socket::shutdown_both, ec);
    ws_.next_layer().socket().close(ec);
  }

 private:
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
};

class LineChannel {
 public:
  explicit LineChannel(tcp::socket socket) : socket_(std::move(socket)) {}

  awaitable<void> open() { co_return; }

  awaitable<std::optional<std::string>> read() {
    for (;;) {
      const auto n = co_await asio::async_read_until(socket_, asio::dynamic_buffer(pending_), '\n', use_awaitable);
      std::string line = pending_.substr(0, n - 1);
      pending_.erase(0, n);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) co_return line;
    }
  }

  awaitable<void> write(const std::string& text) {
    line_ = text + '\n';
    co_await asio::async_write(socket_, asio::buffer(line_), use_awaitable);
  }

  void close() {
    boost::system::error_code ec;
    socket_.shutdown(tcp::socket::shutdown_both, ec);
    socket_.close(ec);
  }

 private:
  tcp::socket socket_;
  std::string pending_;
  std::string line_;
};

/// Everything one connection's coroutines share. All access happens on the
/// single io_context thread, so no locking is needed.
template <class Channel>
struct ConnState {
  ConnState(tcp::socket socket, std::shared_ptr<const ScenarioRegistry> registry, HandlerOptions options)
      : wake(socket.get_executor()),
        tick_timer(socket.get_executor()),
        channel(std::move(socket)),
        handler(std::move(registry), std::move(options)) {}

  void push(const std::vector<json>& messages) {
    for (const auto& m : messages) outbox.push_back(m.dump());
    wake.cancel();
  }

  void shutdown() {
    if (closed) return;
    closed = true;
    handler.close();
    channel.close();
    wake.cancel();
    tick_timer.cancel();
  }

  asio::steady_timer wake;
  asio::steady_timer tick_timer;
  Channel channel;
  ConnectionHandler handler;
  std::deque<std::string> outbox;
  bool closed = false;
};

}  // namespace

struct Server::Impl {
  ServerConfig config;
  std::shared_ptr<const ScenarioRegistry> registry;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::optional<asio::signal_set> signals;
  std::map<std::uint64_t, std::function<void()>> closers;
  std::uint64_t next_connection = 0;
  bool stopping = false;

  HandlerOptions handler_options() const {
    HandlerOptions o;
    o.log_dir = config.log_dir;
    o.auto_tick_ms = std::max(1, 1000 / std::max(1, config.auto_tick_hz));
    return o;
  }

  template <class Channel>
  awaitable<void> writer(std::shared_ptr<ConnState<Channel>> c) {
    while (!c->closed) {
      while (!c->outbox.empty() && !c->closed) {
        const std::string text = std::move(c->outbox.front());
        c->outbox.pop_front();
        co_await c->channel.write(text);
      }
      if (c->closed) break;
      c->wake.expires_at(asio::steady_timer::time_point::max());
      boost::system::error_code ec;
      co_await c->wake.async_wait(asio::redirect_error(use_awaitable, ec));
    }
  }

  template <class Channel>
  awaitable<void> ticker(std::shared_ptr<ConnState<Channel>> c, std::chrono::milliseconds period) {
    while (!c->closed) {
      c->tick_timer.expires_after(period);
      boost::system::error_code ec;
      co_await c->tick_timer.async_wait(asio::redirect_error(use_awaitable, ec));
      if (c->closed) break;
      c->push(c->handler.auto_tick());
    }
  }

  template <class Channel>
  awaitable<void> reader(std::shared_ptr<ConnState<Channel>> c) {
    co_await c->channel.open();
    while (!c->closed) {
      auto text = co_await c->channel.read();
      if (!text) break;
      c->push(c->handler.handle_text(*text));
    }
  }

  template <class Channel>
  void start_connection(tcp::socket socket) {
    auto c = std::make_shared<ConnState<Channel>>(std::move(socket), registry, handler_options());
    const auto id = next_connection++;
    closers[id] = [c] { c->shutdown(); };
    auto on_done = [this, c, id](std::exception_ptr) {
      c->shutdown();
      closers.erase(id);
    };
    const auto period = std::chrono::milliseconds(handler_options().auto_tick_ms);
    asio::co_spawn(io, writer(c), [c](std::exception_ptr) { c->shutdown(); });
    asio::co_spawn(io, ticker(c, period), asio::detached);
    asio::co_spawn(io, reader(c), on_done);
  }

  awaitable<void> accept_loop() {
    for (;;) {
      boost::system::error_code ec;
      tcp::socket socket = co_await acceptor.async_accept(asio::redirect_error(use_awaitable, ec));
      if (ec) {
        if (stopping || ec == asio::error::operation_aborted) co_return;
        continue;  // transient accept failure (e.g. too many open files)
      }
      socket.set_option(tcp::no_delay(true), ec);  // small request/reply messages
      if (config.transport == Transport::kWebSocket) {
        start_connection<WsChannel>(std::move(socket));
      } else {
        start_connection<LineChannel>(std::move(socket));
      }
    }
  }

  void stop_now() {
    if (stopping) return;
    stopping = true;
    boost::system::error_code ec;
    acceptor.close(ec);
    if (signals) signals->cancel(ec);
    auto pending = closers;  // shutdown() may erase entries
    for (auto& [_, close] : pending) close();
  }
};

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  auto& cfg = impl_->config;
  impl_->registry = std::make_shared<const ScenarioRegistry>(ScenarioRegistry::load_dir(cfg.scenario_dir));

  std::error_code fs_ec;
  if (!std::filesystem::is_directory(cfg.log_dir, fs_ec)) {
    throw ServiceError("log directory '" + cfg.log_dir.string() + "' does not exist");
  }

  boost::system::error_code ec;
  const auto address = asio::ip::make_address(cfg.bind_address, ec);
  if (ec) throw ServiceError("invalid bind address '" + cfg.bind_address + "': " + ec.message());
  const tcp::endpoint endpoint(address, cfg.port);
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw ServiceError("cannot listen on " + cfg.bind_address + ":" + std::to_string(cfg.port) + ": " + ec.message());
  }
}

Server::~Server() = default;

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

const ScenarioRegistry& Server::scenarios() const { return *impl_->registry; }

void Server::run(bool handle_signals) {
  auto& impl = *impl_;
  if (handle_signals) {
    impl.signals.emplace(impl.io, SIGINT, SIGTERM);
    impl.signals->async_wait([&impl](const boost::system::error_code& ec, int) {
      if (!ec) impl.stop_now();
    });
  }
  asio::co_spawn(impl.io, impl.accept_loop(), asio::detached);
  impl.io.run();
}

void Server::stop() {
  asio::post(impl_->io, [impl = impl_.get()] { impl->stop_now(); });
}

}  // namespace rehearsal::service
