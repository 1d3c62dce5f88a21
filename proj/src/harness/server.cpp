#include "teleop/harness/server.hpp"

#include "teleop/errors.hpp"

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <charconv>
#include <list>

namespace teleop::harness {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

void serve_connection(tcp::socket socket, std::shared_ptr<const SessionResources> resources) {
  try {
    // Replies are several small frames; without this Nagle + delayed ACK add ~40 ms per sample.
    socket.set_option(tcp::no_delay(true));
    websocket::stream<tcp::socket> ws(std::move(socket));
    ws.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(beast::http::field::server, "teleop"); }));
    ws.accept();
    ws.text(true);
    Session session(resources);
    ws.write(asio::buffer(session.hello().dump()));
    beast::flat_buffer buffer;
    for (;;) {
      buffer.clear();
      ws.read(buffer);
      const auto replies = session.handle(beast::buffers_to_string(buffer.data()));
      for (const auto& r : replies) ws.write(asio::buffer(r.dump()));
    }
  } catch (const beast::system_error& e) {
    // closed / reset by peer: nothing to report
    (void)e;
  } catch (const std::exception&) {
  }
}

}  // namespace

struct SessionServer::Impl {
  std::shared_ptr<const SessionResources> resources;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::atomic<bool> stopping{false};
  std::mutex mutex;
  std::list<std::thread> workers;
};

SessionServer::SessionServer(std::shared_ptr<const SessionResources> resources, const std::string& address,
                             unsigned short port)
    : impl_(std::make_unique<Impl>()) {
  impl_->resources = std::move(resources);
  // Validate once up front so a bad model/scene fails at startup, not per connection.
  Session probe(impl_->resources);
  boost::system::error_code ec;
  const auto addr = asio::ip::make_address(address, ec);
  if (ec) throw InvalidArgument("invalid bind address '" + address + "'");
  const tcp::endpoint endpoint(addr, port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(asio::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
}

SessionServer::~SessionServer() {
  stop();
  boost::system::error_code ec;
  impl_->acceptor.close(ec);
  std::lock_guard lock(impl_->mutex);
  for (auto& t : impl_->workers)
    if (t.joinable()) t.detach();
}

unsigned short SessionServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void SessionServer::run() {
  while (!impl_->stopping) {
    tcp::socket socket(impl_->io);
    boost::system::error_code ec;
    impl_->acceptor.accept(socket, ec);
    if (impl_->stopping) break;
    if (ec) continue;
    std::lock_guard lock(impl_->mutex);
    impl_->workers.emplace_back(serve_connection, std::move(socket), impl_->resources);
  }
}

void SessionServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  // A blocking accept is not interrupted by closing the acceptor from another thread, so wake
  // it with a throwaway connection; run() then sees the flag and returns.
  boost::system::error_code ec;
  auto endpoint = impl_->acceptor.local_endpoint(ec);
  if (ec) return;
  if (endpoint.address().is_unspecified())
    endpoint.address(endpoint.address().is_v6() ? asio::ip::address(asio::ip::address_v6::loopback())
                                                : asio::ip::address(asio::ip::address_v4::loopback()));
  asio::io_context io;
  tcp::socket wake(io);
  wake.connect(endpoint, ec);
}

std::pair<std::string, unsigned short> parse_bind(const std::string& bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == bind.size())
    throw InvalidArgument("bind must be host:port, got '" + bind + "'");
  unsigned port = 0;
  const char* first = bind.data() + colon + 1;
  const char* last = bind.data() + bind.size();
  const auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port > 65535)
    throw InvalidArgument("bind port must be 0-65535, got '" + bind.substr(colon + 1) + "'");
  return {bind.substr(0, colon), static_cast<unsigned short>(port)};
}

}  // namespace teleop::harness
