#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>

#include "chasm/runtime.hpp"

namespace chasm {

std::size_t PatchLayout::spatial_size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim; ++a) s *= nodes_per_axis();
  return s;
}

int PatchLayout::neighbor_count() const {
  int c = 0;
  for (int a = 0; a < dim; ++a)
    for (int s = 0; s < 2; ++s) c += neighbor[a][s] >= 0 ? 1 : 0;
  return c;
}

std::vector<PatchLayout> decompose(const PhaseSpaceGrid& g, int p) {
  if (p < 1) throw std::invalid_argument("decompose: p must be >= 1");
  if (g.Nx % p != 0) throw std::invalid_argument("decompose: p must divide Nx");
  const int M = g.Nx / p;
  int total = 1;
  for (int a = 0; a < g.dim; ++a) total *= p;
  std::vector<PatchLayout> out(static_cast<std::size_t>(total));
  for (int id = 0; id < total; ++id) {
    PatchLayout& L = out[static_cast<std::size_t>(id)];
    L.dim = g.dim;
    L.p = p;
    L.M = M;
    L.id = id;
    int r = id;
    for (int a = g.dim - 1; a >= 0; --a) {
      L.index[a] = r % p;
      r /= p;
    }
    int stride = 1;
    for (int a = g.dim - 1; a >= 0; --a) {
      L.lo[a] = L.index[a] * M;
      L.neighbor[a][0] = L.index[a] > 0 ? id - stride : -1;
      L.neighbor[a][1] = L.index[a] < p - 1 ? id + stride : -1;
      stride *= p;
    }
  }
  return out;
}

namespace {

constexpr std::uint32_t kFrameMagic = 0x43484d58;  // "CHMX"

struct FrameHeader {
  std::uint32_t magic;
  std::uint8_t kind;
  std::uint8_t side;
  std::uint16_t pad;
  std::int32_t axis;
  std::int32_t src;
  std::int32_t dst;
  std::uint64_t n_payload;
  std::uint64_t n_mask;
};

}  // namespace

std::size_t ExchangeMessage::wire_bytes() const {
  return sizeof(FrameHeader) + payload.size() * sizeof(double) + mask.size();
}

void Mailbox::push(ExchangeMessage m) {
  {
    std::lock_guard<std::mutex> lk(mu_);
    queue_.push_back(std::move(m));
  }
  cv_.notify_all();
}

ExchangeMessage Mailbox::pop(int src, MessageKind kind, int axis) {
  std::unique_lock<std::mutex> lk(mu_);
  for (;;) {
    auto it = std::find_if(queue_.begin(), queue_.end(), [&](const ExchangeMessage& m) {
      return m.src == src && m.kind == kind && m.axis == axis;
    });
    if (it != queue_.end()) {
      ExchangeMessage m = std::move(*it);
      queue_.erase(it);
      return m;
    }
    if (closed_) throw std::runtime_error("transport aborted");
    cv_.wait(lk);
  }
}

void Mailbox::close() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

InProcessTransport::InProcessTransport(int endpoints) {
  if (endpoints < 1) throw std::invalid_argument("transport: need at least one endpoint");
  for (int i = 0; i < endpoints; ++i) boxes_.push_back(std::make_unique<Mailbox>());
}

void InProcessTransport::send(ExchangeMessage msg) {
  if (msg.dst < 0 || msg.dst >= static_cast<int>(boxes_.size())) throw std::out_of_range("transport: bad destination");
  count(msg);
  boxes_[static_cast<std::size_t>(msg.dst)]->push(std::move(msg));
}

void InProcessTransport::abort() {
  for (auto& b : boxes_) b->close();
}

ExchangeMessage InProcessTransport::receive(int dst, int src, MessageKind kind, int axis) {
  if (dst < 0 || dst >= static_cast<int>(boxes_.size())) throw std::out_of_range("transport: bad endpoint");
  return boxes_[static_cast<std::size_t>(dst)]->pop(src, kind, axis);
}

namespace {

[[noreturn]] void throw_errno(const char* what) { throw std::system_error(errno, std::generic_category(), what); }

void write_all(int fd, const void* data, std::size_t n) {
  const char* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::send(fd, p, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw_errno("loopback send");
    }
    p += w;
    n -= static_cast<std::size_t>(w);
  }
}

bool read_all(int fd, void* data, std::size_t n) {
  char* p = static_cast<char*>(data);
  while (n > 0) {
    const ssize_t r = ::recv(fd, p, n, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    p += r;
    n -= static_cast<std::size_t>(r);
  }
  return true;
}

}  // namespace

LoopbackSocketTransport::LoopbackSocketTransport(int endpoints) : n_(endpoints) {
  if (endpoints < 1) throw std::invalid_argument("transport: need at least one endpoint");
  const std::size_t n = static_cast<std::size_t>(endpoints);
  listen_fd_.assign(n, -1);
  port_.assign(n, 0);
  out_fd_.assign(n * n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    boxes_.push_back(std::make_unique<Mailbox>());
    out_mu_.push_back(std::make_unique<std::mutex>());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("loopback socket");
    listen_fd_[i] = fd;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) throw_errno("loopback bind");
    if (::listen(fd, endpoints + 4) < 0) throw_errno("loopback listen");
    socklen_t len = sizeof(addr);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) < 0) throw_errno("loopback getsockname");
    port_[i] = ntohs(addr.sin_port);
  }
  for (int i = 0; i < endpoints; ++i) readers_.emplace_back([this, i] { reader_loop(i); });
}

LoopbackSocketTransport::~LoopbackSocketTransport() {
  stop_ = true;
  for (int fd : out_fd_)
    if (fd >= 0) ::close(fd);
  for (std::thread& t : readers_) t.join();
  for (int fd : listen_fd_)
    if (fd >= 0) ::close(fd);
}

void LoopbackSocketTransport::reader_loop(int endpoint) {
  std::vector<pollfd> fds;
  fds.push_back({listen_fd_[static_cast<std::size_t>(endpoint)], POLLIN, 0});
  Mailbox& box = *boxes_[static_cast<std::size_t>(endpoint)];
  while (!stop_) {
    const int rc = ::poll(fds.data(), fds.size(), 20);
    if (rc <= 0) continue;
    if (fds[0].revents & POLLIN) {
      const int c = ::accept(fds[0].fd, nullptr, nullptr);
      if (c >= 0) fds.push_back({c, POLLIN, 0});
    }
    for (std::size_t i = 1; i < fds.size();) {
      if (fds[i].revents & (POLLIN | POLLHUP | POLLERR)) {
        FrameHeader h{};
        bool ok = read_all(fds[i].fd, &h, sizeof(h)) && h.magic == kFrameMagic;
        ExchangeMessage m;
        if (ok) {
          m.kind = static_cast<MessageKind>(h.kind);
          m.side = h.side == 0 ? Side::L : Side::R;
          m.axis = h.axis;
          m.src = h.src;
          m.dst = h.dst;
          m.payload.resize(h.n_payload);
          m.mask.resize(h.n_mask);
          ok = read_all(fds[i].fd, m.payload.data(), h.n_payload * sizeof(double)) &&
               read_all(fds[i].fd, m.mask.data(), h.n_mask);
        }
        if (!ok) {
          ::close(fds[i].fd);
          fds.erase(fds.begin() + static_cast<std::ptrdiff_t>(i));
          continue;
        }
        box.push(std::move(m));
      }
      ++i;
    }
  }
  for (std::size_t i = 1; i < fds.size(); ++i) ::close(fds[i].fd);
}

void LoopbackSocketTransport::send(ExchangeMessage msg) {
  if (msg.dst < 0 || msg.dst >= n_ || msg.src < 0 || msg.src >= n_) throw std::out_of_range("transport: bad endpoint");
  std::lock_guard<std::mutex> lk(*out_mu_[static_cast<std::size_t>(msg.src)]);
  int& fd = out_fd_[static_cast<std::size_t>(msg.src) * static_cast<std::size_t>(n_) + static_cast<std::size_t>(msg.dst)];
  if (fd < 0) {
    const int s = ::socket(AF_INET, SOCK_STREAM, 0);
    if (s < 0) throw_errno("loopback socket");
    const int one = 1;
    ::setsockopt(s, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port_[static_cast<std::size_t>(msg.dst)]);
    if (::connect(s, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0) {
      ::close(s);
      throw_errno("loopback connect");
    }
    fd = s;
  }
  FrameHeader h{};
  h.magic = kFrameMagic;
  h.kind = static_cast<std::uint8_t>(msg.kind);
  h.side = msg.side == Side::L ? 0 : 1;
  h.axis = msg.axis;
  h.src = msg.src;
  h.dst = msg.dst;
  h.n_payload = msg.payload.size();
  h.n_mask = msg.mask.size();
  write_all(fd, &h, sizeof(h));
  write_all(fd, msg.payload.data(), msg.payload.size() * sizeof(double));
  write_all(fd, msg.mask.data(), msg.mask.size());
  count(msg);
}

void LoopbackSocketTransport::abort() {
  for (auto& b : boxes_) b->close();
}

ExchangeMessage LoopbackSocketTransport::receive(int dst, int src, MessageKind kind, int axis) {
  if (dst < 0 || dst >= n_) throw std::out_of_range("transport: bad endpoint");
  return boxes_[static_cast<std::size_t>(dst)]->pop(src, kind, axis);
}

void NullTransport::send(ExchangeMessage) { throw std::logic_error("null transport: a single patch has no neighbours"); }

ExchangeMessage NullTransport::receive(int, int, MessageKind, int) {
  throw std::logic_error("null transport: a single patch has no neighbours");
}

std::unique_ptr<Transport> make_transport(TransportKind kind, int patches) {
  if (patches == 1) return std::make_unique<NullTransport>();
  if (kind == TransportKind::Loopback) return std::make_unique<LoopbackSocketTransport>(patches);
  return std::make_unique<InProcessTransport>(patches);
}

void post_pmbc(Transport& tr, const PatchLayout& lay, int axis, const std::vector<double>& xi_L,
               const std::vector<double>& xi_R) {
  const int left = lay.neighbor[axis][0], right = lay.neighbor[axis][1];
  if (left >= 0) {
    ExchangeMessage m;
    m.kind = MessageKind::PmbcContrib;
    m.axis = axis;
    m.side = Side::L;
    m.src = lay.id;
    m.dst = left;
    m.payload = xi_L;
    tr.send(std::move(m));
  }
  if (right >= 0) {
    ExchangeMessage m;
    m.kind = MessageKind::PmbcContrib;
    m.axis = axis;
    m.side = Side::R;
    m.src = lay.id;
    m.dst = right;
    m.payload = xi_R;
    tr.send(std::move(m));
  }
}

InterfaceValues collect_pmbc(Transport& tr, const PatchLayout& lay, int axis, const std::vector<double>& xi_L,
                             const std::vector<double>& xi_R, const std::vector<double>& edge_L,
                             const std::vector<double>& edge_R) {
  const int left = lay.neighbor[axis][0], right = lay.neighbor[axis][1];
  InterfaceValues out;
  if (left >= 0) {
    const ExchangeMessage m = tr.receive(lay.id, left, MessageKind::PmbcContrib, axis);
    if (m.payload.size() != xi_L.size()) throw std::runtime_error("pmbc exchange: payload size mismatch");
    out.phi_L.resize(xi_L.size());
    for (std::size_t i = 0; i < xi_L.size(); ++i) out.phi_L[i] = m.payload[i] + xi_L[i];
  } else {
    out.phi_L = edge_L;
  }
  if (right >= 0) {
    const ExchangeMessage m = tr.receive(lay.id, right, MessageKind::PmbcContrib, axis);
    if (m.payload.size() != xi_R.size()) throw std::runtime_error("pmbc exchange: payload size mismatch");
    out.phi_R.resize(xi_R.size());
    for (std::size_t i = 0; i < xi_R.size(); ++i) out.phi_R[i] = xi_R[i] + m.payload[i];
  } else {
    out.phi_R = edge_R;
  }
  return out;
}

std::vector<InterfaceValues> exchange_pmbc(Transport& tr, const std::vector<PatchLayout>& patches, int axis,
                                           const std::vector<std::vector<double>>& xi_L,
                                           const std::vector<std::vector<double>>& xi_R,
                                           const std::vector<std::vector<double>>& edge_L,
                                           const std::vector<std::vector<double>>& edge_R) {
  for (const PatchLayout& p : patches) post_pmbc(tr, p, axis, xi_L[p.id], xi_R[p.id]);
  std::vector<InterfaceValues> out;
  out.reserve(patches.size());
  for (const PatchLayout& p : patches) out.push_back(collect_pmbc(tr, p, axis, xi_L[p.id], xi_R[p.id], edge_L[p.id], edge_R[p.id]));
  return out;
}

namespace {

// Columns of a lines x K plane selected by mask[k] == want.
std::vector<double> pack_columns(const std::vector<double>& plane, const std::vector<std::uint8_t>& mask,
                                 std::uint8_t want, std::size_t K) {
  std::vector<double> out;
  const std::size_t lines = plane.size() / K;
  for (std::size_t l = 0; l < lines; ++l)
    for (std::size_t k = 0; k < K; ++k)
      if (mask[k] == want) out.push_back(plane[l * K + k]);
  return out;
}

void unpack_columns(std::vector<double>& plane, const std::vector<std::uint8_t>& mask, std::uint8_t want,
                    std::size_t K, const std::vector<double>& payload) {
  const std::size_t lines = plane.size() / K;
  std::size_t c = 0;
  for (std::size_t k = 0; k < K; ++k) c += mask[k] == want ? 1 : 0;
  if (payload.size() != c * lines) throw std::runtime_error("correction exchange: payload size mismatch");
  std::size_t i = 0;
  for (std::size_t l = 0; l < lines; ++l)
    for (std::size_t k = 0; k < K; ++k)
      if (mask[k] == want) plane[l * K + k] = payload[i++];
}

}  // namespace

void post_corrections(Transport& tr, const PatchLayout& lay, int axis, const SharedPlanes& planes,
                      const std::vector<std::uint8_t>& nonneg, std::size_t K) {
  if (nonneg.size() != K) throw std::invalid_argument("corrections: mask must have K entries");
  const int left = lay.neighbor[axis][0], right = lay.neighbor[axis][1];
  if (right >= 0) {
    ExchangeMessage m;
    m.kind = MessageKind::AdvectionCorrection;
    m.axis = axis;
    m.side = Side::R;
    m.src = lay.id;
    m.dst = right;
    m.payload = pack_columns(planes.last, nonneg, 1, K);
    m.mask = nonneg;
    tr.send(std::move(m));
  }
  if (left >= 0) {
    ExchangeMessage m;
    m.kind = MessageKind::AdvectionCorrection;
    m.axis = axis;
    m.side = Side::L;
    m.src = lay.id;
    m.dst = left;
    m.payload = pack_columns(planes.first, nonneg, 0, K);
    m.mask = nonneg;
    tr.send(std::move(m));
  }
}

void collect_corrections(Transport& tr, const PatchLayout& lay, int axis, SharedPlanes& planes,
                         const std::vector<std::uint8_t>& nonneg, std::size_t K) {
  const int left = lay.neighbor[axis][0], right = lay.neighbor[axis][1];
  if (left >= 0) {
    const ExchangeMessage m = tr.receive(lay.id, left, MessageKind::AdvectionCorrection, axis);
    if (m.mask != nonneg) throw std::runtime_error("correction exchange: mask mismatch");
    unpack_columns(planes.first, m.mask, 1, K, m.payload);
  }
  if (right >= 0) {
    const ExchangeMessage m = tr.receive(lay.id, right, MessageKind::AdvectionCorrection, axis);
    if (m.mask != nonneg) throw std::runtime_error("correction exchange: mask mismatch");
    unpack_columns(planes.last, m.mask, 0, K, m.payload);
  }
}

void exchange_advection_corrections(Transport& tr, const std::vector<PatchLayout>& patches, int axis,
                                    std::vector<SharedPlanes>& planes, const std::vector<std::uint8_t>& nonneg,
                                    std::size_t K) {
  for (const PatchLayout& p : patches) post_corrections(tr, p, axis, planes[p.id], nonneg, K);
  for (const PatchLayout& p : patches) collect_corrections(tr, p, axis, planes[p.id], nonneg, K);
}

}  // namespace chasm
