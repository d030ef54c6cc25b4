#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "chasm/integrator.hpp"
#include "chasm/phase_space.hpp"
#include "chasm/pmbc.hpp"
#include "chasm/tkm.hpp"

namespace chasm {

/// One rectangular x-space patch. Along each axis the patch owns global
/// nodes lo[a]..lo[a]+M; interface nodes are shared with the neighbour.
struct PatchLayout {
  int dim = 1;
  int p = 1;
  int M = 0;
  int id = 0;
  std::array<int, 3> index{0, 0, 0};
  std::array<int, 3> lo{0, 0, 0};
  /// neighbor[a][0] is the left patch id along axis a, neighbor[a][1] the right; -1 at a global edge.
  std::array<std::array<int, 2>, 3> neighbor{{{-1, -1}, {-1, -1}, {-1, -1}}};

  std::size_t nodes_per_axis() const { return static_cast<std::size_t>(M) + 1; }
  std::size_t spatial_size() const;
  int neighbor_count() const;
};

/// p patches per axis, p^dim in total, ids row-major over the patch index.
std::vector<PatchLayout> decompose(const PhaseSpaceGrid& g, int p);

enum class MessageKind : std::uint8_t { PmbcContrib = 0, AdvectionCorrection = 1 };

/// side is the sender's face the payload belongs to.
struct ExchangeMessage {
  MessageKind kind = MessageKind::PmbcContrib;
  int axis = 0;
  Side side = Side::L;
  int src = 0;
  int dst = 0;
  std::vector<double> payload;
  std::vector<std::uint8_t> mask;  ///< per-k selection for corrections

  std::size_t wire_bytes() const;
};

struct TransportCounters {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
};

/// Point-to-point channel between patch workers. Messages from one source
/// with the same (kind, axis) are delivered in send order.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void send(ExchangeMessage msg) = 0;
  virtual ExchangeMessage receive(int dst, int src, MessageKind kind, int axis) = 0;
  virtual std::string name() const = 0;
  /// Wakes every blocked receive with an error; used when a worker fails.
  virtual void abort() {}
  TransportCounters counters() const { return {messages_.load(), bytes_.load()}; }
  void reset_counters() {
    messages_ = 0;
    bytes_ = 0;
  }

 protected:
  void count(const ExchangeMessage& m) {
    messages_ += 1;
    bytes_ += m.wire_bytes();
  }

 private:
  std::atomic<std::uint64_t> messages_{0};
  std::atomic<std::uint64_t> bytes_{0};
};

/// Blocking per-endpoint inbox.
class Mailbox {
 public:
  void push(ExchangeMessage m);
  /// Throws once the mailbox is closed and no matching message is queued.
  ExchangeMessage pop(int src, MessageKind kind, int axis);
  void close();

 private:
  bool closed_ = false;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<ExchangeMessage> queue_;
};

class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(int endpoints);
  void send(ExchangeMessage msg) override;
  ExchangeMessage receive(int dst, int src, MessageKind kind, int axis) override;
  std::string name() const override { return "inprocess"; }
  void abort() override;

 private:
  std::vector<std::unique_ptr<Mailbox>> boxes_;
};

/// TCP on 127.0.0.1: one listener and reader thread per endpoint, one
/// connection per ordered (src, dst) pair opened on first use.
class LoopbackSocketTransport final : public Transport {
 public:
  explicit LoopbackSocketTransport(int endpoints);
  ~LoopbackSocketTransport() override;
  LoopbackSocketTransport(const LoopbackSocketTransport&) = delete;
  LoopbackSocketTransport& operator=(const LoopbackSocketTransport&) = delete;

  void send(ExchangeMessage msg) override;
  ExchangeMessage receive(int dst, int src, MessageKind kind, int axis) override;
  std::string name() const override { return "loopback"; }
  void abort() override;

 private:
  void reader_loop(int endpoint);

  int n_;
  std::vector<int> listen_fd_;
  std::vector<std::uint16_t> port_;
  std::vector<std::unique_ptr<Mailbox>> boxes_;
  std::vector<std::thread> readers_;
  std::vector<int> out_fd_;  ///< n x n, -1 until connected
  std::vector<std::unique_ptr<std::mutex>> out_mu_;
  std::atomic<bool> stop_{false};
};

/// Single-patch transport; any send is a logic error.
class NullTransport final : public Transport {
 public:
  void send(ExchangeMessage msg) override;
  ExchangeMessage receive(int dst, int src, MessageKind kind, int axis) override;
  std::string name() const override { return "null"; }
};

enum class TransportKind { InProcess, Loopback };

std::unique_ptr<Transport> make_transport(TransportKind kind, int patches);

/// Interface values of one patch along one axis; each plane holds
/// lines x ncols entries.
struct InterfaceValues {
  std::vector<double> phi_L;
  std::vector<double> phi_R;
};

/// Posts this patch's half-stencil planes to its neighbours along `axis`.
void post_pmbc(Transport& tr, const PatchLayout& lay, int axis, const std::vector<double>& xi_L,
               const std::vector<double>& xi_R);

/// Receives neighbour planes and forms phi_L = xi_R[q-1] + xi_L[q],
/// phi_R = xi_R[q] + xi_L[q+1]. At global edges the given edge planes are used.
InterfaceValues collect_pmbc(Transport& tr, const PatchLayout& lay, int axis, const std::vector<double>& xi_L,
                             const std::vector<double>& xi_R, const std::vector<double>& edge_L,
                             const std::vector<double>& edge_R);

/// Bulk-synchronous exchange over all patches: every post, then every collect.
std::vector<InterfaceValues> exchange_pmbc(Transport& tr, const std::vector<PatchLayout>& patches, int axis,
                                           const std::vector<std::vector<double>>& xi_L,
                                           const std::vector<std::vector<double>>& xi_R,
                                           const std::vector<std::vector<double>>& edge_L,
                                           const std::vector<std::vector<double>>& edge_R);

/// Shared-node planes of one patch after a provisional shift along one axis:
/// `first` at local node 0, `last` at local node M, each lines x K.
struct SharedPlanes {
  std::vector<double> first;
  std::vector<double> last;
};

/// nonneg[k] = 1 where alpha(k) >= 0. Sends the masked columns of `last`
/// rightwards and the unmasked columns of `first` leftwards.
void post_corrections(Transport& tr, const PatchLayout& lay, int axis, const SharedPlanes& planes,
                      const std::vector<std::uint8_t>& nonneg, std::size_t K);

/// Overwrites `first` where alpha >= 0 with the left owner's values and
/// `last` where alpha < 0 with the right owner's values.
void collect_corrections(Transport& tr, const PatchLayout& lay, int axis, SharedPlanes& planes,
                         const std::vector<std::uint8_t>& nonneg, std::size_t K);

void exchange_advection_corrections(Transport& tr, const std::vector<PatchLayout>& patches, int axis,
                                    std::vector<SharedPlanes>& planes, const std::vector<std::uint8_t>& nonneg,
                                    std::size_t K);

enum class Precision { F64, F32 };

struct PhaseTimes {
  double pdo = 0.0;
  double contrib = 0.0;
  double exchange = 0.0;
  double solve = 0.0;
  double correction = 0.0;
  double reduction = 0.0;
};

struct RunCounters {
  TransportCounters transport;
  PhaseTimes times;  ///< summed over workers, seconds
  double wall = 0.0;
  int steps = 0;
};

struct SimulationConfig {
  PhaseSpaceGrid grid;
  StepConfig step;
  int patches = 1;  ///< per axis
  int steps = 0;
  Precision precision = Precision::F64;
  TransportKind transport = TransportKind::InProcess;
  int report_every = 0;  ///< 0: only the final state
  const ConvolutionTensor* tensor = nullptr;
  /// Exact solution for error metrics; when empty the initial field is used.
  std::function<WignerField(double t)> reference;
  /// Mass normaliser; NaN means the mass of the initial field.
  double initial_mass = std::numeric_limits<double>::quiet_NaN();
  /// Called with the gathered field at every report.
  std::function<void(const WignerField&, int step)> on_report;
};

struct SimulationResult {
  WignerField final_field;
  std::vector<ErrorReport> series;
  std::vector<int> report_steps;
  std::vector<double> max_abs_series;
  std::vector<double> mass_series;
  double initial_mass = 0.0;
  RunCounters counters;
};

/// Runs `steps` LPC1 steps from f0 with one worker thread per patch. With a
/// single patch the spline is the global solve and the transport is null.
SimulationResult run_simulation(const SimulationConfig& cfg, const WignerField& f0);

}  // namespace chasm
