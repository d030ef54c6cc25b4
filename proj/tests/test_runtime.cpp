#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "chasm/pmbc.hpp"
#include "chasm/runtime.hpp"

using namespace chasm;

namespace {

WignerField bump_1d(const PhaseSpaceGrid& g) {
  WignerField f(g);
  for (int i = 0; i <= g.Nx; ++i)
    for (int j = 0; j < g.Nk; ++j) {
      const double x = g.x(i), k = g.k(j);
      f.slice(i)[j] = std::exp(-0.5 * (x - 0.7) * (x - 0.7) - 0.6 * k * k) * (1.0 + 0.3 * std::sin(x));
    }
  return f;
}

SimulationConfig free_config(const PhaseSpaceGrid& g, double tau, int p, int steps, int n_nb) {
  SimulationConfig c;
  c.grid = g;
  c.step.tau = tau;
  c.step.n_nb = n_nb;
  c.patches = p;
  c.steps = steps;
  return c;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("decompose: shared interface nodes and neighbours") {
  const PhaseSpaceGrid g = build_grid(1, 0.0, 6.0, 6, 1.0, 4);
  const std::vector<PatchLayout> p = decompose(g, 3);
  REQUIRE(p.size() == 3);
  for (int q = 0; q < 3; ++q) {
    CHECK(p[q].M == 2);
    CHECK(p[q].lo[0] == 2 * q);
    CHECK(p[q].nodes_per_axis() == 3);
  }
  CHECK(p[0].neighbor[0][0] == -1);
  CHECK(p[0].neighbor[0][1] == 1);
  CHECK(p[1].neighbor[0][0] == 0);
  CHECK(p[2].neighbor[0][1] == -1);
  CHECK(p[1].neighbor_count() == 2);
  CHECK_THROWS_AS(decompose(g, 4), std::invalid_argument);

  const PhaseSpaceGrid g3 = build_grid(3, -1.0, 1.0, 8, 1.0, 4);
  const std::vector<PatchLayout> q = decompose(g3, 4);
  REQUIRE(q.size() == 64);
  int interior = 0, corners = 0;
  for (const PatchLayout& l : q) {
    if (l.neighbor_count() == 6) ++interior;
    if (l.neighbor_count() == 3) ++corners;
    CHECK(l.spatial_size() == 27);
  }
  CHECK(interior == 8);
  CHECK(corners == 8);
  const PatchLayout& c = q[(1 * 4 + 2) * 4 + 1];
  CHECK(c.index == std::array<int, 3>{1, 2, 1});
  CHECK(c.lo == std::array<int, 3>{2, 4, 2});
  CHECK(c.neighbor[0][0] == (0 * 4 + 2) * 4 + 1);
  CHECK(c.neighbor[2][1] == (1 * 4 + 2) * 4 + 2);
}

TEST_CASE("PMBC exchange assembles bitwise-equal interface values") {
  const int N = 90, p = 3, n_nb = 30;
  const double h = 0.1;
  const PhaseSpaceGrid g = build_grid(1, 0.0, N * h, N, 1.0, 4);
  const std::vector<PatchLayout> lay = decompose(g, p);
  const PmbcTable t = build_pmbc_table(N, p, n_nb, h, BcKind::Natural);
  for (TransportKind kind : {TransportKind::InProcess, TransportKind::Loopback}) {
    for (double slope : {0.0, 1.0}) {
      std::vector<std::vector<double>> xl(p), xr(p), el(p), er(p);
      for (int q = 0; q < p; ++q) {
        std::vector<double> s(t.M + 1);
        for (int i = 0; i <= t.M; ++i) s[i] = 2.5 + slope * (q * t.M + i) * h;
        xl[q] = {q > 0 ? pmbc_contrib(s, t, Side::L, q) : 0.0};
        xr[q] = {q < p - 1 ? pmbc_contrib(s, t, Side::R, q) : 0.0};
        el[q] = {pmbc_edge(s, t, Side::L)};
        er[q] = {pmbc_edge(s, t, Side::R)};
      }
      auto tr = make_transport(kind, p);
      const std::vector<InterfaceValues> v = exchange_pmbc(*tr, lay, 0, xl, xr, el, er);
      for (int q = 1; q < p; ++q) {
        CHECK(v[q].phi_L[0] == v[q - 1].phi_R[0]);
        CHECK(v[q].phi_L[0] == doctest::Approx(slope).epsilon(1e-12).scale(1.0));
      }
      CHECK(v[0].phi_L == el[0]);
      CHECK(v[p - 1].phi_R == er[p - 1]);
      CHECK(tr->counters().messages == 4);
    }
  }
}

TEST_CASE("mixed-sign correction masks") {
  const PhaseSpaceGrid g = build_grid(1, 0.0, 6.0, 6, 1.0, 4);
  const std::vector<PatchLayout> lay = decompose(g, 3);
  const std::size_t K = 4;
  const std::vector<std::uint8_t> nonneg{1, 0, 1, 0};
  std::vector<SharedPlanes> planes(3);
  for (int q = 0; q < 3; ++q)
    for (std::size_t k = 0; k < K; ++k) {
      planes[q].first.push_back(100.0 * q + k);
      planes[q].last.push_back(100.0 * q + 10.0 + k);
    }
  const std::vector<SharedPlanes> before = planes;
  auto tr = make_transport(TransportKind::InProcess, 3);
  exchange_advection_corrections(*tr, lay, 0, planes, nonneg, K);
  for (int q = 0; q < 3; ++q)
    for (std::size_t k = 0; k < K; ++k) {
      CAPTURE(q);
      CAPTURE(k);
      const double want_first = (nonneg[k] && q > 0) ? before[q - 1].last[k] : before[q].first[k];
      const double want_last = (!nonneg[k] && q < 2) ? before[q + 1].first[k] : before[q].last[k];
      CHECK(planes[q].first[k] == want_first);
      CHECK(planes[q].last[k] == want_last);
    }
  CHECK(tr->counters().messages == 4);
  const std::vector<std::uint8_t> wrong{1, 1, 1};
  CHECK_THROWS_AS(post_corrections(*tr, lay[0], 0, planes[0], wrong, K), std::invalid_argument);
}

TEST_CASE("single patch uses the null transport") {
  auto tr = make_transport(TransportKind::InProcess, 1);
  CHECK(tr->name() == std::string("null"));
  CHECK_THROWS_AS(tr->send(ExchangeMessage{}), std::logic_error);
}

TEST_CASE("zero time step leaves the field unchanged on patches") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 80, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  const SimulationResult r = run_simulation(free_config(g, 0.0, 2, 3, 20), f0);
  CHECK(max_diff(r.final_field.values, f0.values) <= 1e-14);
}

TEST_CASE("patched free streaming agrees with the global solve") {
  const PhaseSpaceGrid g = build_grid(1, -8.0, 8.0, 160, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  const SimulationResult ref = run_simulation(free_config(g, 0.04, 1, 5, 30), f0);
  for (int p : {2, 4}) {
    CAPTURE(p);
    const SimulationResult r = run_simulation(free_config(g, 0.04, p, 5, 30), f0);
    CHECK(max_diff(r.final_field.values, ref.final_field.values) <= 1e-10);
  }
  const SimulationResult coarse = run_simulation(free_config(g, 0.04, 4, 5, 10), f0);
  const double d = max_diff(coarse.final_field.values, ref.final_field.values);
  CHECK(d > 1e-10);
  CHECK(d < 1e-3);
}

TEST_CASE("patched harmonic step agrees with the global step") {
  const PhaseSpaceGrid g = build_grid(1, -12.0, 12.0, 120, 6.4, 64);
  WignerField f0(g);
  for (int i = 0; i <= g.Nx; ++i)
    for (int j = 0; j < g.Nk; ++j) f0.slice(i)[j] = std::exp(-0.5 * std::pow(g.x(i) - 1.0, 2) - 0.5 * std::pow(g.k(j), 2));
  SimulationConfig c = free_config(g, 0.01, 1, 2, 20);
  c.step.potential = PotentialKind::Harmonic;
  c.step.omega = 0.39;
  const SimulationResult ref = run_simulation(c, f0);
  c.patches = 4;
  const SimulationResult r = run_simulation(c, f0);
  CHECK(max_diff(r.final_field.values, ref.final_field.values) <= 1e-9);
}

TEST_CASE("patched 3-D advection agrees with the global solve") {
  const PhaseSpaceGrid g = build_grid(3, -4.0, 4.0, 40, 1.6, 4);
  WignerField f0(g);
  const std::size_t K = g.k_size();
  for (std::size_t s = 0; s < g.spatial_size(); ++s) {
    const int i0 = static_cast<int>(s / 1681), i1 = static_cast<int>(s / 41 % 41), i2 = static_cast<int>(s % 41);
    const double r2 = std::pow(g.x(i0) - 0.3, 2) + std::pow(g.x(i1), 2) + std::pow(g.x(i2) + 0.2, 2);
    for (std::size_t q = 0; q < K; ++q) f0.slice(s)[q] = std::exp(-0.6 * r2) * (1.0 + 0.1 * q);
  }
  const SimulationResult ref = run_simulation(free_config(g, 0.1, 1, 2, 20), f0);
  const SimulationResult r = run_simulation(free_config(g, 0.1, 2, 2, 20), f0);
  CHECK(max_diff(r.final_field.values, ref.final_field.values) <= 1e-9);
  CHECK(r.counters.transport.messages > 0);
}

TEST_CASE("loopback sockets reproduce the in-process run bitwise") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 120, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  SimulationConfig c = free_config(g, 0.04, 3, 4, 20);
  const SimulationResult a = run_simulation(c, f0);
  c.transport = TransportKind::Loopback;
  const SimulationResult b = run_simulation(c, f0);
  CHECK(a.final_field.values == b.final_field.values);
  CHECK(a.counters.transport.messages == b.counters.transport.messages);
  CHECK(a.counters.transport.bytes == b.counters.transport.bytes);
}

TEST_CASE("runs are deterministic and traffic scales with steps") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 120, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  const SimulationResult a = run_simulation(free_config(g, 0.04, 4, 3, 20), f0);
  const SimulationResult b = run_simulation(free_config(g, 0.04, 4, 3, 20), f0);
  CHECK(a.final_field.values == b.final_field.values);
  const SimulationResult c = run_simulation(free_config(g, 0.04, 4, 6, 20), f0);
  CHECK(c.counters.transport.messages == 2 * a.counters.transport.messages);
  CHECK(c.counters.transport.bytes == 2 * a.counters.transport.bytes);
  CHECK(c.counters.steps == 6);
}

TEST_CASE("reports: cadence, callbacks and zero steps") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 60, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  SimulationConfig c = free_config(g, 0.04, 2, 6, 20);
  c.report_every = 2;
  std::vector<int> seen;
  c.on_report = [&](const WignerField& f, int step) {
    seen.push_back(step);
    CHECK(f.grid == g);
  };
  const SimulationResult r = run_simulation(c, f0);
  CHECK(r.report_steps == std::vector<int>{0, 2, 4, 6});
  CHECK(seen == r.report_steps);
  CHECK(r.series.size() == 4);
  CHECK(r.series[0].eps_inf == 0.0);
  CHECK(r.mass_series.size() == 4);

  SimulationConfig z = free_config(g, 0.04, 2, 0, 20);
  const SimulationResult r0 = run_simulation(z, f0);
  CHECK(r0.final_field.values == f0.values);
  CHECK(r0.series.size() == 1);
}

TEST_CASE("single precision run stays close to double precision") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 120, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  SimulationConfig c = free_config(g, 0.04, 3, 4, 20);
  const SimulationResult a = run_simulation(c, f0);
  c.precision = Precision::F32;
  const SimulationResult b = run_simulation(c, f0);
  CHECK(max_diff(a.final_field.values, b.final_field.values) <= 1e-5);
}

TEST_CASE("invalid decompositions are rejected") {
  const PhaseSpaceGrid g = build_grid(1, -6.0, 6.0, 60, 2.0, 16);
  const WignerField f0 = bump_1d(g);
  CHECK_THROWS_AS(run_simulation(free_config(g, 0.04, 4, 1, 20), f0), std::invalid_argument);
  CHECK_THROWS_AS(run_simulation(free_config(g, 0.04, 7, 1, 4), f0), std::invalid_argument);
  CHECK_THROWS_AS(run_simulation(free_config(g, 0.2, 1, 1, 20), f0), std::invalid_argument);
}
