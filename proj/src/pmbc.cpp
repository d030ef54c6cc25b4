#include "chasm/pmbc.hpp"

#include <map>
#include <stdexcept>

namespace chasm {

namespace {

// Column j (index -1..N+1) of the inverse global matrix.
std::vector<double> inverse_column(const SplineSolver& s, int j) {
  std::vector<double> e(static_cast<std::size_t>(s.N()) + 3, 0.0);
  e[static_cast<std::size_t>(j + 1)] = 1.0;
  return s.solve(e);
}

class InverseColumns {
 public:
  explicit InverseColumns(const SplineSolver& s) : s_(s) {}
  double b(int i, int j) {
    auto it = cols_.find(j);
    if (it == cols_.end()) it = cols_.emplace(j, inverse_column(s_, j)).first;
    return it->second[static_cast<std::size_t>(i + 1)];
  }

 private:
  const SplineSolver& s_;
  std::map<int, std::vector<double>> cols_;
};

}  // namespace

double inverse_spline_entry(int N, double h, BcKind bc, int i, int j) {
  SplineSolver s(N, h, bc);
  return inverse_column(s, j)[static_cast<std::size_t>(i + 1)];
}

PmbcTable build_pmbc_table(int N, int p, int n_nb, double h, BcKind bc) {
  if (p < 1) throw std::invalid_argument("build_pmbc_table: p must be >= 1");
  if (N % p != 0) throw std::invalid_argument("build_pmbc_table: p must divide N");
  const int M = N / p;
  if (n_nb < 4) throw std::invalid_argument("build_pmbc_table: n_nb must be >= 4");
  if (n_nb > M) throw std::invalid_argument("build_pmbc_table: n_nb must not exceed M = N/p");
  PmbcTable t;
  t.N = N;
  t.M = M;
  t.p = p;
  t.n_nb = n_nb;
  t.h = h;
  t.bc = bc;
  t.local = SplineSolver(M, h, BcKind::Hermite);

  SplineSolver global(N, h, bc);
  InverseColumns inv(global);
  const double s = 1.0 / (2.0 * h);
  t.c0.assign(static_cast<std::size_t>(p) + 1, 0.0);
  t.c_minus.assign(static_cast<std::size_t>(p) + 1, {});
  t.c_plus.assign(static_cast<std::size_t>(p) + 1, {});
  for (int I = 1; I < p; ++I) {
    const int c = I * M;
    t.c0[I] = s * (-inv.b(c - 1, c) + inv.b(c + 1, c));
    t.c_minus[I].resize(static_cast<std::size_t>(n_nb));
    t.c_plus[I].resize(static_cast<std::size_t>(n_nb));
    for (int j = 1; j <= n_nb; ++j) {
      t.c_minus[I][j - 1] = s * (-inv.b(c - 1, c - j) + inv.b(c + 1, c - j));
      t.c_plus[I][j - 1] = s * (-inv.b(c - 1, c + j) + inv.b(c + 1, c + j));
    }
  }
  if (bc == BcKind::Natural) {
    t.c_first.resize(static_cast<std::size_t>(n_nb) + 1);
    t.c_last.resize(static_cast<std::size_t>(n_nb) + 1);
    for (int j = 0; j <= n_nb; ++j) {
      t.c_first[j] = s * (-inv.b(-1, j) + inv.b(1, j));
      t.c_last[j] = s * (-inv.b(N - 1, N - j) + inv.b(N + 1, N - j));
    }
  }
  return t;
}

void pmbc_contrib_columns(const double* samples, std::size_t ncols, const PmbcTable& t, Side side, int q,
                          double* out) {
  const int M = t.M;
  if (side == Side::L) {
    const int I = q;
    if (I < 1 || I >= t.p) throw std::invalid_argument("pmbc_contrib: patch has no left interface");
    const double half = 0.5 * t.c0[I];
    for (std::size_t c = 0; c < ncols; ++c) out[c] = half * samples[c];
    for (int j = 1; j <= t.n_nb; ++j) {
      const double w = t.c_plus[I][j - 1];
      const double* row = samples + static_cast<std::size_t>(j) * ncols;
      for (std::size_t c = 0; c < ncols; ++c) out[c] += w * row[c];
    }
  } else {
    const int I = q + 1;
    if (I < 1 || I >= t.p) throw std::invalid_argument("pmbc_contrib: patch has no right interface");
    const double half = 0.5 * t.c0[I];
    const double* last = samples + static_cast<std::size_t>(M) * ncols;
    for (std::size_t c = 0; c < ncols; ++c) out[c] = half * last[c];
    for (int j = 1; j <= t.n_nb; ++j) {
      const double w = t.c_minus[I][j - 1];
      const double* row = samples + static_cast<std::size_t>(M - j) * ncols;
      for (std::size_t c = 0; c < ncols; ++c) out[c] += w * row[c];
    }
  }
}

double pmbc_contrib(const std::vector<double>& patch_samples, const PmbcTable& t, Side side, int q) {
  if (patch_samples.size() != static_cast<std::size_t>(t.M) + 1)
    throw std::invalid_argument("pmbc_contrib: expected M+1 samples");
  double out = 0.0;
  pmbc_contrib_columns(patch_samples.data(), 1, t, side, q, &out);
  return out;
}

void pmbc_edge_columns(const double* samples, std::size_t ncols, const PmbcTable& t, Side side, double* out) {
  if (t.bc != BcKind::Natural) throw std::logic_error("pmbc_edge: only defined for Natural BC");
  const int M = t.M;
  for (std::size_t c = 0; c < ncols; ++c) out[c] = 0.0;
  for (int j = 0; j <= t.n_nb; ++j) {
    const double w = side == Side::L ? t.c_first[j] : t.c_last[j];
    const double* row = samples + static_cast<std::size_t>(side == Side::L ? j : M - j) * ncols;
    for (std::size_t c = 0; c < ncols; ++c) out[c] += w * row[c];
  }
}

double pmbc_edge(const std::vector<double>& patch_samples, const PmbcTable& t, Side side) {
  if (patch_samples.size() != static_cast<std::size_t>(t.M) + 1)
    throw std::invalid_argument("pmbc_edge: expected M+1 samples");
  double out = 0.0;
  pmbc_edge_columns(patch_samples.data(), 1, t, side, &out);
  return out;
}

LocalSpline assemble_local_spline(const std::vector<double>& patch_samples, double phi_L, double phi_R,
                                  const PmbcTable& t, int patch_id) {
  if (patch_samples.size() != static_cast<std::size_t>(t.M) + 1)
    throw std::invalid_argument("assemble_local_spline: expected M+1 samples");
  std::vector<double> rhs(patch_samples.size() + 2);
  rhs.front() = phi_L;
  rhs.back() = phi_R;
  for (std::size_t i = 0; i < patch_samples.size(); ++i) rhs[i + 1] = patch_samples[i];
  LocalSpline out;
  out.eta_local = t.local.solve(rhs);
  out.patch_id = patch_id;
  return out;
}

std::vector<LocalSpline> assemble_all_local_splines(const std::vector<double>& samples, const PmbcTable& t,
                                                    const BoundaryCondition& bc) {
  if (samples.size() != static_cast<std::size_t>(t.N) + 1)
    throw std::invalid_argument("assemble_all_local_splines: expected N+1 samples");
  if (bc.kind != t.bc) throw std::invalid_argument("assemble_all_local_splines: BC kind mismatch");
  const int p = t.p, M = t.M;
  std::vector<std::vector<double>> patch(static_cast<std::size_t>(p));
  for (int q = 0; q < p; ++q)
    patch[q].assign(samples.begin() + q * M, samples.begin() + (q + 1) * M + 1);
  std::vector<double> xiL(static_cast<std::size_t>(p), 0.0), xiR(static_cast<std::size_t>(p), 0.0);
  for (int q = 0; q < p; ++q) {
    if (q > 0) xiL[q] = pmbc_contrib(patch[q], t, Side::L, q);
    if (q < p - 1) xiR[q] = pmbc_contrib(patch[q], t, Side::R, q);
  }
  std::vector<LocalSpline> out;
  out.reserve(static_cast<std::size_t>(p));
  for (int q = 0; q < p; ++q) {
    double phiL, phiR;
    if (q > 0)
      phiL = xiR[q - 1] + xiL[q];
    else
      phiL = bc.kind == BcKind::Natural ? pmbc_edge(patch[q], t, Side::L) : bc.phi_L;
    if (q < p - 1)
      phiR = xiR[q] + xiL[q + 1];
    else
      phiR = bc.kind == BcKind::Natural ? pmbc_edge(patch[q], t, Side::R) : bc.phi_R;
    out.push_back(assemble_local_spline(patch[q], phiL, phiR, t, q));
  }
  return out;
}

}  // namespace chasm
