#pragma once

// Straight-line re-evaluation of the serving throughput equations, written
// against raw numbers so it shares no code with the library's perf model.

#include <algorithm>
#include <cmath>

namespace oracle {

struct Shape {
  double L, w, E;
};

struct Machine {
  double flops;   // FLOP/s
  double hbm_bw;  // bytes/s
  double nvl;     // bytes/s
  double ib;      // bytes/s
  double pkgs_per_domain;
  double hbm_per_pkg;  // bytes
  double tp;           // tensor-parallel width
};

struct PerfAnswer {
  double prefill, request;
  int domains;
};

inline PerfAnswer evaluate(const Shape& s, const Machine& m, bool per_batch_step) {
  const double K = 2, B = 256, Sp = 1024, Sout = 256, alpha = 0.7;
  const double ff = 4 * s.w;
  const double attn = s.L * 4 * s.w * s.w;
  const double expert = s.L * 2 * s.w * ff;
  const double Wtot = attn + s.E * expert;  // 1 byte per weight
  const double Wact = attn + K * expert;

  const double need = Wtot / (alpha * m.pkgs_per_domain * m.hbm_per_pkg);
  int nd = static_cast<int>(std::ceil(need));
  if (std::abs(need - std::round(need)) < 1e-9) nd = static_cast<int>(std::round(need));
  if (nd < 1) nd = 1;
  const double fib = nd == 1 ? 0.0 : 1.0 - 1.0 / nd;

  const double ntp = s.L * 2 * (m.tp - 1) / m.tp * s.w * 0.5;
  const double nep = 2 * s.L * K * s.w * 0.5;
  const double tcomm = ntp / m.nvl + std::max((1 - fib) * nep / m.nvl, fib * nep / m.ib);

  auto tps = [&](double c, double mem) { return std::min({m.flops / c, m.hbm_bw / mem, 1.0 / tcomm}); };

  const double c_pre = s.L * (4 * K * s.w * ff + 4 * s.w * s.w + 2 * s.w * Sp);
  const double m_pre = Wtot / (B * Sp) + 2 * s.L * s.w * 0.5;
  const double pre = tps(c_pre, m_pre);

  double denom = B * Sp / pre;
  for (double t = Sp + 1; t <= Sp + Sout; t += 1) {
    const double c = s.L * (4 * K * s.w * ff + 4 * s.w * s.w + 2 * s.w * t);
    const double mem = Wact / B + 2 * s.L * s.w * (t + 1) * 0.5;
    denom += (per_batch_step ? B : 1.0) / tps(c, mem);
  }
  denom += 2 * s.L * s.w * Sp * 0.5 / m.ib;
  return {pre, B * Sout / denom, nd};
}

}  // namespace oracle
