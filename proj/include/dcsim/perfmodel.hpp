#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcsim/hardware.hpp"

namespace dcsim {

/// MoE model shape and serving point.  Sizes are bytes; widths are elements.
struct ModelConfig {
  std::string name;
  int L = 0;
  double w = 0.0;
  int E = 0;
  int K = 2;
  double FF = 0.0;
  double S_p = 1024.0;
  int S_out = 256;
  double B = 256.0;
  double b_w = 1.0;
  double b_act = 0.5;
  double b_kv = 0.5;

  static ModelConfig moe(std::string name, int layers, double width, int experts) {
    ModelConfig m;
    m.name = std::move(name);
    m.L = layers;
    m.w = width;
    m.E = experts;
    m.FF = 4.0 * width;
    return m;
  }

  double attention_params() const { return L * 4.0 * w * w; }
  double expert_params() const { return L * 2.0 * w * FF; }

  /// Shared attention plus every expert.
  double w_total() const { return (attention_params() + E * expert_params()) * b_w; }
  /// Shared attention plus the K routed experts one token touches.
  double w_active() const { return (attention_params() + K * expert_params()) * b_w; }

  void validate() const {
    if (L < 1 || !(w > 0) || E < 1 || K < 1 || K > E || !(FF > 0) || !(S_p > 0) || S_out < 1 || !(B > 0))
      throw std::invalid_argument("invalid model config: " + name);
  }
};

inline std::vector<ModelConfig> table5_models() {
  return {ModelConfig::moe("MoE-0.6T", 48, 6144, 64),     ModelConfig::moe("MoE-5T", 96, 8192, 96),
          ModelConfig::moe("MoE-19T", 120, 12288, 128),   ModelConfig::moe("MoE-51T", 120, 14336, 256),
          ModelConfig::moe("MoE-132T", 120, 16384, 512),  ModelConfig::moe("MoE-401T", 144, 18432, 1024)};
}

inline ModelConfig model_by_name(const std::string& name) {
  for (auto& m : table5_models())
    if (m.name == name) return m;
  throw std::invalid_argument("unknown model: " + name);
}

/// Deployment capability in SI units (FLOP/s, bytes/s, bytes, kW).
struct DeploymentPerf {
  double F = 0.0;
  double B_hbm = 0.0;
  double B_nvl = 0.0;
  double B_ib = 0.0;
  double H_usable = 0.0;
  /// Tensor-parallel degree: packages per NVLink domain.
  int T_D = 1;
  /// Packages sharing one EP locality domain and their per-package HBM bytes.
  double locality_pkgs = 1.0;
  double hbm_pkg = 0.0;
  double B_transfer = 0.0;
  double P_kw = 0.0;
  double alpha = 0.7;

  void validate() const {
    if (!(F > 0 && B_hbm > 0 && B_nvl > 0 && B_ib > 0 && hbm_pkg > 0 && B_transfer > 0) || T_D < 1)
      throw std::invalid_argument("deployment bandwidths and capacities must be positive");
  }
};

/// Capability of a pod of `pod_size` racks of the architecture in `year`.
/// Aggregate compute, bandwidths and power scale with the rack count; the
/// tensor-parallel domain stays one rack and the pod is one EP locality domain.
inline DeploymentPerf deployment_perf(const DeploymentArch& arch, int year, const GrowthScenario& s, int pod_size = 1) {
  if (pod_size < 1) throw std::invalid_argument("pod_size must be >= 1");
  const PackagePerf pkg = package_perf(arch, year);
  const double p = pod_size;
  DeploymentPerf d;
  d.F = p * arch.n_pkg * pkg.flops_pf * 1e15;
  d.B_hbm = p * arch.n_pkg * pkg.hbm_bw_tbs * 1e12;
  d.B_nvl = p * arch.b_nvl_tbs * 1e12;
  d.B_ib = p * arch.b_ib_tbs * 1e12;
  d.hbm_pkg = pkg.hbm_gb * 1e9;
  d.H_usable = d.alpha * p * arch.n_pkg * d.hbm_pkg;
  d.T_D = arch.nvl_domain_pkgs;
  d.locality_pkgs = p * arch.nvl_domain_pkgs;
  d.B_transfer = d.B_ib;
  d.P_kw = p * gpu_rack_power(arch, year, s);
  return d;
}

enum class Phase : std::uint8_t { Prefill, Decode };

struct PhaseCosts {
  double compute = 0.0;
  double memory = 0.0;
  double n_tp = 0.0;
  double n_ep = 0.0;
};

/// Per-token FLOPs, HBM bytes and TP/EP bytes.  `t` is the decode context.
inline PhaseCosts phase_costs(const ModelConfig& m, Phase phase, double t, int T_D) {
  if (phase == Phase::Decode && t < m.S_p) throw std::invalid_argument("decode context below prompt length");
  PhaseCosts c;
  const double ctx = phase == Phase::Prefill ? m.S_p : t;
  c.compute = m.L * (4.0 * m.K * m.w * m.FF + 4.0 * m.w * m.w + 2.0 * m.w * ctx);
  if (phase == Phase::Prefill)
    c.memory = m.w_total() / (m.B * m.S_p) + 2.0 * m.L * m.w * m.b_kv;
  else
    c.memory = m.w_active() / m.B + 2.0 * m.L * m.w * (t + 1.0) * m.b_kv;
  c.n_tp = m.L * 2.0 * (T_D - 1) / T_D * m.w * m.b_act;
  c.n_ep = 2.0 * m.L * m.K * m.w * m.b_act;
  return c;
}

inline int n_domains(double w_total, double domain_pkgs, double hbm_pkg, double alpha = 0.7) {
  if (!(hbm_pkg > 0 && domain_pkgs > 0)) throw std::invalid_argument("n_domains needs positive HBM");
  const double x = w_total / (alpha * domain_pkgs * hbm_pkg);
  return std::max(1, static_cast<int>(std::ceil(x * (1.0 - 1e-12))));
}

inline int n_domains(const ModelConfig& m, const DeploymentPerf& d) {
  return n_domains(m.w_total(), d.locality_pkgs, d.hbm_pkg, d.alpha);
}

inline double ib_fraction(int n_dom) {
  if (n_dom < 1) throw std::invalid_argument("ib_fraction needs n_dom >= 1");
  return n_dom == 1 ? 0.0 : 1.0 - 1.0 / n_dom;
}

struct CommTimes {
  double tp = 0.0;
  double ep = 0.0;
  double total() const { return tp + ep; }
};

inline CommTimes comm_time(const ModelConfig& m, const DeploymentPerf& d, Phase phase, double t = 0.0) {
  const PhaseCosts c = phase_costs(m, phase, phase == Phase::Decode ? std::max(t, m.S_p) : m.S_p, d.T_D);
  const double f = ib_fraction(n_domains(m, d));
  CommTimes out;
  out.tp = c.n_tp / d.B_nvl;
  out.ep = std::max((1.0 - f) * c.n_ep / d.B_nvl, f * c.n_ep / d.B_ib);
  return out;
}

/// min(compute, HBM, communication) tokens/s for one phase.
inline double phase_tps(const ModelConfig& m, const DeploymentPerf& d, Phase phase, double t = 0.0) {
  const double ctx = phase == Phase::Decode ? t : m.S_p;
  const PhaseCosts c = phase_costs(m, phase, ctx, d.T_D);
  const double comm = comm_time(m, d, phase, ctx).total();
  const double inf = std::numeric_limits<double>::infinity();
  return std::min({d.F / c.compute, d.B_hbm / c.memory, comm > 0 ? 1.0 / comm : inf});
}

/// How the decode sum weighs each step.  PerBatchStep charges B tokens per
/// step, matching the B*S_out numerator; PerToken uses 1/TPS as written.
enum class DecodeTerm : std::uint8_t { PerBatchStep, PerToken };

inline double kv_transfer_time(const ModelConfig& m, const DeploymentPerf& d) {
  return 2.0 * m.L * m.w * m.S_p * m.b_kv / d.B_transfer;
}

inline double request_tps(const ModelConfig& m, const DeploymentPerf& d, DecodeTerm term = DecodeTerm::PerBatchStep) {
  m.validate();
  d.validate();
  double denom = m.B * m.S_p / phase_tps(m, d, Phase::Prefill);
  const double step = term == DecodeTerm::PerBatchStep ? m.B : 1.0;
  for (int i = 1; i <= m.S_out; ++i) denom += step / phase_tps(m, d, Phase::Decode, m.S_p + i);
  denom += kv_transfer_time(m, d);
  return m.B * m.S_out / denom;
}

/// Tokens/s per kW of deployment power.
inline double tps_per_watt(const ModelConfig& m, const DeploymentPerf& d, DecodeTerm term = DecodeTerm::PerBatchStep) {
  if (!(d.P_kw > 0)) throw std::invalid_argument("deployment power must be positive");
  return request_tps(m, d, term) / d.P_kw;
}

}  // namespace dcsim
