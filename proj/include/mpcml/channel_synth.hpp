#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "core_metric.hpp"
#include "rng.hpp"

namespace mpcml {

inline constexpr double kDeg = std::numbers::pi / 180.0;

/// Generator configuration. Inter-cluster parameters follow a simplified
/// 3GPP-style recipe; intra-cluster structure follows the modified model.
struct GenConfig {
  int n_clusters = 20;
  int mpcs_per_cluster = 20;
  double bandwidth_hz = 2e9;
  double cluster_ds_s = 5e-9;  ///< target intra-cluster RMS delay spread
  double gamma_tau = std::numbers::ln10 / 3.0;
  double gamma_theta = std::numbers::ln10 / 3.0;
  double gamma_phi = std::numbers::ln10 / 3.0;

  // Inter-cluster model.
  double delay_spread_s = 30e-9;    ///< DS; cluster delays ~ Exp(mean = delay_scaling * DS)
  double delay_scaling = 3.0;       ///< r_tau; also sets the power-delay slope
  double max_excess_delay_s = 500e-9;
  double shadowing_db = 3.0;        ///< per-cluster log-normal shadowing
  double zenith_spread_rad = 20.0 * kDeg;  ///< cluster-center zenith spread about pi/2
  double intra_angle_spread_rad = 5.0 * kDeg;  ///< sd of Laplacian ray offsets

  double carrier_hz = 60e9;  ///< recorded only; the generator has no frequency dependence
  std::uint64_t seed = 0;

  void validate() const {
    if (n_clusters < 1 || n_clusters > 100)
      throw std::invalid_argument("n_clusters must be in [1, 100]");
    if (mpcs_per_cluster < 1) throw std::invalid_argument("mpcs_per_cluster must be >= 1");
    const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(bandwidth_hz)) throw std::invalid_argument("bandwidth_hz must be positive");
    if (!positive(cluster_ds_s) || !positive(delay_spread_s) || !positive(max_excess_delay_s) ||
        !positive(delay_scaling) || !positive(zenith_spread_rad) ||
        !positive(intra_angle_spread_rad))
      throw std::invalid_argument("spreads and delay parameters must be positive");
    if (!positive(gamma_tau) || !positive(gamma_theta) || !positive(gamma_phi))
      throw std::invalid_argument("descent rates must be positive");
    if (!(shadowing_db >= 0.0)) throw std::invalid_argument("shadowing_db must be >= 0");
  }
};

struct SnapshotMeta {
  std::string model;  ///< "modified" or "legacy"
  GenConfig config;
  std::vector<double> cluster_power;  ///< P_n, sums to 1
  std::vector<double> cluster_delay;  ///< first-path delay per cluster
  double angle_noise_rad = 0.0;
  std::uint64_t noise_seed = 0;
};

/// One channel realization with ground-truth labels in [0, n_clusters).
struct Snapshot {
  std::vector<Mpc> mpcs;
  int n_clusters = 0;
  SnapshotMeta meta;

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(mpcs.size());
    for (const auto& m : mpcs) out.push_back(m.label.value_or(-1));
    return out;
  }

  std::vector<double> powers() const {
    std::vector<double> out;
    out.reserve(mpcs.size());
    for (const auto& m : mpcs) out.push_back(m.power);
    return out;
  }
};

/// Power factor of the intra-cluster exponential decay for normalized
/// delay / zenith / azimuth offsets (each in [0, 1] for the generator).
inline double intra_cluster_decay(double norm_tau, double norm_theta, double norm_phi,
                                  double gamma_tau, double gamma_theta, double gamma_phi) {
  return std::exp(-gamma_tau * norm_tau - gamma_theta * norm_theta - gamma_phi * norm_phi);
}

/// Power-weighted RMS delay spread.
inline double rms_delay_spread(std::span<const double> taus, std::span<const double> powers) {
  const double total = std::accumulate(powers.begin(), powers.end(), 0.0);
  if (!(total > 0.0)) return 0.0;
  // Centered on the first delay to avoid cancellation for late clusters.
  const double ref = taus.empty() ? 0.0 : taus.front();
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double t = taus[i] - ref;
    m1 += powers[i] * t;
    m2 += powers[i] * t * t;
  }
  m1 /= total;
  m2 /= total;
  return std::sqrt(std::max(0.0, m2 - m1 * m1));
}

namespace detail {

enum StreamTag : std::uint64_t { kClusterStream = 1, kIntraStream = 2, kNoiseStream = 3 };

struct ClusterCenter {
  double delay = 0.0;
  double power = 0.0;
  double aoa_az = 0.0, aoa_zen = 0.0;
  double aod_az = 0.0, aod_zen = 0.0;
  std::uint64_t draw_index = 0;  ///< identifies the intra-cluster sub-stream
};

inline std::vector<ClusterCenter> draw_cluster_centers(const GenConfig& cfg) {
  const auto n = static_cast<std::size_t>(cfg.n_clusters);
  std::vector<ClusterCenter> cs(n);
  const double mean_delay = cfg.delay_scaling * cfg.delay_spread_s;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(Rng::derive(cfg.seed, kClusterStream, i));
    auto& c = cs[i];
    c.draw_index = i;
    double tau = rng.exponential(mean_delay);
    for (int tries = 0; tau > cfg.max_excess_delay_s && tries < 1000; ++tries)
      tau = rng.exponential(mean_delay);
    c.delay = std::min(tau, cfg.max_excess_delay_s);
    const double shadow_db = cfg.shadowing_db * rng.normal();
    c.power = std::pow(10.0, -shadow_db / 10.0);  // delay factor applied after shifting
    c.aoa_az = rng.uniform(0.0, kTwoPi);
    c.aoa_zen = reflect_zenith(std::numbers::pi / 2 + cfg.zenith_spread_rad * rng.normal());
    c.aod_az = rng.uniform(0.0, kTwoPi);
    c.aod_zen = reflect_zenith(std::numbers::pi / 2 + cfg.zenith_spread_rad * rng.normal());
  }
  const double first = std::min_element(cs.begin(), cs.end(), [](auto& a, auto& b) {
                         return a.delay < b.delay;
                       })->delay;
  const double slope = (cfg.delay_scaling - 1.0) / (cfg.delay_scaling * cfg.delay_spread_s);
  double total = 0.0;
  for (auto& c : cs) {
    c.delay -= first;
    c.power *= std::exp(-c.delay * slope);
    total += c.power;
  }
  for (auto& c : cs) c.power /= total;
  std::stable_sort(cs.begin(), cs.end(), [](auto& a, auto& b) { return a.delay < b.delay; });
  return cs;
}

struct RayOffsets {
  double aoa_az = 0.0, aoa_zen = 0.0, aod_az = 0.0, aod_zen = 0.0;
};

// The first ray sits on the cluster center; the others get Laplacian offsets
// with standard deviation equal to the configured spread.
inline std::vector<RayOffsets> draw_ray_offsets(Rng& rng, int m, double spread) {
  const double b = spread / std::numbers::sqrt2;
  std::vector<RayOffsets> out(static_cast<std::size_t>(m));
  for (std::size_t k = 1; k < out.size(); ++k) {
    out[k].aoa_az = rng.laplace(b);
    out[k].aoa_zen = rng.laplace(b);
    out[k].aod_az = rng.laplace(b);
    out[k].aod_zen = rng.laplace(b);
  }
  return out;
}

inline Mpc place_ray(const ClusterCenter& c, const RayOffsets& o, double tau, double power,
                     int label) {
  Mpc mpc;
  mpc.tau = tau;
  mpc.power = power;
  mpc.aaoa = wrap_azimuth(c.aoa_az + o.aoa_az);
  mpc.zaoa = reflect_zenith(c.aoa_zen + o.aoa_zen);
  mpc.aaod = wrap_azimuth(c.aod_az + o.aod_az);
  mpc.zaod = reflect_zenith(c.aod_zen + o.aod_zen);
  mpc.label = label;
  return mpc;
}

inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline SnapshotMeta make_meta(const GenConfig& cfg, const char* model,
                              const std::vector<ClusterCenter>& cs) {
  SnapshotMeta meta;
  meta.model = model;
  meta.config = cfg;
  for (const auto& c : cs) {
    meta.cluster_power.push_back(c.power);
    meta.cluster_delay.push_back(c.delay);
  }
  return meta;
}

}  // namespace detail

/// Intra-cluster powers for one cluster of the modified model, before
/// normalization. Offsets are measured from the first ray; each normalized
/// offset is divided by the cluster's largest offset in that dimension, so
/// the weakest possible ray is exp(-(g_tau + g_theta + g_phi)) of the first.
inline std::vector<double> modified_ray_powers(std::span<const double> taus,
                                               std::span<const double> zenith_offsets,
                                               std::span<const double> azimuth_offsets,
                                               const GenConfig& cfg) {
  const std::size_t m = taus.size();
  auto max_dev = [&](std::span<const double> v, double ref) {
    double out = 0.0;
    for (double x : v) out = std::max(out, std::abs(x - ref));
    return out;
  };
  const double den_tau = std::abs(taus[m - 1] - taus[0]);
  const double den_theta = max_dev(zenith_offsets, zenith_offsets[0]);
  const double den_phi = max_dev(azimuth_offsets, azimuth_offsets[0]);
  std::vector<double> p(m);
  for (std::size_t k = 0; k < m; ++k) {
    p[k] = intra_cluster_decay(
        detail::ratio_or_zero(std::abs(taus[k] - taus[0]), den_tau),
        detail::ratio_or_zero(std::abs(zenith_offsets[k] - zenith_offsets[0]), den_theta),
        detail::ratio_or_zero(std::abs(azimuth_offsets[k] - azimuth_offsets[0]), den_phi),
        cfg.gamma_tau, cfg.gamma_theta, cfg.gamma_phi);
  }
  return p;
}

/// Rescales intra-cluster delays so the power-weighted RMS spread equals
/// target while the first delay stays fixed. No-op for zero spread.
inline void rescale_delay_spread(std::vector<double>& taus, std::span<const double> powers,
                                 double target) {
  const double current = rms_delay_spread(taus, powers);
  if (!(current > 0.0)) return;
  const double ratio = target / current;
  const double first = taus.front();
  // tau' = (C/C') tau + (C' - C)/C' * tau_1, written around tau_1.
  for (double& t : taus) t = first + ratio * (t - first);
}

/// Snapshot from the modified model: resolvable intra-cluster delays,
/// exponentially decaying intra-cluster powers normalized to the cluster
/// power, and delays rescaled to the target cluster delay spread.
inline Snapshot generate_snapshot(const GenConfig& cfg) {
  cfg.validate();
  const auto centers = detail::draw_cluster_centers(cfg);
  const int m = cfg.mpcs_per_cluster;
  Snapshot snap;
  snap.n_clusters = cfg.n_clusters;
  snap.meta = detail::make_meta(cfg, "modified", centers);
  snap.mpcs.reserve(static_cast<std::size_t>(m) * centers.size());

  for (std::size_t n = 0; n < centers.size(); ++n) {
    const auto& c = centers[n];
    Rng rng(Rng::derive(cfg.seed, detail::kIntraStream, c.draw_index));
    const auto offs = detail::draw_ray_offsets(rng, m, cfg.intra_angle_spread_rad);

    std::vector<double> taus(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) taus[static_cast<std::size_t>(k)] = c.delay + k / cfg.bandwidth_hz;

    std::vector<double> zen(offs.size()), az(offs.size());
    for (std::size_t k = 0; k < offs.size(); ++k) {
      zen[k] = offs[k].aoa_zen;
      az[k] = offs[k].aoa_az;
    }
    std::vector<double> p = modified_ray_powers(taus, zen, az, cfg);
    const double sum = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v = v / sum * c.power;

    rescale_delay_spread(taus, p, cfg.cluster_ds_s);
    for (std::size_t k = 0; k < offs.size(); ++k)
      snap.mpcs.push_back(detail::place_ray(c, offs[k], taus[k], p[k], static_cast<int>(n)));
  }
  return snap;
}

/// Snapshot mimicking unmodified 3GPP-style output: equal intra-cluster
/// powers, and identical intra-cluster delays except in the two strongest
/// clusters, whose rays are split into sub-clusters at delay offsets
/// {0, 1.28, 2.56} * cluster_ds_s (10/6/4 of every 20 rays).
inline Snapshot generate_legacy_snapshot(const GenConfig& cfg) {
  cfg.validate();
  if (cfg.n_clusters < 2) throw std::invalid_argument("legacy snapshots need n_clusters >= 2");
  const auto centers = detail::draw_cluster_centers(cfg);
  const int m = cfg.mpcs_per_cluster;

  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return centers[a].power > centers[b].power;
  });

  Snapshot snap;
  snap.n_clusters = cfg.n_clusters;
  snap.meta = detail::make_meta(cfg, "legacy", centers);
  for (std::size_t n = 0; n < centers.size(); ++n) {
    const auto& c = centers[n];
    Rng rng(Rng::derive(cfg.seed, detail::kIntraStream, c.draw_index));
    const auto offs = detail::draw_ray_offsets(rng, m, cfg.intra_angle_spread_rad);
    const bool spread = n == order[0] || n == order[1];
    const double p = c.power / m;
    for (int k = 0; k < m; ++k) {
      double tau = c.delay;
      if (spread) {
        const double frac = static_cast<double>(k) / m;
        tau += frac < 0.5 ? 0.0 : (frac < 0.8 ? 1.28 : 2.56) * cfg.cluster_ds_s;
      }
      snap.mpcs.push_back(
          detail::place_ray(c, offs[static_cast<std::size_t>(k)], tau, p, static_cast<int>(n)));
    }
  }
  return snap;
}

/// Adds i.i.d. zero-mean Gaussian noise to every angle; azimuths are
/// re-wrapped and zeniths reflected into range.
inline Snapshot add_angle_noise(const Snapshot& s, double sigma_rad, std::uint64_t seed) {
  if (!(sigma_rad >= 0.0)) throw std::invalid_argument("angle noise sigma must be >= 0");
  Snapshot out = s;
  out.meta.angle_noise_rad = sigma_rad;
  out.meta.noise_seed = seed;
  if (sigma_rad == 0.0) return out;
  Rng rng(Rng::derive(seed, detail::kNoiseStream));
  for (auto& m : out.mpcs) {
    m.aaod = wrap_azimuth(m.aaod + sigma_rad * rng.normal());
    m.zaod = reflect_zenith(m.zaod + sigma_rad * rng.normal());
    m.aaoa = wrap_azimuth(m.aaoa + sigma_rad * rng.normal());
    m.zaoa = reflect_zenith(m.zaoa + sigma_rad * rng.normal());
  }
  return out;
}

}  // namespace mpcml
