#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "channel_synth.hpp"
#include "core_metric.hpp"

namespace mpcml {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Input that does not match an expected file format. what() carries
/// "path:line: reason" when a line is known.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSnapshotHeader =
    "tau_s,power,aaod_rad,zaod_rad,aaoa_rad,zaoa_rad,label";

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// GenConfig / snapshot metadata as JSON.

inline void to_json(json& j, const GenConfig& c) {
  j = json{{"n_clusters", c.n_clusters},
           {"mpcs_per_cluster", c.mpcs_per_cluster},
           {"bandwidth_hz", c.bandwidth_hz},
           {"cluster_ds_s", c.cluster_ds_s},
           {"gamma_tau", c.gamma_tau},
           {"gamma_theta", c.gamma_theta},
           {"gamma_phi", c.gamma_phi},
           {"delay_spread_s", c.delay_spread_s},
           {"delay_scaling", c.delay_scaling},
           {"max_excess_delay_s", c.max_excess_delay_s},
           {"shadowing_db", c.shadowing_db},
           {"zenith_spread_rad", c.zenith_spread_rad},
           {"intra_angle_spread_rad", c.intra_angle_spread_rad},
           {"carrier_hz", c.carrier_hz},
           {"seed", c.seed}};
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline void from_json(const json& j, GenConfig& c) {
  static const std::set<std::string> known = {
      "n_clusters",     "mpcs_per_cluster", "bandwidth_hz",       "cluster_ds_s",
      "gamma_tau",      "gamma_theta",      "gamma_phi",          "delay_spread_s",
      "delay_scaling",  "max_excess_delay_s", "shadowing_db",     "zenith_spread_rad",
      "intra_angle_spread_rad", "carrier_hz", "seed"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw FormatError("unknown generator key '" + k + "'");
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_clusters", c.n_clusters);
  get("mpcs_per_cluster", c.mpcs_per_cluster);
  get("bandwidth_hz", c.bandwidth_hz);
  get("cluster_ds_s", c.cluster_ds_s);
  get("gamma_tau", c.gamma_tau);
  get("gamma_theta", c.gamma_theta);
  get("gamma_phi", c.gamma_phi);
  get("delay_spread_s", c.delay_spread_s);
  get("delay_scaling", c.delay_scaling);
  get("max_excess_delay_s", c.max_excess_delay_s);
  get("shadowing_db", c.shadowing_db);
  get("zenith_spread_rad", c.zenith_spread_rad);
  get("intra_angle_spread_rad", c.intra_angle_spread_rad);
  get("carrier_hz", c.carrier_hz);
  get("seed", c.seed);
}

inline json snapshot_sidecar(const Snapshot& s) {
  return json{{"model", s.meta.model},
              {"n_clusters", s.n_clusters},
              {"n_mpcs", s.mpcs.size()},
              {"config", s.meta.config},
              {"seed", s.meta.config.seed},
              {"angle_noise_rad", s.meta.angle_noise_rad},
              {"noise_seed", s.meta.noise_seed},
              {"cluster_power", s.meta.cluster_power},
              {"cluster_delay_s", s.meta.cluster_delay}};
}

// ---------------------------------------------------------------------------
// Snapshot CSV.

inline void write_snapshot_csv(std::ostream& os, const Snapshot& s) {
  os << kSnapshotHeader << '\n';
  for (const auto& m : s.mpcs) {
    os << format_double(m.tau) << ',' << format_double(m.power) << ',' << format_double(m.aaod)
       << ',' << format_double(m.zaod) << ',' << format_double(m.aaoa) << ','
       << format_double(m.zaoa) << ',' << m.label.value_or(-1) << '\n';
  }
}

/// Writes <dir>/<stem>.csv and the <dir>/<stem>.json sidecar.
inline void save_snapshot(const fs::path& dir, const std::string& stem, const Snapshot& s) {
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"));
    if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
    write_snapshot_csv(csv, s);
  }
  std::ofstream side(dir / (stem + ".json"));
  if (!side) throw std::runtime_error("cannot write " + (dir / (stem + ".json")).string());
  side << snapshot_sidecar(s).dump(2) << '\n';
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses snapshot CSV text. Labels are kept as written (-1 = unlabeled).
inline std::vector<Mpc> parse_snapshot_csv(std::istream& is, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw FormatError(origin + ":" + std::to_string(lineno) + ": " + why);
  };
  // Header: first non-blank line.
  while (std::getline(is, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw FormatError(origin + ": empty file");
  std::string header(detail::trim(line));
  if (!header.empty() && static_cast<unsigned char>(header[0]) == 0xEF && header.size() >= 3)
    header = header.substr(3);  // UTF-8 BOM
  if (header != kSnapshotHeader) fail("unknown header '" + header + "'");

  std::vector<Mpc> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_commas(line);
    if (f.size() != 7) fail("expected 7 fields, found " + std::to_string(f.size()));
    Mpc m;
    double* dst[] = {&m.tau, &m.power, &m.aaod, &m.zaod, &m.aaoa, &m.zaoa};
    for (std::size_t k = 0; k < 6; ++k)
      if (!detail::parse_number(f[k], *dst[k])) fail("malformed number '" + std::string(f[k]) + "'");
    int label = 0;
    if (!detail::parse_number(f[6], label)) fail("malformed label '" + std::string(f[6]) + "'");
    if (label < -1) fail("label must be >= -1");
    if (label >= 0) m.label = label;
    if (auto v = m.violation(); !v.empty()) fail(v);
    out.push_back(m);
  }
  if (out.empty()) throw FormatError(origin + ": no MPC rows");
  return out;
}

/// Builds a snapshot from parsed MPCs: unlabeled rows and clusters with
/// at most `cluster_size_threshold` MPCs are dropped (threshold 0 keeps
/// everything), and surviving labels are renumbered to [0, N) preserving
/// their order.
inline Snapshot snapshot_from_mpcs(std::vector<Mpc> mpcs, std::size_t cluster_size_threshold) {
  std::map<int, std::size_t> count;
  for (const auto& m : mpcs)
    if (m.label) ++count[*m.label];
  if (cluster_size_threshold > 0) {
    std::erase_if(mpcs, [&](const Mpc& m) {
      return !m.label || count[*m.label] <= cluster_size_threshold;
    });
  }
  std::map<int, int> remap;
  for (const auto& m : mpcs)
    if (m.label) remap.emplace(*m.label, 0);
  int next = 0;
  for (auto& [k, v] : remap) v = next++;
  for (auto& m : mpcs)
    if (m.label) m.label = remap[*m.label];
  Snapshot s;
  s.mpcs = std::move(mpcs);
  s.n_clusters = next;
  s.meta.model = "file";
  return s;
}

inline Snapshot load_snapshot_csv(const fs::path& path, std::size_t cluster_size_threshold = 0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Snapshot s = snapshot_from_mpcs(parse_snapshot_csv(in, path.string()), cluster_size_threshold);
  // Recover generator metadata when a sidecar is present.
  fs::path side = path;
  side.replace_extension(".json");
  if (fs::exists(side)) {
    std::ifstream js(side);
    try {
      const json j = json::parse(js);
      if (j.contains("config")) s.meta.config = j.at("config").get<GenConfig>();
      s.meta.model = j.value("model", s.meta.model);
      s.meta.angle_noise_rad = j.value("angle_noise_rad", 0.0);
      s.meta.noise_seed = j.value("noise_seed", std::uint64_t{0});
    } catch (const json::exception& e) {
      throw FormatError(side.string() + ": " + e.what());
    }
  }
  return s;
}

/// Loads one snapshot per CSV file. `path` may be a file, a directory
/// (all *.csv files, sorted by name) or a glob with '*' in the file name.
/// Clusters with at most `cluster_size_threshold` MPCs are discarded.
inline std::vector<Snapshot> load_labeled_mpcs(const fs::path& path,
                                               std::size_t cluster_size_threshold = 15) {
  std::vector<fs::path> files;
  const std::string name = path.filename().string();
  if (name.find('*') != std::string::npos) {
    const auto star = name.find('*');
    const std::string pre = name.substr(0, star), post = name.substr(star + 1);
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::is_directory(dir)) throw std::runtime_error("no such directory " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
      const std::string f = e.path().filename().string();
      if (e.is_regular_file() && f.size() >= pre.size() + post.size() && f.starts_with(pre) &&
          f.ends_with(post))
        files.push_back(e.path());
    }
  } else if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path))
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  } else {
    files.push_back(path);
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw std::runtime_error("no snapshot files match " + path.string());
  std::vector<Snapshot> out;
  for (const auto& f : files) out.push_back(load_snapshot_csv(f, cluster_size_threshold));
  return out;
}

// ---------------------------------------------------------------------------
// Metric matrix JSON: {"dim": d, "scheme": "...", "entries": [row-major]}.

inline json metric_to_json(const MetricMatrix& a) {
  const auto d = a.dim();
  std::string scheme = d == 7 ? "with_aod" : d == 4 ? "without_aod" : "custom";
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(d * d));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) flat.push_back(a(i, j));
  return json{{"dim", d}, {"scheme", scheme}, {"entries", flat}};
}

inline MetricMatrix metric_from_json(const json& j) {
  try {
    const auto d = j.at("dim").get<Eigen::Index>();
    const auto flat = j.at("entries").get<std::vector<double>>();
    if (d < 1 || static_cast<Eigen::Index>(flat.size()) != d * d)
      throw FormatError("metric JSON: entries do not match dim");
    if (j.contains("scheme")) {
      const auto s = j.at("scheme").get<std::string>();
      if (s != "custom" && feature_dim(scheme_from_string(s)) != d)
        throw FormatError("metric JSON: scheme '" + s + "' does not match dim");
    }
    Eigen::MatrixXd m(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index k = 0; k < d; ++k) m(i, k) = flat[static_cast<std::size_t>(i * d + k)];
    return MetricMatrix(m);
  } catch (const json::exception& e) {
    throw FormatError(std::string("metric JSON: ") + e.what());
  }
}

inline void save_metric(const fs::path& path, const MetricMatrix& a) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << metric_to_json(a).dump(2) << '\n';
}

inline MetricMatrix load_metric(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  try {
    return metric_from_json(json::parse(is));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mpcml
