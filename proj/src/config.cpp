#include "coskel/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace coskel {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("bad value for " + key + ": '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

std::string show(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Key {
  const char* name;
  std::function<std::string(const RunSettings&)> get;
  std::function<void(RunSettings&, const std::string&, const std::string&)> set;
};

#define COSKEL_NUM(NAME, FIELD, TYPE)                                                        \
  Key {                                                                                      \
    NAME, [](const RunSettings& s) { return show(static_cast<double>(s.FIELD)); },           \
        [](RunSettings& s, const std::string& k, const std::string& v) { s.FIELD = parse_number<TYPE>(k, v); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      Key{"mode", [](const RunSettings& s) { return to_string(s.run.mode); },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            try {
              s.run.mode = parse_scenario(v);
            } catch (const std::invalid_argument&) {
              throw ConfigError("bad value for " + k + ": '" + v + "'");
            }
          }},
      COSKEL_NUM("lambda", run.lambda, double),
      COSKEL_NUM("max_iterations", run.max_iterations, int),
      Key{"use_key_priors", [](const RunSettings& s) { return std::string(s.run.use_key_priors ? "true" : "false"); },
          [](RunSettings& s, const std::string& k, const std::string& v) { s.run.use_key_priors = parse_bool(k, v); }},
      Key{"k_clusters", [](const RunSettings& s) { return s.run.k_clusters ? std::to_string(*s.run.k_clusters) : std::string("auto"); },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            if (v == "auto") s.run.k_clusters.reset();
            else s.run.k_clusters = parse_number<int>(k, v);
          }},
      Key{"interdependence", [](const RunSettings& s) { return std::string(s.run.interdependence ? "true" : "false"); },
          [](RunSettings& s, const std::string& k, const std::string& v) { s.run.interdependence = parse_bool(k, v); }},
      COSKEL_NUM("k_nn", run.k_nn, int),
      COSKEL_NUM("bbox_margin", run.bbox_margin, double),
      COSKEL_NUM("threads", run.threads, int),
      Key{"seed", [](const RunSettings& s) { return std::to_string(s.run.seed); },
          [](RunSettings& s, const std::string& k, const std::string& v) { s.run.seed = parse_number<std::uint64_t>(k, v); }},
      COSKEL_NUM("skeleton.alpha", run.skeleton.alpha, double),
      Key{"skeleton.neighborhood", [](const RunSettings& s) { return std::to_string(s.run.skeleton.neighborhood.radius); },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            const int r = parse_number<int>(k, v);
            if (r < 0) throw ConfigError(k + " must be >= 0");
            s.run.skeleton.neighborhood = PixelNeighborhood(r);
          }},
      COSKEL_NUM("skeleton.epsilon", run.skeleton.epsilon, double),
      COSKEL_NUM("segmentation.gamma", run.segmentation.gamma, double),
      Key{"segmentation.beta", [](const RunSettings& s) { return s.run.segmentation.beta ? show(*s.run.segmentation.beta) : std::string("auto"); },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            if (v == "auto") s.run.segmentation.beta.reset();
            else s.run.segmentation.beta = parse_number<double>(k, v);
          }},
      COSKEL_NUM("segmentation.gmm_components", run.segmentation.gmm_components, int),
      COSKEL_NUM("segmentation.graphcut_rounds", run.segmentation.graphcut_rounds, int),
      Key{"segmentation.neighborhood", [](const RunSettings& s) { return std::to_string(s.run.segmentation.neighborhood.radius); },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            const int r = parse_number<int>(k, v);
            if (r < 0) throw ConfigError(k + " must be >= 0");
            s.run.segmentation.neighborhood = PixelNeighborhood(r);
          }},
      COSKEL_NUM("segmentation.epsilon", run.segmentation.epsilon, double),
      COSKEL_NUM("segmentation.density_floor", run.segmentation.density_floor, double),
      COSKEL_NUM("segmentation.covariance_ridge", run.segmentation.covariance_ridge, double),
      COSKEL_NUM("saliency.color_bins", run.saliency.color_bins_per_channel, int),
      COSKEL_NUM("saliency.spatial_weight", run.saliency.spatial_weight, double),
      COSKEL_NUM("flow.descriptor_cell", run.flow.descriptor_cell, int),
      COSKEL_NUM("flow.pyramid_levels", run.flow.pyramid_levels, int),
      COSKEL_NUM("flow.smoothness_weight", run.flow.smoothness_weight, double),
      COSKEL_NUM("flow.smoothness_truncation", run.flow.smoothness_truncation, int),
      COSKEL_NUM("flow.max_displacement", run.flow.max_displacement_per_level, int),
      COSKEL_NUM("flow.iterations", run.flow.iterations_per_level, int),
      COSKEL_NUM("flow.working_side", run.flow.working_side, int),
      Key{"flow.seed", [](const RunSettings& s) { return std::to_string(s.run.flow.seed); },
          [](RunSettings& s, const std::string& k, const std::string& v) { s.run.flow.seed = parse_number<std::uint64_t>(k, v); }},
      Key{"flow.provider", [](const RunSettings& s) { return s.flow_provider; },
          [](RunSettings& s, const std::string& k, const std::string& v) {
            if (v != "dense" && v != "identity") throw ConfigError("bad value for " + k + ": '" + v + "'");
            s.flow_provider = v;
          }},
      Key{"flow.cache", [](const RunSettings& s) { return s.flow_cache.string(); },
          [](RunSettings& s, const std::string&, const std::string& v) { s.flow_cache = v; }},
      Key{"saliency.dir", [](const RunSettings& s) { return s.saliency_dir.string(); },
          [](RunSettings& s, const std::string&, const std::string& v) { s.saliency_dir = v; }},
      Key{"data", [](const RunSettings& s) { return s.data.string(); },
          [](RunSettings& s, const std::string&, const std::string& v) { s.data = v; }},
      Key{"out", [](const RunSettings& s) { return s.out.string(); },
          [](RunSettings& s, const std::string&, const std::string& v) { s.out = v; }},
      Key{"dump_priors", [](const RunSettings& s) { return std::string(s.dump_priors ? "true" : "false"); },
          [](RunSettings& s, const std::string& k, const std::string& v) { s.dump_priors = parse_bool(k, v); }},
  };
  return table;
}

#undef COSKEL_NUM

}  // namespace

void apply_setting(RunSettings& s, const std::string& key, const std::string& value) {
  for (const Key& k : keys()) {
    if (key == k.name) {
      k.set(s, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown config key: " + key);
}

RunSettings parse_config(std::string_view text, RunSettings base) {
  std::istringstream is{std::string(text)};
  int line_no = 0;
  for (std::string line; std::getline(is, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    apply_setting(base, trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return base;
}

RunSettings load_config(const std::filesystem::path& path, RunSettings base) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

std::vector<std::pair<std::string, std::string>> config_entries(const RunSettings& s) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Key& k : keys()) out.emplace_back(k.name, k.get(s));
  return out;
}

std::uint64_t settings_hash(const RunSettings& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& [k, v] : config_entries(s)) {
    // Output and data locations do not change results.
    if (k == "out" || k == "data" || k == "threads" || k == "dump_priors") continue;
    for (unsigned char c : k + "=" + v + "\n") {
      h ^= c;
      h *= 1099511628211ull;
    }
  }
  return h;
}

}  // namespace coskel
