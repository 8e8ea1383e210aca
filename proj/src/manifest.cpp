#include "coskel/manifest.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace coskel {

ImageOutputs output_paths(const std::string& stem, std::size_t iterates, bool with_priors) {
  ImageOutputs o;
  o.segmentation = std::filesystem::path("segmentations") / (stem + ".png");
  o.skeleton = std::filesystem::path("skeletons") / (stem + ".png");
  o.overlay = std::filesystem::path("overlays") / (stem + ".png");
  if (with_priors) {
    for (std::size_t t = 0; t < iterates; ++t) {
      const std::string tag = stem + "_t" + std::to_string(t);
      o.priors.push_back(std::filesystem::path("priors") / (tag + "_coskeleton.png"));
      o.priors.push_back(std::filesystem::path("priors") / (tag + "_cosegment.png"));
    }
  }
  return o;
}

std::string manifest_json(const RunSettings& settings, const std::vector<ImageRecord>& images, const RunResult& result,
                          bool with_priors) {
  using nlohmann::json;
  json m;
  json cfg = json::object();
  for (const auto& [k, v] : config_entries(settings)) cfg[k] = v;
  m["config"] = cfg;
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(settings_hash(settings)));
  m["config_hash"] = hex;
  m["seed"] = settings.run.seed;
  m["mode"] = to_string(settings.run.mode);
  m["use_key_priors"] = settings.run.use_key_priors;

  const NeighborStructure& ns = result.neighbors;
  auto stems_of = [&](const std::vector<std::size_t>& idx) {
    json a = json::array();
    for (std::size_t i : idx) a.push_back(images[i].stem);
    return a;
  };
  json clusters = json::array();
  for (std::size_t c = 0; c < ns.clusters.size(); ++c) {
    json jc;
    jc["members"] = stems_of(ns.clusters[c].members);
    jc["key"] = images[ns.clusters[c].key].stem;
    if (c < result.key_alignment_counts.size()) jc["alignment_count"] = result.key_alignment_counts[c];
    clusters.push_back(jc);
  }
  m["clusters"] = clusters;
  m["flow_count"] = result.flow_count;
  m["iterations_run"] = result.iterations_run;
  m["constraint_violations"] = result.constraint_violations;

  json imgs = json::array();
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageTrace& tr = result.traces[i];
    json ji;
    ji["stem"] = images[i].stem;
    ji["category"] = images[i].category;
    ji["is_train"] = images[i].is_train;
    ji["neighbors"] = i < ns.neighbors.size() ? stems_of(ns.neighbors[i]) : json::array();
    ji["fixed"] = tr.fixed;
    ji["flagged"] = tr.flagged;
    if (!tr.note.empty()) ji["note"] = tr.note;
    ji["best"] = tr.best;
    json states = json::array();
    for (const IterateRecord& r : tr.iterates) {
      json s;
      s["t"] = r.t;
      s["energy"] = r.energy;
      s["accepted"] = r.accepted;
      s["terms"] = {{"prior_k", r.terms.prior_k},
                    {"interdependence_k", r.terms.interdependence_k},
                    {"smoothness_k", r.terms.smoothness_k},
                    {"prior_o", r.terms.prior_o},
                    {"interdependence_o", r.terms.interdependence_o},
                    {"smoothness_o", r.terms.smoothness_o}};
      s["skeleton_pixels"] = r.skeleton_pixels;
      s["segment_pixels"] = r.segment_pixels;
      states.push_back(s);
    }
    ji["states"] = states;
    const ImageOutputs o = output_paths(images[i].stem, tr.iterates.size(), with_priors);
    json jo = {{"segmentation", o.segmentation.generic_string()},
               {"skeleton", o.skeleton.generic_string()},
               {"overlay", o.overlay.generic_string()}};
    if (with_priors) {
      json p = json::array();
      for (const auto& q : o.priors) p.push_back(q.generic_string());
      jo["priors"] = p;
    }
    ji["outputs"] = jo;
    imgs.push_back(ji);
  }
  m["images"] = imgs;
  return m.dump(2) + "\n";
}

}  // namespace coskel
