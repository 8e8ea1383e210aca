#include "coskel/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

namespace coskel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int thread_count(const RunConfig& cfg) { return cfg.threads > 0 ? cfg.threads : omp_get_max_threads(); }

IterateRecord make_record(int t, const ImageState& s, const EnergyTerms& e, double lambda) {
  IterateRecord r;
  r.t = t;
  r.terms = e;
  r.energy = total_energy(e, lambda);
  r.skeleton = s.skeleton;
  r.segmentation = s.segmentation;
  r.skeleton_pixels = s.skeleton.count();
  r.segment_pixels = s.segmentation.count();
  return r;
}

}  // namespace

SkeletonEnergyConfig effective_skeleton_config(const RunConfig& cfg) {
  SkeletonEnergyConfig k = cfg.skeleton;
  k.lambda = cfg.lambda;
  return k;
}

SegmentationConfig effective_segmentation_config(const RunConfig& cfg, std::size_t image) {
  SegmentationConfig o = cfg.segmentation;
  o.lambda = cfg.lambda;
  o.seed = cfg.seed * 0x9E3779B97F4A7C15ull + image;
  return o;
}

double total_energy(const EnergyTerms& e, double lambda) {
  return lambda * (e.prior_k + e.prior_o) + (e.interdependence_k + e.interdependence_o) +
         (e.smoothness_k + e.smoothness_o);
}

EnergyTerms state_energy(const Raster& img, const ImageState& s, const PriorPair& priors,
                         const SkeletonEnergyConfig& kcfg, const SegmentationConfig& ocfg) {
  EnergyTerms e;
  const BinaryMask R = reconstruct_shape(s.geometry, s.skeleton);
  e.prior_k = prior_term_k(s.skeleton, priors.coskeleton, kcfg);
  e.interdependence_k = interdependence_term_k(s.skeleton, s.geometry, s.segmentation, kcfg);
  e.smoothness_k = smoothness_term_k(extract_branches(s.skeleton));
  const AppearanceModels models = fit_appearance_models(img, s.skeleton, R, ocfg);
  e.prior_o = prior_term_o(s.segmentation, priors.cosegment, ocfg);
  e.interdependence_o = interdependence_term_o(img, s.segmentation, models, ocfg);
  e.smoothness_o = smoothness_term_o(img, s.segmentation, ocfg);
  return e;
}

BinaryMask grown_box_mask(const BinaryMask& m, double margin) {
  const BoundingBox b = bounding_box(m);
  BinaryMask out(m.width(), m.height());
  if (b.empty()) return out;
  const int gx = static_cast<int>(std::ceil(margin * (b.x1 - b.x0 + 1)));
  const int gy = static_cast<int>(std::ceil(margin * (b.y1 - b.y0 + 1)));
  const int x0 = std::max(0, b.x0 - gx);
  const int x1 = std::min(m.width() - 1, b.x1 + gx);
  const int y0 = std::max(0, b.y0 - gy);
  const int y1 = std::min(m.height() - 1, b.y1 + gy);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) out.set(x, y);
  return out;
}

BinaryMask skeleton_seeded_cut(const Raster& img, const BinaryMask& skeleton, double margin,
                               const SegmentationConfig& cfg) {
  require_same_shape(img, skeleton, "skeleton_seeded_cut");
  if (!skeleton.any()) throw DegenerateInput("skeleton_seeded_cut: empty skeleton");
  const BinaryMask box = grown_box_mask(skeleton, margin);
  HardLabels hard{skeleton, mask_complement(box)};
  BinaryMask outside = hard.force_background;
  if (!outside.any()) outside = mask_complement(dilate(skeleton, 2));
  AppearanceModels models = fit_appearance_models(img, skeleton, mask_complement(outside), cfg);
  return grabcut(img, std::move(models), nullptr, cfg, &hard).mask;
}

ImageState initial_state(const Raster& img, const ScalarMap& saliency) {
  require_same_shape(img, saliency, "initial_state saliency");
  ImageState s;
  try {
    s.segmentation = otsu_threshold(saliency);
  } catch (const DegenerateInput&) {
    s.segmentation = BinaryMask(img.width(), img.height(), true);
  }
  s.geometry = medial_axis(s.segmentation);
  s.skeleton = s.geometry.skeleton;
  return s;
}

NeighborStructure collection_neighbors(const RunConfig& cfg, const std::vector<ImageRecord>& images) {
  const std::size_t n = images.size();
  std::vector<Descriptor> desc(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(cfg))
  for (std::size_t i = 0; i < n; ++i) desc[i] = scene_descriptor(images[i].image);
  NeighborRequest req;
  req.mode = cfg.mode;
  req.k_clusters = cfg.k_clusters;
  req.k_nn = cfg.k_nn;
  req.seed = cfg.seed;
  for (const auto& r : images) {
    req.labels.push_back(r.category);
    req.is_train.push_back(r.is_train);
  }
  return build_neighbors(desc, req);
}

Pipeline::Pipeline(RunConfig cfg, std::shared_ptr<const FlowProvider> flows,
                   std::shared_ptr<const SaliencyProvider> saliency)
    : cfg_(std::move(cfg)), flows_(std::move(flows)), saliency_(std::move(saliency)) {
  if (cfg_.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (cfg_.lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (!flows_ || !saliency_) throw std::invalid_argument("pipeline needs flow and saliency providers");
}

std::vector<std::pair<std::size_t, std::size_t>> Pipeline::required_flows(const NeighborStructure& ns) const {
  std::set<std::pair<std::size_t, std::size_t>> need;
  for (std::size_t i = 0; i < ns.neighbors.size(); ++i) {
    const bool keyed = cfg_.use_key_priors && ns.cluster_of[i] >= 0;
    if (keyed) {
      const Cluster& c = ns.clusters[static_cast<std::size_t>(ns.cluster_of[i])];
      if (i != c.key) {
        need.insert({c.key, i});
        need.insert({i, c.key});
      }
    } else {
      for (std::size_t j : ns.neighbors[i]) need.insert({i, j});
    }
  }
  return {need.begin(), need.end()};
}

RunResult Pipeline::run(const std::vector<ImageRecord>& images) const {
  const std::size_t n = images.size();
  RunResult res;
  if (n == 0) return res;
  const int threads = thread_count(cfg_);
  const SkeletonEnergyConfig kcfg = effective_skeleton_config(cfg_);

  std::vector<bool> fixed(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    images[i].image.validate();
    fixed[i] = cfg_.mode == Scenario::supervised && images[i].is_train;
    if (fixed[i] && !images[i].skeleton_annotation)
      throw PreconditionError("supervised training image without skeleton annotation: " + images[i].stem);
  }

  res.neighbors = collection_neighbors(cfg_, images);
  const NeighborStructure& ns = res.neighbors;
  if (cfg_.use_key_priors)
    for (const Cluster& c : ns.clusters)
      res.key_alignment_counts.push_back(alignment_count(AlignmentMode::key, static_cast<long long>(c.members.size())));

  // Flow pre-pass.
  const auto pairs = required_flows(ns);
  std::vector<FlowField> computed(pairs.size());
  const auto t_flow = Clock::now();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    computed[k] = flows_->flow({images[a].stem, &images[a].image}, {images[b].stem, &images[b].image});
  }
  res.flow_seconds = seconds_since(t_flow);
  FlowTable table;
  for (std::size_t k = 0; k < pairs.size(); ++k) table.put(pairs[k].first, pairs[k].second, std::move(computed[k]));
  res.flow_count = pairs.size();

  // Priors for every image from a snapshot of all masks.
  auto build_priors = [&](const std::vector<BinaryMask>& K, const std::vector<BinaryMask>& O,
                          const std::vector<bool>& wanted) {
    const auto t0 = Clock::now();
    std::vector<PriorPair> out(n);
    std::vector<PriorPair> key(ns.clusters.size());
    if (cfg_.use_key_priors) {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
      for (std::size_t c = 0; c < ns.clusters.size(); ++c) {
        const Cluster& cl = ns.clusters[c];
        if (std::none_of(cl.members.begin(), cl.members.end(), [&](std::size_t m) { return wanted[m]; })) continue;
        key[c] = key_priors(cl.members, cl.key, K, O, table);
      }
    }
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t i = 0; i < n; ++i) {
      if (!wanted[i]) continue;
      const int c = ns.cluster_of[i];
      if (cfg_.use_key_priors && c >= 0) {
        const Cluster& cl = ns.clusters[static_cast<std::size_t>(c)];
        out[i] = i == cl.key ? key[static_cast<std::size_t>(c)]
                             : propagate_key_prior(key[static_cast<std::size_t>(c)], table.get(i, cl.key));
      } else {
        out[i] = {coskeleton_prior(i, K, ns.neighbors[i], table), cosegment_prior(i, O, ns.neighbors[i], table)};
      }
    }
    res.fusion_seconds += seconds_since(t0);
    return out;
  };

  // Initialization.
  std::vector<ImageState> state(n);
  std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t i = 0; i < n; ++i) {
    try {
      const Raster& img = images[i].image;
      if (fixed[i]) {
        ImageState s;
        s.skeleton = *images[i].skeleton_annotation;
        require_same_shape(img, s.skeleton, "skeleton annotation");
        s.segmentation = skeleton_seeded_cut(img, s.skeleton, cfg_.bbox_margin, effective_segmentation_config(cfg_, i));
        state[i] = std::move(s);
      } else {
        state[i] = initial_state(img, saliency_->saliency(images[i].stem, img));
      }
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!errors[i].empty()) throw DegenerateInput("initialization failed for " + images[i].stem + ": " + errors[i]);

  auto snapshot = [&] {
    std::pair<std::vector<BinaryMask>, std::vector<BinaryMask>> s;
    for (const ImageState& st : state) {
      s.first.push_back(st.skeleton);
      s.second.push_back(st.segmentation);
    }
    return s;
  };

  res.traces.assign(n, {});
  std::vector<bool> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = !fixed[i];
  {
    auto [K, O] = snapshot();
    const std::vector<PriorPair> priors = build_priors(K, O, active);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t i = 0; i < n; ++i) {
      ImageTrace& tr = res.traces[i];
      if (fixed[i]) {
        tr.fixed = true;
        IterateRecord r;
        r.accepted = true;
        r.skeleton = state[i].skeleton;
        r.segmentation = state[i].segmentation;
        r.skeleton_pixels = r.skeleton.count();
        r.segment_pixels = r.segmentation.count();
        tr.iterates.push_back(std::move(r));
        continue;
      }
      try {
        const EnergyTerms e = state_energy(images[i].image, state[i], priors[i], kcfg,
                                           effective_segmentation_config(cfg_, i));
        IterateRecord r = make_record(0, state[i], e, cfg_.lambda);
        r.accepted = true;
        if (cfg_.keep_priors) r.priors = priors[i];
        tr.iterates.push_back(std::move(r));
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      if (!errors[i].empty()) throw DegenerateInput("initial energy failed for " + images[i].stem + ": " + errors[i]);
  }

  std::vector<std::size_t> violations(n, 0);
  for (int t = 1; t <= cfg_.max_iterations; ++t) {
    if (std::none_of(active.begin(), active.end(), [](bool a) { return a; })) break;
    res.iterations_run = t;
    auto [K, O] = snapshot();
    const std::vector<PriorPair> priors = build_priors(K, O, active);
    std::vector<ImageState> next(n);
    std::vector<bool> stop(n, false);
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      ImageTrace& tr = res.traces[i];
      const Raster& img = images[i].image;
      const SegmentationConfig ocfg = effective_segmentation_config(cfg_, i);
      try {
        const ImageState& prev = state[i];
        AppearanceModels models;
        if (t == 1 || !cfg_.interdependence) {
          models = fit_appearance_models_from_priors(img, priors[i].coskeleton, priors[i].cosegment, prev.skeleton,
                                                     mask_complement(prev.segmentation), ocfg);
        } else {
          models = fit_appearance_models(img, prev.skeleton, reconstruct_shape(prev.geometry, prev.skeleton), ocfg);
        }
        ImageState s;
        s.segmentation = grabcut(img, std::move(models), &priors[i].cosegment, ocfg).mask;
        if (!s.segmentation.any()) {
          tr.flagged = true;
          tr.note = "empty segmentation at t=" + std::to_string(t);
          stop[i] = true;
          continue;
        }
        s.geometry = medial_axis(s.segmentation, Exec::serial);
        s.skeleton = prune_skeleton(s.geometry, s.segmentation, &priors[i].coskeleton, kcfg).skeleton;
        if (!s.skeleton.subset_of(s.geometry.skeleton)) ++violations[i];
        const EnergyTerms e = state_energy(img, s, priors[i], kcfg, ocfg);
        IterateRecord r = make_record(t, s, e, cfg_.lambda);
        if (cfg_.keep_priors) r.priors = priors[i];
        const double prev_energy = tr.iterates[static_cast<std::size_t>(tr.best)].energy;
        r.accepted = r.energy <= prev_energy;
        tr.iterates.push_back(std::move(r));
        if (tr.iterates.back().accepted) {
          tr.best = static_cast<int>(tr.iterates.size()) - 1;
          next[i] = std::move(s);
        } else {
          stop[i] = true;
        }
      } catch (const std::exception& ex) {
        tr.flagged = true;
        tr.note = std::string("t=") + std::to_string(t) + ": " + ex.what();
        stop[i] = true;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      if (stop[i]) active[i] = false;
      else state[i] = std::move(next[i]);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    res.constraint_violations += violations[i];
    res.skeletons.push_back(state[i].skeleton);
    res.segmentations.push_back(state[i].segmentation);
  }
  return res;
}

}  // namespace coskel
