#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "coskel/coseg.hpp"
#include "coskel/coskel.hpp"
#include "coskel/eval.hpp"
#include "coskel/image_io.hpp"
#include "coskel/pipeline.hpp"
#include "coskel/synthetic.hpp"
#include "shapes.hpp"

using namespace coskel;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
  bool skipped = false;
  bool gating = true;
};

std::size_t g_violations = 0;
std::size_t g_runs = 0;

// Counts K ⊆ ma(O) failures over every iterate of a run, independently of the pipeline's own count.
RunResult checked_run(const Pipeline& p, const std::vector<ImageRecord>& images) {
  RunResult r = p.run(images);
  ++g_runs;
  g_violations += r.constraint_violations;
  for (const ImageTrace& tr : r.traces)
    for (const IterateRecord& it : tr.iterates)
      if (it.t >= 1 && !it.skeleton.subset_of(medial_axis(it.segmentation).skeleton)) ++g_violations;
  return r;
}

std::vector<ImageRecord> records_of(std::vector<SyntheticImage>& imgs) {
  std::vector<ImageRecord> out;
  for (SyntheticImage& si : imgs) {
    ImageRecord r;
    r.stem = si.stem;
    r.category = si.category;
    r.image = si.image;
    r.skeleton_annotation = si.skeleton;
    out.push_back(std::move(r));
  }
  return out;
}

Pipeline make_pipeline(const RunConfig& cfg, bool dense) {
  std::shared_ptr<const FlowProvider> flows;
  if (dense) flows = std::make_shared<DenseFlowProvider>(cfg.flow);
  else flows = std::make_shared<IdentityFlowProvider>();
  return Pipeline(cfg, flows, std::make_shared<BuiltinSaliency>(cfg.saliency));
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome benchmark_dataset() {
  Outcome o;
  o.gating = false;
  const char* root = std::getenv("COSKEL_WHSYMMAX");
  if (!root || !std::filesystem::is_directory(root)) {
    o.skipped = true;
    o.detail = "set COSKEL_WHSYMMAX to a dataset root to run";
    return o;
  }
  const IngestResult ing = ingest_dataset(root);
  std::vector<ImageRecord> images;
  std::vector<BinaryMask> gt;
  for (const DatasetEntry& e : ing.entries) {
    if (!e.gt_skeleton) continue;
    ImageRecord r;
    r.stem = e.stem;
    r.category = e.category;
    r.image = load_raster(e.image_path);
    images.push_back(std::move(r));
    gt.push_back(*e.gt_skeleton);
  }
  if (images.empty()) {
    o.detail = "no annotated images";
    return o;
  }
  RunConfig cfg;
  cfg.mode = Scenario::weakly_supervised;
  const RunResult full = checked_run(make_pipeline(cfg, true), images);
  cfg.interdependence = false;
  const RunResult ablated = checked_run(make_pipeline(cfg, true), images);
  auto mean_f3 = [&](const std::function<const BinaryMask&(std::size_t)>& pick) {
    double s = 0.0;
    for (std::size_t i = 0; i < images.size(); ++i) s += f_measure_at_d(pick(i), gt[i], 3);
    return s / static_cast<double>(images.size());
  };
  const double ours = mean_f3([&](std::size_t i) -> const BinaryMask& { return full.skeletons[i]; });
  const double without = mean_f3([&](std::size_t i) -> const BinaryMask& { return ablated.skeletons[i]; });
  const double init = mean_f3([&](std::size_t i) -> const BinaryMask& { return full.traces[i].iterates[0].skeleton; });
  o.pass = ours > without && without > init && ours - init >= 0.10;
  o.detail = fmt("F3 ours %.3f, without interdependence %.3f, initialization %.3f", ours, without, init);
  return o;
}

double independent_energy(const Raster& img, const UnaryCosts& u, unsigned labels, double gamma, double beta) {
  const int w = img.width();
  auto lab = [&](int x, int y) { return (labels >> (y * w + x)) & 1u; };
  double e = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < w; ++x) {
      e += u(x, y)[lab(x, y)];
      if (x + 1 < w && lab(x, y) != lab(x + 1, y)) e += gamma * std::exp(-beta * squared_distance(img(x, y), img(x + 1, y)));
      if (y + 1 < img.height() && lab(x, y) != lab(x, y + 1))
        e += gamma * std::exp(-beta * squared_distance(img(x, y), img(x, y + 1)));
    }
  return e;
}

Outcome mincut_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0), cost(-5.0, 10.0);
  int exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int w = trial < 100 ? 4 : 1 + static_cast<int>(rng() % 4);
    const int h = trial < 100 ? 3 : 1 + static_cast<int>(rng() % 3);
    Raster img(w, h);
    for (auto& c : img.values()) c = {u01(rng), u01(rng), u01(rng)};
    UnaryCosts u(w, h);
    for (auto& v : u.values()) v = {cost(rng), cost(rng)};
    SegmentationConfig cfg;
    cfg.gamma = std::array{0.0, 5.0, 50.0}[static_cast<std::size_t>(trial % 3)];
    const double beta = contrast_beta(img);
    double best = std::numeric_limits<double>::infinity();
    for (unsigned l = 0; l < (1u << (w * h)); ++l) best = std::min(best, independent_energy(img, u, l, cfg.gamma, beta));
    const BinaryMask m = segment(img, u, cfg);
    unsigned bits = 0;
    for (int i = 0; i < w * h; ++i)
      if (m[static_cast<std::size_t>(i)]) bits |= 1u << i;
    exact += independent_energy(img, u, bits, cfg.gamma, beta) == best;
  }
  const double secs = since(t0);
  return {exact == 200 && secs < 10.0, fmt("%.0f/200 instances at the exhaustive minimum, %.2f s", exact, secs)};
}

std::string mask_key(const BinaryMask& m) {
  std::string s(m.size(), '0');
  for (std::size_t i = 0; i < m.size(); ++i) s[i] = m[i] ? '1' : '0';
  return s;
}

std::vector<BinaryMask> branchy_shapes(std::size_t want) {
  std::vector<BinaryMask> out;
  for (const BinaryMask& m : coskel::testing::shape_suite())
    if (extract_branches(medial_axis(m).skeleton).branches.size() <= 8) out.push_back(m);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> pos(12.0, 52.0), half(3.0, 7.0);
  while (out.size() < want) {
    const int segs = 1 + static_cast<int>(rng() % 3);
    std::vector<Segment> s;
    double x = pos(rng), y = pos(rng);
    for (int k = 0; k < segs; ++k) {
      const double nx = pos(rng), ny = pos(rng);
      s.push_back({x, y, nx, ny});
      if (rng() % 2) x = nx, y = ny;
    }
    const BinaryMask m = capsule_union(64, 64, s, half(rng));
    if (count_components(m) != 1 || count_components(mask_complement(m)) != 1) continue;
    if (extract_branches(medial_axis(m).skeleton).branches.size() > 8) continue;
    out.push_back(m);
  }
  out.resize(want);
  return out;
}

Outcome pruning_oracle() {
  const auto t0 = Clock::now();
  const std::vector<BinaryMask> shapes = branchy_shapes(50);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int ok = 0;
  std::size_t states = 0;
  for (std::size_t s = 0; s < shapes.size(); ++s) {
    const BinaryMask& O = shapes[s];
    const SkeletonGeometry geom = medial_axis(O);
    ScalarMap prior(O.width(), O.height());
    for (auto& v : prior.values()) v = u01(rng);
    SkeletonEnergyConfig cfg;
    cfg.lambda = s % 2 ? 0.1 : 1.0;
    const ScalarMap* pr = s % 3 ? &prior : nullptr;
    auto energy = [&](const BinaryMask& K) { return skeleton_energy(K, geom, O, pr, cfg).total(cfg.lambda); };

    std::map<std::string, double> reachable;
    std::vector<BinaryMask> stack{geom.skeleton};
    reachable[mask_key(geom.skeleton)] = energy(geom.skeleton);
    while (!stack.empty()) {
      const BinaryMask k = stack.back();
      stack.pop_back();
      const SkeletonGraph g = extract_branches(k);
      for (std::size_t b = 0; b < g.branches.size(); ++b) {
        if (!g.branches[b].terminal) continue;
        const BinaryMask next = remove_branch(k, g, b);
        if (reachable.emplace(mask_key(next), 0.0).second) {
          reachable[mask_key(next)] = energy(next);
          stack.push_back(next);
        }
      }
    }
    states += reachable.size();

    const PruneResult r = prune_skeleton(geom, O, pr, cfg);
    const auto found = reachable.find(mask_key(r.skeleton));
    bool good = found != reachable.end();
    const double final_energy = energy(r.skeleton);
    good = good && std::abs(found->second - final_energy) <= 1e-12 * std::max(1.0, std::abs(final_energy));
    good = good && std::abs(r.energy.total(cfg.lambda) - final_energy) <= 1e-9 * std::max(1.0, std::abs(final_energy));
    good = good && final_energy <= reachable.at(mask_key(geom.skeleton));
    for (std::size_t k = 1; k < r.energy_trace.size(); ++k) good = good && r.energy_trace[k] < r.energy_trace[k - 1];
    const SkeletonGraph g = extract_branches(r.skeleton);
    for (std::size_t b = 0; b < g.branches.size(); ++b)
      if (g.branches[b].terminal) good = good && energy(remove_branch(r.skeleton, g, b)) >= final_energy - 1e-12;
    ok += good;
  }
  const double secs = since(t0);
  return {ok == 50 && secs < 30.0,
          fmt("%.0f/50 shapes 1-local-optimal with energy-decreasing removals (%.0f reachable states), %.2f s", ok,
              static_cast<double>(states), secs)};
}

Outcome geometry() {
  const auto t0 = Clock::now();
  const auto suite = coskel::testing::shape_suite();
  double worst = 1.0;
  std::size_t subset_failures = 0;
  std::mt19937_64 rng(5);
  for (std::size_t s = 0; s < suite.size(); ++s) {
    const SkeletonGeometry geom = medial_axis(suite[s]);
    worst = std::min(worst, mask_iou(reconstruct_shape(geom, geom.skeleton), suite[s]));
    const auto axis = geom.skeleton.pixels();
    for (int k = 0; k < 50; ++k) {
      std::bernoulli_distribution keep(0.05 + 0.9 * (k / 49.0));
      BinaryMask kept(suite[s].width(), suite[s].height());
      for (const Pixel& p : axis)
        if (keep(rng)) kept.set(p);
      subset_failures += !reconstruct_shape(geom, kept).subset_of(suite[s]);
    }
  }
  return {suite.size() == 20 && worst >= 0.95 && subset_failures == 0,
          fmt("minimum reconstruction IoU %.4f over 20 shapes, %.0f/1000 kept-subsets outside the shape, %.2f s", worst,
              static_cast<double>(subset_failures), since(t0))};
}

Outcome energy_monotonicity() {
  const auto t0 = Clock::now();
  SyntheticConfig sc;
  sc.categories = 2;
  sc.per_category = 10;
  sc.seed = 42;
  auto imgs = synthetic_collection(sc);
  const auto recs = records_of(imgs);
  RunConfig cfg;
  cfg.mode = Scenario::weakly_supervised;
  const RunResult res = checked_run(make_pipeline(cfg, true), recs);
  std::size_t rising = 0;
  double j0 = 0.0, j1 = 0.0, f0 = 0.0, f1 = 0.0;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const ImageTrace& tr = res.traces[i];
    double last = tr.iterates[0].energy;
    for (std::size_t k = 1; k < tr.iterates.size(); ++k) {
      if (!tr.iterates[k].accepted) continue;
      rising += tr.iterates[k].energy > last;
      last = tr.iterates[k].energy;
    }
    j0 += jaccard(tr.iterates[0].segmentation, imgs[i].segmentation);
    f0 += f_measure_at_d(tr.iterates[0].skeleton, imgs[i].skeleton, 2);
    j1 += jaccard(res.segmentations[i], imgs[i].segmentation);
    f1 += f_measure_at_d(res.skeletons[i], imgs[i].skeleton, 2);
  }
  const double n = static_cast<double>(recs.size());
  const double secs = since(t0);
  Outcome o;
  o.pass = rising == 0 && j1 >= j0 && f1 >= f0 && secs < 300.0;
  o.detail = fmt("rising accepted steps %.0f; Jaccard %.3f -> %.3f", static_cast<double>(rising), j0 / n, j1 / n) +
             fmt("; F2 %.3f -> %.3f; %.1f s", f0 / n, f1 / n, secs);
  return o;
}

Outcome key_prior_consistency() {
  bool identical = true;
  // Identical masks across a cluster: ten copies of one image.
  SyntheticConfig sc;
  sc.categories = 1;
  sc.per_category = 1;
  auto one = synthetic_collection(sc);
  std::vector<ImageRecord> copies;
  for (int k = 0; k < 10; ++k) {
    ImageRecord r;
    r.stem = "copy_" + std::to_string(k);
    r.category = "copy";
    r.image = one[0].image;
    copies.push_back(std::move(r));
  }
  sc.categories = 2;
  sc.per_category = 6;
  auto mixed = synthetic_collection(sc);
  for (const auto& recs : {copies, records_of(mixed)}) {
    RunConfig cfg;
    cfg.mode = Scenario::weakly_supervised;
    cfg.max_iterations = 3;
    const RunResult pairwise = checked_run(make_pipeline(cfg, false), recs);
    cfg.use_key_priors = true;
    const RunResult keyed = checked_run(make_pipeline(cfg, false), recs);
    identical = identical && keyed.skeletons == pairwise.skeletons && keyed.segmentations == pairwise.segmentations;
  }
  const bool counts = alignment_count(AlignmentMode::pairwise, 10) == 90 && alignment_count(AlignmentMode::key, 10) == 18 &&
                      alignment_count(AlignmentMode::pairwise, 20) == 380 && alignment_count(AlignmentMode::key, 20) == 38;

  sc.categories = 1;
  sc.per_category = 20;
  sc.seed = 8;
  auto twenty = synthetic_collection(sc);
  const auto recs = records_of(twenty);
  RunConfig cfg;
  cfg.mode = Scenario::weakly_supervised;
  cfg.k_clusters = 1;
  cfg.max_iterations = 1;
  const RunResult pairwise = checked_run(make_pipeline(cfg, true), recs);
  cfg.use_key_priors = true;
  const RunResult keyed = checked_run(make_pipeline(cfg, true), recs);
  const double tp = pairwise.flow_seconds + pairwise.fusion_seconds;
  const double tk = keyed.flow_seconds + keyed.fusion_seconds;
  const bool flows = pairwise.flow_count == 380 && keyed.flow_count == 38;
  Outcome o;
  o.pass = identical && counts && flows && tk <= 0.5 * tp;
  o.detail = std::string(identical ? "bit-identical outputs" : "outputs differ") + (counts ? ", counts 90/18 and 380/38" : ", wrong counts") +
             fmt("; n=20 prior generation %.2f s key vs %.2f s pairwise (ratio %.3f)", tk, tp, tk / tp);
  return o;
}

double brute_fraction(const BinaryMask& from, const BinaryMask& to, double d) {
  const auto a = from.pixels(), b = to.pixels();
  if (a.empty()) return 0.0;
  std::size_t hit = 0;
  for (const Pixel& p : a)
    for (const Pixel& q : b)
      if ((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) <= d * d) {
        ++hit;
        break;
      }
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

Outcome metrics() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> side(1, 32);
  std::uniform_real_distribution<double> dens(0.0, 0.25);
  double worst = 0.0;
  std::size_t non_monotone = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int w = side(rng), h = side(rng);
    const BinaryMask a = coskel::testing::random_mask(w, h, dens(rng), rng);
    const BinaryMask b = coskel::testing::random_mask(w, h, dens(rng), rng);
    double prev = -1.0;
    for (int d = 0; d <= 8; ++d) {
      double expect = 1.0;
      if (a.any() || b.any()) {
        const double p = brute_fraction(a, b, d), r = brute_fraction(b, a, d);
        expect = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
      }
      const double f = f_measure_at_d(a, b, d);
      worst = std::max(worst, std::abs(f - expect));
      non_monotone += f < prev;
      prev = f;
    }
  }
  const int tol = alpha_tolerance(640, 480);
  return {worst <= 1e-12 && non_monotone == 0 && tol == 6,
          fmt("max deviation %.2e over 100 pairs, %.0f monotonicity breaks, 640x480 tolerance %.0f", worst,
              static_cast<double>(non_monotone), tol)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "benchmark ordering on an external dataset", benchmark_dataset},
      {2, "min-cut oracle equivalence", mincut_oracle},
      {3, "pruning oracle equivalence", pruning_oracle},
      {4, "medial axis reconstruction geometry", geometry},
      {5, "energy monotonicity on a synthetic collection", energy_monotonicity},
      {6, "key-prior consistency and speed", key_prior_consistency},
      {7, "metric correctness", metrics},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.detail = std::string("exception: ") + e.what();
    }
    const char* tag = o.skipped ? "SKIP" : o.pass ? "PASS" : o.gating ? "FAIL" : "FAIL (non-gating)";
    std::printf("[%s] %d. %s: %s\n", tag, c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.skipped && !o.pass && o.gating) ++failures;
  }
  const bool safe = g_violations == 0;
  std::printf("[%s] 8. constraint safety: %zu skeleton-outside-medial-axis events over %zu pipeline runs\n",
              safe ? "PASS" : "FAIL", g_violations, g_runs);
  failures += !safe;
  return failures == 0 ? 0 : 1;
}
