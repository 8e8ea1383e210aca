#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coskel/config.hpp"
#include "coskel/eval.hpp"
#include "coskel/image_io.hpp"
#include "coskel/manifest.hpp"
#include "coskel/overlay.hpp"
#include "coskel/pipeline.hpp"

namespace fs = std::filesystem;
using namespace coskel;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kInternal = 3;

// Thrown for bad input data once the command line itself parsed.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  fs::path config;
  std::optional<std::string> mode;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<double> lambda;
  std::optional<int> max_iterations;
  std::optional<int> threads;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> flow_provider;
  std::optional<std::string> flow_cache;
  std::optional<std::string> saliency_dir;
  bool use_key_priors = false;
  bool dump_priors = false;
  bool print_config = false;
  std::vector<std::string> set;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config, "flat key = value config file");
  cmd->add_option("--mode", f.mode, "weakly_supervised | supervised | unsupervised");
  cmd->add_option("--data", f.data, "dataset root");
  cmd->add_option("--lambda", f.lambda, "prior weight");
  cmd->add_option("--max-iterations", f.max_iterations, "alternations after initialization");
  cmd->add_option("--threads", f.threads, "worker threads, 0 = all logical cores");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--flow-provider", f.flow_provider, "dense | identity");
  cmd->add_option("--flow-cache", f.flow_cache, "directory of cached flows");
  cmd->add_option("--saliency-dir", f.saliency_dir, "precomputed saliency maps <stem>.png");
  cmd->add_flag("--use-key-priors", f.use_key_priors, "fuse priors once per cluster at its key image");
  cmd->add_option("--set", f.set, "extra key=value override, repeatable");
  cmd->add_flag("--print-config", f.print_config, "print the effective configuration and exit");
}

RunSettings resolve_settings(const RunFlags& f) {
  RunSettings s;
  if (!f.config.empty()) s = load_config(f.config, s);
  if (f.mode) apply_setting(s, "mode", *f.mode);
  if (f.data) apply_setting(s, "data", *f.data);
  if (f.out) apply_setting(s, "out", *f.out);
  if (f.lambda) s.run.lambda = *f.lambda;
  if (f.max_iterations) apply_setting(s, "max_iterations", std::to_string(*f.max_iterations));
  if (f.threads) s.run.threads = *f.threads;
  if (f.seed) s.run.seed = *f.seed;
  if (f.flow_provider) apply_setting(s, "flow.provider", *f.flow_provider);
  if (f.flow_cache) apply_setting(s, "flow.cache", *f.flow_cache);
  if (f.saliency_dir) apply_setting(s, "saliency.dir", *f.saliency_dir);
  if (f.use_key_priors) s.run.use_key_priors = true;
  if (f.dump_priors) s.dump_priors = true;
  for (const std::string& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(s, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (s.run.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  return s;
}

std::shared_ptr<const FlowProvider> make_flow_provider(const RunSettings& s) {
  if (s.flow_provider == "identity") return std::make_shared<IdentityFlowProvider>();
  if (!s.flow_cache.empty()) return std::make_shared<CachedFlowProvider>(s.flow_cache, s.run.flow);
  return std::make_shared<DenseFlowProvider>(s.run.flow);
}

std::shared_ptr<const SaliencyProvider> make_saliency_provider(const RunSettings& s) {
  if (!s.saliency_dir.empty()) return std::make_shared<FileSaliency>(s.saliency_dir);
  return std::make_shared<BuiltinSaliency>(s.run.saliency);
}

// Loads every ingestible image; rejected entries are reported and counted.
std::vector<ImageRecord> load_records(const RunSettings& s, std::size_t& rejected) {
  if (s.data.empty()) throw ConfigError("no dataset given (--data or data = ...)");
  const IngestResult ing = ingest_dataset(s.data);
  for (const std::string& r : ing.rejected) std::cerr << "rejected: " << r << '\n';
  rejected = ing.rejected.size();
  if (ing.entries.empty()) throw DataError("no ingestible images under " + s.data.string());
  std::vector<ImageRecord> out;
  for (const DatasetEntry& e : ing.entries) {
    ImageRecord r;
    r.stem = e.stem;
    r.category = e.category;
    r.image = load_raster(e.image_path);
    r.is_train = e.split == Split::train;
    if (r.is_train && s.run.mode == Scenario::supervised) {
      if (e.gt_skeleton) r.skeleton_annotation = e.gt_skeleton;
      else if (e.gt_segmentation) r.skeleton_annotation = build_skeleton_groundtruth(*e.gt_segmentation, s.run.skeleton);
      else throw DataError("training image without skeleton or mask annotation: " + e.stem);
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os || !(os << text)) throw IoError("cannot write " + p.string());
}

int cmd_run(const RunFlags& f) {
  RunSettings s = resolve_settings(f);
  if (f.print_config) {
    for (const auto& [k, v] : config_entries(s)) std::cout << k << " = " << v << '\n';
    return kOk;
  }
  if (s.out.empty()) throw ConfigError("no output directory given (--out or out = ...)");
  std::size_t rejected = 0;
  const std::vector<ImageRecord> images = load_records(s, rejected);
  s.run.keep_priors = s.dump_priors;

  const Pipeline pipe(s.run, make_flow_provider(s), make_saliency_provider(s));
  const RunResult res = pipe.run(images);

  for (const char* d : {"segmentations", "skeletons", "overlays"}) fs::create_directories(s.out / d);
  if (s.dump_priors) fs::create_directories(s.out / "priors");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const ImageTrace& tr = res.traces[i];
    const ImageOutputs o = output_paths(images[i].stem, tr.iterates.size(), s.dump_priors);
    save_mask(s.out / o.segmentation, res.segmentations[i]);
    save_mask(s.out / o.skeleton, res.skeletons[i]);
    save_raster(s.out / o.overlay, render_overlay(images[i].image, res.segmentations[i], res.skeletons[i]));
    for (std::size_t t = 0; t < tr.iterates.size(); ++t) {
      const auto& pr = tr.iterates[t].priors;
      if (!s.dump_priors) break;
      const ScalarMap empty(images[i].image.width(), images[i].image.height());
      save_scalar_map(s.out / o.priors[2 * t], pr ? pr->coskeleton : empty);
      save_scalar_map(s.out / o.priors[2 * t + 1], pr ? pr->cosegment : empty);
    }
    if (tr.flagged) std::cerr << "flagged: " << images[i].stem << ": " << tr.note << '\n';
  }
  write_text(s.out / "manifest.json", manifest_json(s, images, res, s.dump_priors));
  std::fprintf(stderr, "%zu images, %d iterations, %zu flows (%.2f s), prior fusion %.2f s, %zu constraint violations\n",
               images.size(), res.iterations_run, res.flow_count, res.flow_seconds, res.fusion_seconds,
               res.constraint_violations);
  if (res.constraint_violations > 0) return kInternal;
  return rejected > 0 ? kData : kOk;
}

struct EvalFlags {
  fs::path pred;
  fs::path gt;
  fs::path out;
};

// Skeletons and segmentations of a run output or dataset root.
std::pair<std::map<std::string, IndexedFile>, std::map<std::string, IndexedFile>> mask_dirs(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("not a directory: " + root.string());
  auto seg = index_images(root / "segmentations");
  if (seg.empty()) seg = index_images(root / "masks");
  return {index_images(root / "skeletons"), std::move(seg)};
}

int cmd_eval(const EvalFlags& f) {
  const auto [pred_sk, pred_seg] = mask_dirs(f.pred);
  const auto [gt_sk, gt_seg] = mask_dirs(f.gt);
  std::vector<MetricRow> rows;
  for (const auto& [stem, g] : gt_sk)
    if (!pred_sk.count(stem)) std::cerr << "missing prediction: " << stem << '\n';
  for (const auto& [stem, p] : pred_sk)
    if (!gt_sk.count(stem)) std::cerr << "missing ground truth: " << stem << '\n';
  std::size_t bad = 0;
  for (const auto& [stem, g] : gt_sk) {
    const auto p = pred_sk.find(stem);
    if (p == pred_sk.end()) continue;
    try {
      const BinaryMask gk = load_mask(g.path);
      const BinaryMask pk = load_mask(p->second.path);
      std::optional<BinaryMask> go, po;
      if (const auto it = gt_seg.find(stem); it != gt_seg.end()) go = load_mask(it->second.path);
      if (const auto it = pred_seg.find(stem); it != pred_seg.end()) po = load_mask(it->second.path);
      rows.push_back(evaluate_image(stem, g.category, pk, gk, po ? &*po : nullptr, go ? &*go : nullptr));
    } catch (const std::exception& e) {
      std::cerr << "skipped " << stem << ": " << e.what() << '\n';
      ++bad;
    }
  }
  if (rows.empty()) throw DataError("no stems shared by prediction and ground truth");
  std::stable_sort(rows.begin(), rows.end(),
                   [](const MetricRow& a, const MetricRow& b) { return a.category < b.category; });
  if (f.out.empty()) {
    write_metrics_csv(std::cout, rows);
  } else {
    std::ofstream os(f.out, std::ios::binary);
    if (!os) throw IoError("cannot write " + f.out.string());
    write_metrics_csv(os, rows);
  }
  return bad > 0 ? kData : kOk;
}

struct BuildGtFlags {
  fs::path data;
  fs::path out;
  double alpha = SkeletonEnergyConfig{}.alpha;
};

int cmd_build_gt(const BuildGtFlags& f) {
  const auto masks = index_images(f.data / "masks");
  if (masks.empty()) throw DataError("no masks under " + (f.data / "masks").string());
  const fs::path out = f.out.empty() ? f.data / "skeletons" : f.out;
  SkeletonEnergyConfig cfg;
  cfg.alpha = f.alpha;
  std::size_t bad = 0;
  for (const auto& [stem, m] : masks) {
    try {
      const fs::path dir = m.category.empty() ? out : out / m.category;
      fs::create_directories(dir);
      save_mask(dir / (stem + ".png"), build_skeleton_groundtruth(load_mask(m.path), cfg));
    } catch (const std::exception& e) {
      std::cerr << "skipped " << stem << ": " << e.what() << '\n';
      ++bad;
    }
  }
  return bad > 0 ? kData : kOk;
}

struct OverlayFlags {
  fs::path images;
  fs::path segmentations;
  fs::path skeletons;
  fs::path out;
};

int cmd_overlay(const OverlayFlags& f) {
  const auto imgs = index_images(f.images);
  if (imgs.empty()) throw DataError("no images under " + f.images.string());
  const auto seg = index_images(f.segmentations);
  const auto sk = index_images(f.skeletons);
  fs::create_directories(f.out);
  std::size_t bad = 0;
  for (const auto& [stem, im] : imgs) {
    const auto s = seg.find(stem);
    const auto k = sk.find(stem);
    if (s == seg.end() || k == sk.end()) {
      std::cerr << "missing " << (s == seg.end() ? "segmentation" : "skeleton") << ": " << stem << '\n';
      ++bad;
      continue;
    }
    try {
      const Raster img = load_raster(im.path);
      save_raster(f.out / (stem + ".png"), render_overlay(img, load_mask(s->second.path), load_mask(k->second.path)));
    } catch (const std::exception& e) {
      std::cerr << "skipped " << stem << ": " << e.what() << '\n';
      ++bad;
    }
  }
  return bad > 0 ? kData : kOk;
}

int cmd_flow_cache(const RunFlags& f) {
  RunSettings s = resolve_settings(f);
  if (s.flow_cache.empty()) throw ConfigError("no cache directory given (--flow-cache or flow.cache = ...)");
  std::size_t rejected = 0;
  const std::vector<ImageRecord> images = load_records(s, rejected);
  const CachedFlowProvider cache(s.flow_cache, s.run.flow);
  const Pipeline pipe(s.run, std::make_shared<CachedFlowProvider>(cache), make_saliency_provider(s));
  const auto pairs = pipe.required_flows(collection_neighbors(s.run, images));
  fs::create_directories(s.flow_cache);
  std::size_t hits = 0;
  for (const auto& [a, b] : pairs)
    if (fs::exists(cache.cache_path(images[a].stem, images[b].stem))) ++hits;
  std::vector<std::string> errors(pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    try {
      cache.flow({images[a].stem, &images[a].image}, {images[b].stem, &images[b].image});
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  std::size_t bad = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (errors[k].empty()) continue;
    std::cerr << "flow " << images[pairs[k].first].stem << " -> " << images[pairs[k].second].stem << ": " << errors[k]
              << '\n';
    ++bad;
  }
  std::fprintf(stderr, "%zu flows required, %zu already cached\n", pairs.size(), hits);
  return bad > 0 || rejected > 0 ? kData : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint skeletonization and segmentation of image collections"};
  app.require_subcommand(1, 1);

  RunFlags run_flags;
  auto* run = app.add_subcommand("run", "run the alternating solver over a dataset");
  add_run_flags(run, run_flags);
  run->add_option("--out", run_flags.out, "output directory");
  run->add_flag("--dump-priors", run_flags.dump_priors, "write each iterate's priors as 16-bit PNGs");

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "score predicted skeletons and segmentations against ground truth");
  eval->add_option("--pred", eval_flags.pred, "run output or dataset root with skeletons/")->required();
  eval->add_option("--gt", eval_flags.gt, "dataset root with skeletons/ and masks/")->required();
  eval->add_option("--out", eval_flags.out, "CSV path, stdout when omitted");

  BuildGtFlags gt_flags;
  auto* build_gt = app.add_subcommand("build-gt", "derive skeleton annotations from segmentation masks");
  build_gt->add_option("--data", gt_flags.data, "dataset root with masks/")->required();
  build_gt->add_option("--out", gt_flags.out, "skeleton directory, <data>/skeletons when omitted");
  build_gt->add_option("--alpha", gt_flags.alpha, "reconstruction weight");

  OverlayFlags ov_flags;
  auto* overlay = app.add_subcommand("overlay", "render segmentation tint and skeleton stroke over images");
  overlay->add_option("--images", ov_flags.images, "image directory")->required();
  overlay->add_option("--segmentations", ov_flags.segmentations, "segmentation mask directory")->required();
  overlay->add_option("--skeletons", ov_flags.skeletons, "skeleton mask directory")->required();
  overlay->add_option("--out", ov_flags.out, "output directory")->required();

  RunFlags fc_flags;
  auto* flow_cache = app.add_subcommand("flow-cache", "precompute the flows a run needs into a cache directory");
  add_run_flags(flow_cache, fc_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*run) return cmd_run(run_flags);
    if (*eval) return cmd_eval(eval_flags);
    if (*build_gt) return cmd_build_gt(gt_flags);
    if (*overlay) return cmd_overlay(ov_flags);
    if (*flow_cache) return cmd_flow_cache(fc_flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const DegenerateInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
