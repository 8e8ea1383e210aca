#include "coskel/coseg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coskel/maxflow.hpp"
#include "coskel/saliency.hpp"

namespace coskel {

namespace {

std::vector<Color> colors_where(const Raster& img, const BinaryMask& m, bool value) {
  std::vector<Color> out;
  for (std::size_t i = 0; i < img.size(); ++i)
    if ((m[i] != 0) == value) out.push_back(img[i]);
  return out;
}

std::vector<Color> frame_colors(const Raster& img) {
  std::vector<Color> out;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      if (x == 0 || y == 0 || x == img.width() - 1 || y == img.height() - 1)
        out.push_back(img(x, y));
  return out;
}

double clamped_log(double log_density, double floor) {
  return std::max(log_density, std::log(floor));
}

// Better of a warm-started EM and a fresh fit, kept only if it does not raise the NLL.
GaussianMixture reestimate(const GaussianMixture& old, const std::vector<Color>& samples,
                           const SegmentationConfig& cfg) {
  if (samples.empty() || old.empty()) return old;
  const auto opts = mixture_options(cfg);
  const double floor = cfg.density_floor;
  GaussianMixture best = old;
  double best_nll = old.negative_log_likelihood(samples, floor);
  for (const GaussianMixture& cand : {old.refine(samples, opts), GaussianMixture::fit(samples, opts)}) {
    const double nll = cand.negative_log_likelihood(samples, floor);
    if (nll < best_nll) {
      best = cand;
      best_nll = nll;
    }
  }
  return best;
}

template <typename Fn>
void for_each_edge(int width, int height, Fn&& fn) {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x + 1 < width) fn(x, y, x + 1, y);
      if (y + 1 < height) fn(x, y, x, y + 1);
    }
  }
}

double resolve_beta(const Raster& img, const SegmentationConfig& cfg) {
  return cfg.beta ? *cfg.beta : contrast_beta(img);
}

}  // namespace

GaussianMixture::FitOptions mixture_options(const SegmentationConfig& cfg) {
  GaussianMixture::FitOptions o;
  o.components = cfg.gmm_components;
  o.covariance_ridge = cfg.covariance_ridge;
  o.seed = cfg.seed;
  o.max_em_iterations = 30;
  o.max_samples = 4000;
  return o;
}

AppearanceModels fit_appearance_models(const Raster& img, const BinaryMask& K, const BinaryMask& R,
                                       const SegmentationConfig& cfg) {
  require_same_shape(img, K, "fit_appearance_models skeleton");
  require_same_shape(img, R, "fit_appearance_models reconstruction");
  const std::vector<Color> fg = colors_where(img, K, true);
  if (fg.empty()) throw DegenerateInput("fit_appearance_models: empty skeleton");
  std::vector<Color> bg = colors_where(img, R, false);
  if (bg.empty()) bg = colors_where(img, K, false);
  if (bg.empty()) throw DegenerateInput("fit_appearance_models: no background pixels");
  const auto opts = mixture_options(cfg);
  return {GaussianMixture::fit(fg, opts), GaussianMixture::fit(bg, opts)};
}

AppearanceModels fit_appearance_models_from_priors(const Raster& img, const ScalarMap& coskel_prior,
                                                   const ScalarMap& coseg_prior,
                                                   const BinaryMask& fallback_fg,
                                                   const BinaryMask& fallback_outside,
                                                   const SegmentationConfig& cfg) {
  require_same_shape(img, coskel_prior, "skeleton prior");
  require_same_shape(img, coseg_prior, "segment prior");
  std::vector<Color> fg;
  try {
    fg = colors_where(img, otsu_threshold(coskel_prior), true);
  } catch (const DegenerateInput&) {
  }
  if (fg.empty()) fg = colors_where(img, fallback_fg, true);
  if (fg.empty()) throw DegenerateInput("fit_appearance_models_from_priors: no foreground seeds");

  std::vector<Color> bg;
  try {
    bg = colors_where(img, otsu_threshold(coseg_prior), false);
  } catch (const DegenerateInput&) {
  }
  if (bg.empty()) bg = colors_where(img, fallback_outside, true);
  if (bg.empty()) bg = frame_colors(img);
  const auto opts = mixture_options(cfg);
  return {GaussianMixture::fit(fg, opts), GaussianMixture::fit(bg, opts)};
}

ScalarMap smoothed_prior(const ScalarMap& prior, const SegmentationConfig& cfg) {
  ScalarMap m = box_mean(prior, cfg.neighborhood);
  for (double& v : m.values()) v = std::clamp(v, cfg.epsilon, 1.0 - cfg.epsilon);
  return m;
}

double prior_term_o(const BinaryMask& O, const ScalarMap& prior, const SegmentationConfig& cfg) {
  require_same_shape(O, prior, "prior_term_o");
  const ScalarMap m = smoothed_prior(prior, cfg);
  double total = 0.0;
  for (std::size_t i = 0; i < O.size(); ++i) total -= O[i] ? std::log(m[i]) : std::log(1.0 - m[i]);
  return total;
}

double interdependence_term_o(const Raster& img, const BinaryMask& O,
                              const AppearanceModels& models, const SegmentationConfig& cfg) {
  require_same_shape(img, O, "interdependence_term_o");
  double total = 0.0;
  for (std::size_t i = 0; i < img.size(); ++i) {
    const GaussianMixture& g = O[i] ? models.foreground : models.background;
    total -= clamped_log(g.log_density(img[i]), cfg.density_floor);
  }
  return total;
}

double contrast_beta(const Raster& img) {
  double sum = 0.0;
  std::size_t count = 0;
  for_each_edge(img.width(), img.height(), [&](int x0, int y0, int x1, int y1) {
    sum += squared_distance(img(x0, y0), img(x1, y1));
    ++count;
  });
  if (count == 0 || sum <= 0.0) return 0.0;
  return 1.0 / (2.0 * sum / static_cast<double>(count));
}

double smoothness_term_o(const Raster& img, const BinaryMask& O, const SegmentationConfig& cfg) {
  require_same_shape(img, O, "smoothness_term_o");
  const double beta = resolve_beta(img, cfg);
  double total = 0.0;
  for_each_edge(img.width(), img.height(), [&](int x0, int y0, int x1, int y1) {
    if (O.test(x0, y0) != O.test(x1, y1))
      total += cfg.gamma * std::exp(-beta * squared_distance(img(x0, y0), img(x1, y1)));
  });
  return total;
}

UnaryCosts unary_costs(const Raster& img, const AppearanceModels& models, const ScalarMap* prior,
                       const SegmentationConfig& cfg) {
  if (models.foreground.empty() || models.background.empty())
    throw PreconditionError("unary_costs: appearance models not fitted");
  UnaryCosts u(img.width(), img.height());
  ScalarMap m;
  if (prior) {
    require_same_shape(img, *prior, "unary_costs prior");
    m = smoothed_prior(*prior, cfg);
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    double bg = -clamped_log(models.background.log_density(img[i]), cfg.density_floor);
    double fg = -clamped_log(models.foreground.log_density(img[i]), cfg.density_floor);
    if (prior) {
      bg -= cfg.lambda * std::log(1.0 - m[i]);
      fg -= cfg.lambda * std::log(m[i]);
    }
    u[i] = {bg, fg};
  }
  return u;
}

BinaryMask segment(const Raster& img, const UnaryCosts& unary, const SegmentationConfig& cfg,
                   const HardLabels* hard) {
  require_same_shape(img, unary, "segment unary");
  if (cfg.gamma < 0.0) throw std::invalid_argument("segment: gamma must be >= 0");
  if (hard) {
    require_same_shape(img, hard->force_foreground, "segment hard foreground");
    require_same_shape(img, hard->force_background, "segment hard background");
  }
  const int w = img.width();
  const int h = img.height();
  const double beta = resolve_beta(img, cfg);

  double pin = 1.0;
  for (std::size_t i = 0; i < unary.size(); ++i) {
    const auto& c = unary[i];
    if (!std::isfinite(c[0]) || !std::isfinite(c[1])) throw std::invalid_argument("segment: non-finite unary");
    pin += std::abs(c[0] - c[1]);
  }
  pin += 4.0 * cfg.gamma * static_cast<double>(unary.size());

  MaxFlowGraph g(static_cast<int>(unary.size()), 2 * static_cast<int>(unary.size()));
  for (std::size_t i = 0; i < unary.size(); ++i) {
    // Source side = foreground: a foreground node cuts its sink arc.
    double source_cap = unary[i][0];
    double sink_cap = unary[i][1];
    const double base = std::min(source_cap, sink_cap);
    source_cap -= base;
    sink_cap -= base;
    if (hard && hard->force_foreground[i]) {
      if (hard->force_background[i]) throw PreconditionError("segment: pixel forced to both labels");
      source_cap += pin;
    } else if (hard && hard->force_background[i]) {
      sink_cap += pin;
    }
    g.add_terminal_weights(static_cast<int>(i), source_cap, sink_cap);
  }
  if (cfg.gamma > 0.0) {
    for_each_edge(w, h, [&](int x0, int y0, int x1, int y1) {
      const double wt = cfg.gamma * std::exp(-beta * squared_distance(img(x0, y0), img(x1, y1)));
      if (wt > 0.0)
        g.add_edge(static_cast<int>(img.index(x0, y0)), static_cast<int>(img.index(x1, y1)), wt, wt);
    });
  }
  g.solve();
  BinaryMask out(w, h);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = g.in_source_segment(static_cast<int>(i)) ? 1 : 0;
  return out;
}

double labeling_energy(const Raster& img, const UnaryCosts& unary, const BinaryMask& labels,
                       const SegmentationConfig& cfg, const HardLabels* hard) {
  require_same_shape(img, unary, "labeling_energy unary");
  require_same_shape(img, labels, "labeling_energy labels");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (hard && ((hard->force_foreground[i] && !labels[i]) || (hard->force_background[i] && labels[i])))
      return std::numeric_limits<double>::infinity();
    total += unary[i][labels[i] ? 1 : 0];
  }
  return total + smoothness_term_o(img, labels, cfg);
}

GrabCutResult grabcut(const Raster& img, AppearanceModels models, const ScalarMap* prior,
                      const SegmentationConfig& cfg, const HardLabels* hard) {
  if (cfg.graphcut_rounds < 1) throw std::invalid_argument("grabcut: graphcut_rounds must be >= 1");
  GrabCutResult result;
  for (int round = 0; round < cfg.graphcut_rounds; ++round) {
    if (round > 0) {
      models.foreground = reestimate(models.foreground, colors_where(img, result.mask, true), cfg);
      models.background = reestimate(models.background, colors_where(img, result.mask, false), cfg);
    }
    const UnaryCosts u = unary_costs(img, models, prior, cfg);
    result.mask = segment(img, u, cfg, hard);
    result.round_energies.push_back(labeling_energy(img, u, result.mask, cfg, hard));
  }
  result.models = std::move(models);
  return result;
}

}  // namespace coskel
