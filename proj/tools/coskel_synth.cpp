#include <CLI11.hpp>

#include <iostream>

#include "coskel/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic dataset of colored shapes with ground truth"};
  coskel::SyntheticConfig cfg;
  std::string out;
  int train = 0;
  app.add_option("--out", out, "dataset root")->required();
  app.add_option("--categories", cfg.categories, "shape families, 1 to 4");
  app.add_option("--per-category", cfg.per_category, "images per family");
  app.add_option("--width", cfg.width, "image width");
  app.add_option("--height", cfg.height, "image height");
  app.add_option("--distractor-probability", cfg.distractor_probability, "chance of an off-object blob");
  app.add_option("--seed", cfg.seed, "generator seed");
  app.add_option("--train-per-category", train, "stems per family listed in train.txt");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    coskel::write_synthetic_dataset(out, coskel::synthetic_collection(cfg), train);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
