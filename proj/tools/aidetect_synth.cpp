// Writes a synthetic labelled essay corpus (columns text,generated).
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "aidetect/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app("synthetic essay corpus generator", "aidetect_synth");
  std::size_t n = aidetect::synthetic::Config{}.n_essays;
  std::uint64_t seed = 7;
  std::string out_path;
  app.add_option("--n", n, "number of essays, half of them AI-labelled");
  app.add_option("--seed", seed, "generator seed");
  app.add_option("--out", out_path, "output CSV (default stdout)");
  CLI11_PARSE(app, argc, argv);

  aidetect::synthetic::Config cfg;
  cfg.n_essays = n;
  const aidetect::synthetic::Generator gen(seed, cfg);
  if (out_path.empty()) {
    gen.write_csv(std::cout);
    return 0;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 2;
  }
  gen.write_csv(out);
  return out ? 0 : 2;
}
