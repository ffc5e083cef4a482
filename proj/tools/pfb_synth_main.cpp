#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pfb/io.hpp"
#include "pfb/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"generate the synthetic lending CSV used by the experiment configs"};
  pfb::SynthConfig config;
  std::string out_path;
  app.add_option("--rows", config.rows, "number of rows")->capture_default_str();
  app.add_option("--minority-share", config.minority_share, "share of group B")
      ->capture_default_str();
  app.add_option("--seed", config.seed, "generator seed")->capture_default_str();
  app.add_option("--out", out_path, "output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    pfb::write_file(out_path, pfb::make_synth_csv(config));
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote " << out_path << '\n';
  return 0;
}
