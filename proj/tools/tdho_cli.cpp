#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdho/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Inverse scattering for the time-decaying harmonic oscillator"};
  app.set_version_flag("--version", tdho::kVersion);
  app.require_subcommand(1);

  std::string config, out_dir = "out", sino_stem;
  std::vector<std::string> configs;
  int workers = 0;
  bool resume = false;
  std::optional<double> angle, offset, speed;

  auto* validate = app.add_subcommand("validate", "Check a configuration and report budgets");
  validate->add_option("--config", config, "Run configuration (JSON)")->required();

  auto* element = app.add_subcommand("element", "Compute one scaled scattering element");
  element->add_option("--config", config, "Run configuration (JSON)")->required();
  element->add_option("--angle", angle, "Direction angle of the probe velocity");
  element->add_option("--offset", offset, "Signed offset of the probe line");
  element->add_option("--speed", speed, "Probe speed |v|");
  element->add_option("--out", out_dir, "Output directory");

  auto* sinogram = app.add_subcommand("sinogram", "Scan a full quantum sinogram");
  sinogram->add_option("--config", config, "Run configuration (JSON)")->required();
  sinogram->add_option("--out", out_dir, "Output directory");
  sinogram->add_option("--workers", workers, "Worker threads (0 = from config)");
  sinogram->add_flag("--resume", resume, "Skip samples already in the records journal");

  auto* recon = app.add_subcommand("reconstruct", "Invert a sinogram by filtered backprojection");
  recon->add_option("--sinogram", sino_stem, "Sinogram file stem")->required();
  recon->add_option("--config", config, "Configuration for metrics against the true potential");
  recon->add_option("--out", out_dir, "Output directory");

  auto* compare = app.add_subcommand("compare", "Decide whether two potentials are distinguishable");
  compare->add_option("--config", configs, "Two run configurations")->required()->expected(2);
  compare->add_option("--out", out_dir, "Output directory");
  compare->add_option("--workers", workers, "Worker threads (0 = from config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tdho::kExitConfig;
  }

  if (*validate) return tdho::cmd_validate(config, std::cout);
  if (*element) return tdho::cmd_element(config, angle, offset, speed, out_dir, std::cout);
  if (*sinogram) return tdho::cmd_sinogram(config, out_dir, workers, resume, std::cout);
  if (*recon) return tdho::cmd_reconstruct(sino_stem, config, out_dir, std::cout);
  if (*compare) return tdho::cmd_compare(configs[0], configs[1], out_dir, workers, std::cout);
  return tdho::kExitConfig;
}
