#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "koopctl/config.hpp"
#include "koopctl/error.hpp"
#include "koopctl/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kThreshold = 2, kConfig = 3, kNumerical = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven Koopman eigenstructure assignment for a boundary-controlled parabolic PDE"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool delay_mode = false;
  app.add_option("--config", config_path, "TOML experiment configuration (default: built-in example)");
  app.add_option("--out", out_dir, "artifact directory (overrides output.dir)");
  app.add_option("--seed", seed, "optimizer seed (overrides synthesis.seed)");
  app.add_flag("--delay-mode", delay_mode, "dmd: also identify from few sensors with delay coordinates");
  app.fallthrough();

  auto* simulate = app.add_subcommand("simulate", "pulse initial state, open-loop and step-response runs");
  auto* dmd = app.add_subcommand("dmd", "Krylov-DMD spectrum, diffusion estimate, open-loop diagnostics");
  auto* synthesize = app.add_subcommand("synthesize", "feedback gain by eigenstructure assignment");
  auto* certify = app.add_subcommand("certify", "robustness certificate against the reference spectrum");
  auto* verify = app.add_subcommand("verify", "closed-loop spectrum, eigenvectors and decay");
  auto* reproduce = app.add_subcommand("reproduce-example", "all stages plus acceptance checks");

  CLI11_PARSE(app, argc, argv);

  try {
    koopctl::ExperimentConfig config =
        config_path.empty() ? koopctl::example_config() : koopctl::load_config(config_path);
    if (!out_dir.empty()) config.output_dir = out_dir;
    if (seed) config.optimizer.seed = *seed;
    const auto& out = config.output_dir;

    if (simulate->parsed()) koopctl::run_simulate(config, out);
    if (dmd->parsed()) koopctl::run_dmd(config, out, delay_mode);
    if (synthesize->parsed()) koopctl::run_synthesize(config, out);
    if (certify->parsed()) koopctl::run_certify(config, out);
    if (verify->parsed()) koopctl::run_verify(config, out);
    if (reproduce->parsed()) {
      bool all = true;
      for (const auto& check : koopctl::run_reproduce_example(config, out)) {
        std::cout << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << '\n';
        all = all && check.passed;
      }
      return all ? kOk : kThreshold;
    }
    return kOk;
  } catch (const koopctl::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const koopctl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const koopctl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kNumerical;
  }
}
