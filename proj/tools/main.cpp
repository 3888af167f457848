#include <CLI11.hpp>
#include <exception>
#include <iostream>

#include "pnpfv/cli.hpp"
#include "pnpfv/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite volume solver for electrolyte transport with size "
               "exclusion"};
  app.require_subcommand(1);

  pnpfv::RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "integrate the transient system");
  run->add_option("--config", run_opts.config_path, "problem description")
      ->required();
  run->add_option("--mesh", run_opts.mesh_spec,
                  "mesh file or builtin:1d:<cells>")
      ->required();
  run->add_option("--out", run_opts.out_dir, "output directory")->required();
  run->add_option("--stride", run_opts.stride,
                  "snapshot every this many steps (0: ends only)");

  pnpfv::RunOptions steady_opts;
  CLI::App* steady =
      app.add_subcommand("steady", "solve for the steady state");
  steady->add_option("--config", steady_opts.config_path, "problem description")
      ->required();
  steady->add_option("--mesh", steady_opts.mesh_spec,
                     "mesh file or builtin:1d:<cells>")
      ->required();
  steady->add_option("--out", steady_opts.out_dir, "output directory")
      ->required();

  pnpfv::RunOptions long_opts;
  CLI::App* longtime = app.add_subcommand(
      "longtime", "integrate and track the distance to the steady state");
  longtime->add_option("--config", long_opts.config_path, "problem description")
      ->required();
  longtime->add_option("--mesh", long_opts.mesh_spec,
                       "mesh file or builtin:1d:<cells>")
      ->required();
  longtime->add_option("--out", long_opts.out_dir, "output directory")
      ->required();
  longtime->add_option("--stride", long_opts.stride,
                       "snapshot every this many steps (0: ends only)");

  pnpfv::ConvergenceOptions conv_opts;
  CLI::App* conv = app.add_subcommand(
      "convergence", "mesh refinement study against a fine reference");
  conv->add_option("--config", conv_opts.config_path,
                   "problem description with a 'ladder' object")
      ->required();
  conv->add_option("--out", conv_opts.out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return pnpfv::cmd_run(run_opts);
    if (steady->parsed()) return pnpfv::cmd_steady(steady_opts);
    if (longtime->parsed()) return pnpfv::cmd_longtime(long_opts);
    if (conv->parsed()) return pnpfv::cmd_convergence(conv_opts);
  } catch (const pnpfv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
