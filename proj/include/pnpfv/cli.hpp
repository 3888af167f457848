#pragma once

#include <string>

namespace pnpfv {

struct RunOptions {
  std::string config_path;
  std::string mesh_spec;  // file path or builtin:1d:<cells>
  std::string out_dir;
  int stride = 0;  // 0 keeps only the initial and final snapshots
};

// The refinement ladder itself (cell counts and the reference count)
// comes from the "ladder" object in the config file.
struct ConvergenceOptions {
  std::string config_path;
  std::string out_dir;
};

int cmd_run(const RunOptions& options);
int cmd_steady(const RunOptions& options);
int cmd_longtime(const RunOptions& options);
int cmd_convergence(const ConvergenceOptions& options);

}  // namespace pnpfv
