#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace wp::harness {

// Subcommands: train-teacher, train-student, eval, plot, export-deploy,
// print-config. Returns 0 on success, 2 on usage errors, 1 on runtime errors.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wp::harness
