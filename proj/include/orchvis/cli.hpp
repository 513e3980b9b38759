#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace orchvis {

// Entry point for the orchvis tool. Exit codes: 0 done, 2 waiting on a human,
// 1 on error (with a JSON error object on `err`).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Default log path for a report written to `out_path`.
std::string default_log_path(const std::string& out_path);

}  // namespace orchvis
