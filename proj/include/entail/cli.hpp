#pragma once

#include <string>
#include <vector>

namespace entail {

// Parses and runs one command; returns the process exit code.
// 0 ok, 2 config/usage, 3 data/parse, 4 integrity, 5 numeric divergence.
int run_cli(std::vector<std::string> args);

}  // namespace entail
