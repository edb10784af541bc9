#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pdgm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Runs the pdgm command line; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

std::string version_string();

}  // namespace pdgm::cli
