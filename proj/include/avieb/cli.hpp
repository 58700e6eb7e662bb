#ifndef AVIEB_CLI_HPP
#define AVIEB_CLI_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace avieb::cli {

enum ExitCode : int { exit_pass = 0, exit_fail = 1, exit_usage = 2, exit_resource = 3 };

struct CommandResult {
  int exit_code = exit_pass;
  std::vector<std::filesystem::path> reports;  // files written
};

/// Runs one subcommand. `args` excludes the program name.
CommandResult run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace avieb::cli

#endif  // AVIEB_CLI_HPP
