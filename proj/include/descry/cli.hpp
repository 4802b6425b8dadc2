#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace descry {

/// Entry point of the `descry` tool. Returns 0 on success, 1 on a runtime
/// error, 2 on a usage error (unknown subcommand or flag, missing option).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace descry
